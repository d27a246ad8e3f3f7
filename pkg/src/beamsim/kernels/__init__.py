"""Hot-kernel backend selection.

Prefers the compiled extension (``_native``, built from Cython) and falls
back to numpy/scipy implementations when the extension is unavailable.
``BEAMSIM_KERNELS=python`` or ``=native`` in the environment forces a
backend (the benchmark uses this to compare the two).
"""

import os

_forced = os.environ.get("BEAMSIM_KERNELS", "").strip().lower()

if _forced == "python":
    from . import _fallback as _impl

    BACKEND = "python"
elif _forced == "native":
    from . import _native as _impl  # noqa: F401  (raises if not built)

    BACKEND = "native"
else:
    try:
        from . import _native as _impl

        BACKEND = "native"
    except ImportError:
        from . import _fallback as _impl

        BACKEND = "python"

combine_sinr_db = _impl.combine_sinr_db
sum_power_db = _impl.sum_power_db
weighted_sum_power_db = _impl.weighted_sum_power_db
bessel_taper_db = _impl.bessel_taper_db
bessel_taper_db_many = _impl.bessel_taper_db_many
logistic_error_probability = _impl.logistic_error_probability
pf_argmax = _impl.pf_argmax

__all__ = [
    "BACKEND",
    "combine_sinr_db",
    "sum_power_db",
    "weighted_sum_power_db",
    "bessel_taper_db",
    "bessel_taper_db_many",
    "logistic_error_probability",
    "pf_argmax",
]
