"""beamsim: system-level simulator for multi-beam GEO satellite access networks.

Two pluggable air interfaces (a TDM/MF-TDMA stack and a 5G-style grid
stack) share one scenario, channel and interference engine; reports cover
SINR, user throughput and beam spectral efficiency distributions.
"""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
