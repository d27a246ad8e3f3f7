"""Pure-Python/numpy implementations of the hot numeric kernels.

Mirrors the signatures of the compiled extension in ``_native.pyx``; the
package picks one of the two at import time (see ``beamsim.kernels``).
Scalar paths use ``math`` (cheaper than numpy for single values), array
paths use numpy/scipy.
"""

import math

import numpy as np
from scipy.special import j1 as _j1

NEG_INF = float("-inf")


def combine_sinr_db(cn_db, ci_db, cim_db):
    """Combine C/N, C/I and C/Im (dB) into SINR (dB), 1/x-additive in linear."""
    total = 0.0
    for v in (cn_db, ci_db, cim_db):
        if v != math.inf:
            total += 10.0 ** (-v / 10.0)
    if total <= 0.0:
        return math.inf
    return -10.0 * math.log10(total)


def sum_power_db(levels_db):
    """Sum an array of powers given in dB(W); -inf entries contribute zero."""
    acc = 0.0
    for v in levels_db:
        if v != NEG_INF:
            acc += 10.0 ** (v / 10.0)
    if acc <= 0.0:
        return NEG_INF
    return 10.0 * math.log10(acc)


def weighted_sum_power_db(levels_db, weights):
    """Linear sum of dB powers scaled by per-entry weights (e.g. overlap x occupancy)."""
    acc = 0.0
    for v, w in zip(levels_db, weights):
        if w > 0.0 and v != NEG_INF:
            acc += w * 10.0 ** (v / 10.0)
    if acc <= 0.0:
        return NEG_INF
    return 10.0 * math.log10(acc)


def bessel_taper_db(u, floor_db):
    """Relative circular-aperture pattern 10*log10(4*(J1(u)/u)^2), clamped at floor_db."""
    if u <= 1e-9:
        return 0.0
    a = 2.0 * _j1(u) / u
    if a == 0.0:
        return floor_db
    rel = 20.0 * math.log10(abs(a))
    return rel if rel > floor_db else floor_db


def bessel_taper_db_many(u, floor_db):
    """Vectorized ``bessel_taper_db`` over a float64 array."""
    u = np.asarray(u, dtype=np.float64)
    out = np.full(u.shape, floor_db, dtype=np.float64)
    nz = u > 1e-9
    a = np.abs(2.0 * _j1(u[nz]) / u[nz])
    with np.errstate(divide="ignore"):
        rel = 20.0 * np.log10(a)
    out[nz] = np.maximum(rel, floor_db)
    out[~nz] = 0.0
    return out


def logistic_error_probability(sinr_db, sinr50_db, slope_per_db):
    """Error probability 1/(1+exp(slope*(sinr-sinr50))); decreasing in SINR."""
    x = slope_per_db * (sinr_db - sinr50_db)
    if x > 700.0:
        return 0.0
    if x < -700.0:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


def pf_argmax(t_bps, r_bps, alpha, beta, eligible):
    """Index of the eligible user maximizing T^alpha / R^beta; ties to lowest index.

    Returns -1 when no user is eligible.  ``eligible`` is a uint8 mask.
    """
    best = -1
    best_p = -1.0
    n = len(t_bps)
    for i in range(n):
        if not eligible[i]:
            continue
        p = (t_bps[i] ** alpha) / (r_bps[i] ** beta)
        if p > best_p:
            best_p = p
            best = i
    return best
