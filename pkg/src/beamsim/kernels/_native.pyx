# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: SINR combining, aperture taper, error curve, PF pick.

Signature-compatible with ``_fallback``; selected at import by
``beamsim.kernels`` when the extension built successfully.
"""

from libc.math cimport log10, exp, fabs, INFINITY

cdef extern from "math.h" nogil:
    double j1(double)

import numpy as np


def combine_sinr_db(double cn_db, double ci_db, double cim_db):
    cdef double total = 0.0
    if cn_db != INFINITY:
        total += 10.0 ** (-cn_db / 10.0)
    if ci_db != INFINITY:
        total += 10.0 ** (-ci_db / 10.0)
    if cim_db != INFINITY:
        total += 10.0 ** (-cim_db / 10.0)
    if total <= 0.0:
        return INFINITY
    return -10.0 * log10(total)


def sum_power_db(double[:] levels_db):
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(levels_db.shape[0]):
        if levels_db[i] != -INFINITY:
            acc += 10.0 ** (levels_db[i] / 10.0)
    if acc <= 0.0:
        return -INFINITY
    return 10.0 * log10(acc)


def weighted_sum_power_db(double[:] levels_db, double[:] weights):
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(levels_db.shape[0]):
        if weights[i] > 0.0 and levels_db[i] != -INFINITY:
            acc += weights[i] * 10.0 ** (levels_db[i] / 10.0)
    if acc <= 0.0:
        return -INFINITY
    return 10.0 * log10(acc)


cdef inline double _taper(double u, double floor_db) nogil:
    cdef double a, rel
    if u <= 1e-9:
        return 0.0
    a = 2.0 * j1(u) / u
    if a == 0.0:
        return floor_db
    rel = 20.0 * log10(fabs(a))
    return rel if rel > floor_db else floor_db


def bessel_taper_db(double u, double floor_db):
    return _taper(u, floor_db)


def bessel_taper_db_many(u, double floor_db):
    cdef double[:] uv = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty(uv.shape[0], dtype=np.float64)
    cdef double[:] ov = out
    cdef Py_ssize_t i
    for i in range(uv.shape[0]):
        ov[i] = _taper(uv[i], floor_db)
    return out


def logistic_error_probability(double sinr_db, double sinr50_db, double slope_per_db):
    cdef double x = slope_per_db * (sinr_db - sinr50_db)
    if x > 700.0:
        return 0.0
    if x < -700.0:
        return 1.0
    return 1.0 / (1.0 + exp(x))


def pf_argmax(double[:] t_bps, double[:] r_bps, double alpha, double beta,
              unsigned char[:] eligible):
    cdef Py_ssize_t best = -1
    cdef double best_p = -1.0
    cdef double p
    cdef Py_ssize_t i
    for i in range(t_bps.shape[0]):
        if not eligible[i]:
            continue
        p = (t_bps[i] ** alpha) / (r_bps[i] ** beta)
        if p > best_p:
            best_p = p
            best = i
    return best
