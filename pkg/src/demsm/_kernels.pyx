# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical core.

Every routine here mirrors one in ``_kernels_py`` operation for operation, so
both backends return the same floats. Inputs are canonical: ``y`` strictly
increasing, ``p`` nonnegative and summing to one.
"""

import numpy as np

from libc.math cimport INFINITY

cdef double QUANTILE_SLACK = 1e-12
cdef double BOX_TOL = 1e-12


cdef Py_ssize_t _quantile_index(const double[::1] p, double gamma) noexcept nogil:
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double cdf = 0.0
    for i in range(n):
        cdf += p[i]
        if cdf >= gamma - QUANTILE_SLACK:
            return i
    return n - 1


cdef double _greedy(const double[::1] y, const double[::1] p, double lo, double hi,
                    bint maximize) noexcept nogil:
    cdef Py_ssize_t i, k, n = y.shape[0]
    cdef double budget = 1.0 - lo
    cdef double obj = 0.0
    cdef double cap, take
    for i in range(n):
        obj += lo * p[i] * y[i]
    for k in range(n):
        if budget <= 0.0:
            break
        i = n - 1 - k if maximize else k
        cap = (hi - lo) * p[i]
        take = cap if cap < budget else budget
        obj += take * y[i]
        budget -= take
    return obj


def quantile_index(const double[::1] p, double gamma):
    return _quantile_index(p, gamma)


def check_loss(const double[::1] y, const double[::1] p, double gamma, double q):
    cdef Py_ssize_t i, n = y.shape[0]
    cdef double acc = 0.0, r
    for i in range(n):
        r = y[i] - q
        if r > 0.0:
            acc += p[i] * gamma * r
        elif r < 0.0:
            acc -= p[i] * (1.0 - gamma) * r
    return acc


def check_loss_at_quantile(const double[::1] y, const double[::1] p, double gamma):
    cdef double q = y[_quantile_index(p, gamma)]
    return q, check_loss(y, p, gamma, q)


def greedy_box(const double[::1] y, const double[::1] p, double lo, double hi, bint maximize):
    return _greedy(y, p, lo, hi, maximize)


def grid_scan(const double[::1] y, const double[::1] p, double lam1, double lam2,
              double gam1, double gam2, bint maximize, Py_ssize_t n):
    """Best binary-U objective over the (p1, lambda(1)) grid with n steps per axis."""
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t m = y.shape[0]
    cdef double mean = 0.0
    cdef double best = -INFINITY if maximize else INFINITY
    cdef double p1, lo, hi, gmax, gmin, l1, l0, coef, g, val
    for i in range(m):
        mean += p[i] * y[i]
    with nogil:
        for k in range(1, n):
            p1 = <double>k / n
            lo = (1.0 - (1.0 - p1) * gam2) / p1
            if lo < gam1:
                lo = gam1
            hi = (1.0 - (1.0 - p1) * gam1) / p1
            if hi > gam2:
                hi = gam2
            # the tightened box always contains 1; keep rounding from excluding it
            if lo > 1.0:
                lo = 1.0
            if hi < 1.0:
                hi = 1.0
            gmax = _greedy(y, p, lo, hi, True)
            gmin = _greedy(y, p, lo, hi, False)
            for j in range(n + 1):
                l1 = lam1 + (lam2 - lam1) * j / n
                l0 = (1.0 - p1 * l1) / (1.0 - p1)
                if l0 < lam1 - BOX_TOL or l0 > lam2 + BOX_TOL:
                    continue
                coef = p1 * (l1 - l0)
                if (coef >= 0.0) == maximize:
                    g = gmax
                else:
                    g = gmin
                # l0 + coef = 1, so this equals l0 * mean + coef * g
                val = mean + coef * (g - mean)
                if maximize:
                    if val > best:
                        best = val
                elif val < best:
                    best = val
    return best
