"""Pure-Python fallback for the compiled kernels in ``_kernels.pyx``.

Same algorithms, same operation order. The grid scan sweeps the lambda(1)
axis with numpy; everything else is a plain loop over the (short) support.
"""

import math

import numpy as np

QUANTILE_SLACK = 1e-12
BOX_TOL = 1e-12


def quantile_index(p, gamma):
    cdf = 0.0
    for i, pi in enumerate(p):
        cdf += pi
        if cdf >= gamma - QUANTILE_SLACK:
            return i
    return len(p) - 1


def check_loss(y, p, gamma, q):
    acc = 0.0
    for yi, pi in zip(y, p):
        r = yi - q
        if r > 0.0:
            acc += pi * gamma * r
        elif r < 0.0:
            acc -= pi * (1.0 - gamma) * r
    return acc


def check_loss_at_quantile(y, p, gamma):
    q = float(y[quantile_index(p, gamma)])
    return q, check_loss(y, p, gamma, q)


def greedy_box(y, p, lo, hi, maximize):
    n = len(y)
    budget = 1.0 - lo
    obj = 0.0
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


def grid_scan(y, p, lam1, lam2, gam1, gam2, maximize, n):
    """Best binary-U objective over the (p1, lambda(1)) grid with n steps per axis."""
    y = [float(v) for v in y]
    p = [float(v) for v in p]
    mean = 0.0
    for yi, pi in zip(y, p):
        mean += pi * yi
    best = -math.inf if maximize else math.inf
    j = np.arange(n + 1)
    l1 = lam1 + (lam2 - lam1) * j / n
    for k in range(1, n):
        p1 = k / n
        # the tightened box always contains 1; keep rounding from excluding it
        lo = min(1.0, max(gam1, (1.0 - (1.0 - p1) * gam2) / p1))
        hi = max(1.0, min(gam2, (1.0 - (1.0 - p1) * gam1) / p1))
        gmax = greedy_box(y, p, lo, hi, True)
        gmin = greedy_box(y, p, lo, hi, False)
        l0 = (1.0 - p1 * l1) / (1.0 - p1)
        ok = (l0 >= lam1 - BOX_TOL) & (l0 <= lam2 + BOX_TOL)
        if not ok.any():
            continue
        l0 = l0[ok]
        coef = p1 * (l1[ok] - l0)
        g = np.where((coef >= 0.0) == maximize, gmax, gmin)
        # l0 + coef = 1, so this equals l0 * mean + coef * g
        val = mean + coef * (g - mean)
        cand = float(val.max() if maximize else val.min())
        best = max(best, cand) if maximize else min(best, cand)
    return best
