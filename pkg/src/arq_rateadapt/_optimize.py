"""Deterministic scalar minimization over a bounded interval.

Used for every optimization over the union-bound parameter: a uniform grid
locates the best cell, golden-section search refines inside it. Everything
is vectorized over a batch of independent problems so the same routine
serves scalar calls and the per-step rate scans of the estimator.
"""

import math

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

DEFAULT_GRID_SIZE = 1025
DEFAULT_GOLDEN_ITERS = 40


def grid_golden_minimize(f, size, lo=0.0, hi=1.0, grid_size=DEFAULT_GRID_SIZE,
                         iters=DEFAULT_GOLDEN_ITERS):
    """Minimize a batch of scalar functions on ``[lo, hi]``.

    Parameters
    ----------
    f : callable
        ``f(x)`` with ``x`` of shape ``(size,)`` or ``(k, size)`` returns
        values of the same shape; column ``j`` belongs to problem ``j``.
    size : int
        Number of independent problems in the batch.
    grid_size : int
        Number of uniform grid points (endpoints included), at least 2.
    iters : int
        Golden-section iterations inside the bracket around the best grid
        point.

    Returns
    -------
    xmin, fmin : ndarray
        Minimizer and minimum for each problem. Ties on the grid resolve to
        the smallest ``x``; the refined point replaces the grid point only
        on strict improvement.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    grid = np.linspace(lo, hi, grid_size)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = f(np.broadcast_to(grid[:, None], (grid_size, size)))
    vals = np.where(np.isnan(vals), np.inf, vals)
    idx = np.argmin(vals, axis=0)
    cols = np.arange(size)
    best_x = grid[idx].astype(float)
    best_f = vals[idx, cols].astype(float)

    a = grid[np.maximum(idx - 1, 0)].astype(float)
    b = grid[np.minimum(idx + 1, grid_size - 1)].astype(float)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        fc = f(c)
        fd = f(d)
        for _ in range(iters):
            left = fc <= fd
            # keep [a, d] where f(c) <= f(d), else [c, b]
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            new_c = b - GOLDEN * (b - a)
            new_d = a + GOLDEN * (b - a)
            c_next = np.where(left, new_c, d)
            d_next = np.where(left, c, new_d)
            fc_next = np.where(left, f(new_c), fd)
            fd_next = np.where(left, fc, f(new_d))
            c, d, fc, fd = c_next, d_next, fc_next, fd_next
        mid = 0.5 * (a + b)
        fmid = f(mid)
    fmid = np.where(np.isnan(fmid), np.inf, fmid)
    better = fmid < best_f
    return np.where(better, mid, best_x), np.where(better, fmid, best_f)


def grid_golden_maximize(f, size, **kwargs):
    """Maximize counterpart of :func:`grid_golden_minimize`."""
    x, v = grid_golden_minimize(lambda t: -f(t), size, **kwargs)
    return x, -v
