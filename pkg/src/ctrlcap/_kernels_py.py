"""Pure-Python/numpy implementations of the hot kernels.

These are the reference versions of the routines in ``_kernels.pyx``; the
package falls back to them when the compiled extension is unavailable.
"""

import numpy as np
from scipy.linalg import solve_triangular

ARMIJO = 1e-4
MIN_STEP = 2.0 ** -30


def water_level(floors, budget):
    """Level mu with sum(max(0, mu - floors)) == budget."""
    f = np.sort(floors)
    mu = (budget + np.cumsum(f)) / np.arange(1, f.size + 1)
    k = np.flatnonzero(mu > f)[-1]
    return mu[k]


def _chol_logdet(M):
    L = np.linalg.cholesky(M)
    return L, 2.0 * np.log(np.diag(L)).sum()


def waterfill_iterate(a, seg, budgets, x, tol, max_iter):
    """Iterative water-filling over rank-one modes with per-segment budgets.

    Maximizes ``0.5 logdet(I + sum_i x_i a_i a_i^T)`` subject to
    ``sum_{i in segment s} x_i = budgets[s]`` and ``x >= 0``.  Each pass
    visits the two segments in turn: it recomputes every mode's
    leave-one-out gain against the current allocation, water-fills the
    segment budget on those gains, and moves toward that target with a
    backtracking line search.

    Parameters
    ----------
    a : ndarray, shape (m, d)
        Whitened mode vectors, one per row.
    seg : ndarray of int, shape (m,)
        Segment (0 or 1) of each mode.
    budgets : ndarray, shape (2,)
    x : ndarray, shape (m,)
        Feasible starting allocation; not modified.
    tol : float
        Stop when no entry moves by more than ``tol * max(1, budget)``.
    max_iter : int

    Returns
    -------
    (x, iterations, converged)
    """
    a = np.ascontiguousarray(a, dtype=float)
    x = np.array(x, dtype=float)
    m, d = a.shape
    eye = np.eye(d)
    segments = [np.flatnonzero(seg == s) for s in (0, 1)]
    scale = max(1.0, float(np.max(budgets)))
    for it in range(1, max_iter + 1):
        change = 0.0
        for s, idx in enumerate(segments):
            if budgets[s] <= 0.0 or idx.size == 0:
                continue
            M = eye + (a.T * x) @ a
            L, f0 = _chol_logdet(M)
            Y = solve_triangular(L, a[idx].T, lower=True)
            q = np.einsum("ij,ij->j", Y, Y)
            qbar = q / (1.0 - x[idx] * q)
            qmax = qbar.max()
            if qmax <= 0.0:
                continue
            usable = qbar > 1e-14 * qmax
            floors = 1.0 / qbar[usable]
            mu = water_level(floors, budgets[s])
            target = np.zeros(idx.size)
            target[usable] = np.maximum(0.0, mu - floors)
            step = target - x[idx]
            slope = 0.5 * float(q @ step)
            t = 1.0
            while True:
                Mt = M + (a[idx].T * (t * step)) @ a[idx]
                _, ft = _chol_logdet(Mt)
                if 0.5 * (ft - f0) >= ARMIJO * t * slope - 1e-14 * (1.0 + abs(f0)):
                    break
                t *= 0.5
                if t < MIN_STEP:
                    t = 0.0
                    break
            x[idx] = np.maximum(x[idx] + t * step, 0.0)
            change = max(change, t * float(np.abs(step).max()))
        if change <= tol * scale:
            return x, it, True
    return x, max_iter, False


def em_final_state(x0, Phi, drive):
    """Propagate ``x_{m+1} = Phi x_m + drive[m]`` for every path.

    Parameters
    ----------
    x0 : ndarray, shape (P, n)
    Phi : ndarray, shape (n, n)
    drive : ndarray, shape (steps, P, n)

    Returns
    -------
    ndarray, shape (P, n)
    """
    x = np.array(x0, dtype=float)
    PhiT = np.ascontiguousarray(np.asarray(Phi, dtype=float).T)
    for dm in drive:
        x = x @ PhiT + dm
    return x
