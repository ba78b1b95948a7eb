"""Fractional Brownian motion: covariances, the fGn kernel and exact sampling.

Paths are drawn by factorizing the exact covariance matrix on the requested
grid (cubic in the grid size), so samples carry no discretization bias.
"""

from __future__ import annotations

import numpy as np

from .errors import SimulationError, SpecError

__all__ = [
    "fbm_cov",
    "fbm_cov_matrix",
    "fgn_kernel",
    "fgn_autocov",
    "output_fbm_cov",
    "fgn_factor",
    "sample_fbm",
    "sample_fbm_paths",
    "sample_fgn",
]


def _check_hurst(H, lo=0.0):
    H = float(H)
    if not (lo < H < 1.0):
        raise SpecError(f"Hurst exponent must lie in ({lo:g},1), got {H}")
    return H


def fbm_cov(t, s, H):
    """E[W_H(t) W_H(s)] = (t^2H + s^2H - |t-s|^2H) / 2."""
    H = _check_hurst(H)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s < 0):
        raise SpecError("fbm_cov is defined for nonnegative times only")
    out = 0.5 * (t ** (2 * H) + s ** (2 * H) - np.abs(t - s) ** (2 * H))
    # W_H(0) = 0 exactly; the power terms need not cancel bit for bit
    out = np.where((t == 0) | (s == 0), 0.0, out)
    return float(out) if out.ndim == 0 else out


def fbm_cov_matrix(grid, H):
    grid = np.asarray(grid, dtype=float)
    return fbm_cov(grid[:, None], grid[None, :], H)


def fgn_kernel(t1, t2, H):
    """Second-moment density H(2H-1)|t1-t2|^(2H-2) of fBm increments, H in (1/2,1).

    The kernel is integrable but unbounded on the diagonal; evaluating it
    there is an error.
    """
    H = _check_hurst(H, lo=0.5)
    d = np.abs(np.asarray(t1, dtype=float) - np.asarray(t2, dtype=float))
    if np.any(d == 0.0):
        raise SpecError("fgn_kernel is singular on the diagonal t1 == t2")
    out = H * (2 * H - 1) * d ** (2 * H - 2)
    return float(out) if out.ndim == 0 else out


def fgn_autocov(k, H, step=1.0):
    """Autocovariance of fGn increments of width ``step`` at integer lag ``k``."""
    k = np.abs(np.asarray(k, dtype=float))
    twoH = 2 * float(H)
    return 0.5 * step ** twoH * ((k + 1) ** twoH - 2 * k ** twoH + np.abs(k - 1) ** twoH)


def output_fbm_cov(T, H2, sigma2):
    """``sigma2 diag(T^(2 H2_k)) sigma2^T``: covariance of the output fBm term at ``T``."""
    if T < 0:
        raise SpecError(f"T must be nonnegative, got {T}")
    H2 = np.asarray(H2, dtype=float).reshape(-1)
    sigma2 = np.atleast_2d(np.asarray(sigma2, dtype=float))
    scale = np.float64(T) ** (2 * H2)
    return (sigma2 * scale) @ sigma2.T


def _cholesky(C, what):
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise SimulationError(
            f"covariance factorization failed for {what}; the grid is too fine "
            "for double precision"
        ) from None


def fgn_factor(H, step, m):
    """Lower Cholesky factor of the m x m Toeplitz fGn covariance."""
    H = _check_hurst(H)
    lags = np.arange(m)
    gamma = fgn_autocov(lags, H, step)
    C = gamma[np.abs(lags[:, None] - lags[None, :])]
    return _cholesky(C, f"fGn with H={H}, m={m}")


def sample_fgn(factor, n_paths, rng):
    """Increment vectors, shape (n_paths, m), from a precomputed ``fgn_factor``."""
    Z = rng.standard_normal((factor.shape[0], n_paths))
    return (factor @ Z).T


def _prepare_grid(grid):
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise SpecError("grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise SpecError("grid must be strictly increasing")
    if grid[0] < 0:
        raise SpecError("grid must be nonnegative")
    return grid


def sample_fbm_paths(H, grid, n_paths, seed):
    """``n_paths`` exact fBm paths on ``grid``; returns shape (n_paths, len(grid)).

    A leading 0 in the grid is pinned to W(0) = 0 and excluded from the
    factorization.
    """
    H = _check_hurst(H)
    grid = _prepare_grid(grid)
    rng = np.random.default_rng(seed)
    start = 1 if grid[0] == 0.0 else 0
    inner = grid[start:]
    out = np.zeros((n_paths, grid.size))
    if inner.size:
        L = _cholesky(fbm_cov_matrix(inner, H), f"fBm with H={H} on {inner.size} points")
        out[:, start:] = (L @ rng.standard_normal((inner.size, n_paths))).T
    return out


def sample_fbm(H, grid, seed):
    """One exact fBm path on ``grid``, deterministic given ``seed``."""
    return sample_fbm_paths(H, grid, 1, seed)[0]
