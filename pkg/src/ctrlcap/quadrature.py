"""Quadrature for matrix-exponential Gramian integrals.

Two integrals cover every covariance in the package::

    gramian_stack:        int_{s0}^{s1} e^{As} f f^T e^{A^T s} ds        (one per column f of F)
    fbm_double_integral:  int int_{[0,T]^2} e^{A s1} F R(s1 - s2) F^T e^{A^T s2} ds1 ds2

with R diagonal, R_kk(r) = H_k (2 H_k - 1) |r|^(2 H_k - 2).  The double
integral is folded onto the lag r = s2 - s1 >= 0::

    H(2H-1) int_0^T r^(2H-2) [W(T - r) e^{A^T r} + (.)^T] dr,   W(tau) = int_0^tau e^{As} f f^T e^{A^T s} ds

The bracket is analytic in r, so the first lag panel uses Gauss-Jacobi
nodes for the weight r^(2H-2) and the remaining panels plain
Gauss-Legendre.  Error estimates come from repeating the rule with doubled
panel counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .matcore import expm, symmetrize

__all__ = [
    "QuadratureConfig",
    "QuadResult",
    "gauss_legendre",
    "composite_gauss_legendre",
    "gauss_jacobi_power",
    "gramian_stack",
    "fbm_double_integral",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Node counts for the Gramian integrals.

    ``panels``/``order`` drive the one-dimensional Gramians;
    ``fbm_*`` the singular double integral.  ``estimate_error`` repeats each
    rule with doubled panels and keeps the finer value.
    """

    panels: int = 64
    order: int = 8
    fbm_panels: int = 8
    fbm_order: int = 16
    fbm_inner_panels: int = 16
    fbm_inner_order: int = 8
    estimate_error: bool = True

    def doubled(self):
        return QuadratureConfig(
            panels=2 * self.panels,
            order=self.order,
            fbm_panels=2 * self.fbm_panels,
            fbm_order=self.fbm_order,
            fbm_inner_panels=2 * self.fbm_inner_panels,
            fbm_inner_order=self.fbm_inner_order,
            estimate_error=False,
        )


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray
    rel_error: float


@lru_cache(maxsize=64)
def gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss_legendre(a, b, panels, order):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    return nodes, weights


def gauss_jacobi_power(c, beta, order):
    """Rule for int_0^c r^beta f(r) dr, beta > -1; the weight is absorbed."""
    x, w = roots_jacobi(order, 0.0, beta)
    nodes = 0.5 * c * (1.0 + x)
    weights = (0.5 * c) ** (beta + 1.0) * w
    return nodes, weights


def _rel(diff, ref):
    scale = np.linalg.norm(ref)
    if scale == 0.0:
        return float(np.linalg.norm(diff))
    return float(np.linalg.norm(diff) / scale)


def _gramian_stack_rule(A, F, s0, s1, panels, order):
    n, r = F.shape
    if s1 <= s0 or r == 0:
        return np.zeros((r, n, n))
    s, w = composite_gauss_legendre(s0, s1, panels, order)
    Y = expm(A[None, :, :] * s[:, None, None]) @ F  # (N, n, r)
    return np.einsum("i,iak,ibk->kab", w, Y, Y)


def gramian_stack(A, F, s0, s1, cfg=None):
    """Per-column Gramians int_{s0}^{s1} e^{As} f_k f_k^T e^{A^T s} ds.

    Returns
    -------
    QuadResult
        ``value`` has shape (r, n, n) for an n x r factor ``F``.
    """
    cfg = cfg or QuadratureConfig()
    A = np.asarray(A, dtype=float)
    F = np.asarray(F, dtype=float).reshape(A.shape[0], -1)
    coarse = symmetrize(_gramian_stack_rule(A, F, s0, s1, cfg.panels, cfg.order))
    if not cfg.estimate_error:
        return QuadResult(coarse, float("nan"))
    fine = symmetrize(_gramian_stack_rule(A, F, s0, s1, 2 * cfg.panels, cfg.order))
    return QuadResult(fine, _rel(fine - coarse, fine.sum(axis=0)))


def _lag_rule(T, beta, panels, order):
    """Nodes/weights for int_0^T r^beta g(r) dr with g smooth."""
    width = T / panels
    r0, w0 = gauss_jacobi_power(width, beta, order)
    if panels == 1:
        return r0, w0
    r1, w1 = composite_gauss_legendre(width, T, panels - 1, order)
    return np.concatenate([r0, r1]), np.concatenate([w0, w1 * r1 ** beta])


def _fbm_rule(A, F, H, T, cfg):
    n = A.shape[0]
    out = np.zeros((n, n))
    u, wu = composite_gauss_legendre(0.0, 1.0, cfg.fbm_inner_panels, cfg.fbm_inner_order)
    for Hk in np.unique(H):
        cols = np.flatnonzero(H == Hk)
        Fk = F[:, cols]
        if not np.any(Fk):
            continue
        beta = 2.0 * Hk - 2.0
        r, wr = _lag_rule(T, beta, cfg.fbm_panels, cfg.fbm_order)
        tau = T - r
        s = tau[:, None] * u[None, :]  # inner nodes on [0, T - r]
        E = expm(A[None, None, :, :] * s[:, :, None, None])
        Y = E @ Fk  # (No, Ni, n, c)
        W = np.einsum("ij,ijak,ijbk->iab", tau[:, None] * wu[None, :], Y, Y)
        Phi = W @ expm(A[None, :, :] * r[:, None, None]).swapaxes(-1, -2)
        J = np.einsum("i,iab->ab", wr, Phi)
        out += Hk * (2.0 * Hk - 1.0) * (J + J.T)
    return out


def fbm_double_integral(A, F, H, T, cfg=None):
    """Covariance of int_0^T e^{A(T-t)} F dW^H(t) for independent fBm components, H_k in (1/2,1)."""
    cfg = cfg or QuadratureConfig()
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    F = np.asarray(F, dtype=float).reshape(n, -1)
    H = np.asarray(H, dtype=float).reshape(-1)
    if T <= 0.0:
        return QuadResult(np.zeros((n, n)), 0.0)
    coarse = symmetrize(_fbm_rule(A, F, H, T, cfg))
    if not cfg.estimate_error:
        return QuadResult(coarse, float("nan"))
    fine = symmetrize(_fbm_rule(A, F, H, T, cfg.doubled()))
    return QuadResult(fine, _rel(fine - coarse, fine))
