"""Two-budget water-filling over Gramian eigenmodes and the capacity it attains.

Every input column k contributes n early modes ``v[k, j] = sqrt(g_kj) s_kj``
(eigenpairs of the early Gramian) and n late modes ``z[k, j]`` (late
Gramian).  A Gaussian control that puts variance ``sigma[k, j]`` on early
mode (k, j) and ``omega[k, j]`` on late mode (k, j) yields the output
covariance

    S_y = S_total + D (sum sigma v v^T + sum omega z z^T) D^T

and the capacity is ``0.5 * logdet(S_y) - 0.5 * logdet(S_total)``, maximized
subject to ``sum sigma = M1`` and ``sum omega = M2``.  The maximization is a
concave program over the two simplices; it is solved by iterative
water-filling on the whitened mode vectors ``L^{-1} D v`` with
``L L^T = S_total``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .covariances import (
    GramianSet,
    NoiseCovariances,
    compute_gramians,
    controlled_cov,
    total_cov,
)
from .errors import ConvergenceError, SpecError
from .matcore import expm, logdet_psd, symmetrize
from .model import PowerBudget, SystemSpec, validate

__all__ = [
    "ModeBasis",
    "Allocation",
    "WaterfillResult",
    "CapacityReport",
    "ZeroModeReport",
    "mode_basis",
    "waterfill_modes",
    "waterfill",
    "capacity",
    "segment_mi",
    "conditional_mi",
    "entropy_y",
    "optimal_basis_eval",
    "zero_mode_diagnostic",
    "evaluate_allocation",
]

INACTIVE_RTOL = 1e-12
LOG_2PIE = float(np.log(2.0 * np.pi * np.e))


@dataclass(frozen=True)
class ModeBasis:
    """Scaled eigenvectors of the per-column Gramians.

    ``early[k, j]`` is ``sqrt(g_kj) s_kj`` and ``late[k, j]`` is
    ``sqrt(d_kj) r_kj``; ``*_values`` hold the eigenvalues and ``*_active``
    marks modes whose eigenvalue is at least ``1e-12`` times the largest
    eigenvalue of the same Gramian.
    """

    early: np.ndarray
    late: np.ndarray
    early_values: np.ndarray
    late_values: np.ndarray
    early_active: np.ndarray
    late_active: np.ndarray


def _segment_modes(eigs):
    values = np.stack([np.clip(e.values, 0.0, None) for e in eigs])
    vectors = np.stack([(e.vectors * np.sqrt(v)).T for e, v in zip(eigs, values)])
    top = values.max(axis=1, keepdims=True)
    active = (values >= INACTIVE_RTOL * top) & (top > 0.0)
    return vectors, values, active


def mode_basis(gramians: GramianSet) -> ModeBasis:
    early, g, ea = _segment_modes(gramians.early_eig)
    late, d, la = _segment_modes(gramians.late_eig)
    return ModeBasis(early, late, g, d, ea, la)


@dataclass(frozen=True)
class WaterfillResult:
    """Solution of the whitened two-segment problem.

    ``gains[i]`` is the marginal capacity per unit power of mode i at the
    solution; ``gamma[s]`` is the water-level multiplier of segment s.
    """

    x: np.ndarray
    gains: np.ndarray
    gamma: np.ndarray
    kkt_residual: float
    iterations: int


def _gains(a, x):
    d = a.shape[1]
    M = np.eye(d) + (a.T * x) @ a
    Y = np.linalg.solve(M, a.T)
    return 0.5 * np.einsum("ij,ji->i", a, Y)


def _kkt(x, gains, seg, budgets):
    gamma = np.zeros(2)
    residual = 0.0
    for s in (0, 1):
        idx = np.flatnonzero(seg == s)
        if idx.size == 0:
            continue
        gamma[s] = gains[idx].max()
        if budgets[s] <= 0.0 or gamma[s] <= 0.0:
            continue
        on = idx[x[idx] > 1e-9 * budgets[s]]
        if on.size:
            residual = max(residual, float((gamma[s] - gains[on].min()) / gamma[s]))
    return gamma, residual


def waterfill_modes(a, seg, budgets, tol=1e-12, max_iter=10_000, kkt_tol=1e-8):
    """Maximize ``0.5 logdet(I + sum_i x_i a_i a_i^T)`` over two power simplices.

    Parameters
    ----------
    a : array_like, shape (m, d)
        Whitened mode vectors, one per row.
    seg : array_like of int, shape (m,)
        0 for early-segment modes, 1 for late-segment modes.
    budgets : (M1, M2)
    tol : float
        Allocation-change tolerance of the iteration.
    max_iter : int
    kkt_tol : float
        Required relative stationarity residual.

    Returns
    -------
    WaterfillResult

    Raises
    ------
    ConvergenceError
        If the iteration cap is hit or the KKT residual stays above
        ``kkt_tol``; the exception carries the best iterate.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    seg = np.asarray(seg, dtype=np.int64).reshape(-1)
    budgets = np.asarray(budgets, dtype=float).reshape(2)
    if np.any(budgets < 0) or not np.all(np.isfinite(budgets)):
        raise SpecError("budgets must be finite and nonnegative")
    m = a.shape[0]
    x = np.zeros(m)
    norms = np.einsum("ij,ij->i", a, a)
    for s in (0, 1):
        idx = np.flatnonzero(seg == s)
        if budgets[s] == 0.0 or idx.size == 0:
            continue
        usable = idx[norms[idx] > 0.0]
        # a segment with no usable direction still spends its budget
        target = usable if usable.size else idx
        x[target] = budgets[s] / target.size
    iterations = 0
    converged = True
    if m and np.any(budgets > 0):
        x, iterations, converged = _backend.waterfill_iterate(a, seg, budgets, x, tol, max_iter)
    gains = _gains(a, x) if m else np.zeros(0)
    gamma, residual = _kkt(x, gains, seg, budgets)
    result = WaterfillResult(x, gains, gamma, residual, int(iterations))
    if not converged or residual > kkt_tol:
        raise ConvergenceError(
            f"water-filling stopped after {iterations} iterations with KKT residual {residual:.3e}",
            best=result,
            residual=residual,
        )
    return result


@dataclass(frozen=True)
class Allocation:
    """Optimal mode variances; entry [k, j] belongs to mode j of input column k.

    ``gamma1``/``gamma2`` are the water-level multipliers, i.e. the marginal
    capacity (nats per unit power) shared by every active mode of a segment.
    """

    sigma: np.ndarray
    omega: np.ndarray
    gamma1: float
    gamma2: float
    kkt_residual: float
    iterations: int
    early_gain: np.ndarray = field(repr=False, default=None)
    late_gain: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {
            "sigma": self.sigma.tolist(),
            "omega": self.omega.tolist(),
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
        }


def _whiten(noise_total, D, vectors):
    L = np.linalg.cholesky(noise_total)
    return np.linalg.solve(L, D @ vectors.T).T


def waterfill(
    spec: SystemSpec,
    gramians: GramianSet,
    noise: NoiseCovariances,
    budget: PowerBudget,
    tol=1e-12,
    max_iter=10_000,
) -> Allocation:
    """Capacity-optimal allocation of the two budgets over the active modes."""
    basis = mode_basis(gramians)
    p, n = basis.early_values.shape
    ek, ej = np.nonzero(basis.early_active)
    lk, lj = np.nonzero(basis.late_active)
    vecs = np.concatenate([basis.early[ek, ej], basis.late[lk, lj]]).reshape(-1, n)
    seg = np.r_[np.zeros(ek.size, np.int64), np.ones(lk.size, np.int64)]
    a = _whiten(noise.total, spec.D, vecs)
    budgets = (budget.M1, budget.M2)
    res = waterfill_modes(a, seg, budgets, tol=tol, max_iter=max_iter)
    sigma = np.zeros((p, n))
    omega = np.zeros((p, n))
    g_early = np.zeros((p, n))
    g_late = np.zeros((p, n))
    sigma[ek, ej] = res.x[: ek.size]
    omega[lk, lj] = res.x[ek.size :]
    g_early[ek, ej] = res.gains[: ek.size]
    g_late[lk, lj] = res.gains[ek.size :]
    # a segment without any active mode spends its budget on null modes
    for amount, arr, act in ((budget.M1, sigma, basis.early_active), (budget.M2, omega, basis.late_active)):
        if amount > 0 and not act.any():
            arr[:] = amount / arr.size
    return Allocation(
        sigma=sigma,
        omega=omega,
        gamma1=float(res.gamma[0]),
        gamma2=float(res.gamma[1]),
        kkt_residual=res.kkt_residual,
        iterations=res.iterations,
        early_gain=g_early,
        late_gain=g_late,
    )


def conditional_mi(base, extra):
    """``0.5 [logdet(base + extra) - logdet(base)]``."""
    return 0.5 * (logdet_psd(symmetrize(base + extra)) - logdet_psd(base))


def entropy_y(S_y, n=None):
    """Differential entropy of a Gaussian with covariance ``S_y``."""
    S_y = np.atleast_2d(np.asarray(S_y, dtype=float))
    n = S_y.shape[0] if n is None else int(n)
    return 0.5 * (n * LOG_2PIE + logdet_psd(S_y))


@dataclass(frozen=True)
class CapacityReport:
    """Capacity at the optimal allocation and its decomposition.

    ``mi_early_given_late`` is the information the early control adds once
    the late control is known, and symmetrically for
    ``mi_late_given_early``; ``mi_early``/``mi_late`` are the unconditioned
    single-segment informations.  The chain rule gives
    ``mi_full = mi_early_given_late + mi_late = mi_late_given_early + mi_early``.
    """

    capacity_nats: float
    mi_full: float
    mi_early_given_late: float
    mi_late_given_early: float
    mi_early: float
    mi_late: float
    entropy_y: float
    S_y: np.ndarray
    allocation: Allocation
    gramians: GramianSet
    noise: NoiseCovariances
    S_early: np.ndarray
    S_late: np.ndarray
    capacity_eig: float

    @property
    def diagnostics(self):
        return {
            "early_gain": self.allocation.early_gain,
            "late_gain": self.allocation.late_gain,
            "capacity_eig_check": self.capacity_eig,
            "quadrature_rel_error": max(self.gramians.rel_error, self.noise.rel_error),
        }

    def to_dict(self):
        return {
            "capacity_nats": self.capacity_nats,
            "mi_full": self.mi_full,
            "mi_early_given_late": self.mi_early_given_late,
            "mi_late_given_early": self.mi_late_given_early,
            "mi_early": self.mi_early,
            "mi_late": self.mi_late,
            "entropy_y": self.entropy_y,
            "S_y": self.S_y.tolist(),
            "S_total": self.noise.total.tolist(),
            "input_matrix": self.gramians.input_matrix.tolist(),
            "allocation": self.allocation.to_dict(),
            "capacity_eig_check": self.capacity_eig,
            "quadrature_rel_error": max(self.gramians.rel_error, self.noise.rel_error),
        }


def evaluate_allocation(spec, gramians, noise, alloc) -> CapacityReport:
    """Mutual informations and entropies produced by a given allocation."""
    S_early, S_late = controlled_cov(gramians, alloc)
    D = spec.D
    E = symmetrize(D @ S_early @ D.T)
    Lt = symmetrize(D @ S_late @ D.T)
    base = noise.total
    S_y = symmetrize(base + E + Lt)
    mi_full = conditional_mi(base, E + Lt)
    mi_early = conditional_mi(base, E)
    mi_late = conditional_mi(base, Lt)
    mi_e_given_l = conditional_mi(base + Lt, E)
    mi_l_given_e = conditional_mi(base + E, Lt)
    L = np.linalg.cholesky(base)
    W = np.linalg.solve(L, np.linalg.solve(L, E + Lt).T)
    mu = np.linalg.eigvalsh(symmetrize(W))
    cap_eig = 0.5 * float(np.sum(np.log1p(np.clip(mu, -0.5, None))))
    return CapacityReport(
        capacity_nats=max(mi_full, 0.0),
        mi_full=mi_full,
        mi_early_given_late=mi_e_given_l,
        mi_late_given_early=mi_l_given_e,
        mi_early=mi_early,
        mi_late=mi_late,
        entropy_y=entropy_y(S_y),
        S_y=S_y,
        allocation=alloc,
        gramians=gramians,
        noise=noise,
        S_early=S_early,
        S_late=S_late,
        capacity_eig=cap_eig,
    )


def capacity(
    spec: SystemSpec,
    budget: PowerBudget,
    cfg=None,
    input_matrix=None,
    gramians=None,
    noise=None,
) -> CapacityReport:
    """Control-to-output capacity (nats) at the water-filling optimum.

    Parameters
    ----------
    spec, budget
        System and power budgets.
    cfg : QuadratureConfig, optional
    input_matrix : array_like, optional
        Replaces the effective early-window input matrix; meant for
        comparisons against externally supplied matrices.
    gramians, noise : optional
        Precomputed pieces, reused by sweeps over the budgets.
    """
    validate(spec)
    if gramians is None:
        gramians = compute_gramians(spec, cfg, input_matrix)
    if noise is None:
        noise = total_cov(spec, cfg)
    alloc = waterfill(spec, gramians, noise, budget)
    return evaluate_allocation(spec, gramians, noise, alloc)


def segment_mi(spec, budget, cfg=None):
    """``(mi_early_given_late, mi_late_given_early)`` at the optimum."""
    rep = capacity(spec, budget, cfg)
    return rep.mi_early_given_late, rep.mi_late_given_early


def optimal_basis_eval(spec, gramians, j, k, t, segment="early"):
    """Optimal orthonormal control basis function of mode (k, j) at times ``t``.

    Early functions live on ``[0, T-h]`` and are
    ``s_kj^T e^{A(T-t)} b_k / sqrt(g_kj)``; late ones on ``[T-h, T]`` use the
    late Gramian eigenpair and column k of ``B1``.  Outside its window the
    function is zero.  ``j`` and ``k`` are zero-based.
    """
    if segment not in ("early", "late"):
        raise SpecError(f"segment must be 'early' or 'late', got {segment!r}")
    basis = mode_basis(gramians)
    if segment == "early":
        active, values, eigs = basis.early_active, basis.early_values, gramians.early_eig
        col = gramians.input_matrix[:, k]
        lo, hi = 0.0, spec.T - spec.h
    else:
        active, values, eigs = basis.late_active, basis.late_values, gramians.late_eig
        col = spec.B1[:, k]
        lo, hi = spec.T - spec.h, spec.T
    if not (0 <= k < values.shape[0] and 0 <= j < values.shape[1]):
        raise SpecError(f"mode ({k}, {j}) out of range")
    if not active[k, j]:
        raise SpecError(f"{segment} mode ({k}, {j}) is inactive (zero eigenvalue)")
    s = eigs[k].vectors[:, j]
    t = np.asarray(t, dtype=float)
    flat = t.reshape(-1)
    inside = (flat >= lo) & (flat <= hi)
    out = np.zeros(flat.shape)
    if inside.any():
        E = expm(spec.A[None] * (spec.T - flat[inside])[:, None, None])
        out[inside] = (E @ col) @ s / np.sqrt(values[k, j])
    return out.reshape(t.shape) if t.ndim else float(out[0])


@dataclass(frozen=True)
class ZeroModeReport:
    """Modes carrying power while their Gramian eigenvalue is zero.

    ``contribution`` is the conditional information those modes add on top
    of everything else; it must vanish.
    """

    flagged: tuple
    contribution: float
    degenerate: bool
    ok: bool


def zero_mode_diagnostic(spec, allocation, gramians, noise=None, atol=1e-8):
    basis = mode_basis(gramians)
    flags = []
    for name, weights, active in (
        ("early", allocation.sigma, basis.early_active),
        ("late", allocation.omega, basis.late_active),
    ):
        for k, j in zip(*np.nonzero((weights > 0) & ~active)):
            flags.append((name, int(k), int(j)))
    if not flags:
        return ZeroModeReport((), 0.0, False, True)
    noise = noise if noise is not None else total_cov(spec)
    D = spec.D
    keep_s = np.where(basis.early_active, allocation.sigma, 0.0)
    keep_o = np.where(basis.late_active, allocation.omega, 0.0)
    flag_s = allocation.sigma - keep_s
    flag_o = allocation.omega - keep_o

    def cov(sig, om):
        e = np.einsum("kj,kja,kjb->ab", sig, basis.early, basis.early)
        l_ = np.einsum("kj,kja,kjb->ab", om, basis.late, basis.late)
        return symmetrize(D @ (e + l_) @ D.T)

    base = noise.total + cov(keep_s, keep_o)
    contribution = conditional_mi(base, cov(flag_s, flag_o))
    return ZeroModeReport(tuple(flags), contribution, True, abs(contribution) <= atol)
