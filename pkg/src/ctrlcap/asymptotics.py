"""Limiting regimes of the capacity: long horizons and short horizons.

* Stable drift (Hurwitz ``A``): every Gramian and noise covariance that
  keeps growing with T converges, and is replaced by its Lyapunov limit.
* Unstable drift (spectrum in the open right half plane): the state is
  rewritten as ``e^{AT}`` times a quantity built from ``-A``; the factors
  cancel inside the log-determinant when ``D`` is invertible, and the
  ``-A`` quantities converge.
* Short horizons: every covariance is linear in T to first order, which
  gives a capacity linear in T.

The output fBm term ``sigma2 diag(T^{2 H2}) sigma2^T`` never converges, so
both long-horizon limits take an explicit ``reference_T`` for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import fractional_matrix_power
from scipy.special import gamma as gamma_fn

from .allocator import CapacityReport, evaluate_allocation, waterfill
from .covariances import GramianSet, NoiseCovariances, compute_gramians, total_cov
from .errors import DefinitenessError, RegimeError, SpecError
from .fbm import output_fbm_cov
from .matcore import expm, logdet_psd, lyap_solve, sym_eig, symmetrize
from .model import PowerBudget, SystemSpec, effective_input_matrix, validate
from .quadrature import fbm_double_integral, gramian_stack

__all__ = [
    "AsymptoticReport",
    "SmallHorizonLaw",
    "lyap_residual",
    "stable_limit_parts",
    "stationary_fbm_cov",
    "capacity_stable_limit",
    "capacity_unstable_limit",
    "transformed_parts",
    "transformation_check",
    "small_horizon_law",
]

_CAVEAT = (
    "output fBm variance grows like T^(2 H2) without bound; the limit holds "
    "that term fixed at reference_T"
)


@dataclass(frozen=True)
class AsymptoticReport:
    regime: str
    capacity_limit: float
    lyapunov_residuals: dict
    reference_T: float
    fbm_mode: str = "exact"
    notes: tuple = ()
    report: CapacityReport | None = field(default=None, repr=False)

    def to_dict(self):
        out = {
            "regime": self.regime,
            "capacity_limit": self.capacity_limit,
            "lyapunov_residuals": dict(self.lyapunov_residuals),
            "reference_T": self.reference_T,
            "fbm_mode": self.fbm_mode,
            "notes": list(self.notes),
        }
        if self.report is not None:
            out["allocation"] = self.report.allocation.to_dict()
        return out


def lyap_residual(A, X, Q):
    """Scaled residual ``||A X + X A^T + Q|| / (||A|| ||X|| + ||Q||)``."""
    R = A @ X + X @ A.T + Q
    scale = np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(Q)
    return float(np.linalg.norm(R) / scale) if scale else 0.0


def _spectrum_check(A, want):
    lam = np.linalg.eigvals(A)
    tol = 1e-12 * max(1.0, float(np.abs(A).max(initial=0.0)))
    if want == "stable" and not np.all(lam.real < -tol):
        raise RegimeError(
            f"stable limit needs every eigenvalue of A in the open left half plane; "
            f"max real part is {lam.real.max():.6g}"
        )
    if want == "unstable" and not np.all(lam.real > tol):
        raise RegimeError(
            "unstable limit needs every eigenvalue of A in the open right half plane "
            f"(real parts span [{lam.real.min():.6g}, {lam.real.max():.6g}])"
        )


def stationary_fbm_cov(A, F, H, mode="exact"):
    """Limit as T -> infinity of ``int int e^{A s1} F R F^T e^{A^T s2}`` for Hurwitz ``A``.

    With ``W_k`` the Lyapunov solution for column k and ``c = 2 H_k - 1``,
    ``mode="exact"`` sums ``H_k c Gamma(c) [W_k (-A^T)^{-c} + (-A)^{-c} W_k]``.
    ``mode="as_printed"`` returns the white-noise style Lyapunov solution
    for ``F F^T`` instead, which ignores the long-range correlation.
    """
    A = np.asarray(A, dtype=float)
    F = np.asarray(F, dtype=float).reshape(A.shape[0], -1)
    if mode == "as_printed":
        return lyap_solve(A, F @ F.T)
    if mode != "exact":
        raise SpecError(f"unknown fbm mode {mode!r}")
    H = np.asarray(H, dtype=float).reshape(-1)
    out = np.zeros_like(A)
    for Hk in np.unique(H):
        cols = F[:, H == Hk]
        if not np.any(cols):
            continue
        c = 2.0 * Hk - 1.0
        W = lyap_solve(A, cols @ cols.T)
        P = np.real(fractional_matrix_power(-A, -c))
        out += Hk * c * gamma_fn(c) * (W @ P.T + P @ W)
    return symmetrize(out)


def stable_limit_parts(spec, reference_T, fbm_mode="exact", cfg=None):
    """Gramians and noise covariances in the T -> infinity limit, stable ``A``.

    Returns ``(GramianSet, NoiseCovariances, residuals)``.
    """
    _spectrum_check(spec.A, "stable")
    A, h = spec.A, spec.h
    B = effective_input_matrix(spec)
    shift = expm(A * h)
    early, residuals = [], {}
    for k in range(spec.p):
        Q = np.outer(B[:, k], B[:, k])
        X = lyap_solve(A, Q)
        residuals[f"early_gramian[{k}]"] = lyap_residual(A, X, Q)
        # early window covers time-to-go s >= h
        early.append(symmetrize(shift @ X @ shift.T))
    early = np.stack(early)
    late = gramian_stack(A, spec.B1, 0.0, h, cfg)
    GG = spec.G @ spec.G.T
    white = lyap_solve(A, GG)
    residuals["white_noise"] = lyap_residual(A, white, GG)
    frac = stationary_fbm_cov(A, spec.sigma1, spec.H1, fbm_mode)
    if fbm_mode == "as_printed":
        S1 = spec.sigma1 @ spec.sigma1.T
        residuals["state_fbm"] = lyap_residual(A, frac, S1)
    out = output_fbm_cov(reference_T, spec.H2, spec.sigma2)
    D = spec.D
    total = symmetrize(D @ (white + frac) @ D.T + out)
    gram = GramianSet(
        early=early,
        late=late.value,
        early_eig=tuple(sym_eig(G) for G in early),
        late_eig=tuple(sym_eig(G) for G in late.value),
        input_matrix=B,
        rel_error=float(late.rel_error),
    )
    noise = NoiseCovariances(
        initial=np.zeros_like(A),
        white=white,
        fbm=frac,
        output_fbm=out,
        total=total,
        rel_error=0.0,
    )
    return gram, noise, residuals


def _check_total(total, what):
    w = np.linalg.eigvalsh(total)
    if w[0] <= 1e-13 * max(1.0, abs(w[-1])):
        raise DefinitenessError(f"{what} noise covariance is singular (smallest eigenvalue {w[0]:.3e})")


def capacity_stable_limit(
    spec: SystemSpec, budget: PowerBudget, reference_T=None, fbm_mode="exact", cfg=None
) -> AsymptoticReport:
    """Infinite-horizon capacity for Hurwitz ``A``.

    ``reference_T`` defaults to ``spec.T``.  ``fbm_mode`` selects the
    stationary fBm covariance: ``"exact"`` or the white-noise style
    ``"as_printed"`` approximation.
    """
    validate(spec)
    ref = float(spec.T if reference_T is None else reference_T)
    gram, noise, residuals = stable_limit_parts(spec, ref, fbm_mode, cfg)
    _check_total(noise.total, "limiting")
    alloc = waterfill(spec, gram, noise, budget)
    rep = evaluate_allocation(spec, gram, noise, alloc)
    notes = [_CAVEAT]
    if fbm_mode == "as_printed":
        notes.append("state fBm covariance uses the as-printed approximation")
    return AsymptoticReport(
        regime="stable",
        capacity_limit=rep.capacity_nats,
        lyapunov_residuals=residuals,
        reference_T=ref,
        fbm_mode=fbm_mode,
        notes=tuple(notes),
        report=rep,
    )


def _require_invertible_D(spec):
    D = spec.D
    if D.shape[0] != D.shape[1] or np.linalg.matrix_rank(D) < D.shape[0]:
        raise SpecError("the transformed form needs a square invertible output matrix D")
    return np.linalg.inv(D)


def transformed_parts(spec, cfg=None):
    """Finite-T quantities built from ``-A``, in state coordinates.

    Returns a dict with the early/late Gramian stacks, the noise terms and
    the assembled noise covariance ``Cx0 + white + fbm + e^{-AT} D^{-1} N D^{-T} e^{-A^T T}``
    where ``N`` is the output fBm covariance.
    """
    Dinv = _require_invertible_D(spec)
    A, T, h = spec.A, spec.T, spec.h
    B = effective_input_matrix(spec)
    early = gramian_stack(-A, B, 0.0, T - h, cfg).value
    late = gramian_stack(-A, spec.B1, T - h, T, cfg).value
    white = gramian_stack(-A, spec.G, 0.0, T, cfg).value.sum(axis=0)
    frac = fbm_double_integral(-A, spec.sigma1, spec.H1, T, cfg).value
    back = expm(-A * T) @ Dinv
    out = symmetrize(back @ output_fbm_cov(T, spec.H2, spec.sigma2) @ back.T)
    total = symmetrize(spec.Cx0 + white + frac + out)
    return {"early": early, "late": late, "white": white, "fbm": frac, "output": out, "total": total}


def transformation_check(spec, cfg=None):
    """Unit-weight information computed directly and through the ``-A`` form.

    Both equal ``0.5 logdet(I + S^{-1} K)`` with every Gramian entering at
    unit weight; the direct form uses the output-space noise covariance and
    the Gramians of ``A``, the transformed one the state-space quantities of
    :func:`transformed_parts`.  Returns ``(direct, transformed)``.
    """
    validate(spec)
    gram = compute_gramians(spec, cfg)
    noise = total_cov(spec, cfg)
    D = spec.D
    K = D @ gram.total @ D.T
    direct = 0.5 * (logdet_psd(symmetrize(noise.total + K)) - logdet_psd(noise.total))
    parts = transformed_parts(spec, cfg)
    Kt = parts["early"].sum(axis=0) + parts["late"].sum(axis=0)
    base = parts["total"]
    transformed = 0.5 * (logdet_psd(symmetrize(base + Kt)) - logdet_psd(base))
    return direct, transformed


def capacity_unstable_limit(
    spec: SystemSpec, budget: PowerBudget, reference_T=None, fbm_mode="exact", cfg=None
) -> AsymptoticReport:
    """Infinite-horizon capacity for ``A`` with spectrum in the right half plane.

    Works in the transformed coordinates: early Gramians and noise
    covariances of ``-A`` are replaced by Lyapunov limits, the late
    Gramians and the mapped output fBm term are evaluated at
    ``reference_T``, and the allocation is water-filled on the eigenmodes of
    the transformed Gramians.
    """
    validate(spec)
    _spectrum_check(spec.A, "unstable")
    Dinv = _require_invertible_D(spec)
    ref = float(spec.T if reference_T is None else reference_T)
    if ref <= spec.h:
        raise SpecError("reference_T must exceed h")
    A, n = spec.A, spec.n
    Am = -A
    B = effective_input_matrix(spec)
    residuals = {}
    early = []
    for k in range(spec.p):
        Q = np.outer(B[:, k], B[:, k])
        X = lyap_solve(Am, Q)
        residuals[f"early_gramian[{k}]"] = lyap_residual(Am, X, Q)
        early.append(X)
    early = np.stack(early)
    late = gramian_stack(Am, spec.B1, ref - spec.h, ref, cfg)
    GG = spec.G @ spec.G.T
    white = lyap_solve(Am, GG)
    residuals["white_noise"] = lyap_residual(Am, white, GG)
    frac = stationary_fbm_cov(Am, spec.sigma1, spec.H1, fbm_mode)
    back = expm(Am * ref) @ Dinv
    out = symmetrize(back @ output_fbm_cov(ref, spec.H2, spec.sigma2) @ back.T)
    total = symmetrize(spec.Cx0 + white + frac + out)
    _check_total(total, "transformed limiting")
    gram = GramianSet(
        early=early,
        late=late.value,
        early_eig=tuple(sym_eig(G) for G in early),
        late_eig=tuple(sym_eig(G) for G in late.value),
        input_matrix=B,
        rel_error=float(late.rel_error),
    )
    noise = NoiseCovariances(
        initial=spec.Cx0, white=white, fbm=frac, output_fbm=out, total=total, rel_error=0.0
    )
    # transformed coordinates observe the state directly
    state_spec = spec.with_(D=np.eye(n))
    alloc = waterfill(state_spec, gram, noise, budget)
    rep = evaluate_allocation(state_spec, gram, noise, alloc)
    notes = [_CAVEAT, "late-window Gramians evaluated at reference_T"]
    if fbm_mode == "as_printed":
        notes.append("state fBm covariance uses the as-printed approximation")
    return AsymptoticReport(
        regime="unstable",
        capacity_limit=rep.capacity_nats,
        lyapunov_residuals=residuals,
        reference_T=ref,
        fbm_mode=fbm_mode,
        notes=tuple(notes),
        report=rep,
    )


@dataclass(frozen=True)
class SmallHorizonLaw:
    """Linear short-horizon law ``C(T) = trace_Q * T``.

    ``weights[k]`` is the power given to input column k; ``Q`` is the
    matrix whose trace is the slope.
    """

    trace_Q: float
    Q: np.ndarray
    weights: np.ndarray
    noise_rate: np.ndarray

    def capacity_at(self, T):
        return self.trace_Q * float(T)

    def to_report(self):
        return AsymptoticReport(
            regime="small_T",
            capacity_limit=self.trace_Q,
            lyapunov_residuals={},
            reference_T=0.0,
            notes=("capacity_limit is the slope of C(T) = trace(Q) T",),
        )


def small_horizon_law(spec: SystemSpec, budget: PowerBudget) -> SmallHorizonLaw:
    """Slope of the capacity as T -> 0 with the delay neglected.

    The noise covariance grows like ``S_bar T`` with
    ``S_bar = D G G^T D^T + D sigma1 sigma1^T D^T + sigma2 sigma2^T``.  With
    the delay neglected the effective input matrix is ``B1 + B2`` and only
    the early budget ``M1`` acts.  The slope ``trace(Q)`` with
    ``Q = S_bar^{-1} sum_k w_k D b_k b_k^T D^T`` is linear in the column
    powers ``w``, so the budget goes to the column(s) with the largest
    ``b_k^T D^T S_bar^{-1} D b_k``, split evenly between ties.
    """
    validate(spec)
    D = spec.D
    S_bar = symmetrize(
        D @ spec.G @ spec.G.T @ D.T + D @ spec.sigma1 @ spec.sigma1.T @ D.T + spec.sigma2 @ spec.sigma2.T
    )
    try:
        L = np.linalg.cholesky(S_bar)
    except np.linalg.LinAlgError:
        raise DefinitenessError("short-horizon noise rate matrix is singular") from None
    B = D @ (spec.B1 + spec.B2)
    Y = np.linalg.solve(L, B)
    score = np.einsum("ij,ij->j", Y, Y)
    weights = np.zeros(spec.p)
    if budget.M1 > 0 and score.size and score.max() > 0:
        top = np.flatnonzero(score >= score.max() * (1 - 1e-12))
        weights[top] = budget.M1 / top.size
    Q = np.linalg.solve(S_bar, (B * weights) @ B.T)
    return SmallHorizonLaw(float(np.trace(Q)), Q, weights, S_bar)
