"""Controllability Gramians and noise covariances at the horizon T.

With s = T - t the time-to-go, the early window t in [0, T-h] maps to
s in [h, T] and the final delay window to s in [0, h].  Column indices
``k`` are zero-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DefinitenessError, SpecError
from .fbm import output_fbm_cov
from .matcore import expm, sym_eig, symmetrize
from .model import SystemSpec, effective_input_matrix
from .quadrature import fbm_double_integral, gramian_stack

__all__ = [
    "GramianSet",
    "NoiseCovariances",
    "compute_gramians",
    "early_gramian",
    "late_gramian",
    "reachability_gramian",
    "initial_state_cov",
    "white_noise_cov",
    "state_fbm_cov",
    "total_cov",
    "controlled_cov",
]


@dataclass(frozen=True)
class GramianSet:
    """Per-column Gramians of the early (t <= T-h) and late (t > T-h) windows.

    ``early[k]`` integrates column k of the effective input matrix over the
    early window, ``late[k]`` column k of ``B1`` over the last delay window.
    """

    early: np.ndarray
    late: np.ndarray
    early_eig: tuple
    late_eig: tuple
    input_matrix: np.ndarray
    rel_error: float

    @property
    def total(self):
        return self.early.sum(axis=0) + self.late.sum(axis=0)

    @property
    def p(self):
        return self.early.shape[0]

    @property
    def n(self):
        return self.early.shape[1]


@dataclass(frozen=True)
class NoiseCovariances:
    initial: np.ndarray
    white: np.ndarray
    fbm: np.ndarray
    output_fbm: np.ndarray
    total: np.ndarray
    rel_error: float

    @property
    def state(self):
        """Uncontrolled state covariance at T."""
        return self.initial + self.white + self.fbm


def _check_column(spec, k):
    if not 0 <= k < spec.p:
        raise SpecError(f"column index {k} out of range for p={spec.p}")


def _eigs(stack):
    return tuple(sym_eig(G) for G in stack)


def compute_gramians(spec: SystemSpec, cfg=None, input_matrix=None) -> GramianSet:
    """All early/late Gramians and their eigendecompositions.

    ``input_matrix`` overrides the effective early-window input matrix,
    which is otherwise ``B1 + exp(-A h) B2``.
    """
    B = effective_input_matrix(spec) if input_matrix is None else np.asarray(input_matrix, float)
    if B.shape != spec.B1.shape:
        raise SpecError(f"input matrix must have shape {spec.B1.shape}, got {B.shape}")
    early = gramian_stack(spec.A, B, spec.h, spec.T, cfg)
    late = gramian_stack(spec.A, spec.B1, 0.0, spec.h, cfg)
    err = np.nanmax([early.rel_error, late.rel_error, 0.0])
    return GramianSet(
        early=early.value,
        late=late.value,
        early_eig=_eigs(early.value),
        late_eig=_eigs(late.value),
        input_matrix=B,
        rel_error=float(err),
    )


def early_gramian(spec, k, cfg=None):
    """Gramian of column k of the effective input matrix over t in [0, T-h]."""
    _check_column(spec, k)
    b = effective_input_matrix(spec)[:, [k]]
    return gramian_stack(spec.A, b, spec.h, spec.T, cfg).value[0]


def late_gramian(spec, k, cfg=None):
    """Gramian of column k of ``B1`` over t in [T-h, T]."""
    _check_column(spec, k)
    return gramian_stack(spec.A, spec.B1[:, [k]], 0.0, spec.h, cfg).value[0]


def reachability_gramian(spec, cfg=None):
    """Gramian of the delayed control operator over [0, T]; nonsingular iff controllable."""
    return compute_gramians(spec, cfg).total


def initial_state_cov(spec):
    E = expm(spec.A * spec.T)
    return symmetrize(E @ spec.Cx0 @ E.T)


def white_noise_cov(spec, cfg=None):
    """int_0^T e^{A(T-t)} G G^T e^{A^T(T-t)} dt."""
    return gramian_stack(spec.A, spec.G, 0.0, spec.T, cfg).value.sum(axis=0)


def state_fbm_cov(spec, cfg=None):
    """Covariance of int_0^T e^{A(T-t)} sigma1 dW^{H1}(t)."""
    return fbm_double_integral(spec.A, spec.sigma1, spec.H1, spec.T, cfg).value


def total_cov(spec: SystemSpec, cfg=None) -> NoiseCovariances:
    """Output covariance at T with every control held at zero.

    Raises
    ------
    DefinitenessError
        When the assembled covariance is numerically singular.
    """
    white = gramian_stack(spec.A, spec.G, 0.0, spec.T, cfg)
    frac = fbm_double_integral(spec.A, spec.sigma1, spec.H1, spec.T, cfg)
    initial = initial_state_cov(spec)
    out = output_fbm_cov(spec.T, spec.H2, spec.sigma2)
    D = spec.D
    state = initial + white.value.sum(axis=0) + frac.value
    total = symmetrize(D @ state @ D.T + out)
    w = np.linalg.eigvalsh(total)
    if w[0] <= 1e-13 * max(1.0, abs(w[-1])):
        raise DefinitenessError(
            f"uncontrolled output covariance is singular (smallest eigenvalue {w[0]:.3e}); "
            "at least one noise channel must excite every output direction"
        )
    return NoiseCovariances(
        initial=initial,
        white=white.value.sum(axis=0),
        fbm=frac.value,
        output_fbm=out,
        total=total,
        rel_error=float(np.nanmax([white.rel_error, frac.rel_error, 0.0])),
    )


def mode_vectors(eigs):
    """Stack of scaled eigenvectors sqrt(lambda_j) e_j; shape (p, n, n), index [k, j]."""
    return np.stack([(e.vectors * np.sqrt(np.clip(e.values, 0.0, None))).T for e in eigs])


def controlled_cov(gramians: GramianSet, allocation):
    """State covariance contributed by the early and late controls.

    ``allocation`` needs ``sigma`` and ``omega`` arrays of shape (p, n);
    entry [k, j] is the variance on mode j of input column k.
    """
    sigma = np.asarray(allocation.sigma, dtype=float)
    omega = np.asarray(allocation.omega, dtype=float)
    shape = (gramians.p, gramians.n)
    if sigma.shape != shape or omega.shape != shape:
        raise SpecError(f"allocation arrays must have shape {shape}")
    if np.any(sigma < 0) or np.any(omega < 0):
        raise SpecError("allocation entries must be nonnegative")
    V = mode_vectors(gramians.early_eig)
    Z = mode_vectors(gramians.late_eig)
    S_early = np.einsum("kj,kja,kjb->ab", sigma, V, V)
    S_late = np.einsum("kj,kja,kjb->ab", omega, Z, Z)
    return symmetrize(S_early), symmetrize(S_late)
