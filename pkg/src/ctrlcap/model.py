"""System description for a delayed linear SDE with mixed fBm forcing.

State equation::

    dx = (A x + B1 u(t) + B2 u(t - h)) dt + G dW + sigma1 dW^{H1},  u = 0 on [-h, 0]
    y(T) = D x(T) + sigma2 W^{H2}(T)

``SystemSpec`` is a frozen container; ``validate`` checks every structural
constraint and returns the spec unchanged so calls can be chained.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import NamedTuple

import numpy as np

from .errors import SpecError
from .matcore import expm, is_psd

__all__ = [
    "SystemSpec",
    "PowerBudget",
    "RankResult",
    "validate",
    "effective_input_matrix",
    "kalman_rank",
    "controllability_matrix",
]

_MATRIX_FIELDS = ("A", "B1", "B2", "G", "sigma1", "D", "sigma2", "Cx0")


@dataclass(frozen=True, eq=False)
class SystemSpec:
    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    G: np.ndarray
    sigma1: np.ndarray
    D: np.ndarray
    sigma2: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    Cx0: np.ndarray
    h: float
    T: float

    def __post_init__(self):
        for name in _MATRIX_FIELDS:
            arr = np.array(getattr(self, name), dtype=float, ndmin=2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("H1", "H2"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "T", float(self.T))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.B1.shape[1]

    @property
    def p_out(self):
        return self.D.shape[0]

    def with_(self, **changes):
        """Copy with some fields replaced (not re-validated)."""
        return replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, SystemSpec):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name))
            for f in fields(self)
        )

    __hash__ = None


@dataclass(frozen=True)
class PowerBudget:
    """Control power available before (M1) and inside (M2) the last delay window."""

    M1: float = 1.0
    M2: float = 1.0

    def __post_init__(self):
        for name in ("M1", "M2"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0.0:
                raise SpecError(f"{name} must be finite and nonnegative, got {v}")
            object.__setattr__(self, name, v)


class RankResult(NamedTuple):
    controllable: bool
    rank: int


def _shape_error(name, got, want):
    return SpecError(f"dimension mismatch: {name} has shape {got}, expected {want}")


def validate(spec: SystemSpec) -> SystemSpec:
    """Return ``spec`` if all structural invariants hold, else raise ``SpecError``."""
    A = spec.A
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise SpecError(f"dimension mismatch: A must be square and nonempty, got {A.shape}")
    n = A.shape[0]
    p = spec.B1.shape[1]
    p_out = spec.D.shape[0]
    expected = {
        "B1": (n, p),
        "B2": (n, p),
        "G": (n, n),
        "sigma1": (n, n),
        "D": (p_out, n),
        "sigma2": (p_out, p_out),
        "Cx0": (n, n),
    }
    for name, want in expected.items():
        got = getattr(spec, name).shape
        if got != want:
            raise _shape_error(name, got, want)
    if spec.H1.shape != (n,):
        raise _shape_error("H1", spec.H1.shape, (n,))
    if spec.H2.shape != (p_out,):
        raise _shape_error("H2", spec.H2.shape, (p_out,))
    for name in _MATRIX_FIELDS + ("H1", "H2"):
        if not np.all(np.isfinite(getattr(spec, name))):
            raise SpecError(f"{name} has non-finite entries")

    if not (np.isfinite(spec.h) and spec.h > 0.0):
        raise SpecError(f"delay h must be positive, got {spec.h}")
    if not (np.isfinite(spec.T) and spec.T > spec.h):
        raise SpecError(f"T must exceed h (T={spec.T}, h={spec.h})")
    if np.any(spec.H1 <= 0.5) or np.any(spec.H1 >= 1.0):
        raise SpecError(f"state Hurst must be in (1/2,1), got {spec.H1.tolist()}")
    if np.any(spec.H2 <= 0.0) or np.any(spec.H2 >= 1.0):
        raise SpecError(f"output Hurst must be in (0,1), got {spec.H2.tolist()}")
    C = spec.Cx0
    if np.abs(C - C.T).max() > 1e-12 * max(1.0, np.abs(C).max()):
        raise SpecError("Cx0 must be symmetric")
    if not is_psd(C):
        raise SpecError("Cx0 must be positive semidefinite")
    return spec


def effective_input_matrix(spec: SystemSpec) -> np.ndarray:
    """``B1 + exp(-A h) B2``: the input matrix seen by controls applied before ``T - h``."""
    return spec.B1 + expm(-spec.A * spec.h) @ spec.B2


def controllability_matrix(spec: SystemSpec) -> np.ndarray:
    """``[B1, B2, A B1, A B2, ..., A^{n-1} B1, A^{n-1} B2]``."""
    blocks = []
    AkB = np.hstack([spec.B1, spec.B2])
    for _ in range(spec.n):
        blocks.append(AkB)
        AkB = spec.A @ AkB
    return np.hstack(blocks)


def kalman_rank(spec: SystemSpec, rtol: float = 1e-9) -> RankResult:
    """Numerical rank of the delayed-input Kalman matrix.

    Singular values below ``rtol * s_max`` count as zero.
    """
    K = controllability_matrix(spec)
    sv = np.linalg.svd(K, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return RankResult(False, 0)
    rank = int(np.count_nonzero(sv > rtol * sv[0]))
    return RankResult(rank == spec.n, rank)
