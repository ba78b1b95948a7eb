"""Dense matrix primitives used throughout the package.

All routines operate on small real matrices (n up to a few tens). ``expm``
accepts a stack of matrices with shape ``(..., n, n)`` so that quadrature
code can exponentiate every node in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DefinitenessError, SolvabilityError, SpecError

__all__ = [
    "SymEig",
    "expm",
    "lyap_solve",
    "sym_eig",
    "logdet_psd",
    "symmetrize",
    "is_psd",
    "psd_sqrt",
]

# Pade(13) coefficients and the 1-norm bound below which no scaling is
# needed for double precision (Higham 2005).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def _as_square(M, name="matrix", stacked=False):
    M = np.asarray(M, dtype=float)
    if stacked:
        if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
            raise SpecError(f"{name} must be square, got shape {M.shape}")
    elif M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SpecError(f"{name} must be a square 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise SpecError(f"{name} has non-finite entries")
    return M


def expm(M):
    """Matrix exponential by scaling and squaring with a degree-13 Pade approximant.

    Parameters
    ----------
    M : array_like, shape (..., n, n)
        Square matrix or stack of square matrices.

    Returns
    -------
    ndarray
        ``exp(M)`` with the same shape as ``M``.
    """
    M = _as_square(M, "expm argument", stacked=True)
    n = M.shape[-1]
    if n == 0:
        return M.copy()
    batch = M.shape[:-2]
    X = M.reshape((-1, n, n))

    norms = np.abs(X).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore"):
        s = np.where(norms > _THETA13, np.ceil(np.log2(norms / _THETA13)), 0.0)
    s = s.astype(int)
    X = X / (2.0 ** s)[:, None, None]

    b = _PADE13
    ident = np.broadcast_to(np.eye(n), X.shape)
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (
        X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
        + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * ident
    )
    V = (
        X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2)
        + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * ident
    )
    R = np.linalg.solve(V - U, V + U)

    for step in range(int(s.max(initial=0))):
        mask = s > step
        R[mask] = R[mask] @ R[mask]
    R[norms == 0.0] = np.eye(n)
    return R.reshape(batch + (n, n))


def symmetrize(S):
    S = np.asarray(S, dtype=float)
    return 0.5 * (S + S.swapaxes(-1, -2))


def lyap_solve(A, Q):
    """Solve ``A X + X A^T = -Q`` for symmetric ``X``.

    The Lyapunov operator is formed explicitly as ``I kron A + A kron I``
    and solved densely, which is adequate for the small state dimensions
    this package targets.

    Raises
    ------
    SolvabilityError
        If two eigenvalues of ``A`` sum to (numerically) zero, so that the
        Lyapunov operator is singular.
    """
    A = _as_square(A, "A")
    Q = _as_square(Q, "Q")
    n = A.shape[0]
    if Q.shape != (n, n):
        raise SpecError(f"Q must be {n}x{n}, got {Q.shape}")
    lam = np.linalg.eigvals(A)
    scale = max(1.0, np.abs(A).max(initial=0.0))
    gap = np.abs(lam[:, None] + lam[None, :]).min(initial=np.inf)
    if gap <= 1e-12 * scale:
        raise SolvabilityError(
            "Lyapunov operator is singular: eigenvalues of A sum to zero "
            f"(min |l_i + l_j| = {gap:.3e})"
        )
    eye = np.eye(n)
    # Row-major vec: vec(A X) = (A kron I) vec(X), vec(X A^T) = (I kron A) vec(X)
    L = np.kron(A, eye) + np.kron(eye, A)
    X = np.linalg.solve(L, -symmetrize(Q).reshape(-1)).reshape(n, n)
    return symmetrize(X)


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T


def sym_eig(S):
    """Symmetric eigendecomposition with eigenvalues in descending order."""
    S = _as_square(S, "S")
    scale = np.linalg.norm(S)
    asym = np.linalg.norm(S - S.T)
    if asym > 1e-8 * max(scale, np.finfo(float).tiny):
        raise SpecError(f"matrix is not symmetric (relative asymmetry {asym / scale:.2e})")
    w, V = np.linalg.eigh(symmetrize(S))
    return SymEig(values=w[::-1].copy(), vectors=V[:, ::-1].copy())


def logdet_psd(S):
    """``ln det S`` for symmetric positive-definite ``S`` via Cholesky."""
    S = _as_square(S, "S")
    if S.shape[0] == 0:
        return 0.0
    try:
        L = np.linalg.cholesky(symmetrize(S))
    except np.linalg.LinAlgError:
        raise DefinitenessError("matrix is not positive definite") from None
    d = np.diag(L)
    if np.any(d <= 0.0):
        raise DefinitenessError("matrix is not positive definite")
    return 2.0 * float(np.log(d).sum())


def is_psd(S, tol=1e-10):
    """True when the smallest eigenvalue is >= ``-tol * max(1, ||S||)``."""
    S = symmetrize(_as_square(S, "S"))
    if S.shape[0] == 0:
        return True
    w = np.linalg.eigvalsh(S)
    return bool(w[0] >= -tol * max(1.0, np.abs(w).max()))


def psd_sqrt(S):
    """Symmetric square root of a PSD matrix (negative round-off clipped)."""
    w, V = np.linalg.eigh(symmetrize(_as_square(S, "S")))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
