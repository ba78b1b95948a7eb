"""Monte-Carlo oracle: Euler-Maruyama paths of the delayed system.

The simulation shares no code with the quadrature path except the matrix
exponential used to evaluate the control basis functions.  fBm increments
are exact fractional Gaussian noise on the simulation grid, so the only
discretization error is the Euler step itself.

Random streams are split per purpose (initial state, white noise, state
fBm, output fBm, control coefficients) with :class:`numpy.random.SeedSequence`,
which lets a controlled and an uncontrolled run share the same noise
realisations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .allocator import capacity, mode_basis
from .errors import DefinitenessError, SimulationError, SpecError
from .fbm import fgn_factor, sample_fgn
from .matcore import expm, logdet_psd, symmetrize
from .model import PowerBudget, SystemSpec, validate

__all__ = [
    "SimConfig",
    "EmpiricalMoments",
    "SimResult",
    "simulate",
    "empirical_capacity",
    "CapacityEstimate",
]

_STREAMS = ("x0", "white", "state_fbm", "output_fbm", "control")


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``control`` is ``"zero"`` or ``"allocation"``; the latter draws each
    path's control from the optimal allocation supplied to :func:`simulate`.
    ``chunk`` bounds the number of paths propagated at once.
    """

    step: float
    paths: int
    seed: int = 0
    control: str = "zero"
    chunk: int = 10_000

    def __post_init__(self):
        if not (np.isfinite(self.step) and self.step > 0):
            raise SpecError(f"step must be positive, got {self.step}")
        if self.paths < 1:
            raise SpecError("paths must be at least 1")
        if self.control not in ("zero", "allocation"):
            raise SpecError(f"control must be 'zero' or 'allocation', got {self.control!r}")
        if self.chunk < 1:
            raise SpecError("chunk must be positive")

    def grid_counts(self, spec):
        """Steps per delay and per horizon; raises when the grid is misaligned."""
        out = []
        for name, span in (("h", spec.h), ("T", spec.T)):
            m = round(span / self.step)
            if m < 1 or abs(m * self.step - span) > 1e-12 * max(1.0, span):
                raise SimulationError(f"step {self.step} does not divide {name}={span}")
            out.append(int(m))
        return tuple(out)


@dataclass(frozen=True)
class EmpiricalMoments:
    """Sample mean and covariance with per-entry standard errors."""

    mean: np.ndarray
    covariance: np.ndarray
    mean_se: np.ndarray
    covariance_se: np.ndarray
    paths: int

    @classmethod
    def from_samples(cls, X):
        X = np.asarray(X, dtype=float)
        P = X.shape[0]
        if P < 2:
            raise SimulationError("at least two paths are needed for a covariance")
        mean = X.mean(axis=0)
        Xc = X - mean
        cov = symmetrize(Xc.T @ Xc / (P - 1))
        prods = Xc[:, :, None] * Xc[:, None, :]
        cov_se = prods.std(axis=0, ddof=1) / np.sqrt(P)
        mean_se = np.sqrt(np.diag(cov) / P)
        return cls(mean, cov, mean_se, cov_se, P)


@dataclass(frozen=True)
class SimResult:
    x: EmpiricalMoments
    y: EmpiricalMoments
    x_samples: np.ndarray
    y_samples: np.ndarray


def _control_tables(spec, gramians, alloc, steps, step):
    """Basis-function values on the left grid points, scaled by the allocation.

    Returns ``(fn, sd)``: ``fn`` has shape (modes, steps, p) with the mode's
    basis function placed in its input column, ``sd`` the coefficient
    standard deviations.
    """
    basis = mode_basis(gramians)
    t = np.arange(steps) * step
    E = expm(spec.A[None] * (spec.T - t)[:, None, None])  # (steps, n, n)
    cut = spec.T - spec.h
    early = t < cut - 1e-12 * max(1.0, spec.T)
    fns, sds = [], []
    for name, weights, active, values, eigs, cols, window in (
        ("early", alloc.sigma, basis.early_active, basis.early_values, gramians.early_eig,
         gramians.input_matrix, early),
        ("late", alloc.omega, basis.late_active, basis.late_values, gramians.late_eig,
         spec.B1, ~early),
    ):
        for k, j in zip(*np.nonzero((weights > 0) & active)):
            s = eigs[k].vectors[:, j]
            f = np.where(window, (E @ cols[:, k]) @ s / np.sqrt(values[k, j]), 0.0)
            table = np.zeros((steps, spec.p))
            table[:, k] = f
            fns.append(table)
            sds.append(np.sqrt(weights[k, j]))
    if not fns:
        return np.zeros((0, steps, spec.p)), np.zeros(0)
    return np.stack(fns), np.asarray(sds)


def _psd_factor(C):
    w, V = np.linalg.eigh(symmetrize(C))
    return V * np.sqrt(np.clip(w, 0.0, None))


def simulate(spec: SystemSpec, sim: SimConfig, allocation=None, gramians=None) -> SimResult:
    """Euler-Maruyama estimate of the moments of ``x(T)`` and ``y(T)``.

    Parameters
    ----------
    spec : SystemSpec
    sim : SimConfig
    allocation, gramians : optional
        Required when ``sim.control == "allocation"``: the control of each
        path is ``sum_j xi_j e_j(t)`` with independent coefficients
        ``xi_j ~ N(0, allocation weight)`` over the optimal basis functions.

    Returns
    -------
    SimResult
    """
    validate(spec)
    if sim.paths < 2:
        raise SimulationError("at least two paths are needed for a covariance")
    lag, steps = sim.grid_counts(spec)
    dt = sim.step
    n, p = spec.n, spec.p
    Phi = np.eye(n) + dt * spec.A
    if sim.control == "allocation":
        if allocation is None or gramians is None:
            raise SpecError("allocation-driven simulation needs the allocation and its Gramians")
        fn, sd = _control_tables(spec, gramians, allocation, steps, dt)
    else:
        fn, sd = np.zeros((0, steps, p)), np.zeros(0)
    # per-step input response: B1 u_m + B2 u_{m - lag}
    delayed = np.zeros_like(fn)
    delayed[:, lag:] = fn[:, : steps - lag]
    drive_u = dt * (fn @ spec.B1.T + delayed @ spec.B2.T)  # (modes, steps, n)

    x0_factor = _psd_factor(spec.Cx0)
    s1 = spec.sigma1
    fgn_by_h = {}
    for H in np.unique(spec.H1):
        if np.any(s1[:, spec.H1 == H]):
            fgn_by_h[float(H)] = fgn_factor(H, dt, steps)
    T2H = spec.T ** (2 * spec.H2)

    root = np.random.SeedSequence(sim.seed)
    streams = dict(zip(_STREAMS, root.spawn(len(_STREAMS))))
    rngs = {k: np.random.default_rng(v) for k, v in streams.items()}

    xs, ys = [], []
    done = 0
    while done < sim.paths:
        P = min(sim.chunk, sim.paths - done)
        x0 = rngs["x0"].standard_normal((P, n)) @ x0_factor.T
        drive = rngs["white"].standard_normal((steps, P, n)) @ (np.sqrt(dt) * spec.G.T)
        for H, L in fgn_by_h.items():
            cols = np.flatnonzero(spec.H1 == H)
            inc = np.stack([sample_fgn(L, P, rngs["state_fbm"]) for _ in cols], axis=-1)  # (P, steps, c)
            drive += np.swapaxes(inc, 0, 1) @ s1[:, cols].T
        if sd.size:
            xi = rngs["control"].standard_normal((P, sd.size)) * sd
            drive += np.einsum("pm,msn->spn", xi, drive_u)
        xT = _backend.em_final_state(x0, Phi, drive)
        wH = rngs["output_fbm"].standard_normal((P, spec.p_out)) * np.sqrt(T2H)
        yT = xT @ spec.D.T + wH @ spec.sigma2.T
        xs.append(xT)
        ys.append(yT)
        done += P
    X = np.concatenate(xs)
    Y = np.concatenate(ys)
    return SimResult(EmpiricalMoments.from_samples(X), EmpiricalMoments.from_samples(Y), X, Y)


@dataclass(frozen=True)
class CapacityEstimate:
    """Gaussian plug-in capacity with a batch-means standard error."""

    estimate: float
    std_error: float
    analytic: float
    paths: int


def _plugin(Yc, Y0):
    C1 = np.cov(Yc, rowvar=False, ddof=1).reshape(Yc.shape[1], -1)
    C0 = np.cov(Y0, rowvar=False, ddof=1).reshape(Y0.shape[1], -1)
    return 0.5 * (logdet_psd(C1) - logdet_psd(C0))


def empirical_capacity(spec: SystemSpec, budget: PowerBudget, sim: SimConfig, batches=20, cfg=None):
    """Plug-in estimate ``0.5 [logdet Cov(y | controlled) - logdet Cov(y | u = 0)]``.

    Both runs use the same seed, hence the same noise paths; only the
    controlled run draws control coefficients.  The standard error comes
    from ``batches`` equal batches of paths.
    """
    rep = capacity(spec, budget, cfg)
    on = simulate(spec, SimConfig(sim.step, sim.paths, sim.seed, "allocation", sim.chunk),
                  rep.allocation, rep.gramians)
    off = simulate(spec, SimConfig(sim.step, sim.paths, sim.seed, "zero", sim.chunk))
    try:
        est = _plugin(on.y_samples, off.y_samples)
        size = sim.paths // batches
        parts = [
            _plugin(on.y_samples[i * size:(i + 1) * size], off.y_samples[i * size:(i + 1) * size])
            for i in range(batches)
        ] if size > spec.p_out + 1 else []
    except DefinitenessError as exc:
        raise SimulationError(f"empirical covariance is singular ({exc}); use more paths") from None
    se = float(np.std(parts, ddof=1) / np.sqrt(len(parts))) if len(parts) > 1 else float("nan")
    return CapacityEstimate(float(est), se, rep.capacity_nats, sim.paths)
