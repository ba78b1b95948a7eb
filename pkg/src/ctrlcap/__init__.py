"""Information capacity of linear control channels with a delayed input and
mixed (standard plus fractional) Brownian noise.

Typical use::

    from ctrlcap import load_reference, capacity
    spec, budget = load_reference("ref2")
    report = capacity(spec, budget)
    report.capacity_nats
"""

from ._backend import NAME as backend
from .allocator import (
    Allocation,
    CapacityReport,
    capacity,
    entropy_y,
    mode_basis,
    optimal_basis_eval,
    segment_mi,
    waterfill,
    zero_mode_diagnostic,
)
from .asymptotics import (
    capacity_stable_limit,
    capacity_unstable_limit,
    small_horizon_law,
    transformation_check,
)
from .covariances import GramianSet, NoiseCovariances, compute_gramians, total_cov
from .errors import (
    ConfigError,
    ConvergenceError,
    CtrlCapError,
    DefinitenessError,
    RegimeError,
    SimulationError,
    SolvabilityError,
    SpecError,
)
from .model import PowerBudget, SystemSpec, effective_input_matrix, kalman_rank, validate
from .quadrature import QuadratureConfig
from .reference import data_path, load_reference
from .simkit import SimConfig, empirical_capacity, simulate

__version__ = "0.1.0"

__all__ = [
    "backend",
    "Allocation",
    "CapacityReport",
    "capacity",
    "entropy_y",
    "mode_basis",
    "optimal_basis_eval",
    "segment_mi",
    "waterfill",
    "zero_mode_diagnostic",
    "capacity_stable_limit",
    "capacity_unstable_limit",
    "small_horizon_law",
    "transformation_check",
    "GramianSet",
    "NoiseCovariances",
    "compute_gramians",
    "total_cov",
    "ConfigError",
    "ConvergenceError",
    "CtrlCapError",
    "DefinitenessError",
    "RegimeError",
    "SimulationError",
    "SolvabilityError",
    "SpecError",
    "PowerBudget",
    "SystemSpec",
    "effective_input_matrix",
    "kalman_rank",
    "validate",
    "QuadratureConfig",
    "data_path",
    "load_reference",
    "SimConfig",
    "empirical_capacity",
    "simulate",
]
