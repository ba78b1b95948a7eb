"""Shipped reference systems and their externally reported numbers.

``REPORTED_REF3`` holds the values printed alongside the three-state
reference system.  Several of them are not reproducible from the printed
system matrices (the input matrix, and with it every Gramian; one noise
covariance entry is duplicated), so :func:`compare_ref3` produces an
entry-wise comparison table rather than an assertion.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .allocator import capacity, mode_basis
from .config import load

__all__ = [
    "data_path",
    "load_reference",
    "REPORTED_REF3",
    "REPORTED_REF2_PEAK",
    "ComparisonRow",
    "compare_ref3",
]


def data_path(name):
    """Filesystem path of a shipped config, e.g. ``data_path("ref3.cfg")``."""
    return str(resources.files("ctrlcap").joinpath("data", name))


def load_reference(name):
    return load(data_path(name if name.endswith(".cfg") else name + ".cfg"))


REPORTED_REF3 = {
    "input_matrix": np.array([[1.0, 1.3679], [8.389056, 2.0], [2.0, 1.7183]]),
    "early_gramian": np.array(
        [
            [[329.4882, 62.0411, 176.6757], [62.0411, 12.2614, 34.4356], [176.6757, 34.4356, 97.1219]],
            [[111.8777, 32.9990, 38.7258], [32.9990, 10.2647, 12.0753], [38.7258, 12.0753, 14.2068]],
        ]
    ),
    "late_gramian": np.array(
        [
            [[7.6311, 3.7827, 4.3504], [3.7827, 2.1101, 2.3812], [4.3504, 2.3812, 2.6966]],
            [[0.4545, 0.1169, -0.2368], [0.1169, 0.2454, 0.5479], [-0.2368, 0.5479, 1.9039]],
        ]
    ),
    # [column, mode, component]
    "early_modes": np.array(
        [
            [[18.1368, 3.4458, 9.7879], [0.7370, -0.6188, -1.1478], [0.0051, 0.0683, -0.0335]],
            [[10.5681, 3.1473, 3.6952], [0.4383, -0.5991, -0.7431], [0.0000122, -0.0009262, 0.0007539]],
        ]
    ),
    "late_modes": np.array(
        [
            [[2.7430, 1.4170, 1.6188], [0.3271, -0.3189, -0.2750], [0.0020, 0.0200, -0.0208]],
            [[0.1711, -0.3986, -1.3796], [0.6515, 0.2870, -0.0021], [0.0285, -0.0646, 0.0222]],
        ]
    ),
    "noise_total": np.array(
        [
            [77.6392, -235.9072, 170.4309],
            [-235.9072, 825.5392, -619.2593],
            [170.4309, -619.2593, -619.2593],
        ]
    ),
    "capacity": 1.9071,
}

# peak of the capacity-versus-horizon curve of the two-state system, h -> 0
REPORTED_REF2_PEAK = {"T": 0.63, "capacity": 0.9118}


@dataclass(frozen=True)
class ComparisonRow:
    quantity: str
    index: tuple
    reported: float
    computed: float

    @property
    def rel_diff(self):
        scale = max(abs(self.reported), 1e-300)
        return abs(self.computed - self.reported) / scale

    def __str__(self):
        idx = ",".join(str(i) for i in self.index)
        return (
            f"{self.quantity}[{idx}]  reported {self.reported:.6g}  "
            f"computed {self.computed:.6g}  rel diff {self.rel_diff:.3g}"
        )


def _rows(name, reported, computed):
    return [
        ComparisonRow(name, tuple(int(i) for i in idx), float(reported[idx]), float(computed[idx]))
        for idx in np.ndindex(reported.shape)
    ]


def _align_signs(reported, computed):
    # eigenvectors are defined up to sign; match each to the reported one
    out = computed.copy()
    for idx in np.ndindex(reported.shape[:-1]):
        if np.dot(reported[idx], computed[idx]) < 0:
            out[idx] = -computed[idx]
    return out


def compare_ref3(use_reported_input=False, cfg=None):
    """Entry-wise comparison of the three-state system with the reported values.

    With ``use_reported_input`` the reported input matrix replaces the one
    recomputed from the system matrices.  Returns ``(rows, report)``.
    """
    spec, budget = load_reference("ref3")
    B = REPORTED_REF3["input_matrix"] if use_reported_input else None
    rep = capacity(spec, budget, cfg, input_matrix=B)
    basis = mode_basis(rep.gramians)
    rows = []
    rows += _rows("input_matrix", REPORTED_REF3["input_matrix"], rep.gramians.input_matrix)
    rows += _rows("early_gramian", REPORTED_REF3["early_gramian"], rep.gramians.early)
    rows += _rows("late_gramian", REPORTED_REF3["late_gramian"], rep.gramians.late)
    rows += _rows("early_modes", REPORTED_REF3["early_modes"],
                  _align_signs(REPORTED_REF3["early_modes"], basis.early))
    rows += _rows("late_modes", REPORTED_REF3["late_modes"],
                  _align_signs(REPORTED_REF3["late_modes"], basis.late))
    rows += _rows("noise_total", REPORTED_REF3["noise_total"], rep.noise.total)
    rows.append(ComparisonRow("capacity", (), REPORTED_REF3["capacity"], rep.capacity_nats))
    return rows, rep
