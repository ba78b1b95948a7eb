"""Plain-text system files.

A file is a sequence of blocks.  A matrix block is a header
``[NAME] R x C`` followed by R lines of C numbers; a scalar block is a
single line ``[NAME] value``.  ``#`` starts a comment and blank lines are
ignored.  Block names::

    A B1 B2 G SIGMA1 D SIGMA2 H1 H2 CX0   matrices (H1/H2 as R x 1 or 1 x C)
    h T                                   scalars
    M1 M2                                 scalars, optional (default 1)

Numbers are written with ``repr`` so that dump/load round-trips exactly.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ConfigError
from .model import PowerBudget, SystemSpec, validate

__all__ = ["loads", "load", "dumps", "dump"]

_MATRICES = {
    "A": "A",
    "B1": "B1",
    "B2": "B2",
    "G": "G",
    "SIGMA1": "sigma1",
    "D": "D",
    "SIGMA2": "sigma2",
    "H1": "H1",
    "H2": "H2",
    "CX0": "Cx0",
}
_SCALARS = {"h": "h", "T": "T"}
_OPTIONAL = {"M1": 1.0, "M2": 1.0}

_HEADER = re.compile(r"^\[(?P<name>[A-Za-z0-9_]+)\]\s*(?P<rest>.*)$")
_SHAPE = re.compile(r"^(\d+)\s*[xX]\s*(\d+)$")


def _number(tok, lineno):
    try:
        return float(tok)
    except ValueError:
        raise ConfigError(f"not a number: {tok!r}", lineno) from None


def loads(text):
    """Parse a system file; returns ``(SystemSpec, PowerBudget)``."""
    lines = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln]
    blocks = {}
    pos = 0
    while pos < len(lines):
        lineno, ln = lines[pos]
        m = _HEADER.match(ln)
        if not m:
            raise ConfigError(f"expected a block header, got {ln!r}", lineno)
        name, rest = m.group("name"), m.group("rest").strip()
        if name not in _MATRICES and name not in _SCALARS and name not in _OPTIONAL:
            raise ConfigError(f"unknown block [{name}]", lineno)
        if name in blocks:
            raise ConfigError(f"duplicate block [{name}]", lineno)
        pos += 1
        if name in _MATRICES:
            shape = _SHAPE.match(rest)
            if not shape:
                raise ConfigError(f"block [{name}] needs a shape 'R x C', got {rest!r}", lineno)
            R, C = int(shape.group(1)), int(shape.group(2))
            rows = []
            for _ in range(R):
                if pos >= len(lines):
                    raise ConfigError(f"block [{name}] ended after {len(rows)} of {R} rows", lineno)
                rlineno, row = lines[pos]
                if _HEADER.match(row):
                    raise ConfigError(f"block [{name}] has {len(rows)} rows, header says {R}", rlineno)
                vals = [_number(t, rlineno) for t in row.split()]
                if len(vals) != C:
                    raise ConfigError(f"block [{name}] row has {len(vals)} entries, expected {C}", rlineno)
                rows.append(vals)
                pos += 1
            blocks[name] = np.array(rows, dtype=float).reshape(R, C)
        else:
            toks = rest.split()
            if len(toks) != 1:
                raise ConfigError(f"scalar block [{name}] needs exactly one value", lineno)
            blocks[name] = _number(toks[0], lineno)
    for name in list(_MATRICES) + list(_SCALARS):
        if name not in blocks:
            raise ConfigError(f"missing [{name}] block")
    kwargs = {field: blocks[name] for name, field in {**_MATRICES, **_SCALARS}.items()}
    for key in ("H1", "H2"):
        kwargs[key] = kwargs[key].reshape(-1)
    spec = validate(SystemSpec(**kwargs))
    budget = PowerBudget(**{k: blocks.get(k, v) for k, v in _OPTIONAL.items()})
    return spec, budget


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def _fmt(x):
    return repr(float(x))


def dumps(spec: SystemSpec, budget: PowerBudget | None = None):
    out = []
    for name, field in _MATRICES.items():
        M = np.asarray(getattr(spec, field), dtype=float)
        if M.ndim == 1:
            M = M.reshape(-1, 1)
        out.append(f"[{name}] {M.shape[0]} x {M.shape[1]}")
        out.extend(" ".join(_fmt(v) for v in row) for row in M)
    for name, field in _SCALARS.items():
        out.append(f"[{name}] {_fmt(getattr(spec, field))}")
    if budget is not None:
        out.append(f"[M1] {_fmt(budget.M1)}")
        out.append(f"[M2] {_fmt(budget.M2)}")
    return "\n".join(out) + "\n"


def dump(path, spec, budget=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(spec, budget))
