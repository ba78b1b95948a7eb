import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ctrlcap import PowerBudget, SystemSpec, load_reference  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture(scope="session")
def ref3():
    return load_reference("ref3")


@pytest.fixture(scope="session")
def ref2():
    return load_reference("ref2")


@pytest.fixture(scope="session")
def desk():
    return load_reference("scalar_desk")


def scalar_spec(**kw):
    base = dict(A=0.0, B1=1.0, B2=0.0, G=1.0, sigma1=0.0, D=1.0, sigma2=0.0,
                H1=0.75, H2=0.75, Cx0=1.0, h=1.0, T=2.0)
    base.update(kw)
    return SystemSpec(**base)


def random_spec(rng, n=None, p=None, stable=None, **kw):
    n = int(rng.integers(1, 4)) if n is None else n
    p = int(rng.integers(1, 3)) if p is None else p
    A = rng.standard_normal((n, n))
    if stable is True:
        A -= (np.linalg.eigvals(A).real.max() + 0.5) * np.eye(n)
    elif stable is False:
        A += (0.5 - np.linalg.eigvals(A).real.min()) * np.eye(n)
    base = dict(
        A=A,
        B1=rng.standard_normal((n, p)),
        B2=rng.standard_normal((n, p)),
        G=np.eye(n) * rng.uniform(0.3, 1.5),
        sigma1=rng.standard_normal((n, n)) * 0.5,
        D=rng.standard_normal((n, n)) + 2 * np.eye(n),
        sigma2=np.eye(n) * 0.5,
        H1=rng.uniform(0.55, 0.95, n),
        H2=rng.uniform(0.2, 0.9, n),
        Cx0=np.eye(n) * 0.5,
        h=float(rng.uniform(0.2, 0.8)),
        T=float(rng.uniform(1.0, 2.0)),
    )
    base.update(kw)
    return SystemSpec(**base)


def random_budget(rng):
    return PowerBudget(float(rng.uniform(0, 3)), float(rng.uniform(0, 3)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
