import numpy as np
import pytest

from ctrlcap.errors import SimulationError, SpecError
from ctrlcap.fbm import (
    fbm_cov,
    fbm_cov_matrix,
    fgn_autocov,
    fgn_kernel,
    output_fbm_cov,
    sample_fbm,
    sample_fbm_paths,
)
from ctrlcap.quadrature import fbm_double_integral


def test_fbm_cov_examples():
    assert fbm_cov(1, 1, 0.3) == pytest.approx(1.0)
    assert fbm_cov(2, 1, 0.75) == pytest.approx(1.414214, abs=1e-6)
    assert fbm_cov(2, 1, 0.5) == pytest.approx(1.0)
    with pytest.raises(SpecError):
        fbm_cov(-1, 1, 0.5)


def test_fbm_cov_symmetric_psd(rng):
    for _ in range(20):
        m = int(rng.integers(2, 65))
        grid = np.sort(rng.uniform(0, 5, m))
        H = rng.uniform(0.05, 0.95)
        C = fbm_cov_matrix(grid, H)
        np.testing.assert_allclose(C, C.T)
        assert np.linalg.eigvalsh(C)[0] >= -1e-10


def test_fgn_kernel_examples():
    assert fgn_kernel(0.0, 1.0, 0.75) == pytest.approx(0.375)
    assert fgn_kernel(5.0, 1.0, 0.75) == pytest.approx(0.1875)
    with pytest.raises(SpecError):
        fgn_kernel(1.0, 1.0, 0.75)
    with pytest.raises(SpecError):
        fgn_kernel(0.0, 1.0, 0.4)


def test_fgn_autocov_sums_to_variance():
    H, step, m = 0.7, 0.1, 50
    k = np.arange(m)
    gamma = fgn_autocov(k, H, step)
    total = m * gamma[0] + 2 * np.sum((m - k[1:]) * gamma[1:])
    assert total == pytest.approx((m * step) ** (2 * H))


def test_output_fbm_cov_examples():
    np.testing.assert_array_equal(output_fbm_cov(0.0, [0.75], np.eye(1)), [[0.0]])
    assert output_fbm_cov(2.0, [0.75], np.eye(1))[0, 0] == pytest.approx(2.828427, abs=1e-6)
    np.testing.assert_array_equal(output_fbm_cov(2.0, [0.75, 0.5], np.zeros((2, 2))), np.zeros((2, 2)))
    with pytest.raises(SpecError):
        output_fbm_cov(-1.0, [0.5], np.eye(1))


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
@pytest.mark.parametrize("T", [0.5, 1.0, 2.0])
def test_double_kernel_integral_identity(H, T):
    val = fbm_double_integral(np.zeros((1, 1)), np.ones((1, 1)), [H], T).value[0, 0]
    assert val == pytest.approx(T ** (2 * H), rel=1e-6)


def test_sample_variance_at_one():
    paths = sample_fbm_paths(0.75, [0.5, 1.0], 20_000, seed=1)
    v = paths[:, 1]
    se = np.sqrt(2.0 / (v.size - 1))  # variance of a sample variance, Gaussian, true value 1
    assert abs(v.var(ddof=1) - 1.0) <= 3 * se


def test_brownian_increments_uncorrelated():
    paths = sample_fbm_paths(0.5, [0.0, 1.0, 2.0], 20_000, seed=2)
    a, b = paths[:, 1] - paths[:, 0], paths[:, 2] - paths[:, 1]
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) <= 3 / np.sqrt(a.size)


def test_increments_are_stationary():
    H, delta = 0.8, 0.25
    grid = [0.0, 1.0, 1.0 + delta, 2.0, 2.0 + delta]
    paths = sample_fbm_paths(H, grid, 20_000, seed=3)
    for i in (1, 3):
        inc = paths[:, i + 1] - paths[:, i]
        target = delta ** (2 * H)
        se = target * np.sqrt(2.0 / (inc.size - 1))
        assert abs(inc.var(ddof=1) - target) <= 3 * se


def test_sampling_is_deterministic():
    grid = np.linspace(0, 1, 33)
    np.testing.assert_array_equal(sample_fbm(0.7, grid, 9), sample_fbm(0.7, grid, 9))
    assert sample_fbm(0.7, grid, 9)[0] == 0.0


def test_sampling_rejects_bad_grids():
    with pytest.raises(SpecError):
        sample_fbm(0.7, [1.0, 0.5], 0)
    with pytest.raises(SpecError):
        sample_fbm(0.7, [-1.0, 0.5], 0)


def test_factorization_failure_is_reported():
    grid = 1.0 + np.arange(400) * 1e-9
    with pytest.raises(SimulationError):
        sample_fbm(0.95, grid, 0)
