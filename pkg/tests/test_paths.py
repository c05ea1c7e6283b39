import math

import numpy as np
import pytest

from bankfunds.errors import InvalidGrid
from bankfunds.model import MarketParams
from bankfunds.paths import Seed, expected_level, n_steps, sample_path, sample_paths, standard_normals


def test_constant_path():
    p = sample_path(MarketParams(0.0, 0.0, 1.0), 1.0, 0.1, Seed(1))
    assert len(p.values) == 11
    assert np.all(p.values == 1.0)
    assert p.times[-1] == pytest.approx(1.0)


def test_deterministic_growth_matches_expected_level():
    m = MarketParams(0.1, 0.0, 2.0)
    p = sample_path(m, 1.0, 0.01, Seed(3))
    k = np.arange(101)
    np.testing.assert_allclose(p.values, 2.0 * np.exp(0.1 * k * 0.01), rtol=1e-14)
    assert p.values[-1] == pytest.approx(2.21034, abs=1e-5)
    for t, v in zip(p.times, p.values):
        assert v == pytest.approx(expected_level(m, t), rel=1e-13)


def test_expected_level():
    assert expected_level(MarketParams(0.0, 1.0, 1.0), 5.0) == 1.0
    assert expected_level(MarketParams(0.1, 1.0, 2.0), 1.0) == pytest.approx(2.21034, abs=1e-5)
    with pytest.raises(InvalidGrid):
        expected_level(MarketParams(0.1, 1.0, 2.0), -1.0)


def test_bad_grid():
    m = MarketParams(0.0, 1.0, 1.0)
    with pytest.raises(InvalidGrid):
        sample_path(m, 1.0, 0.0, Seed(1))
    with pytest.raises(InvalidGrid):
        sample_path(m, 0.01, 0.1, Seed(1))
    assert n_steps(1.0, 0.1) == 10


def test_bit_identical_and_order_free():
    m = MarketParams(0.05, 0.3, 1.0)
    a = sample_paths(m, 1.0, 0.01, 42, [0, 1, 2, 3])
    b = sample_paths(m, 1.0, 0.01, 42, [3, 1])
    assert a.tobytes() == sample_paths(m, 1.0, 0.01, 42, [0, 1, 2, 3]).tobytes()
    assert a[3].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()
    assert not np.array_equal(a[0], sample_paths(m, 1.0, 0.01, 43, [0])[0])


def test_normals_open_interval_and_moments():
    z = standard_normals(7, np.arange(50), 2000).ravel()
    assert np.all(np.isfinite(z))
    se = 1 / math.sqrt(z.size)
    assert abs(z.mean()) < 4 * se
    assert abs(z.var() - 1) < 4 * math.sqrt(2) * se


def test_positive_values():
    x = sample_paths(MarketParams(-0.5, 2.0, 0.1), 5.0, 0.01, 9, np.arange(100))
    assert np.all(x > 0)


def test_terminal_mean_matches_expected_level():
    m = MarketParams(0.05, 0.2, 1.0)
    x = sample_paths(m, 1.0, 0.25, 2024, np.arange(100_000))[:, -1]
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - math.exp(0.05)) < 3 * se


def test_log_marginal_law():
    m = MarketParams(0.1, 0.4, 1.5)
    T = 2.0
    lx = sample_paths(m, T, 0.5, 5, np.arange(40_000), log=True)[:, -1] - math.log(1.5)
    n = lx.size
    mean, var = (0.1 - 0.08) * T, 0.16 * T
    assert abs(lx.mean() - mean) < 3 * math.sqrt(var / n)
    assert abs(lx.var(ddof=1) - var) < 3 * var * math.sqrt(2 / (n - 1))
