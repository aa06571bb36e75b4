import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import linalg, stats

from incsim.analysis import collapse_distance, decorrelation_block
from incsim.errors import EmbeddingFailure
from incsim.gaussian_process import (Exponential, PowerDecay, StretchedExponential, TimeSeries,
                                     circulant_eigenvalues, corr_eval, corr_invert, simulate_gaussian)

corrs = st.one_of(
    st.builds(Exponential, st.floats(0.01, 100)),
    st.builds(StretchedExponential, st.floats(0.01, 100), st.floats(0.05, 1.0)),
    st.builds(PowerDecay, st.floats(0.01, 100), st.floats(0.1, 5)),
)


def test_corr_values():
    assert corr_eval(Exponential(1), 0.0) == 1.0
    assert corr_eval(Exponential(2), 0.5) == pytest.approx(math.exp(-1), rel=1e-14)
    assert corr_eval(PowerDecay(1, 2), 1.0) == pytest.approx(0.25, rel=1e-14)
    with pytest.raises(ValueError):
        corr_eval(Exponential(1), -1.0)


def test_corr_invert_values():
    assert corr_invert(Exponential(1), math.exp(-1)) == pytest.approx(1.0, rel=1e-14)
    assert corr_invert(StretchedExponential(1, 0.5), math.exp(-1)) == pytest.approx(1.0, rel=1e-14)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            corr_invert(Exponential(1), bad)


@given(corrs, st.floats(1e-3, 50))
def test_invert_round_trip(r, u0):
    target = float(corr_eval(r, u0))
    assume(1e-12 < target < 1 - 1e-9)
    u = corr_invert(r, target)
    assert abs(float(corr_eval(r, u)) - target) < 1e-12
    assert u == pytest.approx(u0, rel=1e-6)


@given(corrs)
def test_corr_is_valid_index(r):
    u = np.concatenate([[0.0], np.geomspace(1e-4, 1e3, 400)])
    v = corr_eval(r, u)
    assert v[0] == 1.0
    assert np.all(v >= 0)
    # strictly decreasing until the values underflow
    live = v > 1e-250
    assert np.all(np.diff(v[live]) < 0)
    assert float(corr_eval(r, 1e300)) < 1e-3


@given(corrs, st.sampled_from([0.01, 0.1, 1.0]))
@settings(max_examples=30, deadline=None)
def test_embedding_nonnegative_after_padding(r, dt):
    # Toeplitz covariance of a short grid is positive semidefinite
    cov = linalg.toeplitz(r(np.arange(64) * dt))
    assert np.linalg.eigvalsh(cov).min() > -1e-8


def test_embedding_minimal_is_exact_for_exponential():
    lam, m = circulant_eigenvalues(Exponential(1), 1000, 0.01)
    assert m == 2048
    assert lam.min() > 0


def test_timeseries_validation():
    with pytest.raises(ValueError):
        TimeSeries(np.array([1.0]), 0.1)
    with pytest.raises(ValueError):
        TimeSeries(np.array([1.0, np.nan]), 0.1)
    with pytest.raises(ValueError):
        TimeSeries(np.zeros(4), 0.0)


@pytest.fixture(scope="module")
def path():
    return simulate_gaussian(Exponential(1.0), 2**20, 0.01, rng_seed=5).values


class TestSimulation:
    def test_lag_one_autocorrelation(self, path):
        x = path
        rho = float(np.dot(x[1:], x[:-1]) / np.dot(x, x))
        # AR(1) with phi = e^{-0.01}: Var(rho_hat) ~ (1 - phi^2) / n, inflated by the
        # unknown-variance normalisation; use a conservative effective size
        phi = math.exp(-0.01)
        se = math.sqrt((1 - phi**2) / x.size)
        assert abs(rho - phi) < 4 * se + 4e-5

    def test_unit_variance(self, path):
        # variance of the sample variance for an OU path: 2 * sum r(k)^2 / n
        phi = math.exp(-0.01)
        se = math.sqrt(2 * (1 + phi**2) / (1 - phi**2) / path.size)
        assert abs(np.var(path) - 1.0) < 4 * se

    @pytest.mark.parametrize("u", [0.05, 0.5, 2.0])
    def test_increment_variance(self, path, u):
        m = int(round(u / 0.01))
        d = path[m:] - path[:-m]
        assert np.mean(d * d) == pytest.approx(2 * (1 - math.exp(-u)), rel=0.03)

    def test_gaussian_increments(self):
        x = simulate_gaussian(StretchedExponential(1.0, 0.7), 2**20, 0.05, rng_seed=6).values
        d = x[10:] - x[:-10]
        assert abs(stats.skew(d)) < 0.05
        assert abs(stats.kurtosis(d)) < 0.1

    def test_deterministic(self):
        a = simulate_gaussian(PowerDecay(1, 2), 5000, 0.1, 3, stream_id=2).values
        b = simulate_gaussian(PowerDecay(1, 2), 5000, 0.1, 3, stream_id=2).values
        c = simulate_gaussian(PowerDecay(1, 2), 5000, 0.1, 3, stream_id=1).values
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_long_memory_allowed(self):
        x = simulate_gaussian(PowerDecay(1, 0.5), 4096, 0.1, 1).values
        assert np.all(np.isfinite(x))

    def test_cholesky_fallback_failure_for_huge_grids(self):
        class Bad(Exponential):
            # a "correlation" whose embeddings are never nonnegative
            def __call__(self, u):
                u = np.asarray(u, dtype=float)
                return np.where(u == 0, 1.0, -0.9)

        with pytest.raises(EmbeddingFailure):
            simulate_gaussian(Bad(1.0), 30_000, 0.1, 1)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            simulate_gaussian(Exponential(1), 1, 0.1, 1)
        with pytest.raises(ValueError):
            simulate_gaussian(Exponential(1), 10, -0.1, 1)


@pytest.mark.parametrize("u", [0.2, 1.0])
def test_extis_exponential_vs_stretched(u):
    r1, r2 = Exponential(1.0), StretchedExponential(1.0, 0.7)
    v = corr_invert(r2, float(corr_eval(r1, u)))
    steps = 4
    d1, d2 = [], []
    for sid in range(4):
        x = simulate_gaussian(r1, 2**20, u / steps, rng_seed=12, stream_id=sid).values
        y = simulate_gaussian(r2, 2**20, v / steps, rng_seed=12, stream_id=10 + sid).values
        d1.append(x[steps:] - x[:-steps])
        d2.append(y[steps:] - y[:-steps])
    b1 = decorrelation_block(d1[0])
    b2 = decorrelation_block(d2[0])
    a = np.concatenate([d[::b1] for d in d1])
    b = np.concatenate([d[::b2] for d in d2])
    assert min(a.size, b.size) >= 10**5
    assert abs(np.var(a) / np.var(b) - 1) < 0.03
    assert collapse_distance(a, b).ks < 0.02
