import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from incsim.analysis import batch_means_se, collapse_distance, decorrelation_block
from incsim.distributions import StableParams, stable_abs_moment
from incsim.errors import Divergent, NotMatchable
from incsim.lss import (ExpKernel, PowerKernel, fractional_moment, g_hat, g_hat_quad, i_alpha, kernel_taps,
                        lss_joint_cumulant, match_lag_stable, simulate_lss)

ALPHA = 1.5
EXP = ExpKernel(1.0, 1.0)
# same I_alpha as EXP at alpha = 1.5: c^1.5 / (1.5 nu - 1) = 2/3 with nu = 2
POW = PowerKernel((4 / 3) ** (2 / 3), 1.0, 2.0)

# joint cumulant of (X_t, X_{t+1}) at (1, 1) for EXP, alpha 1.5, gamma 1, by
# direct quadrature of the moving-average integral over the whole line
EXP_JOINT_11 = -1.5844613953173128

kernels = st.one_of(
    st.builds(ExpKernel, st.floats(0.2, 5), st.floats(0.1, 10)),
    st.builds(PowerKernel, st.floats(0.2, 5), st.floats(0.1, 10), st.floats(1.2, 5)),
)


class TestIAlpha:
    def test_values(self):
        assert i_alpha(ExpKernel(1, 1), 1.0) == pytest.approx(1.0)
        assert i_alpha(ExpKernel(2, 1), 1.999999) == pytest.approx(2.0, rel=1e-5)
        assert i_alpha(PowerKernel(1, 1, 2), 1.0) == pytest.approx(1.0)
        quad = integrate.quad(lambda s: (1 + s) ** -2.0, 0, np.inf)[0]
        assert i_alpha(PowerKernel(1, 1, 2), 1.0) == pytest.approx(quad, rel=1e-10)

    def test_divergent(self):
        with pytest.raises(Divergent):
            i_alpha(PowerKernel(1, 1, 0.5), 1.5)

    @given(kernels, st.floats(0.9, 1.95))
    @settings(max_examples=30, deadline=None)
    def test_against_quadrature(self, g, a):
        q = integrate.quad(lambda s: float(g(s)) ** a, 0, np.inf, limit=500, epsabs=1e-13)[0]
        assert i_alpha(g, a) == pytest.approx(q, rel=1e-7)


class TestGHat:
    def test_zero_lag(self):
        assert g_hat(EXP, ALPHA, 0.0) == 0.0
        assert g_hat(POW, ALPHA, 0.0) == 0.0

    def test_value(self):
        assert g_hat(ExpKernel(1, 1), 1.0, math.log(2)) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("u", [0.01, 0.1, 1.0, 10.0])
    @pytest.mark.parametrize("a", [0.7, 1.0, 1.5, 1.9])
    def test_closed_form_vs_quadrature(self, u, a):
        g = ExpKernel(1.3, 0.8)
        assert g_hat(g, a, u) == pytest.approx(g_hat_quad(g, a, u), rel=1e-8)

    @pytest.mark.parametrize("g", [EXP, POW, ExpKernel(2, 3)])
    def test_large_lag_limit(self, g):
        u = 50 / g.lambda_rate
        if isinstance(g, PowerKernel):
            # algebraic tails converge slowly; push the lag out accordingly
            u = 1e9
        assert g_hat(g, ALPHA, u) == pytest.approx(2 * i_alpha(g, ALPHA), rel=1e-6)

    @given(kernels, st.floats(0.9, 1.95))
    @settings(max_examples=25, deadline=None)
    def test_increasing_and_bounded(self, g, a):
        u = np.geomspace(1e-3, 1e2, 40) / g.lambda_rate
        vals = np.array([g_hat(g, a, x) for x in u])
        sup = 2 * i_alpha(g, a)
        assert np.all(vals <= sup * (1 + 1e-12))
        assert np.all(np.diff(vals) >= 0)
        # strict growth until the gap to the supremum drops to rounding level
        live = vals < sup * (1 - 1e-9)
        assert np.all(np.diff(vals[live]) > 0)

    def test_power_kernel_against_quadrature(self):
        for u in (0.05, 0.7, 6.0):
            assert g_hat(POW, ALPHA, u) == pytest.approx(g_hat_quad(POW, ALPHA, u), rel=1e-8)


class TestMatching:
    def test_identity(self):
        assert match_lag_stable(EXP, EXP, ALPHA, 0.7) == pytest.approx(0.7, abs=1e-10)

    def test_exponential_pair_closed_form(self):
        # h = ExpKernel(2, 2) at alpha = 1: ĥ(v) = 2 (1 - e^{-2v}) and ĝ(1) = 2 (1 - e^{-1})
        v = match_lag_stable(ExpKernel(1, 1), ExpKernel(2.0, 2.0), 1.0, 1.0)
        assert v == pytest.approx(0.5, abs=1e-10)

    @pytest.mark.parametrize("a", [1.0, 1.5])
    def test_agrees_with_grid_scan(self, a):
        g, h = ExpKernel(1, 1), ExpKernel(2 ** (1 / a), 2)
        v = match_lag_stable(g, h, a, 1.0)
        target = g_hat(g, a, 1.0)
        # independent: fine scan of ĥ, then linear interpolation
        grid = np.linspace(0.3, 0.7, 40001)
        vals = np.array([g_hat(h, a, x) for x in grid])
        k = np.searchsorted(vals, target)
        v_scan = grid[k - 1] + (target - vals[k - 1]) * (grid[k] - grid[k - 1]) / (vals[k] - vals[k - 1])
        assert v == pytest.approx(v_scan, abs=1e-8)
        assert abs(g_hat(h, a, v) - target) < 1e-10

    def test_power_pair(self):
        v = match_lag_stable(EXP, POW, ALPHA, 1.0)
        assert abs(g_hat(POW, ALPHA, v) - g_hat(EXP, ALPHA, 1.0)) < 1e-10

    def test_not_matchable(self):
        with pytest.raises(NotMatchable):
            match_lag_stable(ExpKernel(1, 1), ExpKernel(1, 2), ALPHA, 1.0)
        with pytest.raises(NotMatchable):
            # the smaller-class kernel cannot reach the target of a larger lag
            match_lag_stable(ExpKernel(1, 1), ExpKernel(1, 1), ALPHA, 1e9)

    def test_joint_law_mismatch_at_matched_lags(self):
        p = StableParams(ALPHA)
        v = match_lag_stable(EXP, POW, ALPHA, 1.0)
        # the increment direction agrees by construction
        assert lss_joint_cumulant(EXP, p, 1, -1, 1.0) == pytest.approx(lss_joint_cumulant(POW, p, 1, -1, v),
                                                                        rel=1e-9)
        ge = lss_joint_cumulant(EXP, p, 1, 1, 1.0)
        gp = lss_joint_cumulant(POW, p, 1, 1, v)
        assert ge == pytest.approx(EXP_JOINT_11, rel=1e-9)
        assert abs(ge - gp) > 1e-3

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 5))
    @settings(max_examples=30, deadline=None)
    def test_joint_reduces_to_marginal_and_increment(self, phi, psi, u):
        p = StableParams(ALPHA, 0.7)
        assert lss_joint_cumulant(POW, p, phi, 0.0, u) == pytest.approx(
            -0.7 * abs(phi) ** ALPHA * i_alpha(POW, ALPHA), rel=1e-8, abs=1e-12)
        assert lss_joint_cumulant(POW, p, -psi, psi, u) == pytest.approx(
            -0.7 * abs(psi) ** ALPHA * g_hat(POW, ALPHA, u), rel=1e-7, abs=1e-10)


class TestFractionalMoment:
    def test_constant(self):
        assert fractional_moment(np.full(10, -3.0), 0.5) == pytest.approx(math.sqrt(3))

    def test_half_normal(self):
        x = np.random.default_rng(1).standard_normal(10**6)
        assert fractional_moment(x, 1.0) == pytest.approx(math.sqrt(2 / math.pi), abs=4 * 0.6 / 1000)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50), st.floats(0.01, 100), st.floats(0.1, 1.9))
    def test_scaling(self, xs, lam, p):
        x = np.array(xs)
        assert fractional_moment(lam * x, p) == pytest.approx(lam**p * fractional_moment(x, p), rel=1e-9,
                                                              abs=1e-300)


class TestSimulation:
    def test_taps_reproduce_i_alpha(self):
        for g in (EXP, POW):
            w = kernel_taps(g, ALPHA, 0.05)
            assert 0.05 * np.sum(w**ALPHA) == pytest.approx(i_alpha(g, ALPHA), rel=2e-6)

    def test_deterministic(self):
        a = simulate_lss(EXP, StableParams(ALPHA), 2000, 0.1, 3).values
        np.testing.assert_array_equal(a, simulate_lss(EXP, StableParams(ALPHA), 2000, 0.1, 3).values)

    @pytest.mark.parametrize("lag_steps", [0, 10])
    def test_ecf(self, lag_steps):
        p = StableParams(ALPHA, 0.8)
        dt = 0.1
        x = simulate_lss(EXP, p, 2**20, dt, 4).values
        y = x if lag_steps == 0 else x[lag_steps:] - x[:-lag_steps]
        scale = i_alpha(EXP, ALPHA) if lag_steps == 0 else g_hat(EXP, ALPHA, lag_steps * dt)
        z = np.cos(y)
        assert abs(z.mean() - math.exp(-p.gamma_scale * scale)) < 4 * batch_means_se(z)

    def test_near_gaussian_fractional_moment(self):
        p = StableParams(1.999, 1.0)
        x = simulate_lss(EXP, p, 2**20, 0.05, 5).values
        want = stable_abs_moment(1.0, StableParams(1.999, i_alpha(EXP, 1.999)))
        assert fractional_moment(x, 1.0) == pytest.approx(want, rel=0.05)


@pytest.mark.parametrize("u", [0.25, 1.0])
def test_is_within_fixed_class(u):
    v = match_lag_stable(EXP, POW, ALPHA, u)
    p = StableParams(ALPHA)
    x = simulate_lss(EXP, p, 2**21, u / 4, 7).values
    y = simulate_lss(POW, p, 2**21, v / 4, 7, stream_id=1).values
    a, b = x[4:] - x[:-4], y[4:] - y[:-4]
    ta, tb = decorrelation_block(a), decorrelation_block(b)
    assert min(a.size // ta, b.size // tb) >= 10**5
    assert collapse_distance(a, b, thinning=(ta, tb)).ks < 0.03
    ma, mb = fractional_moment(a, ALPHA / 2), fractional_moment(b, ALPHA / 2)
    assert abs(ma / mb - 1) < 0.05
