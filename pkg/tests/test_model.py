import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrse.errors import GridCoverageError, ParameterError
from qrse.model import (
    QrseParams,
    ReturnGrid,
    action_difference,
    binary_entropy,
    conditional_action_prob,
    default_grid,
    delta,
    kernel_log_density,
    marginal_density,
    model_moments,
    trading_frequencies,
    zeta,
)

P0 = QrseParams(0.0, 1.0, 0.0, 1.0)

params_st = st.builds(
    QrseParams,
    mu=st.floats(-3, 3),
    temp=st.floats(0.1, 5),
    alpha=st.floats(-3, 3),
    scale=st.floats(0.1, 5),
)


def dist(th, n=801):
    return marginal_density(default_grid(th, n), th)


class TestParams:
    @pytest.mark.parametrize("bad", [dict(temp=0.0), dict(scale=-1.0), dict(mu=np.nan), dict(alpha=np.inf)])
    def test_invalid(self, bad):
        kw = dict(mu=0.0, temp=1.0, alpha=0.0, scale=1.0) | bad
        with pytest.raises(ParameterError):
            QrseParams(**kw)

    def test_derived(self):
        th = QrseParams(0.5, 2.0, -0.25, 4.0)
        assert (th.zeta, th.beta, th.gamma) == (0.75, 0.5, 0.25)
        assert QrseParams.from_array(th.as_array()) == th


class TestGrid:
    def test_weights_sum_to_range(self):
        g = ReturnGrid.uniform(-3.0, 5.0, 101)
        assert g.weights.sum() == pytest.approx(8.0, rel=1e-14)
        assert np.all(np.diff(g.points) > 0)

    @pytest.mark.parametrize("lo,hi,n", [(1, 1, 101), (2, 1, 101), (0, 1, 50), (0, 1, 49)])
    def test_invalid(self, lo, hi, n):
        with pytest.raises(ParameterError):
            ReturnGrid.uniform(lo, hi, n)


class TestActionProbabilities:
    def test_symmetry_point(self):
        assert conditional_action_prob(0.7, QrseParams(0.7, 2.0, 0.0, 1.0)) == (0.5, 0.5)

    def test_hand_value(self):
        _, p_sell = conditional_action_prob(1.0, P0)
        assert p_sell == pytest.approx(1 / (1 + math.exp(-1)), rel=1e-15)
        assert p_sell == pytest.approx(0.73106, abs=1e-5)

    def test_high_temperature(self):
        r = np.linspace(-10, 10, 201)
        p_buy, p_sell = conditional_action_prob(r, QrseParams(0.0, 1e3, 0.0, 1.0))
        assert np.all(np.abs(p_buy - 0.5) < 5e-3) and np.all(np.abs(p_sell - 0.5) < 5e-3)

    def test_saturation_is_finite(self):
        p_buy, p_sell = conditional_action_prob(np.array([-1e6, 1e6]), P0)
        np.testing.assert_array_equal(p_buy, [1.0, 0.0])
        np.testing.assert_array_equal(p_sell, [0.0, 1.0])

    def test_difference(self):
        assert action_difference(0.3, QrseParams(0.3, 1.0, 0.0, 1.0)) == 0.0
        assert action_difference(2.0, P0) == pytest.approx(0.76159, abs=1e-5)

    @given(params_st, st.floats(-50, 50))
    def test_identities(self, th, r):
        p_buy, p_sell = conditional_action_prob(r, th)
        assert abs(p_buy + p_sell - 1) <= 1e-12
        assert abs((p_sell - p_buy) - math.tanh((r - th.mu) / (2 * th.temp))) <= 1e-12


class TestEntropyAndKernel:
    def test_entropy_max(self):
        assert binary_entropy(0.0, P0) == pytest.approx(math.log(2), rel=1e-15)

    def test_entropy_hand_value(self):
        p = 1 / (1 + math.e)
        h = -(p * math.log(p) + (1 - p) * math.log(1 - p))
        assert binary_entropy(1.0, P0) == pytest.approx(h, rel=1e-14)
        assert binary_entropy(1.0, P0) == pytest.approx(0.58220, abs=1e-5)

    def test_entropy_saturation(self):
        h = binary_entropy(np.array([-50.0, 50.0]), P0)
        assert np.all(np.isfinite(h)) and np.all(h < 1e-20) and np.all(h >= 0)

    def test_kernel_at_symmetry_point(self):
        th = QrseParams(0.4, 1.3, 0.4, 0.9)
        assert kernel_log_density(0.4, th) == pytest.approx(math.log(2), rel=1e-15)

    def test_kernel_hand_value(self):
        # H(2) - tanh(1) * 2, evaluated term by term with the standard library
        p = 1 / (1 + math.exp(2))
        h = -(p * math.log(p) + (1 - p) * math.log(1 - p))
        expected = h - math.tanh(1) * 2
        assert expected == pytest.approx(-1.157854456824322, rel=1e-12)
        assert kernel_log_density(2.0, P0) == pytest.approx(expected, rel=1e-13)


class TestMarginal:
    @settings(max_examples=60, deadline=None)
    @given(params_st)
    def test_normalized_and_consistent(self, th):
        d = dist(th)
        assert abs(d.marginal.sum() - 1) <= 1e-10
        np.testing.assert_allclose(d.joint_buy + d.joint_sell, d.marginal, rtol=1e-14, atol=1e-300)
        assert np.all(d.marginal >= 0) and np.all(d.joint_buy >= 0) and np.all(d.joint_sell >= 0)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-3, 3), st.floats(0.1, 5), st.floats(0.1, 5))
    def test_mirror_symmetry(self, mu, temp, scale):
        d = dist(QrseParams(mu, temp, mu, scale))
        np.testing.assert_allclose(d.marginal, d.marginal[::-1], atol=1e-10)

    def test_symmetric_moments(self):
        m = model_moments(dist(P0))
        assert abs(m.mean) < 1e-10 and abs(m.skew) < 1e-10

    @settings(max_examples=60, deadline=None)
    @given(params_st)
    def test_sign_law(self, th):
        z = th.mu - th.alpha
        if not 1e-3 < abs(z) <= 3 * th.temp:
            return
        assert np.sign(model_moments(dist(th)).skew) == -np.sign(z)

    @settings(max_examples=40, deadline=None)
    @given(params_st, st.floats(-5, 5))
    def test_location_equivariance(self, th, c):
        m0 = model_moments(dist(th)).mean
        m1 = model_moments(dist(th.shifted(c))).mean
        assert m1 - m0 == pytest.approx(c, abs=1e-9)

    def test_grid_coverage(self):
        with pytest.raises(GridCoverageError):
            marginal_density(ReturnGrid.uniform(-2, 2, 101), P0)
        marginal_density(ReturnGrid.uniform(-2, 2, 101), P0, check_coverage=False)

    def test_laplace_limit(self):
        th = QrseParams(0.0, 1e-3, 0.0, 1.0)
        assert model_moments(dist(th, 2001)).kurt == pytest.approx(6.0, abs=0.5)

    def test_gaussian_limit(self):
        th = QrseParams(0.0, 1e3, 0.0, 1.0)
        assert model_moments(dist(th, 2001)).kurt == pytest.approx(3.0, abs=0.1)

    def test_csv(self):
        text = dist(P0, 51).to_csv().splitlines()
        assert text[0] == "r,marginal,joint_buy,joint_sell" and len(text) == 52


class TestDerived:
    def test_symmetric_frequencies(self):
        f_buy, f_sell = trading_frequencies(dist(P0))
        assert f_buy == pytest.approx(0.5, abs=1e-12) and f_buy + f_sell == pytest.approx(1, abs=1e-12)

    def test_buying_dominates_above_convention(self):
        th = QrseParams(2.0, 1.0, 0.0, 1.0)
        f_buy, _ = trading_frequencies(dist(th))
        # brute-force quadrature on a 10^4-node grid
        r = np.linspace(-60, 60, 10_001)
        x = (r - 2.0)
        pb, ps = 1 / (1 + np.exp(x)), 1 / (1 + np.exp(-x))
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -np.nan_to_num(pb * np.log(pb)) - np.nan_to_num(ps * np.log(ps))
        w = np.exp(h - (ps - pb) * r)
        ref = float(np.sum(pb * w) / np.sum(w))
        assert f_buy > 0.5
        assert f_buy == pytest.approx(ref, abs=1e-6)

    def test_delta_positive(self):
        assert delta(dist(P0), P0) > 0

    def test_delta_pure_entropy_limit(self):
        grid = ReturnGrid.uniform(-10, 10, 801)
        th = QrseParams(0.0, 1.0, 0.0, 1e9)
        got = delta(marginal_density(grid, th, check_coverage=False), th)
        w = np.exp(binary_entropy(grid.points, th)) * grid.weights
        ref = float(np.sum(np.tanh(grid.points / 2) * grid.points * w) / w.sum())
        assert got == pytest.approx(ref, rel=1e-6)

    def test_zeta(self):
        assert zeta(QrseParams(1.0, 1.0, 1.0, 1.0)) == 0
        assert zeta(QrseParams(2.0, 1.0, 0.0, 1.0)) == 2
        assert zeta(QrseParams(-2.0, 1.0, 0.0, 1.0)) == -2

    @pytest.mark.parametrize("th", [P0, QrseParams(0.3, 1.05, -0.16, 1.69), QrseParams(-1, 0.4, 1, 2.5)])
    def test_grid_refinement(self, th):
        """Derived scalars converge at least as fast as O(dr^2) under grid doubling."""
        lo, hi = default_grid(th).lo, default_grid(th).hi

        def scalars(n):
            d = marginal_density(ReturnGrid.uniform(lo, hi, n), th)
            m = model_moments(d)
            return np.array([trading_frequencies(d)[0], delta(d, th), m.mean, m.stdev, m.skew, m.kurt])

        ref = scalars(25601)
        errs = [np.abs(scalars(n) - ref) for n in (401, 801, 1601)]
        for coarse, fine in zip(errs, errs[1:]):
            assert np.all((fine <= coarse / 3.5) | (fine < 1e-10))
