import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from duelfuel.transforms import (DomainError, LstFamily, gamma_eval, lst_bijet, lst_eval, lst_jet,
                                 phi0_eval, phi_eval, taylor_in_x)


def quad_lst(density, theta, upper=np.inf):
    value, _ = integrate.quad(lambda t: density(t) * math.exp(-theta * t), 0.0, upper)
    return value


LAWS = [
    (LstFamily.exponential(2.0), lambda t: 2.0 * math.exp(-2.0 * t)),
    (LstFamily.exponential(0.5), lambda t: 0.5 * math.exp(-0.5 * t)),
    (LstFamily.erlang(3, 1.5), stats.gamma(a=3, scale=1 / 1.5).pdf),
]


class TestLstEval:
    def test_zero_argument_is_one(self):
        for law in (LstFamily.exponential(3.0), LstFamily.deterministic(2.0), LstFamily.erlang(4, 0.7)):
            assert lst_eval(law, 0.0) == 1.0

    def test_exponential_example(self):
        assert lst_eval(LstFamily.exponential(2.0), 2.0) == pytest.approx(quad_lst(LAWS[0][1], 2.0), abs=1e-12)
        assert lst_eval(LstFamily.exponential(2.0), 2.0) == pytest.approx(0.5, abs=1e-15)

    def test_deterministic_example(self):
        # point mass at 1: the integrand reduces to e^{-theta}
        assert lst_eval(LstFamily.deterministic(1.0), 1.0) == pytest.approx(0.36787944117144233, rel=1e-15)

    @pytest.mark.parametrize("law,density", LAWS)
    @pytest.mark.parametrize("theta", [0.1, 0.7, 2.5])
    def test_matches_quadrature(self, law, density, theta):
        assert lst_eval(law, theta) == pytest.approx(quad_lst(density, theta), rel=1e-9)

    @given(st.floats(0.0, 50.0), st.floats(1e-3, 50.0))
    def test_strictly_decreasing(self, theta, step):
        for law in (LstFamily.exponential(1.3), LstFamily.erlang(2, 0.4), LstFamily.deterministic(0.8)):
            lo, hi = lst_eval(law, theta), lst_eval(law, theta + step)
            assert hi < lo or (hi == lo == 0.0)

    def test_pole_crossing_raises(self):
        with pytest.raises(DomainError, match="analyticity domain"):
            lst_eval(LstFamily.exponential(1.0), -1.5)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            LstFamily.exponential(-1.0)
        with pytest.raises(ValueError):
            LstFamily.erlang(0, 1.0)

    def test_means(self):
        assert LstFamily.exponential(4.0).mean() == 0.25
        assert LstFamily.erlang(3, 2.0).mean() == 1.5
        assert LstFamily.deterministic(0.3).mean() == 0.3


class TestComposedTransforms:
    def test_gamma_reduces_at_unit_z(self):
        law = LstFamily.erlang(2, 1.7)
        for theta in (0.0, 0.3, 4.0):
            assert gamma_eval(law, 2.0, 1.0, 1.0, theta) == lst_eval(law, theta)

    def test_gamma_symmetric_rates(self):
        law = LstFamily.exponential(1.0)
        for z in (0.0, 0.4, 0.9):
            assert gamma_eval(law, 1.5, 1.5, z, 0.2) == lst_eval(law, 0.2)

    def test_gamma_example(self):
        assert gamma_eval(LstFamily.exponential(1.0), 2.0, 1.0, 0.5, 0.0) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_phi_examples(self):
        assert phi_eval(LstFamily.exponential(2.0), 2.0, 0.5, 0.0) == pytest.approx(2.0 / 3.0, abs=1e-15)
        # P(no drain in one exponential step) by quadrature: int e^{-t} e^{-t} dt
        oracle = quad_lst(lambda t: math.exp(-t), 1.0)
        assert phi_eval(LstFamily.exponential(1.0), 1.0, 0.0, 0.0) == pytest.approx(oracle, abs=1e-12)
        assert phi0_eval(LstFamily.exponential(1.0), 1.0, 0.0, 0.0) == pytest.approx(oracle, abs=1e-12)

    def test_phi_no_drain_monte_carlo(self):
        rng = np.random.default_rng(7)
        delta = rng.exponential(1.0, size=400_000)
        drains = rng.poisson(delta)
        hits = (drains == 0).astype(float)
        se = hits.std(ddof=1) / math.sqrt(hits.size)
        assert abs(phi_eval(LstFamily.exponential(1.0), 1.0, 0.0, 0.0) - hits.mean()) < 3 * se

    @pytest.mark.parametrize("law,density", LAWS)
    def test_phi_matches_mixed_pgf_quadrature(self, law, density):
        lam, x, theta = 1.3, 0.35, 0.4
        oracle = quad_lst(lambda t: density(t) * math.exp(-lam * t * (1 - x)), theta)
        assert phi_eval(law, lam, x, theta) == pytest.approx(oracle, rel=1e-9)

    def test_unit_x_gives_lst(self):
        law = LstFamily.deterministic(0.6)
        assert phi_eval(law, 3.0, 1.0, 0.9) == lst_eval(law, 0.9)
        assert phi0_eval(law, 3.0, 1.0, 0.9) == lst_eval(law, 0.9)

    def test_zero_delay(self):
        law = LstFamily.deterministic(0.0)
        for x in (0.0, 0.5):
            for theta in (0.0, 2.0):
                assert phi0_eval(law, 2.0, x, theta) == 1.0

    def test_gamma_without_b_is_phi(self):
        rng = np.random.default_rng(11)
        law = LstFamily.erlang(2, 1.2)
        for lam, x, theta in zip(rng.uniform(0.1, 3, 25), rng.uniform(0, 1, 25), rng.uniform(0, 2, 25)):
            assert abs(gamma_eval(law, lam, 0.0, x, theta) - phi_eval(law, lam, x, theta)) <= 1e-14


def long_division_1_over(a0, a1, order):
    """Coefficients of 1 / (a0 + a1 x) by long division."""
    out = []
    remainder = [1.0] + [0.0] * order
    for n in range(order + 1):
        q = remainder[n] / a0
        out.append(q)
        if n + 1 <= order:
            remainder[n + 1] -= q * a1
    return out


class TestTaylor:
    def test_geometric_phi_expansion(self):
        jet = taylor_in_x("phi", LstFamily.exponential(1.0), 10, lam=1.0)
        oracle = long_division_1_over(2.0, -1.0, 10)
        np.testing.assert_allclose(jet.as_array(), oracle, rtol=1e-15)
        assert jet.coefficients[:3] == (0.5, 0.25, 0.125)

    def test_order_zero_is_value(self):
        law = LstFamily.erlang(3, 2.0)
        jet = taylor_in_x("phi0", law, 0, lam=1.4, theta=0.2)
        assert jet.order == 0
        assert jet.coefficients[0] == pytest.approx(phi0_eval(law, 1.4, 0.0, 0.2), abs=1e-12)

    def test_symmetric_gamma_is_constant(self):
        jet = taylor_in_x("gamma", LstFamily.exponential(1.0), 6, lambda_a=2.0, lambda_b=2.0, theta=0.3)
        assert all(c == 0.0 for c in jet.coefficients[1:])
        assert jet.coefficients[0] == lst_eval(LstFamily.exponential(1.0), 0.3)

    @pytest.mark.parametrize("law", [LstFamily.exponential(1.5), LstFamily.erlang(3, 2.0),
                                      LstFamily.deterministic(0.7)])
    def test_jet_matches_mpmath_taylor(self, law):
        lam, theta = 1.1, 0.25
        mpmath.mp.dps = 30
        oracle = mpmath.taylor(lambda x: mpmath.mpf(_mp_lst(law, theta + lam * (1 - x))), 0, 8)
        np.testing.assert_allclose(lst_jet(law, theta, lam, 8).as_array(), [float(c) for c in oracle],
                                   rtol=1e-12, atol=1e-15)

    def test_bijet_matches_mixed_partials(self):
        law = LstFamily.erlang(2, 1.5)
        base, sx, sy = 0.3, 0.8, 0.6
        mpmath.mp.dps = 30

        def f(x, y):
            return _mp_lst(law, base + sx * (1 - x) + sy * (1 - y))

        coeffs = lst_bijet(law, base, sx, sy, 3, 3)
        for i in range(4):
            for j in range(4):
                oracle = mpmath.diff(f, (0, 0), (i, j)) / (math.factorial(i) * math.factorial(j))
                assert coeffs[i, j] == pytest.approx(float(oracle), rel=1e-12, abs=1e-15)

    def test_jet_evaluates_within_truncation_bound(self):
        # geometric tail of 1/(2 - x) at x = 0.5 after 20 terms
        jet = taylor_in_x("phi", LstFamily.exponential(1.0), 20, lam=1.0)
        exact = 1.0 / 1.5
        tail = (0.5 / 2.0) ** 21 / (1 - 0.25) / 2.0
        assert abs(jet(0.5) - exact) <= tail * (1 + 1e-9)

    def test_pole_inside_disk(self):
        with pytest.raises(DomainError, match="not valid to requested order"):
            lst_bijet(LstFamily.exponential(0.1), -0.2, 2.0, 0.0, 4, 0)

    def test_order_limits(self):
        with pytest.raises(ValueError):
            taylor_in_x("phi", LstFamily.exponential(1.0), -1, lam=1.0)
        with pytest.raises(ValueError):
            taylor_in_x("psi", LstFamily.exponential(1.0), 2, lam=1.0)


def _mp_lst(law, theta):
    if law.kind.value == "exponential":
        return law.rate / (law.rate + theta)
    if law.kind.value == "erlang":
        return (law.rate / (law.rate + theta)) ** law.shape
    return mpmath.exp(-theta * law.value)


@settings(max_examples=50)
@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(0.0, 1.0))
def test_phi_is_a_probability_transform(lam, theta, x):
    v = phi_eval(LstFamily.erlang(2, 1.0), lam, x, theta)
    assert 0.0 <= v <= 1.0
