import math

import pytest

from duelfuel.analytic import (DerivativeUnstableError, Method, SeriesDivergenceError, Strategy,
                               ThresholdUnreachableError, closed_form_terms, expected_exit_index,
                               expected_preexit_time, functional_phi_closed, functional_phi_equal_assets,
                               functional_phi_joint, functional_phi_sum, optimal_threshold_time,
                               recommend_strategy)
from duelfuel.model import FunctionalParams, HittingCdf, canonical_spec, derive_constants
from duelfuel.transforms import LstFamily

from oracles import win_moments_equal_caps

UNIT = FunctionalParams()
IMMEDIATE = dict(cdf_a=HittingCdf.deterministic_step(0.0), cdf_b=HittingCdf.deterministic_step(0.0))
TINY = FunctionalParams(zeta=1e-12)


def oracle_moments(spec):
    c = derive_constants(spec)
    return win_moments_equal_caps(spec.observation.delay_law, spec.observation.step_law, spec.lambda_a,
                                  spec.lambda_b, spec.capacity_a, spec.capacity_b, c.j_min)


class TestThreshold:
    def test_symmetric_unit_rates(self):
        e = HittingCdf.exponential(1.0)
        assert optimal_threshold_time(e, e) == pytest.approx(math.log(2.0), abs=1e-9)

    def test_immediate_hit(self):
        assert optimal_threshold_time(HittingCdf.deterministic_step(0.0), HittingCdf.exponential(1.0)) == 0.0

    def test_golden_ratio_pair(self):
        t = optimal_threshold_time(HittingCdf.exponential(2.0), HittingCdf.exponential(1.0))
        assert t == pytest.approx(math.log((math.sqrt(5.0) + 1.0) / 2.0), abs=1e-9)

    def test_step_pair(self):
        t = optimal_threshold_time(HittingCdf.deterministic_step(2.5), HittingCdf.deterministic_step(4.0))
        assert t == pytest.approx(2.5, abs=1e-9)

    def test_unreachable(self):
        late = HittingCdf.deterministic_step(5e6)
        with pytest.raises(ThresholdUnreachableError, match="threshold unreachable"):
            optimal_threshold_time(late, late)


class TestStrategy:
    @pytest.mark.parametrize("ma,mb,expected", [(5, 5, Strategy.SHOOT_AT_THRESHOLD), (3, 7, Strategy.WAIT),
                                                (7, 3, Strategy.GENERAL)])
    def test_rule(self, ma, mb, expected):
        assert recommend_strategy(canonical_spec(capacity_a=ma, capacity_b=mb)) is expected


class TestTerms:
    def test_gamma_at_unit_point(self):
        terms = closed_form_terms(canonical_spec(), UNIT, 60, 60)
        # 1 / (2 - x) truncated after 61 terms misses 2^-61 at x = 1
        assert terms.Gamma(1.0) == pytest.approx(1.0, abs=1e-15)
        assert terms.gamma1 == 1.0


class TestEvaluators:
    @pytest.mark.parametrize("fn", [functional_phi_sum, functional_phi_closed, functional_phi_joint,
                                    functional_phi_equal_assets])
    def test_vanishing_zeta(self, fn):
        assert abs(fn(canonical_spec(), TINY).value) < 1e-10

    def test_sum_tail_stable(self):
        spec = canonical_spec()
        a = functional_phi_sum(spec, UNIT, j_max=1000).value
        b = functional_phi_sum(spec, UNIT, j_max=10_000).value
        c = functional_phi_sum(spec, UNIT, j_max=2000).value
        assert abs(a - b) < 1e-10 and abs(a - c) < 1e-10

    def test_sum_metadata(self):
        r = functional_phi_sum(canonical_spec(), UNIT)
        assert r.method is Method.SUM
        assert (r.j_min_used, r.m_cap_used) == (1, 0)
        assert r.truncation_j is not None and r.truncation_j <= 1000

    def test_equal_assets_bitwise(self):
        for ma in (1, 3, 6):
            spec = canonical_spec(capacity_a=ma, capacity_b=ma, lambda_a=1.5)
            params = FunctionalParams(zeta=0.9, z0=0.8, theta1=0.3)
            assert functional_phi_equal_assets(spec, params).value == functional_phi_closed(spec, params).value

    def test_equal_assets_precondition(self):
        with pytest.raises(ValueError, match="equal assets"):
            functional_phi_equal_assets(canonical_spec(capacity_a=3, capacity_b=5), UNIT)

    def test_divergence(self):
        # a negative net drain pushes Gamma(0) = 1 / (1 - 0.2) beyond 1
        spec = canonical_spec(lambda_a=1.0, lambda_b=1.2)
        for fn in (functional_phi_sum, functional_phi_closed):
            with pytest.raises(SeriesDivergenceError, match="series divergence at given params"):
                fn(spec, UNIT)

    def test_pole_crossing(self):
        spec = canonical_spec(lambda_a=0.5, lambda_b=3.0, delta=0.5)
        with pytest.raises(ValueError, match="analyticity domain"):
            functional_phi_sum(spec, UNIT)

    def test_short_truncation_rejected(self):
        with pytest.raises(SeriesDivergenceError, match="j_max=5 too small"):
            functional_phi_sum(canonical_spec(), UNIT, j_max=5)

    def test_literal_and_joint_agree_without_opponent_drain(self):
        for la in (0.5, 1.0, 2.0):
            spec = canonical_spec(lambda_a=la, lambda_b=0.0)
            assert functional_phi_sum(spec, UNIT).value == pytest.approx(
                functional_phi_joint(spec, UNIT).value, abs=1e-12)

    def test_closed_to_sum_ratio_is_stable(self):
        spec = canonical_spec()
        closed = functional_phi_closed(spec, UNIT).value
        r3 = closed / functional_phi_sum(spec, UNIT, j_max=1000).value
        r4 = closed / functional_phi_sum(spec, UNIT, j_max=10_000).value
        assert math.isfinite(r3) and abs(r3 - r4) < 1e-10

    def test_joint_rejects_marks(self):
        with pytest.raises(ValueError, match="z0 = z1 = 1"):
            functional_phi_joint(canonical_spec(), FunctionalParams(z0=0.5))

    def test_joint_monotone_in_zeta(self):
        spec = canonical_spec()
        values = [functional_phi_joint(spec, FunctionalParams(zeta=z)).value for z in (0.2, 0.5, 0.8, 0.95, 1.0)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_joint_is_a_probability(self):
        for kw in ({}, dict(capacity_a=2, capacity_b=6), dict(capacity_a=6, capacity_b=2, delta=2.0)):
            v = functional_phi_joint(canonical_spec(**kw), FunctionalParams(zeta=0.9, theta0=0.4)).value
            assert -1e-8 <= v <= 1.0 + 1e-8

    @pytest.mark.parametrize("kw", [{}, dict(lambda_b=0.0), dict(delta=2.0, lambda_a=1.0),
                                    dict(step_law=LstFamily.erlang(2, 2.0)), IMMEDIATE])
    def test_joint_matches_markov_chain(self, kw):
        spec = canonical_spec(**kw)
        p_win, _ = oracle_moments(spec)
        assert functional_phi_joint(spec, UNIT).value == pytest.approx(p_win, abs=1e-12)

    def test_boundary_collapse(self):
        # t* = 0 and a quiet opponent: every path satisfies both indicators
        now = HittingCdf.deterministic_step(0.0)
        spec = canonical_spec(lambda_b=0.0, cdf_a=now, cdf_b=now, capacity_a=3, capacity_b=1)
        assert derive_constants(spec).j_min == 0
        assert functional_phi_joint(spec, UNIT).value == pytest.approx(1.0, abs=1e-12)

    def test_empty_tank(self):
        # with nothing to spend A exits at the first drain; winning only needs A_0 = 0
        spec = canonical_spec(capacity_a=0, capacity_b=0, lambda_b=0.0)
        q = 1.0 / (1.0 + spec.lambda_a)  # P(no drain over a unit-rate exponential gap)
        assert functional_phi_joint(spec, UNIT).value == pytest.approx(q, abs=1e-14)
        # E[nu 1{nu >= 1}] = q * sum_k k q^(k-1) (1 - q)
        assert expected_exit_index(spec).value == pytest.approx(q / (1.0 - q), rel=1e-7)


class TestDecisionParameters:
    @pytest.mark.parametrize("kw", [{}, dict(delta=2.0, lambda_a=1.0), IMMEDIATE])
    def test_exit_index_matches_markov_chain(self, kw):
        spec = canonical_spec(**kw)
        _, e_nu = oracle_moments(spec)
        est = expected_exit_index(spec)
        assert est.value == pytest.approx(e_nu, rel=1e-6)
        assert abs(est.value - e_nu) <= est.error

    def test_literal_route_without_opponent_drain(self):
        spec = canonical_spec(lambda_b=0.0)
        _, e_nu = oracle_moments(spec)
        assert expected_exit_index(spec, evaluator="sum").value == pytest.approx(e_nu, rel=1e-6)

    def test_degenerate_exit_index(self):
        # deterministic unit gaps, an immediate first epoch and 50 drains per step: nu = 1 = j_min surely
        step = HittingCdf.deterministic_step(0.5)
        spec = canonical_spec(lambda_a=50.0, step_law=LstFamily.deterministic(1.0),
                              delay_law=LstFamily.deterministic(0.0), capacity_a=0, capacity_b=5,
                              cdf_a=step, cdf_b=step)
        assert derive_constants(spec).j_min == 1
        assert expected_exit_index(spec).value == pytest.approx(1.0, abs=1e-9)
        assert float(expected_exit_index(spec)) == expected_exit_index(spec).value

    def test_degenerate_preexit_time(self):
        d0 = 1e-6
        step = HittingCdf.deterministic_step(0.5)
        spec = canonical_spec(lambda_a=50.0, step_law=LstFamily.deterministic(1.0),
                              delay_law=LstFamily.deterministic(d0), capacity_a=0, capacity_b=5,
                              cdf_a=step, cdf_b=step)
        # nu = j = 1 except when a drain lands in the first d0; (j - 1) d + E[tau_0] = d0
        mass = math.exp(-50.0 * d0) * (1.0 - math.exp(-50.0))
        assert expected_preexit_time(spec).value == pytest.approx(d0 * mass, rel=1e-6)

    def test_exit_index_nondecreasing_in_observation_rate(self):
        values = [expected_exit_index(canonical_spec(delta=d)).value for d in (0.5, 1.0, 2.0, 4.0)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_unknown_evaluator(self):
        with pytest.raises(ValueError):
            expected_exit_index(canonical_spec(), evaluator="closed")

    def test_unstable_derivative_is_reported(self, monkeypatch):
        import duelfuel.analytic as an

        calls = iter(range(100))
        monkeypatch.setitem(an._EVALUATORS, Method.JOINT,
                            lambda *a, **k: an.PhiResult(float(next(calls)) ** 3, 1, 0, Method.JOINT))
        with pytest.raises(DerivativeUnstableError, match="derivative unstable"):
            expected_exit_index(canonical_spec())


@pytest.mark.parametrize("kw", [dict(capacity_a=6, capacity_b=2), dict(capacity_a=2, capacity_b=6),
                                dict(capacity_a=7, capacity_b=3, delta=2.0),
                                dict(capacity_a=5, capacity_b=3, step_law=LstFamily.deterministic(0.7))])
@pytest.mark.parametrize("params", [UNIT, FunctionalParams(zeta=0.8, theta0=0.3, theta1=0.5)])
def test_joint_matches_simulation_with_asset_gap(kw, params):
    from duelfuel.simulate import monte_carlo_functional

    spec = canonical_spec(**kw)
    assert derive_constants(spec).m_cap > 0
    mc = monte_carlo_functional(spec, params, 400_000, 3)
    assert abs(functional_phi_joint(spec, params).value - mc.mean) <= 3.0 * mc.std_error
