import math

import numpy as np
import pytest

from localmem.design import Decision, DesignSpec, run_two_stage, run_single_stage
from localmem.errors import DomainError, ShapeError
from localmem.numerics import binom_cdf, reg_inc_beta
from localmem.posterior import BasketData
from localmem.simulation import (
    OperatingCharacteristics,
    Scenario,
    run_trials,
    scenario_suite,
    simulate,
)


def paper_two_stage(delta=2.0):
    return DesignSpec.create(
        4, 16, 0.15, 0.45, lam=0.977, gamma=0.70033, delta=delta, stages=2, interim_sizes=10
    )


class TestScenarioSuite:
    def test_layout(self):
        spec = paper_two_stage()
        suite = scenario_suite(spec)
        assert [s.label for s in suite] == [f"{k} success" for k in range(5)]
        assert suite[0].true_rates == (0.15, 0.15, 0.15, 0.15)
        assert suite[1].true_rates == (0.15, 0.15, 0.15, 0.45)  # promising basket D
        assert suite[1].promising == (False, False, False, True)
        assert suite[4].true_rates == (0.45, 0.45, 0.45, 0.45)

    def test_heterogeneous_rates(self):
        spec = DesignSpec.create(
            4, 19, (0.25, 0.25, 0.15, 0.15), (0.55, 0.55, 0.45, 0.45), lam=0.98, delta=2.0, stages=1
        )
        suite = scenario_suite(spec)
        assert suite[1].true_rates == (0.25, 0.25, 0.15, 0.45)
        assert suite[3].true_rates == (0.25, 0.55, 0.45, 0.45)

    def test_scenario_validation(self):
        spec = paper_two_stage()
        with pytest.raises(ShapeError):
            Scenario.from_rates(spec, [0.1, 0.2], "bad")
        with pytest.raises(DomainError):
            Scenario.from_rates(spec, [0.1, 0.2, 0.3, 1.4], "bad")


class TestSimulate:
    def test_zero_rate_never_rejects(self):
        spec = paper_two_stage()
        oc = simulate(spec, Scenario.from_rates(spec, [0.0] * 4, "degenerate"), 300, seed=1)
        assert oc.per_basket_reject_rate == (0.0,) * 4
        assert oc.fwer == 0.0
        assert oc.expected_n == (10.0,) * 4  # every basket stops at the interim

    def test_deterministic_repeat(self):
        spec = paper_two_stage()
        scenario = scenario_suite(spec)[2]
        a = simulate(spec, scenario, 400, seed=77)
        b = simulate(spec, scenario, 400, seed=77)
        assert a == b

    def test_worker_count_invariance(self):
        spec = paper_two_stage()
        scenario = scenario_suite(spec)[1]
        serial = simulate(spec, scenario, 300, seed=5, workers=1)
        parallel = simulate(spec, scenario, 300, seed=5, workers=4)
        assert serial == parallel

    def test_fwer_bounds(self):
        spec = paper_two_stage()
        for scenario in scenario_suite(spec)[:3]:
            oc = simulate(spec, scenario, 500, seed=9)
            null_rates = [
                r for r, prom in zip(oc.per_basket_reject_rate, scenario.promising) if not prom
            ]
            assert oc.fwer >= max(null_rates) - 1e-12
            assert oc.fwer <= sum(null_rates) + 1e-12

    def test_global_alternative_has_no_fwer(self):
        spec = paper_two_stage()
        oc = simulate(spec, scenario_suite(spec)[-1], 300, seed=3)
        assert oc.fwer is None
        assert oc.trialwise_power is not None

    def test_global_null_has_no_power(self):
        spec = paper_two_stage()
        oc = simulate(spec, scenario_suite(spec)[0], 300, seed=3)
        assert oc.trialwise_power is None

    def test_expected_n_in_range(self):
        spec = paper_two_stage()
        for scenario in (scenario_suite(spec)[0], scenario_suite(spec)[4]):
            oc = simulate(spec, scenario, 400, seed=13)
            for en in oc.expected_n:
                assert 10.0 <= en <= 16.0

    def test_trialwise_power_weighting(self):
        spec = DesignSpec.create(
            2, (10, 30), 0.15, 0.45, lam=0.95, gamma=1.0, delta=0.0, stages=2, interim_fraction=0.5
        )
        scenario = Scenario.from_rates(spec, [0.45, 0.45], "both")
        oc = simulate(spec, scenario, 400, seed=21)
        expect = (10 * oc.per_basket_reject_rate[0] + 30 * oc.per_basket_reject_rate[1]) / 40
        assert oc.trialwise_power == pytest.approx(expect, abs=1e-12)

    def test_single_stage_expected_n_fixed(self):
        spec = DesignSpec.create(4, 19, 0.15, 0.45, lam=0.98, delta=2.0, stages=1)
        oc = simulate(spec, scenario_suite(spec)[2], 200, seed=2)
        assert oc.expected_n == (19.0,) * 4

    def test_rates_are_count_ratios(self):
        spec = paper_two_stage()
        oc = simulate(spec, scenario_suite(spec)[1], 321, seed=8)
        for r in oc.per_basket_reject_rate + (oc.fwer,):
            assert (r * 321) == pytest.approx(round(r * 321), abs=1e-9)

    def test_mismatched_scenario(self):
        spec = paper_two_stage()
        other = DesignSpec.create(2, 16, 0.15, 0.45, lam=0.9, stages=1)
        scenario = Scenario.from_rates(other, [0.15, 0.15], "wrong size")
        with pytest.raises(ShapeError):
            simulate(spec, scenario, 10, seed=0)


class TestAgainstDesignEngine:
    def test_two_stage_decisions_match(self):
        spec = paper_two_stage()
        scenario = scenario_suite(spec)[2]
        outcomes = run_trials(spec, scenario, 150, seed=99)
        for t in range(150):
            state = run_two_stage(list(outcomes.x_interim[t]), list(outcomes.x_total[t]), spec)
            for b in range(4):
                continued = state.decisions[b] is not Decision.FUTILITY_STOPPED
                assert outcomes.continued[t, b] == continued
                assert outcomes.rejected[t, b] == (state.decisions[b] is Decision.EFFICACIOUS)

    def test_single_stage_decisions_match(self):
        spec = DesignSpec.create(4, 19, 0.15, 0.45, lam=0.977, delta=2.0, stages=1)
        scenario = scenario_suite(spec)[3]
        outcomes = run_trials(spec, scenario, 150, seed=98)
        for t in range(150):
            decisions = run_single_stage(
                BasketData.create(outcomes.x_total[t], spec.max_sizes), spec
            )
            for b in range(4):
                assert outcomes.rejected[t, b] == (decisions[b] is Decision.EFFICACIOUS)


class TestMonteCarloAgainstExactBinomial:
    def test_degenerate_threshold_rule(self):
        # With one basket there is no borrowing, so rejection is exactly
        # {x >= c}; the simulated rate must match the exact binomial tail.
        spec = DesignSpec.create(1, 19, 0.15, 0.45, lam=0.977, delta=2.0, stages=1)
        tail_prob = lambda x: 1.0 - reg_inc_beta(0.15, 1 + x, 1 + 19 - x)
        cutoff = next(x for x in range(20) if tail_prob(x) > spec.lam)
        n_sims = 20_000
        for theta in (0.15, 0.45):
            scenario = Scenario.from_rates(spec, [theta], "one")
            oc = simulate(spec, scenario, n_sims, seed=1234)
            exact = 1.0 - binom_cdf(cutoff - 1, 19, theta)
            se = math.sqrt(exact * (1 - exact) / n_sims)
            assert abs(oc.per_basket_reject_rate[0] - exact) < 4 * se


class TestPaperTwoStageSmoke:
    def test_global_null_fwer_near_reported(self):
        # Full-resolution check lives in the acceptance suite; this is a
        # faster guard with looser Monte-Carlo bounds.
        spec = paper_two_stage()
        oc = simulate(spec, scenario_suite(spec)[0], 1500, seed=2024)
        assert 0.06 < oc.fwer < 0.14
        for en in oc.expected_n:
            assert 12.0 < en < 13.5
