import itertools

import numpy as np
import pytest

from portsched import (
    FailureKind,
    Schedule,
    ScenarioError,
    UndefinedBaselineError,
    aggregate_outcomes,
    borda_scores,
    closed_gap,
    cmp_delta,
    outcome_par,
    par_value,
    sbs,
    simulate_schedule,
    vbs_par,
)
from .conftest import TAU, TOY_INSTANCES, build_scenario

EXAMPLE_SCHEDULE = Schedule(
    slots=(("A4", 600.0), ("A1", 600.0), ("A3", 300.0), ("A2", 300.0))
)


class TestParValue:
    def test_below_cutoff(self):
        assert par_value(500.0, True, 1200.0, 10.0) == 500.0

    def test_unsolved_penalized(self):
        assert par_value(1200.0, False, 1200.0, 10.0) == 12000.0

    def test_boundary_solved(self):
        assert par_value(1199.9, True, 1200.0, 10.0) == 1199.9

    def test_solved_at_exact_timeout_still_penalized(self):
        assert par_value(1200.0, True, 1200.0, 10.0) == 12000.0

    def test_monotone_in_runtime_for_solved(self):
        rng = np.random.default_rng(0)
        times = np.sort(rng.uniform(0, 1200, 100))
        pars = [par_value(t, True, 1200.0, 10.0) for t in times]
        assert all(a <= b for a, b in zip(pars, pars[1:]))

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            par_value(1.0, True, 1200.0, 1.0)
        with pytest.raises(ValueError):
            par_value(1.0, True, 0.0, 10.0)


class TestBaselines:
    def test_oracle_par_on_worked_matrix(self, toy):
        # column minima: -, 593, 3, 122, 60 with one full penalty
        assert vbs_par(toy, toy.instance_ids, 10.0) == pytest.approx(
            (18000 + 593 + 3 + 122 + 60) / 5
        )
        assert vbs_par(toy, toy.instance_ids, 10.0) == pytest.approx(3755.6)

    def test_single_best_on_worked_matrix(self, toy):
        algo, par = sbs(toy, toy.instance_ids, 10.0)
        assert algo == "A4"
        assert par == pytest.approx((3 * 18000 + 122 + 60) / 5)

    def test_dominant_algorithm_is_single_best(self):
        runtimes = {"fast": [1.0, 2.0, 3.0], "slow": [10.0, 20.0, 30.0]}
        sc = build_scenario(runtimes, ("a", "b", "c"), 100.0)
        assert sbs(sc, sc.instance_ids)[0] == "fast"

    def test_tie_broken_to_smaller_id(self):
        runtimes = {"s2": [5.0, 6.0], "s1": [5.0, 6.0]}
        sc = build_scenario(runtimes, ("a", "b"), 100.0)
        assert sbs(sc, sc.instance_ids)[0] == "s1"


class TestClosedGap:
    def test_perfect_selector(self):
        assert closed_gap(100.0, 50.0, 50.0) == 1.0

    def test_sbs_equivalent(self):
        assert closed_gap(100.0, 100.0, 50.0) == 0.0

    def test_worse_than_sbs_goes_negative(self):
        assert closed_gap(100.0, 150.0, 50.0) == -1.0

    def test_degenerate_baseline_rejected(self):
        with pytest.raises(UndefinedBaselineError):
            closed_gap(50.0, 60.0, 50.0)


class TestCmpDelta:
    def test_worked_ratio(self):
        assert cmp_delta(1.0, 2.0, 1200.0) == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert cmp_delta(2.0, 1.0, 1200.0) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_timeout_scores_zero_whatever_the_other_does(self):
        for other in (0.0, 5.0, 1200.0):
            assert cmp_delta(1200.0, other, 1200.0) == 0.0

    def test_beating_a_timeout_scores_one(self):
        assert cmp_delta(5.0, 1200.0, 1200.0) == 1.0

    def test_within_threshold_is_a_tie(self):
        assert cmp_delta(500.0, 1000.0, 1200.0, delta=600.0) == 0.5

    def test_timeout_clause_precedes_tie_clause(self):
        # huge delta would call it a tie, but a timed-out selector gets 0
        assert cmp_delta(1200.0, 1199.0, 1200.0, delta=1200.0) == 0.0
        assert cmp_delta(1199.0, 1200.0, 1200.0, delta=1200.0) == 1.0

    def test_zero_tie_at_zero_delta(self):
        assert cmp_delta(0.0, 0.0, 1200.0, delta=0.0) == 0.5

    def test_reversal_sums_to_one_for_non_timeout_pairs(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            t, u = rng.uniform(0, 1199, 2)
            delta = float(rng.choice([0.0, rng.uniform(0, 1200)]))
            total = cmp_delta(t, u, 1200.0, delta) + cmp_delta(u, t, 1200.0, delta)
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_negative_delta_rejected(self):
        with pytest.raises(ValueError):
            cmp_delta(1.0, 2.0, 100.0, -0.5)


class TestBorda:
    def test_always_solves_vs_never(self):
        times = {"good": [600.0, 600.0], "bad": [1200.0, 1200.0]}
        scores = borda_scores(times, 1200.0)
        assert scores == {"good": 1.0, "bad": 0.0}

    def test_identical_selectors_split_evenly(self):
        times = {f"s{i}": [10.0, 20.0] for i in range(4)}
        scores = borda_scores(times, 100.0)
        for value in scores.values():
            assert value == pytest.approx((4 - 1) / 2)

    def test_three_selectors_match_pairwise_enumeration(self):
        times = {"a": [1.0, 50.0], "b": [2.0, 100.0], "c": [3.0, 100.0]}
        timeout = 100.0
        scores = borda_scores(times, timeout)
        expected = {}
        for s in times:
            total = 0.0
            for i in range(2):
                for o in times:
                    if o != s:
                        total += cmp_delta(times[s][i], times[o][i], timeout)
            expected[s] = total / 2
        for s in times:
            assert scores[s] == pytest.approx(expected[s], abs=1e-12)

    def test_total_invariant_under_relabeling(self):
        rng = np.random.default_rng(2)
        base = {f"s{i}": list(rng.uniform(0, 100, 5)) for i in range(3)}
        total = sum(borda_scores(base, 100.0).values())
        for perm in itertools.permutations(base):
            relabeled = {name: base[old] for name, old in zip(base, perm)}
            assert sum(borda_scores(relabeled, 100.0).values()) == pytest.approx(total)

    def test_ragged_input_rejected(self):
        with pytest.raises(ValueError, match="ragged"):
            borda_scores({"a": [1.0], "b": [1.0, 2.0]}, 100.0)


class TestSimulateSchedule:
    def test_fast_solver_wins_within_slot(self, toy):
        out = simulate_schedule(EXAMPLE_SCHEDULE, toy, "x4")
        assert out.solved and out.solving_algorithm == "A4"
        assert out.effective_time == 122.0

    def test_slot_too_small_is_insufficient_time(self, toy):
        out = simulate_schedule(EXAMPLE_SCHEDULE, toy, "x2")
        assert not out.solved
        assert out.failure_kind is FailureKind.INSUFFICIENT_TIME
        assert out.effective_time == TAU

    def test_nobody_solves_it_is_wrong_solvers(self, toy):
        out = simulate_schedule(EXAMPLE_SCHEDULE, toy, "x1")
        assert not out.solved
        assert out.failure_kind is FailureKind.WRONG_SOLVERS

    def test_later_slot_solves_with_offset(self, toy):
        out = simulate_schedule(EXAMPLE_SCHEDULE, toy, "x3")
        assert out.solved and out.solving_algorithm == "A1"
        assert out.effective_time == 600.0 + 3.0

    def test_unknown_algorithm_rejected(self, toy):
        with pytest.raises(ScenarioError, match="unknown algorithm"):
            simulate_schedule(Schedule(slots=(("nope", TAU),)), toy, "x1")

    def test_feature_cost_charged_and_switchable(self):
        cost = np.array([50.0, 0.0])
        sc = build_scenario(
            {"s1": [10.0, 10.0], "s2": [None, None]}, ("a", "b"), 100.0,
            feature_cost=cost,
        )
        sched = Schedule(slots=(("s1", 100.0),))
        charged = simulate_schedule(sched, sc, "a")
        assert charged.solved and charged.effective_time == 60.0
        free = simulate_schedule(sched, sc, "a", charge_feature_cost=False)
        assert free.effective_time == 10.0

    def test_feature_cost_beyond_timeout_is_wrong_solvers(self):
        cost = np.array([150.0])
        sc = build_scenario({"s1": [10.0], "s2": [None]}, ("a",), 100.0,
                            feature_cost=cost)
        out = simulate_schedule(Schedule(slots=(("s1", 100.0),)), sc, "a")
        assert not out.solved
        assert out.failure_kind is FailureKind.WRONG_SOLVERS

    def test_cost_pushing_past_timeout_is_insufficient_time(self):
        cost = np.array([50.0])
        sc = build_scenario({"s1": [80.0], "s2": [None]}, ("a",), 100.0,
                            feature_cost=cost)
        out = simulate_schedule(Schedule(slots=(("s1", 100.0),)), sc, "a")
        assert not out.solved
        assert out.failure_kind is FailureKind.INSUFFICIENT_TIME


class TestSimulationLowerBound:
    def test_effective_time_never_beats_per_instance_best(self):
        from portsched import generate_synthetic_scenario, fit_trained_state
        from portsched.scheduling import schedule_for_instance

        rng = np.random.default_rng(11)
        for seed in range(10):
            sc = generate_synthetic_scenario(
                40, 3, 2, 800.0, seed=seed, dominance=0.7,
                secondary_solve_prob=0.2, with_feature_cost=bool(seed % 2),
            )
            ids = list(sc.instance_ids)
            state = fit_trained_state(
                sc, ids[:30], (0, 1), k=int(rng.integers(1, 8))
            )
            for inst in ids[30:]:
                row = sc.instance_index(inst)
                out = simulate_schedule(
                    schedule_for_instance(sc, state, inst), sc, inst
                )
                if out.solved:
                    assert out.effective_time >= sc.runtime[row].min()
                else:
                    assert out.effective_time == sc.timeout


class TestAggregate:
    def test_outcome_par_uses_timeout_for_unsolved(self, toy):
        out = simulate_schedule(EXAMPLE_SCHEDULE, toy, "x1")
        assert outcome_par(out, TAU, 10.0) == 10.0 * TAU

    def test_aggregate_scores_well_formed(self, toy):
        outcomes = [
            simulate_schedule(EXAMPLE_SCHEDULE, toy, inst)
            for inst in TOY_INSTANCES
        ]
        agg = aggregate_outcomes(outcomes, toy, 10.0)
        assert agg.solved_fraction == pytest.approx(3 / 5)
        assert agg.m_vbs <= agg.par
        assert agg.closed_gap is not None and agg.closed_gap <= 1.0
        assert 0.0 < agg.speedup_ratio <= 1.0
