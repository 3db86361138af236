from __future__ import annotations

import itertools
import random

import numpy as np
import pytest

from cityrebuild import check_plan, feasible_actions, threshold_for_cycle
from cityrebuild.model import build_dependency_graph
from cityrebuild.planner import generate_instance

from conftest import SIX_UNIT_BUDGET, SIX_UNIT_HORIZON, enumerate_feasible_plans

CYCLE_THRESHOLDS = [8.0, 7.2, 6.4, 5.6, 4.8, 4.0, 3.2, 2.4, 1.6, 0.8]


class TestThresholdForCycle:
    def test_full_schedule(self):
        for cycle, expected in enumerate(CYCLE_THRESHOLDS, start=1):
            assert threshold_for_cycle(cycle, 10) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("bad", [0, 11, -3])
    def test_rejects_cycles_outside_priority_range(self, bad):
        with pytest.raises(ValueError):
            threshold_for_cycle(bad, 10)

    def test_other_priority_ceilings(self):
        assert threshold_for_cycle(1, 5) == pytest.approx(4.0)
        assert threshold_for_cycle(5, 5) == pytest.approx(0.8)


class TestCheckPlan:
    def test_cost_overrun_reports_negative_slack(self, six_unit):
        # b1 + b2 + b1? -> pick items totalling 120 against budget 100
        plan = ["b1", "b2", "b4", "b5", "b3"]  # 40+30+14+12+18 = 114
        verdict = check_plan(six_unit, plan, 100.0, 200.0, 0.8)
        assert not verdict.cost.passed
        assert verdict.cost.slack == pytest.approx(100.0 - 114.0)
        assert not verdict.feasible

    def test_missing_blocker_is_reported_as_pair(self, bridge_access):
        verdict = check_plan(bridge_access, ["hospital"], 1000.0, 100.0, 0.0)
        assert not verdict.dependencies.passed
        assert ("hospital", "bridge") in verdict.dependencies.violations
        assert not verdict.feasible

    def test_blocker_must_precede_blocked(self, bridge_access):
        bad = check_plan(bridge_access, ["hospital", "bridge"], 1000.0, 100.0, 0.0)
        assert not bad.dependencies.passed
        good = check_plan(bridge_access, ["bridge", "hospital"], 1000.0, 100.0, 0.0)
        assert good.dependencies.passed

    def test_agrees_with_enumeration_oracle(self, six_unit):
        feasible = enumerate_feasible_plans(six_unit, SIX_UNIT_BUDGET,
                                            SIX_UNIT_HORIZON, 8.0)
        assert feasible, "the bundled instance must admit feasible plans"
        sample = feasible[0]
        verdict = check_plan(six_unit, sample, SIX_UNIT_BUDGET, SIX_UNIT_HORIZON, 8.0)
        assert verdict.feasible

    def test_empty_plan_is_vacuously_feasible(self, six_unit):
        verdict = check_plan(six_unit, [], SIX_UNIT_BUDGET, SIX_UNIT_HORIZON, 8.0)
        assert verdict.feasible
        assert verdict.priority.passed

    def test_priority_margin(self, six_unit):
        verdict = check_plan(six_unit, ["b1", "b2"], 100.0, 48.0, 8.0)
        assert verdict.priority.slack == pytest.approx(9.5 - 8.0)

    def test_strict_floor_mode(self, six_unit):
        plan = ["b1", "b2", "b6"]  # priorities 10, 9, 7 -> mean 8.67
        relaxed = check_plan(six_unit, plan, 200.0, 200.0, 8.0)
        assert relaxed.priority.passed
        strict = check_plan(six_unit, plan, 200.0, 200.0, 8.0,
                            strict_priority_floor=8)
        assert not strict.priority.passed

    def test_duplicates_rejected(self, six_unit):
        with pytest.raises(ValueError):
            check_plan(six_unit, ["b1", "b1"], 100.0, 48.0, 8.0)

    def test_order_insensitive_without_dependencies(self, six_unit):
        plan = ["b1", "b2", "b4"]  # none of these depend on each other
        rng = random.Random(4)
        base = check_plan(six_unit, plan, SIX_UNIT_BUDGET, SIX_UNIT_HORIZON, 8.0)
        for _ in range(5):
            shuffled = plan[:]
            rng.shuffle(shuffled)
            verdict = check_plan(six_unit, shuffled, SIX_UNIT_BUDGET,
                                 SIX_UNIT_HORIZON, 8.0)
            assert verdict.feasible == base.feasible
            assert verdict.cost == base.cost
            assert verdict.duration == base.duration

    def test_adding_items_never_repairs_cost_or_duration(self, six_unit):
        plan = ["b1", "b2", "b4", "b5"]
        for length in range(1, len(plan)):
            shorter = check_plan(six_unit, plan[:length], 50.0, 20.0, 0.8)
            longer = check_plan(six_unit, plan[:length + 1], 50.0, 20.0, 0.8)
            if not shorter.cost.passed:
                assert not longer.cost.passed
            if not shorter.duration.passed:
                assert not longer.duration.passed
            assert longer.cost.slack <= shorter.cost.slack
            assert longer.duration.slack <= shorter.duration.slack


class TestFeasibleActions:
    def test_no_budget_means_no_actions(self, six_unit):
        assert feasible_actions(six_unit, [], 0.0, 48.0) == frozenset()

    def test_bridge_gates_everything_behind_it(self, bridge_access):
        actions = feasible_actions(bridge_access, [], 1000.0, 100.0)
        assert actions == frozenset({"bridge"})
        after = feasible_actions(bridge_access, ["bridge"], 1000.0, 100.0)
        assert after == frozenset({"hospital", "university"})

    def test_matches_direct_predicate_oracle(self, six_unit):
        graph = build_dependency_graph(six_unit)
        prefix = ["b4", "b1"]
        remaining_budget = SIX_UNIT_BUDGET - 14 - 40
        remaining_time = SIX_UNIT_HORIZON - 7 - 18
        actions = feasible_actions(six_unit, prefix, remaining_budget, remaining_time)
        expected = set()
        for item_id in six_unit.damaged_ids():
            item = six_unit.items[item_id]
            if item_id in prefix:
                continue
            if item.effective_cost > remaining_budget:
                continue
            if item.effective_time > remaining_time:
                continue
            if not graph.blockers_of(item_id) <= set(prefix):
                continue
            expected.add(item_id)
        assert actions == frozenset(expected)

    def test_assembled_plans_satisfy_resource_and_order_constraints(self):
        rng = np.random.default_rng(5)
        for seed in range(10):
            ds = generate_instance(10, 0.7, 0.4, seed=seed, road_damage_rate=0.3)
            budget, horizon = 120.0, 50.0
            plan: list[str] = []
            remaining_b, remaining_t = budget, horizon
            while True:
                actions = feasible_actions(ds, plan, remaining_b, remaining_t)
                if not actions:
                    break
                choice = sorted(actions)[int(rng.integers(len(actions)))]
                item = ds.items[choice]
                plan.append(choice)
                remaining_b -= item.effective_cost
                remaining_t -= item.effective_time
            verdict = check_plan(ds, plan, budget, horizon, 0.0)
            assert verdict.cost.passed
            assert verdict.duration.passed
            assert verdict.dependencies.passed
