"""Feasibility checks: budget, horizon, priority threshold, precedence order.

Infeasibility is data (a :class:`Verdict`), not an exception; only malformed
plans raise. The per-cycle priority threshold relaxes as reconstruction
progresses, so early cycles must favour politically critical work.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .metrics import mean_priority
from .model import MAX_PRIORITY, Dataset, DependencyGraph, build_dependency_graph


@dataclass(frozen=True)
class ConstraintResult:
    passed: bool
    slack: float  # remaining headroom; negative when violated


@dataclass(frozen=True)
class DependencyResult:
    passed: bool
    violations: tuple[tuple[str, str], ...]  # (blocked item, unsatisfied blocker)


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    cost: ConstraintResult
    duration: ConstraintResult
    priority: ConstraintResult
    dependencies: DependencyResult

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "cost": {"passed": self.cost.passed, "slack": self.cost.slack},
            "duration": {"passed": self.duration.passed, "slack": self.duration.slack},
            "priority": {"passed": self.priority.passed, "margin": self.priority.slack},
            "dependencies": {
                "passed": self.dependencies.passed,
                "violations": [list(v) for v in self.dependencies.violations],
            },
        }


def threshold_for_cycle(cycle: int, max_priority: int = MAX_PRIORITY) -> float:
    """Mean-priority threshold for a reconstruction cycle: starts at 80% of the
    top priority and steps down by the same fraction each cycle."""
    if not 1 <= cycle <= max_priority:
        raise ValueError(f"cycle must be in 1..{max_priority}, got {cycle}")
    return (max_priority - cycle + 1) * 0.8


def _resolve_plan(dataset: Dataset, plan: Sequence[str]) -> list[str]:
    resolved = []
    for p in plan:
        try:
            resolved.append(dataset.resolve(p))
        except KeyError as exc:
            raise ValueError(str(exc)) from exc
    dupes = {p for p in resolved if resolved.count(p) > 1}
    if dupes:
        raise ValueError(f"plan contains duplicate items: {sorted(dupes)}")
    return resolved


def check_plan(dataset: Dataset, plan: Sequence[str], budget: float,
               horizon: float, priority_threshold: float, *,
               dep_graph: "DependencyGraph | None" = None,
               strict_priority_floor: "int | None" = None) -> Verdict:
    """Verdict for an ordered plan against all four constraints.

    Dependency feasibility requires every damaged blocker of a plan item to be
    in the plan *and* scheduled before it. ``strict_priority_floor`` optionally
    also requires every single item to meet a per-item priority floor (the
    plan-level mean threshold is the binding constraint by default).
    """
    resolved = _resolve_plan(dataset, plan)
    items = [dataset.items[p] for p in resolved]

    total_cost = sum(i.effective_cost for i in items)
    total_time = sum(i.effective_time for i in items)
    cost = ConstraintResult(total_cost <= budget, budget - total_cost)
    duration = ConstraintResult(total_time <= horizon, horizon - total_time)

    if resolved:
        mean_p = mean_priority(dataset, resolved)
        priority_ok = mean_p >= priority_threshold
        if strict_priority_floor is not None:
            priority_ok = priority_ok and all(i.priority >= strict_priority_floor
                                              for i in items)
        priority = ConstraintResult(priority_ok, mean_p - priority_threshold)
    else:
        priority = ConstraintResult(True, 0.0)  # vacuous for the empty plan

    graph = dep_graph if dep_graph is not None else build_dependency_graph(dataset)
    position = {p: i for i, p in enumerate(resolved)}
    violations: list[tuple[str, str]] = []
    for p in resolved:
        for blocker in sorted(graph.blockers_of(p)):
            if blocker not in position or position[blocker] > position[p]:
                violations.append((p, blocker))
    dependencies = DependencyResult(not violations, tuple(violations))

    feasible = cost.passed and duration.passed and priority.passed and dependencies.passed
    return Verdict(feasible, cost, duration, priority, dependencies)


def feasible_actions(dataset: Dataset, partial_plan: Sequence[str],
                     remaining_budget: float, remaining_time: float, *,
                     dep_graph: "DependencyGraph | None" = None) -> frozenset[str]:
    """Damaged items that can legally extend ``partial_plan`` right now.

    An item qualifies when it is not already planned, fits the remaining
    budget and time, and has all of its damaged blockers already planned.
    An empty result marks the end of an episode.
    """
    done = {dataset.resolve(p) for p in partial_plan}
    graph = dep_graph if dep_graph is not None else build_dependency_graph(dataset)
    actions = []
    for item_id in dataset.damaged_ids():
        if item_id in done:
            continue
        item = dataset.items[item_id]
        if item.effective_cost > remaining_budget or item.effective_time > remaining_time:
            continue
        if not graph.blockers_of(item_id) <= done:
            continue
        actions.append(item_id)
    return frozenset(actions)
