"""Social-benefit metrics: road distances, per-item benefit, plan objective.

The benefit of rebuilding an item mixes its direct user population with the
distance-discounted population of intact neighbours. A plan's total benefit
weights each item's benefit by the time left between its (sequential)
completion and the planning horizon, so early high-benefit work dominates.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from typing import Mapping, Sequence

import networkx as nx
import numpy as np

from .model import Dataset, units_graph

NEIGHBORHOOD_MODES = ("one_level", "fixpoint")
INTACT_MODES = ("frozen", "incremental")


@dataclass(frozen=True)
class ObjectiveWeights:
    """Mix between direct benefit (alpha) and neighbourhood benefit (beta)."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError(f"weights must lie in [0,1], got {self.alpha}, {self.beta}")
        if abs(self.alpha + self.beta - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {self.alpha + self.beta}")


DEFAULT_WEIGHTS = ObjectiveWeights(alpha=0.5, beta=0.5)


@dataclass(frozen=True)
class PlanEvaluation:
    """Evaluated totals for an ordered plan."""

    social_benefit: float
    mean_priority: float
    total_cost: float
    total_duration: float
    completion_times: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "social_benefit": self.social_benefit,
            "mean_priority": self.mean_priority,
            "total_cost": self.total_cost,
            "total_duration": self.total_duration,
            "completion_times": list(self.completion_times),
        }


_distance_cache: "weakref.WeakKeyDictionary[Dataset, dict]" = weakref.WeakKeyDictionary()


def shortest_distances(dataset: Dataset) -> Mapping[str, Mapping[str, float]]:
    """All-pairs shortest road distances, computed once per dataset snapshot.

    Distances use the full road topology (damage does not change geometry).
    Missing entries mean the pair is unreachable.
    """
    cached = _distance_cache.get(dataset)
    if cached is None:
        g = units_graph(dataset)
        cached = {src: dict(lengths) for src, lengths in
                  nx.all_pairs_dijkstra_path_length(g, weight="length")}
        _distance_cache[dataset] = cached
    return cached


def distance(dataset: Dataset, v1: str, v2: str) -> float:
    """Shortest road distance between two units; ``inf`` when disconnected."""
    for v in (v1, v2):
        if v not in dataset.units:
            raise KeyError(f"unknown unit {v!r}")
    if v1 == v2:
        return 0.0
    return shortest_distances(dataset).get(v1, {}).get(v2, math.inf)


def _fixpoint_values(dataset: Dataset, weights: ObjectiveWeights,
                     intact: Sequence[str]) -> dict[str, float]:
    """Solve the self-consistent benefit values over the intact units.

    Experimental alternative to the default one-level neighbourhood sum:
    every intact unit's value includes its neighbours' solved values.
    """
    ids = list(intact)
    n = len(ids)
    if n == 0:
        return {}
    dmap = shortest_distances(dataset)
    m = np.zeros((n, n))
    b = np.array([dataset.units[u].direct_benefit for u in ids], dtype=float)
    for i, u in enumerate(ids):
        row = dmap.get(u, {})
        for j, w in enumerate(ids):
            if i == j:
                continue
            d = row.get(w)
            if d:
                m[i, j] = 1.0 / d
    system = np.eye(n) - weights.beta * m
    values = np.linalg.solve(system, weights.alpha * b)
    return dict(zip(ids, values))


def unit_benefit(dataset: Dataset, item_id: str,
                 weights: ObjectiveWeights = DEFAULT_WEIGHTS, *,
                 neighborhood: str = "one_level",
                 extra_intact: frozenset = frozenset()) -> float:
    """Benefit emitted by one reconstruction item.

    Intact items contribute their direct user population. A damaged building
    combines its own population with the distance-discounted population of
    reachable intact buildings; a damaged road item carries only its direct
    term (its indirect value shows up by unblocking whatever it gives access
    to). ``extra_intact`` marks items to treat as already rebuilt.
    """
    if neighborhood not in NEIGHBORHOOD_MODES:
        raise ValueError(f"neighborhood must be one of {NEIGHBORHOOD_MODES}")
    item_id = dataset.resolve(item_id)
    item = dataset.items[item_id]
    if not item.damaged or item_id in extra_intact:
        return float(item.direct_benefit)
    direct = weights.alpha * item.direct_benefit
    if dataset.is_road(item_id):
        return direct
    intact = [u for u, unit in dataset.units.items()
              if u != item_id and (not unit.damaged or u in extra_intact)]
    if not intact or weights.beta == 0.0:
        return direct
    row = shortest_distances(dataset).get(item_id, {})
    if neighborhood == "fixpoint":
        values = _fixpoint_values(dataset, weights, sorted(intact))
        total = sum(values[u] / row[u] for u in intact if row.get(u))
    else:
        total = sum(dataset.units[u].direct_benefit / row[u]
                    for u in intact if row.get(u))
    return direct + weights.beta * total


def mean_priority(dataset: Dataset, plan: Sequence[str]) -> float:
    """Arithmetic mean of political priority over all plan items."""
    if not plan:
        raise ValueError("mean_priority of an empty plan is undefined")
    resolved = [dataset.resolve(p) for p in plan]
    return sum(dataset.items[p].priority for p in resolved) / len(resolved)


def plan_benefit(dataset: Dataset, plan: Sequence[str], horizon: float,
                 weights: ObjectiveWeights = DEFAULT_WEIGHTS, *,
                 intact_mode: str = "frozen",
                 neighborhood: str = "one_level") -> PlanEvaluation:
    """Evaluate an ordered plan against the horizon.

    Items complete sequentially; each contributes its benefit times the time
    remaining after its completion, clamped at zero past the horizon. With
    ``intact_mode="frozen"`` benefits use the intact set as of plan start;
    ``"incremental"`` lets each completed item count as intact for later ones.
    """
    if intact_mode not in INTACT_MODES:
        raise ValueError(f"intact_mode must be one of {INTACT_MODES}")
    resolved = []
    for p in plan:
        try:
            resolved.append(dataset.resolve(p))
        except KeyError as exc:
            raise ValueError(str(exc)) from exc
    dupes = {p for p in resolved if resolved.count(p) > 1}
    if dupes:
        raise ValueError(f"plan contains duplicate items: {sorted(dupes)}")

    completed: set[str] = set()
    completion: list[float] = []
    elapsed = 0.0
    total_cost = 0.0
    benefit = 0.0
    for item_id in resolved:
        item = dataset.items[item_id]
        elapsed += item.effective_time
        total_cost += item.effective_cost
        completion.append(elapsed)
        extra = frozenset(completed) if intact_mode == "incremental" else frozenset()
        value = unit_benefit(dataset, item_id, weights,
                             neighborhood=neighborhood, extra_intact=extra)
        benefit += value * max(0.0, horizon - elapsed)
        completed.add(item_id)

    return PlanEvaluation(
        social_benefit=benefit,
        mean_priority=mean_priority(dataset, resolved) if resolved else 0.0,
        total_cost=total_cost,
        total_duration=elapsed,
        completion_times=tuple(completion),
    )
