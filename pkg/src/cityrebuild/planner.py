"""Multi-cycle planning: train, extract alternative plans, apply, repeat.

Each reconstruction cycle trains an agent on the current snapshot, extracts
up to ``k`` alternative feasible plans (greedy rollouts branched on the
best-ranked first moves), and leaves the choice of which plan to apply to a
human. Applying a plan rebuilds its items, advances the cycle counter, and
relaxes the priority threshold for the next round.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .agents import AgentConfig, EpisodeRecord, make_agent, rollout
from .constraints import Verdict, check_plan, feasible_actions, threshold_for_cycle
from .env import NothingToPlanError, RebuildEnv
from .metrics import (DEFAULT_WEIGHTS, ObjectiveWeights, PlanEvaluation,
                      plan_benefit)
from .model import (MAX_PRIORITY, BuildingKind, Dataset, DependencyEdge,
                    DependencyGraph, KIND_PRIORITY, RoadEdge, Unit, apply_plan,
                    build_dependency_graph, load_dataset, make_dataset,
                    save_dataset, snapshot_name, to_document)


class ConflictError(RuntimeError):
    """A plan was already applied, or the lineage advanced underneath us."""


@dataclass(frozen=True)
class Provenance:
    agent: str
    seed: int
    cycle: int


@dataclass(frozen=True)
class Plan:
    """A feasible ordered plan plus everything a decision-maker needs to judge it."""

    id: str
    items: tuple[str, ...]
    evaluation: PlanEvaluation
    verdict: Verdict
    parallel_sublists: tuple[tuple[str, ...], ...]
    provenance: Provenance

    def to_dict(self, dataset: "Dataset | None" = None) -> dict:
        doc = {
            "id": self.id,
            "items": list(self.items),
            "evaluation": self.evaluation.to_dict(),
            "verdict": self.verdict.to_dict(),
            "parallel_sublists": [list(g) for g in self.parallel_sublists],
            "provenance": {"agent": self.provenance.agent,
                           "seed": self.provenance.seed,
                           "cycle": self.provenance.cycle},
        }
        if dataset is not None:
            doc["parallel_makespan"] = parallel_makespan(dataset,
                                                         self.parallel_sublists)
            rows = []
            for item_id in self.items:
                item = dataset.items[item_id]
                rows.append({"id": item_id, "kind": item.kind.value,
                             "cost": item.cost, "time": item.time,
                             "priority": item.priority,
                             "direct_benefit": item.direct_benefit})
            doc["item_details"] = rows
        return doc


@dataclass
class PlanningResult:
    plans: list[Plan]
    history: list[EpisodeRecord]
    diagnostics: dict


@dataclass
class CycleRecord:
    cycle: int
    threshold: float
    candidates: list[str] = field(default_factory=list)
    selected: "str | None" = None
    before_snapshot: str = ""
    after_snapshot: "str | None" = None

    def to_dict(self) -> dict:
        return {"cycle": self.cycle, "threshold": self.threshold,
                "candidates": list(self.candidates), "selected": self.selected,
                "before_snapshot": self.before_snapshot,
                "after_snapshot": self.after_snapshot}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CycleRecord":
        return cls(cycle=int(doc["cycle"]), threshold=float(doc["threshold"]),
                   candidates=list(doc.get("candidates", [])),
                   selected=doc.get("selected"),
                   before_snapshot=doc.get("before_snapshot", ""),
                   after_snapshot=doc.get("after_snapshot"))


def cycle_threshold(cycle: int, max_priority: int = MAX_PRIORITY) -> float:
    """Per-cycle priority threshold; cycles past the table floor stay at it."""
    return threshold_for_cycle(min(cycle, max_priority), max_priority)


def parallel_sublists(plan: Sequence[str], dep_graph: DependencyGraph
                      ) -> tuple[tuple[str, ...], ...]:
    """Greedy left-to-right grouping of a plan into concurrent work packages.

    An item starts a new group only when it depends (directly or transitively)
    on something already placed in the current group; items untouched by any
    dependency always join the open group.
    """
    groups: list[tuple[str, ...]] = []
    current: list[str] = []
    for item in plan:
        needs = dep_graph.transitive_blockers_of(item)
        if current and any(member in needs for member in current):
            groups.append(tuple(current))
            current = [item]
        else:
            current.append(item)
    if current:
        groups.append(tuple(current))
    return tuple(groups)


def parallel_makespan(dataset: Dataset, groups: Sequence[Sequence[str]]) -> float:
    """Informational schedule length if each group's items ran concurrently:
    the sum over groups of the group's longest item. The plan objective keeps
    the sequential time model; this is reported alongside it."""
    total = 0.0
    for group in groups:
        total += max((dataset.items[dataset.resolve(i)].effective_time
                      for i in group), default=0.0)
    return total


def _best_feasible_prefix(dataset: Dataset, sequence: Sequence[str], budget: float,
                          horizon: float, threshold: float,
                          weights: ObjectiveWeights, intact_mode: str,
                          dep_graph: DependencyGraph
                          ) -> "tuple[tuple[str, ...], PlanEvaluation, Verdict] | None":
    """Highest-benefit feasible prefix of a rollout sequence.

    Rollouts satisfy budget, time, and precedence by construction, but the
    plan-level mean priority can fail on the full sequence; trimming the
    low-priority tail often recovers a feasible plan.
    """
    best = None
    for length in range(1, len(sequence) + 1):
        prefix = tuple(sequence[:length])
        verdict = check_plan(dataset, prefix, budget, horizon, threshold,
                             dep_graph=dep_graph)
        if not verdict.feasible:
            continue
        evaluation = plan_benefit(dataset, prefix, horizon, weights,
                                  intact_mode=intact_mode)
        if best is None or evaluation.social_benefit > best[1].social_benefit:
            best = (prefix, evaluation, verdict)
    return best


def _floor_rollout(env: RebuildEnv, agent, floor: float,
                   first_action: "str | None" = None) -> list[str]:
    """Greedy rollout restricted to items whose priority clears ``floor``,
    so every prefix meets the plan-level mean by construction."""

    def allowed() -> frozenset[str]:
        return frozenset(a for a in env.feasible()
                         if env.dataset.items[a].priority >= floor)

    state = env.reset()
    sequence: list[str] = []
    actions = allowed()
    if first_action is not None and first_action in actions:
        transition = env.step(first_action)
        sequence.append(transition.action)
        state = transition.next_state
        actions = allowed()
    while actions:
        action = agent.act(state, actions, explore=False)
        transition = env.step(action)
        sequence.append(transition.action)
        state = transition.next_state
        actions = allowed()
    return sequence


def train_and_plan(dataset: Dataset, budget: float, horizon: float,
                   config: "AgentConfig | None" = None, *,
                   alternatives: int = 2, agent_kind: str = "ddqn",
                   episodes: "int | None" = None,
                   weights: ObjectiveWeights = DEFAULT_WEIGHTS,
                   intact_mode: str = "frozen",
                   log_path: "str | Path | None" = None,
                   on_episode: "Callable[[EpisodeRecord], None] | None" = None
                   ) -> PlanningResult:
    """Train a policy on the snapshot and extract up to ``alternatives`` plans.

    Every returned plan is feasible under the snapshot's cycle threshold;
    plans come sorted by social benefit, best first. An empty plan list is
    not an error: ``diagnostics`` then reports which constraint binds.
    """
    if alternatives < 1:
        raise ValueError("alternatives must be >= 1")
    if not dataset.damaged_ids():
        raise NothingToPlanError("dataset has no damaged items")
    config = config or AgentConfig()
    env = RebuildEnv(dataset, budget, horizon, weights=weights,
                     intact_mode=intact_mode, seed=config.seed)
    agent = make_agent(agent_kind, env, config)
    history = agent.train(episodes=episodes, log_path=log_path,
                          on_episode=on_episode)
    threshold = cycle_threshold(dataset.cycle)

    start = env.reset()
    firsts = agent.rank_first_actions(start, env.feasible())[:alternatives]
    raw_sequences: list[list[str]] = []
    for first in firsts:
        sequence, _ = rollout(env, agent, explore=False, first_action=first)
        if sequence and sequence not in raw_sequences:
            raw_sequences.append(sequence)

    plans: list[Plan] = []
    seen: set[tuple[str, ...]] = set()
    rejected: list[Verdict] = []

    def collect(sequence: Sequence[str]) -> None:
        best = _best_feasible_prefix(dataset, sequence, budget, horizon, threshold,
                                     weights, intact_mode, env.dep_graph)
        if best is None:
            rejected.append(check_plan(dataset, sequence, budget, horizon,
                                       threshold, dep_graph=env.dep_graph))
            return
        items, evaluation, verdict = best
        if items in seen:
            return
        seen.add(items)
        plans.append(Plan(id="", items=items, evaluation=evaluation,
                          verdict=verdict,
                          parallel_sublists=parallel_sublists(items, env.dep_graph),
                          provenance=Provenance(agent.kind, config.seed,
                                                dataset.cycle)))

    for sequence in raw_sequences:
        collect(sequence)

    used_floor = False
    if not plans:
        # The trained policy chases benefit, which can starve the mean-priority
        # requirement on every prefix. Fall back to rollouts restricted to
        # items at or above the threshold, which meet it by construction.
        used_floor = True
        start = env.reset()
        eligible = frozenset(a for a in env.feasible()
                             if dataset.items[a].priority >= threshold)
        for first in agent.rank_first_actions(start, eligible)[:alternatives]:
            sequence = _floor_rollout(env, agent, threshold, first_action=first)
            if sequence:
                collect(sequence)

    plans.sort(key=lambda p: -p.evaluation.social_benefit)
    plans = plans[:alternatives]
    plans = [replace(p, id=f"c{dataset.cycle}p{i + 1}") for i, p in enumerate(plans)]

    diagnostics: dict = {"threshold": threshold, "rollouts": len(raw_sequences)}
    if used_floor and plans:
        diagnostics["extraction"] = "priority-floor fallback"
    if not plans:
        failures = {"cost": 0, "duration": 0, "priority": 0, "dependencies": 0}
        for verdict in rejected:
            for name in failures:
                part = getattr(verdict, name)
                if not part.passed:
                    failures[name] += 1
        diagnostics["binding_constraints"] = failures
        if not raw_sequences:
            cheapest = min((dataset.items[i].effective_cost
                            for i in dataset.damaged_ids()), default=0.0)
            diagnostics["note"] = (
                f"no feasible first action: cheapest damaged item costs {cheapest}, "
                f"budget is {budget}")
    return PlanningResult(plans=plans, history=history, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Synthetic instances
# ---------------------------------------------------------------------------

# Sampling weights lean residential, matching how city fabrics skew.
_KIND_WEIGHTS: dict[BuildingKind, float] = {
    BuildingKind.RESIDENTIAL: 0.40,
    BuildingKind.PRIVATE_BUILDINGS: 0.13,
    BuildingKind.BUSINESS_CENTERS: 0.08,
    BuildingKind.PUBLIC_POINTS: 0.07,
    BuildingKind.RELIGIOUS: 0.05,
    BuildingKind.PUBLIC_BUILDINGS: 0.06,
    BuildingKind.SCHOOLS: 0.06,
    BuildingKind.HOSPITALS: 0.03,
    BuildingKind.GYM_CENTERS: 0.03,
    BuildingKind.BANQUET_HALLS: 0.02,
    BuildingKind.MUSEUMS: 0.03,
    BuildingKind.BARS_CINEMAS: 0.02,
    BuildingKind.OTHER_PLACES: 0.02,
}

# Per-kind scale for sampled cost (budget units), time (months), benefit (people/day).
_KIND_SCALES: dict[BuildingKind, tuple[float, float, int]] = {
    BuildingKind.HOSPITALS: (50.0, 14.0, 90),
    BuildingKind.SCHOOLS: (35.0, 11.0, 60),
    BuildingKind.RESIDENTIAL: (20.0, 8.0, 25),
    BuildingKind.PUBLIC_POINTS: (15.0, 6.0, 30),
    BuildingKind.RELIGIOUS: (18.0, 7.0, 20),
    BuildingKind.PUBLIC_BUILDINGS: (25.0, 9.0, 35),
    BuildingKind.BUSINESS_CENTERS: (22.0, 8.0, 25),
    BuildingKind.GYM_CENTERS: (15.0, 6.0, 12),
    BuildingKind.BANQUET_HALLS: (12.0, 5.0, 10),
    BuildingKind.PRIVATE_BUILDINGS: (10.0, 5.0, 8),
    BuildingKind.MUSEUMS: (20.0, 8.0, 15),
    BuildingKind.BARS_CINEMAS: (8.0, 4.0, 8),
    BuildingKind.OTHER_PLACES: (5.0, 3.0, 4),
}


def generate_instance(units: int, damage_rate: float, dependency_rate: float,
                      seed: "int | None" = None, *,
                      road_damage_rate: "float | None" = None,
                      extra_road_factor: float = 0.3) -> Dataset:
    """Seeded synthetic city: a connected road network over sampled building
    kinds, an exact count of damaged buildings, and acyclic declared
    dependencies among the damaged items."""
    if units < 1:
        raise ValueError("units must be >= 1")
    for name, rate in (("damage_rate", damage_rate),
                       ("dependency_rate", dependency_rate)):
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"{name} must be in [0,1], got {rate}")
    if road_damage_rate is None:
        road_damage_rate = damage_rate
    if not 0.0 <= road_damage_rate <= 1.0:
        raise ValueError(f"road_damage_rate must be in [0,1], got {road_damage_rate}")

    rng = np.random.default_rng(seed)
    ids = [str(i + 1) for i in range(units)]
    kinds = list(_KIND_WEIGHTS)
    weights = np.array([_KIND_WEIGHTS[k] for k in kinds])
    weights = weights / weights.sum()

    n_damaged = int(round(units * damage_rate))
    damaged = set(rng.choice(units, size=n_damaged, replace=False).tolist())

    unit_rows: list[Unit] = []
    for i, uid in enumerate(ids):
        kind = kinds[int(rng.choice(len(kinds), p=weights))]
        cost_scale, time_scale, benefit_scale = _KIND_SCALES[kind]
        vulnerability = int(rng.integers(0, 4)) if i in damaged else int(rng.integers(4, 6))
        unit_rows.append(Unit(
            id=uid, kind=kind,
            status=0 if i in damaged else 1,
            cost=round(cost_scale * rng.uniform(0.7, 1.4), 1),
            time=round(time_scale * rng.uniform(0.8, 1.3), 1),
            priority=KIND_PRIORITY[kind],
            direct_benefit=int(round(benefit_scale * rng.uniform(0.6, 1.5))),
            vulnerability=vulnerability,
        ))

    road_rows: list[RoadEdge] = []
    pairs: set[frozenset] = set()

    def add_road(a: str, b: str) -> None:
        pair = frozenset((a, b))
        if a == b or pair in pairs:
            return
        pairs.add(pair)
        road_rows.append(RoadEdge(
            start=a, end=b, status=1,
            length=round(float(rng.uniform(0.5, 3.0)), 2),
            cost=round(float(rng.uniform(3.0, 10.0)), 1),
            time=round(float(rng.uniform(1.0, 4.0)), 1),
        ))

    order = [ids[i] for i in rng.permutation(units)]
    for i in range(1, units):
        add_road(order[i], order[int(rng.integers(0, i))])
    for _ in range(int(round(extra_road_factor * units))):
        a, b = rng.choice(units, size=2, replace=False)
        add_road(ids[int(a)], ids[int(b)])

    n_damaged_roads = int(round(len(road_rows) * road_damage_rate))
    if n_damaged_roads:
        chosen = rng.choice(len(road_rows), size=n_damaged_roads, replace=False)
        for idx in chosen:
            road_rows[idx] = replace(road_rows[idx], status=0)

    damaged_item_ids = sorted(
        [ids[i] for i in damaged] + [r.key for r in road_rows if r.status == 0])
    deps: list[DependencyEdge] = []
    n_deps = int(round(dependency_rate * len(damaged_item_ids)))
    if n_deps and len(damaged_item_ids) >= 2:
        topo = [damaged_item_ids[i] for i in rng.permutation(len(damaged_item_ids))]
        seen_pairs: set[tuple[str, str]] = set()
        for _ in range(n_deps):
            j = int(rng.integers(1, len(topo)))
            i = int(rng.integers(0, j))
            edge = (topo[j], topo[i])  # later item blocked by earlier: acyclic
            if edge not in seen_pairs:
                seen_pairs.add(edge)
                deps.append(DependencyEdge(blocked=edge[0], blocker=edge[1]))

    return make_dataset(unit_rows, road_rows, deps, cycle=1)


# ---------------------------------------------------------------------------
# Lineage: persisted cycle history for one dataset
# ---------------------------------------------------------------------------

class Lineage:
    """Append-only store for one reconstruction history: per-cycle dataset
    snapshots, candidate plans, and which plan each cycle applied."""

    MANIFEST = "manifest.json"

    def __init__(self, data_dir: "str | Path"):
        self.data_dir = Path(data_dir)
        self._lock = threading.Lock()
        self.records: list[CycleRecord] = []
        self._plans: dict[str, Plan] = {}
        manifest = self.data_dir / self.MANIFEST
        if manifest.exists():
            doc = json.loads(manifest.read_text())
            self.records = [CycleRecord.from_dict(r) for r in doc.get("cycles", [])]
            for plan_file in sorted((self.data_dir / "plans").glob("*.json")):
                self._plans[plan_file.stem] = _plan_from_dict(
                    json.loads(plan_file.read_text()))

    @property
    def initialized(self) -> bool:
        return bool(self.records)

    @classmethod
    def initialize(cls, data_dir: "str | Path", dataset: Dataset) -> "Lineage":
        lineage = cls(data_dir)
        if lineage.initialized:
            raise ConflictError(f"{data_dir} already holds a reconstruction history")
        lineage.data_dir.mkdir(parents=True, exist_ok=True)
        snapshot = snapshot_name(dataset.cycle)
        save_dataset(dataset, lineage.data_dir / snapshot)
        lineage.records = [CycleRecord(cycle=dataset.cycle,
                                       threshold=cycle_threshold(dataset.cycle),
                                       before_snapshot=snapshot)]
        lineage._write_manifest()
        return lineage

    def _write_manifest(self) -> None:
        doc = {"version": 1, "cycles": [r.to_dict() for r in self.records]}
        (self.data_dir / self.MANIFEST).write_text(json.dumps(doc, indent=2) + "\n")

    def _require_initialized(self) -> None:
        if not self.initialized:
            raise ConflictError(f"{self.data_dir} has no dataset; ingest or generate first")

    @property
    def current_record(self) -> CycleRecord:
        self._require_initialized()
        return self.records[-1]

    def dataset(self) -> Dataset:
        record = self.current_record
        return load_dataset(self.data_dir / record.before_snapshot)

    def cycle(self) -> int:
        return self.current_record.cycle

    def plan(self, plan_id: str) -> Plan:
        try:
            return self._plans[plan_id]
        except KeyError:
            raise KeyError(f"unknown plan {plan_id!r}") from None

    def candidates(self, cycle: "int | None" = None) -> list[Plan]:
        self._require_initialized()
        if cycle is None:
            cycle = self.records[-1].cycle
        for record in self.records:
            if record.cycle == cycle:
                return [self._plans[p] for p in record.candidates]
        return []

    def register_plans(self, plans: Sequence[Plan], dataset: "Dataset | None" = None
                       ) -> list[Plan]:
        """Persist candidate plans against the current cycle, reassigning ids
        to stay unique within the lineage."""
        with self._lock:
            record = self.current_record
            if dataset is not None and dataset.cycle != record.cycle:
                raise ConflictError(
                    f"plans were computed for cycle {dataset.cycle}, "
                    f"but the lineage is at cycle {record.cycle}")
            stored: list[Plan] = []
            plans_dir = self.data_dir / "plans"
            plans_dir.mkdir(exist_ok=True)
            data = dataset if dataset is not None else self.dataset()
            for plan in plans:
                plan_id = f"c{record.cycle}p{len(record.candidates) + 1}"
                final = replace(plan, id=plan_id)
                record.candidates.append(plan_id)
                self._plans[plan_id] = final
                (plans_dir / f"{plan_id}.json").write_text(
                    json.dumps(final.to_dict(data), indent=2) + "\n")
                stored.append(final)
            self._write_manifest()
            return stored

    def apply(self, plan_id: str) -> Dataset:
        """Apply one candidate of the current cycle and advance the lineage."""
        with self._lock:
            record = self.current_record
            plan = self.plan(plan_id)  # KeyError for unknown ids
            for past in self.records:
                if past.selected == plan_id:
                    raise ConflictError(f"plan {plan_id!r} was already applied")
            if plan_id not in record.candidates:
                raise ConflictError(
                    f"plan {plan_id!r} belongs to cycle {plan.provenance.cycle}, "
                    f"not the current cycle {record.cycle}")
            dataset = self.dataset()
            updated = apply_plan(dataset, plan.items)
            snapshot = snapshot_name(updated.cycle)
            save_dataset(updated, self.data_dir / snapshot)
            record.selected = plan_id
            record.after_snapshot = snapshot
            self.records.append(CycleRecord(cycle=updated.cycle,
                                            threshold=cycle_threshold(updated.cycle),
                                            before_snapshot=snapshot))
            self._write_manifest()
            return updated


def _plan_from_dict(doc: Mapping) -> Plan:
    from .constraints import ConstraintResult, DependencyResult

    ev = doc["evaluation"]
    vd = doc["verdict"]
    verdict = Verdict(
        feasible=bool(vd["feasible"]),
        cost=ConstraintResult(vd["cost"]["passed"], vd["cost"]["slack"]),
        duration=ConstraintResult(vd["duration"]["passed"], vd["duration"]["slack"]),
        priority=ConstraintResult(vd["priority"]["passed"], vd["priority"]["margin"]),
        dependencies=DependencyResult(
            vd["dependencies"]["passed"],
            tuple((v[0], v[1]) for v in vd["dependencies"]["violations"])),
    )
    evaluation = PlanEvaluation(
        social_benefit=float(ev["social_benefit"]),
        mean_priority=float(ev["mean_priority"]),
        total_cost=float(ev["total_cost"]),
        total_duration=float(ev["total_duration"]),
        completion_times=tuple(float(t) for t in ev["completion_times"]),
    )
    prov = doc["provenance"]
    return Plan(id=doc["id"], items=tuple(doc["items"]), evaluation=evaluation,
                verdict=verdict,
                parallel_sublists=tuple(tuple(g) for g in doc["parallel_sublists"]),
                provenance=Provenance(prov["agent"], int(prov["seed"]),
                                      int(prov["cycle"])))
