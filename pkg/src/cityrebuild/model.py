"""City data model: reconstruction items, road topology, dependency derivation.

A :class:`Dataset` is one snapshot of a damaged city: buildings ("units"),
road segments connecting them, and directed "cannot rebuild A before B"
constraints. Road segments are reconstruction items in their own right,
addressed by the ``"<from>-<to>"`` key convention, so plans can interleave
road and building work. Datasets are immutable after load; every mutation
(:func:`apply_plan`) returns a fresh snapshot.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx

DAMAGED = 0
INTACT = 1

MAX_PRIORITY = 10
ROAD_DEFAULT_PRIORITY = 8  # same tier as public access points; roads gate access


class DatasetError(Exception):
    """Raised when a dataset file or in-memory dataset violates the schema.

    Carries every collected problem so callers can report all row/field
    locations at once instead of failing on the first.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class BuildingKind(Enum):
    HOSPITALS = "Hospitals"
    SCHOOLS = "Colleges/School"
    RESIDENTIAL = "Residential Area"
    PUBLIC_POINTS = "Public Points"
    RELIGIOUS = "Religious"
    PUBLIC_BUILDINGS = "Public Buildings"
    BUSINESS_CENTERS = "Business Centers"
    GYM_CENTERS = "Gym Centers"
    BANQUET_HALLS = "Banquet Halls"
    PRIVATE_BUILDINGS = "Private Buildings"
    MUSEUMS = "Museums"
    BARS_CINEMAS = "Bars/Cinemas"
    OTHER_PLACES = "Other Places"
    ROAD = "Road"


#: Political priority by building category (1 = lowest, 10 = highest).
KIND_PRIORITY: dict[BuildingKind, int] = {
    BuildingKind.HOSPITALS: 10,
    BuildingKind.SCHOOLS: 9,
    BuildingKind.RESIDENTIAL: 9,
    BuildingKind.PUBLIC_POINTS: 8,
    BuildingKind.RELIGIOUS: 8,
    BuildingKind.PUBLIC_BUILDINGS: 7,
    BuildingKind.BUSINESS_CENTERS: 6,
    BuildingKind.GYM_CENTERS: 5,
    BuildingKind.BANQUET_HALLS: 5,
    BuildingKind.PRIVATE_BUILDINGS: 4,
    BuildingKind.MUSEUMS: 3,
    BuildingKind.BARS_CINEMAS: 2,
    BuildingKind.OTHER_PLACES: 1,
    BuildingKind.ROAD: ROAD_DEFAULT_PRIORITY,
}

_KIND_ALIASES: dict[str, BuildingKind] = {}
for _k in BuildingKind:
    _KIND_ALIASES[_k.value.lower()] = _k
    _KIND_ALIASES[_k.name.lower()] = _k


def parse_kind(value: "str | BuildingKind") -> BuildingKind:
    """Parse a building category from its canonical name (case-insensitive)."""
    if isinstance(value, BuildingKind):
        return value
    try:
        return _KIND_ALIASES[str(value).strip().lower()]
    except KeyError:
        raise ValueError(f"unknown building kind {value!r}") from None


def derive_status(vulnerability: int) -> int:
    """Map a 0..5 vulnerability index to a status: 0..3 damaged, 4..5 intact."""
    v = int(vulnerability)
    if v != vulnerability or not 0 <= v <= 5:
        raise ValueError(f"vulnerability must be an integer in 0..5, got {vulnerability!r}")
    return DAMAGED if v <= 3 else INTACT


def priority_for_kind(kind: "str | BuildingKind") -> int:
    """Political priority assigned to a building category."""
    return KIND_PRIORITY[parse_kind(kind)]


@dataclass(frozen=True)
class Unit:
    """One reconstruction item: a building, or a road segment viewed as an item.

    ``cost``/``time`` are the as-assessed reconstruction cost and duration;
    for intact items the *effective* values used by planning are zero.
    """

    id: str
    kind: BuildingKind
    status: int
    cost: float
    time: float
    priority: int
    direct_benefit: int
    vulnerability: "int | None" = None

    @property
    def damaged(self) -> bool:
        return self.status == DAMAGED

    @property
    def effective_cost(self) -> float:
        return 0.0 if self.status == INTACT else float(self.cost)

    @property
    def effective_time(self) -> float:
        return 0.0 if self.status == INTACT else float(self.time)


@dataclass(frozen=True)
class RoadEdge:
    """Undirected road segment between two units, keyed ``"<start>-<end>"``."""

    start: str
    end: str
    status: int
    length: float
    cost: float = 0.0
    time: float = 0.0
    priority: int = ROAD_DEFAULT_PRIORITY
    direct_benefit: int = 0

    @property
    def key(self) -> str:
        return f"{self.start}-{self.end}"

    def as_unit(self) -> Unit:
        return Unit(
            id=self.key,
            kind=BuildingKind.ROAD,
            status=self.status,
            cost=self.cost,
            time=self.time,
            priority=self.priority,
            direct_benefit=self.direct_benefit,
        )


@dataclass(frozen=True)
class DependencyEdge:
    """Directed precedence constraint: ``blocked`` cannot precede ``blocker``."""

    blocked: str
    blocker: str


@dataclass(frozen=True, eq=False)
class Dataset:
    """Full city snapshot. Treat as immutable; identity-based equality.

    ``units`` holds buildings keyed by id; road segments are exposed as
    items through :attr:`items` under their ``"<from>-<to>"`` key (the
    reversed key is accepted as an alias when resolving ids).
    """

    units: Mapping[str, Unit]
    roads: tuple[RoadEdge, ...]
    dependencies: tuple[DependencyEdge, ...]
    cycle: int = 1

    def __post_init__(self) -> None:
        items = dict(self.units)
        aliases: dict[str, str] = {}
        for road in self.roads:
            items[road.key] = road.as_unit()
            aliases[f"{road.end}-{road.start}"] = road.key
        object.__setattr__(self, "_items", items)
        object.__setattr__(self, "_aliases", aliases)
        object.__setattr__(self, "_roads_by_key", {r.key: r for r in self.roads})

    @property
    def items(self) -> Mapping[str, Unit]:
        """All reconstruction items (buildings plus road items) by id."""
        return self._items  # type: ignore[attr-defined]

    def resolve(self, item_id: str) -> str:
        """Canonical item id for ``item_id`` (accepts reversed road keys)."""
        if item_id in self._items:  # type: ignore[attr-defined]
            return item_id
        alias = self._aliases.get(item_id)  # type: ignore[attr-defined]
        if alias is not None:
            return alias
        raise KeyError(f"unknown reconstruction item {item_id!r}")

    def item(self, item_id: str) -> Unit:
        return self.items[self.resolve(item_id)]

    def road(self, key: str) -> RoadEdge:
        return self._roads_by_key[self.resolve(key)]  # type: ignore[attr-defined]

    def is_road(self, item_id: str) -> bool:
        return self.item(item_id).kind is BuildingKind.ROAD

    def damaged_ids(self) -> tuple[str, ...]:
        return tuple(sorted(i for i, u in self.items.items() if u.damaged))

    def intact_building_ids(self) -> tuple[str, ...]:
        return tuple(sorted(i for i, u in self.units.items() if not u.damaged))


def units_graph(dataset: Dataset, intact_only: bool = False) -> nx.Graph:
    """Undirected units graph: nodes are buildings, edges are roads.

    Edge attributes: ``length`` (weight), ``key`` (road item id), ``status``.
    """
    g = nx.Graph()
    g.add_nodes_from(dataset.units)
    for road in dataset.roads:
        if intact_only and road.status == DAMAGED:
            continue
        g.add_edge(road.start, road.end, length=road.length, key=road.key, status=road.status)
    return g


class DependencyGraph:
    """Directed precedence graph over reconstruction items (acyclic)."""

    def __init__(self, edges: Iterable[DependencyEdge]):
        self.edges: tuple[DependencyEdge, ...] = tuple(edges)
        blockers: dict[str, set[str]] = {}
        for e in self.edges:
            blockers.setdefault(e.blocked, set()).add(e.blocker)
        self._direct = {k: frozenset(v) for k, v in blockers.items()}
        self._transitive: dict[str, frozenset[str]] = {}

    def blockers_of(self, item_id: str) -> frozenset[str]:
        return self._direct.get(item_id, frozenset())

    def transitive_blockers_of(self, item_id: str) -> frozenset[str]:
        cached = self._transitive.get(item_id)
        if cached is not None:
            return cached
        seen: set[str] = set()
        stack = list(self._direct.get(item_id, ()))
        while stack:
            b = stack.pop()
            if b in seen:
                continue
            seen.add(b)
            stack.extend(self._direct.get(b, ()))
        result = frozenset(seen)
        self._transitive[item_id] = result
        return result

    def involves(self, item_id: str) -> bool:
        return item_id in self._direct or any(e.blocker == item_id for e in self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)


def _component_rank(component: set[str], dataset: Dataset) -> tuple[int, int, str]:
    intact = sum(1 for n in component if not dataset.units[n].damaged)
    # Deterministic anchor choice: most intact units, then largest, then the
    # component containing the smallest id.
    return (-intact, -len(component), min(component))


def _derived_dependencies(dataset: Dataset) -> list[DependencyEdge]:
    """Access-cut dependencies: a damaged item x depends on damaged item r when
    removing r alone (everything else hypothetically repaired) separates x from
    the anchor region holding the bulk of the intact city."""
    full = units_graph(dataset)
    damaged_units = [i for i, u in dataset.units.items() if u.damaged]
    damaged_roads = [r for r in dataset.roads if r.status == DAMAGED]
    blockers: list[tuple[str, RoadEdge | None]] = [(u, None) for u in damaged_units]
    blockers += [(r.key, r) for r in damaged_roads]

    edges: list[DependencyEdge] = []
    for blocker_id, road in sorted(blockers, key=lambda p: p[0]):
        g = full.copy()
        if road is None:
            g.remove_node(blocker_id)
        else:
            g.remove_edge(road.start, road.end)
        components = [set(c) for c in nx.connected_components(g)]
        if len(components) <= 1:
            continue
        components.sort(key=lambda c: _component_rank(c, dataset))
        anchor = components[0]
        for unit_id in damaged_units:
            if unit_id != blocker_id and unit_id in g and unit_id not in anchor:
                edges.append(DependencyEdge(blocked=unit_id, blocker=blocker_id))
        for other in damaged_roads:
            if other.key == blocker_id:
                continue
            reachable_ends = {e for e in (other.start, other.end) if e in anchor}
            if not reachable_ends:
                edges.append(DependencyEdge(blocked=other.key, blocker=blocker_id))
    return edges


def build_dependency_graph(dataset: Dataset) -> DependencyGraph:
    """Declared dependencies (between still-damaged items) plus derived
    access-cut dependencies. The result is guaranteed acyclic: a derived edge
    that would close a cycle against earlier edges is dropped."""
    dag = nx.DiGraph()
    edges: list[DependencyEdge] = []

    for dep in dataset.dependencies:
        blocked = dataset.resolve(dep.blocked)
        blocker = dataset.resolve(dep.blocker)
        if not (dataset.items[blocked].damaged and dataset.items[blocker].damaged):
            continue  # constraints on repaired items are void
        if (blocked, blocker) in dag.edges:
            continue
        dag.add_edge(blocked, blocker)
        edges.append(DependencyEdge(blocked, blocker))

    for dep in sorted(_derived_dependencies(dataset), key=lambda e: (e.blocked, e.blocker)):
        if (dep.blocked, dep.blocker) in dag.edges or dep.blocked == dep.blocker:
            continue
        if dag.has_node(dep.blocker) and dag.has_node(dep.blocked) and nx.has_path(
            dag, dep.blocker, dep.blocked
        ):
            continue  # would invert a declared/derived precedence
        dag.add_edge(dep.blocked, dep.blocker)
        edges.append(dep)

    return DependencyGraph(edges)


def apply_plan(dataset: Dataset, plan: Sequence[str]) -> Dataset:
    """Snapshot with every plan item marked rebuilt and the cycle advanced."""
    resolved = [dataset.resolve(p) for p in plan]
    chosen = set(resolved)
    units = {
        uid: (replace(u, status=INTACT) if uid in chosen else u)
        for uid, u in dataset.units.items()
    }
    roads = tuple(
        replace(r, status=INTACT) if r.key in chosen else r for r in dataset.roads
    )
    return Dataset(units=units, roads=roads, dependencies=dataset.dependencies,
                   cycle=dataset.cycle + 1)


# ---------------------------------------------------------------------------
# Ingestion / persistence
# ---------------------------------------------------------------------------

_UNIT_FIELDS = ("id", "kind", "vulnerability", "status", "cost", "time", "priority",
                "direct_benefit")
_ROAD_FIELDS = ("from", "to", "status", "length", "cost", "time", "priority",
                "direct_benefit")
_DEP_FIELDS = ("blocked", "blocker")


class _RowErrors:
    def __init__(self) -> None:
        self.messages: list[str] = []

    def add(self, where: str, message: str) -> None:
        self.messages.append(f"{where}: {message}")

    def raise_if_any(self) -> None:
        if self.messages:
            raise DatasetError(self.messages)


def _get_number(row: Mapping, name: str, where: str, errs: _RowErrors,
                default: "float | None" = None, minimum: "float | None" = None) -> float:
    raw = row.get(name)
    if raw is None or raw == "":
        if default is None:
            errs.add(where, f"missing required field '{name}'")
            return 0.0
        return default
    try:
        value = float(raw)
    except (TypeError, ValueError):
        errs.add(where, f"field '{name}' is not a number: {raw!r}")
        return 0.0
    if minimum is not None and value < minimum:
        errs.add(where, f"field '{name}' must be >= {minimum}, got {value}")
    return value


def _get_int(row: Mapping, name: str, where: str, errs: _RowErrors,
             default: "int | None" = None, lo: "int | None" = None,
             hi: "int | None" = None) -> "int | None":
    raw = row.get(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(float(raw))
        if value != float(raw):
            raise ValueError
    except (TypeError, ValueError):
        errs.add(where, f"field '{name}' is not an integer: {raw!r}")
        return default
    if lo is not None and hi is not None and not lo <= value <= hi:
        errs.add(where, f"field '{name}' must be in {lo}..{hi}, got {value}")
        return default
    return value


def _build_unit(row: Mapping, where: str, errs: _RowErrors) -> "Unit | None":
    uid = str(row.get("id") or "").strip()
    if not uid:
        errs.add(where, "missing unit id")
        return None
    try:
        kind = parse_kind(row.get("kind", ""))
    except ValueError as exc:
        errs.add(where, str(exc))
        return None
    vulnerability = _get_int(row, "vulnerability", where, errs, lo=0, hi=5)
    status = _get_int(row, "status", where, errs, lo=0, hi=1)
    if status is None:
        if vulnerability is None:
            errs.add(where, "needs 'status' or 'vulnerability' to derive it")
            return None
        status = derive_status(vulnerability)
    priority = _get_int(row, "priority", where, errs, lo=1, hi=MAX_PRIORITY)
    if priority is None:
        priority = priority_for_kind(kind)
    cost = _get_number(row, "cost", where, errs, minimum=0.0)
    time = _get_number(row, "time", where, errs, minimum=0.0)
    benefit = _get_int(row, "direct_benefit", where, errs, lo=0, hi=None)
    if benefit is None:
        errs.add(where, "missing required field 'direct_benefit'")
        return None
    if benefit < 0:
        errs.add(where, f"field 'direct_benefit' must be >= 0, got {benefit}")
        return None
    return Unit(id=uid, kind=kind, status=status, cost=cost, time=time,
                priority=priority, direct_benefit=benefit, vulnerability=vulnerability)


def _build_road(row: Mapping, where: str, errs: _RowErrors) -> "RoadEdge | None":
    start = str(row.get("from") or "").strip()
    end = str(row.get("to") or "").strip()
    if not start or not end:
        errs.add(where, "road needs both 'from' and 'to'")
        return None
    if start == end:
        errs.add(where, f"road endpoints must be distinct, got {start!r} twice")
        return None
    status = _get_int(row, "status", where, errs, lo=0, hi=1)
    if status is None:
        errs.add(where, "missing required field 'status'")
        return None
    length = _get_number(row, "length", where, errs)
    if length <= 0:
        errs.add(where, f"field 'length' must be > 0, got {length}")
        return None
    cost = _get_number(row, "cost", where, errs, default=0.0, minimum=0.0)
    time = _get_number(row, "time", where, errs, default=0.0, minimum=0.0)
    priority = _get_int(row, "priority", where, errs, default=ROAD_DEFAULT_PRIORITY,
                        lo=1, hi=MAX_PRIORITY)
    benefit = _get_int(row, "direct_benefit", where, errs, default=0)
    return RoadEdge(start=start, end=end, status=status, length=length, cost=cost,
                    time=time, priority=priority or ROAD_DEFAULT_PRIORITY,
                    direct_benefit=benefit or 0)


def make_dataset(units: Iterable[Unit], roads: Iterable[RoadEdge],
                 dependencies: Iterable[DependencyEdge], cycle: int = 1,
                 locations: "Mapping[str, str] | None" = None) -> Dataset:
    """Validate referential integrity and assemble a Dataset.

    ``locations`` optionally maps unit/road/dependency identity to the source
    row label used in error messages.
    """
    errs = _RowErrors()
    locations = locations or {}

    unit_map: dict[str, Unit] = {}
    for unit in units:
        where = locations.get(f"unit:{unit.id}", f"units[{unit.id}]")
        if unit.id in unit_map:
            errs.add(where, f"duplicate unit id {unit.id!r}")
            continue
        unit_map[unit.id] = unit

    road_list: list[RoadEdge] = []
    seen_pairs: dict[frozenset, str] = {}
    for i, road in enumerate(roads):
        where = locations.get(f"road:{i}", f"roads[{i}]")
        ok = True
        for endpoint in (road.start, road.end):
            if endpoint not in unit_map:
                errs.add(where, f"endpoint {endpoint!r} does not match any unit id")
                ok = False
        pair = frozenset((road.start, road.end))
        if pair in seen_pairs:
            errs.add(where, f"duplicate road between {road.start!r} and {road.end!r}")
            ok = False
        else:
            seen_pairs[pair] = road.key
        if road.key in unit_map:
            errs.add(where, f"road key {road.key!r} collides with a unit id")
            ok = False
        if ok:
            road_list.append(road)

    known = set(unit_map) | {r.key for r in road_list}
    aliases = {f"{r.end}-{r.start}": r.key for r in road_list}

    def resolve(raw: str) -> "str | None":
        if raw in known:
            return raw
        return aliases.get(raw)

    dep_list: list[DependencyEdge] = []
    dep_graph = nx.DiGraph()
    for i, dep in enumerate(dependencies):
        where = locations.get(f"dep:{i}", f"dependencies[{i}]")
        blocked = resolve(dep.blocked)
        blocker = resolve(dep.blocker)
        if blocked is None:
            errs.add(where, f"blocked item {dep.blocked!r} does not exist")
            continue
        if blocker is None:
            errs.add(where, f"blocker item {dep.blocker!r} does not exist")
            continue
        if blocked == blocker:
            errs.add(where, f"self-dependency on {blocked!r}")
            continue
        dep_list.append(DependencyEdge(blocked, blocker))
        dep_graph.add_edge(blocked, blocker)

    try:
        cycle_path = nx.find_cycle(dep_graph)
    except nx.NetworkXNoCycle:
        cycle_path = None
    if cycle_path:
        chain = " -> ".join(e[0] for e in cycle_path) + f" -> {cycle_path[-1][1]}"
        errs.add("dependencies", f"declared dependency cycle: {chain}")

    if int(cycle) < 1:
        errs.add("dataset", f"cycle must be >= 1, got {cycle}")

    errs.raise_if_any()
    return Dataset(units=unit_map, roads=tuple(road_list),
                   dependencies=tuple(dep_list), cycle=int(cycle))


def from_document(doc: Mapping, source: str = "dataset") -> Dataset:
    """Build a Dataset from the single-document (JSON) form."""
    errs = _RowErrors()
    if not isinstance(doc, Mapping):
        raise DatasetError([f"{source}: expected an object with units/roads/dependencies"])
    units, roads, deps = [], [], []
    locations: dict[str, str] = {}
    for i, row in enumerate(doc.get("units", []) or []):
        where = f"{source}:units[{i}]"
        unit = _build_unit(row, where, errs)
        if unit:
            units.append(unit)
            locations[f"unit:{unit.id}"] = where
    for i, row in enumerate(doc.get("roads", []) or []):
        where = f"{source}:roads[{i}]"
        road = _build_road(row, where, errs)
        if road:
            locations[f"road:{len(roads)}"] = where
            roads.append(road)
    for i, row in enumerate(doc.get("dependencies", []) or []):
        where = f"{source}:dependencies[{i}]"
        blocked = str(row.get("blocked") or "").strip()
        blocker = str(row.get("blocker") or "").strip()
        if not blocked or not blocker:
            errs.add(where, "dependency needs both 'blocked' and 'blocker'")
            continue
        locations[f"dep:{len(deps)}"] = where
        deps.append(DependencyEdge(blocked, blocker))
    cycle = doc.get("cycle", 1)
    errs.raise_if_any()
    try:
        return make_dataset(units, roads, deps, cycle=cycle, locations=locations)
    except DatasetError:
        raise
    except (TypeError, ValueError) as exc:
        raise DatasetError([f"{source}: {exc}"]) from exc


def to_document(dataset: Dataset) -> dict:
    """Canonical single-document form (inverse of :func:`from_document`)."""
    units = []
    for uid in sorted(dataset.units):
        u = dataset.units[uid]
        units.append({
            "id": u.id, "kind": u.kind.value, "vulnerability": u.vulnerability,
            "status": u.status, "cost": u.cost, "time": u.time,
            "priority": u.priority, "direct_benefit": u.direct_benefit,
        })
    roads = [{
        "from": r.start, "to": r.end, "status": r.status, "length": r.length,
        "cost": r.cost, "time": r.time, "priority": r.priority,
        "direct_benefit": r.direct_benefit,
    } for r in dataset.roads]
    deps = [{"blocked": d.blocked, "blocker": d.blocker} for d in dataset.dependencies]
    return {"cycle": dataset.cycle, "units": units, "roads": roads, "dependencies": deps}


def _read_csv_rows(path: Path) -> list[tuple[str, dict]]:
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for i, row in enumerate(reader):
            clean = {(k or "").strip(): (v.strip() if isinstance(v, str) else v)
                     for k, v in row.items()}
            rows.append((f"{path.name}:{i + 2}", clean))  # +2: header is line 1
    return rows


def _load_csv_tables(units_path: Path, roads_path: Path,
                     deps_path: "Path | None", cycle: int = 1) -> Dataset:
    errs = _RowErrors()
    units, roads, deps = [], [], []
    locations: dict[str, str] = {}
    for where, row in _read_csv_rows(units_path):
        unit = _build_unit(row, where, errs)
        if unit:
            units.append(unit)
            locations[f"unit:{unit.id}"] = where
    if roads_path.exists():
        for where, row in _read_csv_rows(roads_path):
            road = _build_road(row, where, errs)
            if road:
                locations[f"road:{len(roads)}"] = where
                roads.append(road)
    if deps_path is not None and deps_path.exists():
        for where, row in _read_csv_rows(deps_path):
            blocked, blocker = str(row.get("blocked", "")), str(row.get("blocker", ""))
            if not blocked or not blocker:
                errs.add(where, "dependency needs both 'blocked' and 'blocker'")
                continue
            locations[f"dep:{len(deps)}"] = where
            deps.append(DependencyEdge(blocked, blocker))
    errs.raise_if_any()
    return make_dataset(units, roads, deps, cycle=cycle, locations=locations)


def load_dataset(source: "str | Path") -> Dataset:
    """Load a dataset from a JSON document (``.json``/``.dataset``), a directory
    holding ``units.csv``/``roads.csv``[/``dependencies.csv``], or a units CSV
    whose sibling tables follow that naming convention."""
    path = Path(source)
    if not path.exists():
        raise DatasetError([f"{path}: no such file or directory"])
    if path.is_dir():
        units = path / "units.csv"
        if not units.exists():
            raise DatasetError([f"{path}: directory has no units.csv"])
        return _load_csv_tables(units, path / "roads.csv", path / "dependencies.csv")
    if path.suffix.lower() in (".json", ".dataset"):
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DatasetError([f"{path.name}: invalid JSON ({exc})"]) from exc
        return from_document(doc, source=path.name)
    if path.suffix.lower() == ".csv":
        return _load_csv_tables(path, path.parent / "roads.csv",
                                path.parent / "dependencies.csv")
    raise DatasetError([f"{path}: unsupported format (expected .json/.dataset/.csv or dir)"])


def save_dataset(dataset: Dataset, path: "str | Path") -> Path:
    """Write the canonical JSON document form."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_document(dataset), indent=2) + "\n")
    return path


def save_dataset_csv(dataset: Dataset, directory: "str | Path") -> list[Path]:
    """Write the three-table CSV form into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = to_document(dataset)
    written = []
    for name, fields, rows in (
        ("units.csv", _UNIT_FIELDS, doc["units"]),
        ("roads.csv", _ROAD_FIELDS, doc["roads"]),
        ("dependencies.csv", _DEP_FIELDS, doc["dependencies"]),
    ):
        out = directory / name
        with out.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
        written.append(out)
    return written


def snapshot_name(cycle: int) -> str:
    return f"cycle-{cycle}.dataset"
