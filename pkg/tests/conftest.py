from __future__ import annotations

import itertools
from pathlib import Path

import pytest

from cityrebuild import (AgentConfig, check_plan, load_dataset, plan_benefit,
                         train_and_plan)
from cityrebuild.metrics import DEFAULT_WEIGHTS

DATA = Path(__file__).parent / "data"

SIX_UNIT_BUDGET = 100.0
SIX_UNIT_HORIZON = 48.0
TWENTY_UNIT_SEED = 11
TWENTY_UNIT_HORIZON = 60.0


@pytest.fixture(scope="session")
def benefit_triple():
    return load_dataset(DATA / "benefit_triple.json")


@pytest.fixture(scope="session")
def bridge_access():
    return load_dataset(DATA / "bridge_access.json")


@pytest.fixture(scope="session")
def banked_road():
    return load_dataset(DATA / "banked_road.json")


@pytest.fixture(scope="session")
def six_unit():
    return load_dataset(DATA / "six_unit.json")


@pytest.fixture(scope="session")
def parallel_city():
    return load_dataset(DATA / "parallel_city.json")


@pytest.fixture(scope="session")
def tiered_city():
    return load_dataset(DATA / "tiered_city.json")


def enumerate_feasible_plans(dataset, budget, horizon, threshold):
    """Exhaustive oracle: every ordering of every damaged-item subset, kept
    when check_plan accepts it. Only usable on tiny instances."""
    damaged = dataset.damaged_ids()
    plans = []
    for size in range(1, len(damaged) + 1):
        for subset in itertools.combinations(damaged, size):
            for order in itertools.permutations(subset):
                verdict = check_plan(dataset, order, budget, horizon, threshold)
                if verdict.feasible:
                    plans.append(order)
    return plans


@pytest.fixture(scope="session")
def six_unit_optimum(six_unit):
    """Best social benefit over all feasible orderings of the bundled instance."""
    best = 0.0
    best_plan = ()
    for order in enumerate_feasible_plans(six_unit, SIX_UNIT_BUDGET,
                                          SIX_UNIT_HORIZON, 8.0):
        value = plan_benefit(six_unit, order, SIX_UNIT_HORIZON,
                             DEFAULT_WEIGHTS).social_benefit
        if value > best:
            best, best_plan = value, order
    return best, best_plan


@pytest.fixture(scope="session")
def six_unit_training_runs(six_unit):
    """Five seeded training runs on the bundled 6-unit instance, shared by the
    optimality-gap criterion and the trained-beats-random property."""
    runs = []
    for seed in (1, 2, 3, 4, 5):
        result = train_and_plan(six_unit, SIX_UNIT_BUDGET, SIX_UNIT_HORIZON,
                                AgentConfig(seed=seed), alternatives=2,
                                agent_kind="ddqn", episodes=2000)
        runs.append((seed, result))
    return runs


@pytest.fixture(scope="session")
def twenty_unit():
    from cityrebuild import generate_instance

    return generate_instance(20, 0.5, 0.25, seed=TWENTY_UNIT_SEED)


@pytest.fixture(scope="session")
def twenty_unit_budget(twenty_unit):
    total = sum(twenty_unit.items[i].effective_cost
                for i in twenty_unit.damaged_ids())
    return round(0.5 * total)


@pytest.fixture(scope="session")
def bench_twenty(twenty_unit, twenty_unit_budget):
    """DDQN-vs-random benchmark on the seeded 20-unit instance (3 seeds,
    2000 episodes), shared by the ordering criterion and the curve checks."""
    from cityrebuild import compare_algorithms

    return compare_algorithms(twenty_unit, twenty_unit_budget, TWENTY_UNIT_HORIZON,
                              episodes=2000, seeds=(1, 2, 3),
                              algorithms=("ddqn", "random"))


TIERED_BUDGET = 102.0
TIERED_HORIZON = 60.0


@pytest.fixture(scope="session")
def tiered_cycle_run(tiered_city, tmp_path_factory):
    """Full multi-cycle loop on the tiered instance: train, register, apply
    the best plan, until nothing is damaged. Shared by the cycle-threshold
    criterion and the termination property."""
    from cityrebuild import Lineage

    data_dir = tmp_path_factory.mktemp("tiered-lineage")
    lineage = Lineage.initialize(data_dir, tiered_city)
    applied = []
    for _ in range(10):
        dataset = lineage.dataset()
        if not dataset.damaged_ids():
            break
        result = train_and_plan(dataset, TIERED_BUDGET, TIERED_HORIZON,
                                AgentConfig(seed=3), alternatives=3,
                                agent_kind="ddqn", episodes=400)
        assert result.plans, (
            f"no feasible plan at cycle {dataset.cycle}: {result.diagnostics}")
        stored = lineage.register_plans(result.plans, dataset=dataset)
        lineage.apply(stored[0].id)
        applied.append(stored[0])
    return lineage, applied
