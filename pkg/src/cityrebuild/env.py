"""Sequential reconstruction environment for the planning agents.

An episode starts from the full budget and horizon and adds one feasible
damaged item per step until nothing else fits. Rewards are the items'
social benefit; a rebuilt road emits zero immediately and banks its benefit
onto the next building, since a road pays off through what it unlocks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .constraints import feasible_actions
from .metrics import DEFAULT_WEIGHTS, ObjectiveWeights, unit_benefit
from .model import Dataset, build_dependency_graph


class NothingToPlanError(RuntimeError):
    """The dataset has no damaged items left to schedule."""


@dataclass(frozen=True)
class EnvState:
    """Agent observation: where work last happened and what is left to spend."""

    location: "str | None"
    remaining_budget: float
    remaining_time: float


@dataclass(frozen=True)
class Transition:
    state: EnvState
    action: str
    reward: float
    next_state: EnvState
    terminal: bool
    next_feasible: tuple[str, ...]


class ReplayBuffer:
    """Fixed-capacity FIFO store with uniform sampling."""

    def __init__(self, capacity: int = 2000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._buffer: deque = deque(maxlen=capacity)

    def push(self, item) -> None:
        self._buffer.append(item)

    def sample(self, rng: np.random.Generator, batch_size: int) -> list:
        if batch_size > len(self._buffer):
            raise ValueError(f"cannot sample {batch_size} from buffer of {len(self._buffer)}")
        idx = rng.choice(len(self._buffer), size=batch_size, replace=False)
        return [self._buffer[i] for i in idx]

    def __len__(self) -> int:
        return len(self._buffer)


class RebuildEnv:
    """One dataset snapshot plus a budget/horizon, stepped one item at a time.

    The action space is a fixed index over every item id in the dataset;
    infeasible actions must be masked by the caller (selecting one raises).
    """

    def __init__(self, dataset: Dataset, budget: float, horizon: float, *,
                 weights: ObjectiveWeights = DEFAULT_WEIGHTS,
                 intact_mode: str = "frozen", neighborhood: str = "one_level",
                 seed: "int | None" = None):
        if budget < 0 or horizon < 0:
            raise ValueError("budget and horizon must be nonnegative")
        self.dataset = dataset
        self.initial_budget = float(budget)
        self.initial_horizon = float(horizon)
        self.weights = weights
        self.intact_mode = intact_mode
        self.neighborhood = neighborhood
        self.dep_graph = build_dependency_graph(dataset)
        self.action_ids: tuple[str, ...] = tuple(sorted(dataset.items))
        self.action_index: dict[str, int] = {a: i for i, a in enumerate(self.action_ids)}
        self._rng = np.random.default_rng(seed)
        self._damaged_total = len(dataset.damaged_ids())
        if intact_mode == "frozen":
            self._frozen = {i: unit_benefit(dataset, i, weights, neighborhood=neighborhood)
                            for i in dataset.damaged_ids()}
        else:
            self._frozen = None
        self.plan: list[str] = []
        self.state: "EnvState | None" = None
        self._bank = 0.0
        self._feasible: frozenset[str] = frozenset()

    @property
    def n_actions(self) -> int:
        return len(self.action_ids)

    def reset(self) -> EnvState:
        """Fresh episode: full budget/time, start location drawn from the
        feasible first actions (seeded)."""
        if self._damaged_total == 0:
            raise NothingToPlanError("dataset has no damaged items")
        self.plan = []
        self._bank = 0.0
        self._feasible = feasible_actions(self.dataset, (), self.initial_budget,
                                          self.initial_horizon, dep_graph=self.dep_graph)
        location = None
        if self._feasible:
            location = str(self._rng.choice(sorted(self._feasible)))
        self.state = EnvState(location, self.initial_budget, self.initial_horizon)
        return self.state

    def feasible(self) -> frozenset[str]:
        return self._feasible

    @property
    def done(self) -> bool:
        return not self._feasible

    def _benefit(self, item_id: str) -> float:
        if self._frozen is not None:
            return self._frozen[item_id]
        return unit_benefit(self.dataset, item_id, self.weights,
                            neighborhood=self.neighborhood,
                            extra_intact=frozenset(self.plan))

    def step(self, action: str) -> Transition:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        action = self.dataset.resolve(action)
        if action not in self._feasible:
            raise ValueError(f"action {action!r} is not feasible in the current state")
        item = self.dataset.items[action]
        benefit = self._benefit(action)
        if self.dataset.is_road(action):
            self._bank += benefit
            reward = 0.0
        else:
            reward = benefit + self._bank
            self._bank = 0.0

        prev = self.state
        self.plan.append(action)
        next_state = EnvState(action,
                              prev.remaining_budget - item.effective_cost,
                              prev.remaining_time - item.effective_time)
        self._feasible = feasible_actions(self.dataset, self.plan,
                                          next_state.remaining_budget,
                                          next_state.remaining_time,
                                          dep_graph=self.dep_graph)
        terminal = not self._feasible
        if terminal and self._bank:
            reward += self._bank  # keep the episode total equal to the items' benefits
            self._bank = 0.0
        self.state = next_state
        return Transition(prev, action, reward, next_state, terminal,
                          tuple(sorted(self._feasible)))

    def encode(self, state: EnvState, plan_length: "int | None" = None) -> np.ndarray:
        """4-wide network input: location index, budget and time fractions,
        and the fraction of damaged items already rebuilt this episode.

        ``plan_length`` pins the rebuilt count the state was observed at;
        it defaults to the current episode's plan length.
        """
        loc = 0.0
        if state.location is not None:
            loc = (self.action_index[state.location] + 1) / self.n_actions
        budget_frac = (state.remaining_budget / self.initial_budget
                       if self.initial_budget > 0 else 0.0)
        time_frac = (state.remaining_time / self.initial_horizon
                     if self.initial_horizon > 0 else 0.0)
        built = len(self.plan) if plan_length is None else plan_length
        built_frac = built / self._damaged_total if self._damaged_total else 0.0
        return np.array([loc, budget_frac, time_frac, built_frac])

    def indices(self, ids: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.action_index[i] for i in ids)
