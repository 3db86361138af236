"""Planning policies: DDQN, Deep SARSA, tabular Q-learning/SARSA, random.

All agents act through feasibility masks (never a penalty reward) and share
the epsilon-greedy schedule. Deep agents learn a Q-network over the 4-wide
state encoding; tabular agents discretize budget and time into ten buckets.
Per-episode reward history streams to CSV for the benchmark and UI charts.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .env import EnvState, RebuildEnv, ReplayBuffer
from .neural import AdamState, Network, copy_parameters, train_step

AGENT_KINDS = ("ddqn", "qlearn", "sarsa", "deep-sarsa", "random")

HIDDEN_WIDTHS = (8, 64, 128)
STATE_WIDTH = 4
TABULAR_BUCKETS = 10


@dataclass
class AgentConfig:
    """Learning hyperparameters shared by every policy."""

    gamma: float = 0.95
    epsilon_start: float = 1.0
    epsilon_min: float = 1e-7
    epsilon_decay: float = 0.0003  # multiplicative complement, applied per episode
    learning_rate: float = 0.001
    batch_size: int = 32
    episodes: int = 15000
    replay_capacity: int = 2000
    target_sync_interval: int = 100
    warmup: "int | None" = None  # transitions before updates start; defaults to batch_size
    tabular_lr: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0,1], got {self.gamma}")
        if not self.epsilon_min <= self.epsilon_start <= 1.0:
            raise ValueError("epsilon range must satisfy min <= start <= 1")

    @property
    def effective_warmup(self) -> int:
        return max(self.batch_size, self.warmup or self.batch_size)


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    reward: float
    epsilon: float
    loss: float  # mean update loss over the episode; nan before updates start


def select_action(q_values: np.ndarray, feasible: Iterable[str], epsilon: float,
                  rng: np.random.Generator, action_index: dict[str, int]) -> str:
    """Epsilon-greedy over the feasible set; ties break to the smallest id."""
    ordered = sorted(feasible)
    if not ordered:
        raise ValueError("cannot select from an empty feasible set")
    if epsilon > 0.0 and rng.random() < epsilon:
        return str(rng.choice(ordered))
    best = max(q_values[action_index[a]] for a in ordered)
    return next(a for a in ordered if q_values[action_index[a]] == best)


def random_policy(feasible: Iterable[str], rng: np.random.Generator) -> str:
    """Uniform choice over the feasible set."""
    ordered = sorted(feasible)
    if not ordered:
        raise ValueError("cannot select from an empty feasible set")
    return str(rng.choice(ordered))


@dataclass(frozen=True)
class _Step:
    """Replay record: encoded vectors plus index-space masks."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool
    next_feasible: tuple[int, ...]
    next_action: int = -1  # on-policy follow-up, used by Deep SARSA only


def ddqn_targets(target: Network, batch: Sequence[_Step], gamma: float) -> np.ndarray:
    """Bootstrap targets: the reward alone for terminal steps, otherwise the
    reward plus the discounted best target-network value over feasible moves."""
    ys = np.array([s.reward for s in batch], dtype=float)
    open_idx = [i for i, s in enumerate(batch) if not s.terminal]
    if open_idx:
        next_states = np.stack([batch[i].next_state for i in open_idx])
        q_next = target.forward(next_states)
        for row, i in enumerate(open_idx):
            feas = batch[i].next_feasible
            ys[i] += gamma * float(np.max(q_next[row, list(feas)]))
    return ys


def ddqn_update(online: Network, target: Network, opt: AdamState,
                batch: Sequence[_Step], gamma: float) -> float:
    """One gradient step of the online network toward the target-network
    bootstrap (target syncing is the training loop's job)."""
    states = np.stack([s.state for s in batch])
    actions = np.array([s.action for s in batch], dtype=int)
    ys = ddqn_targets(target, batch, gamma)
    return train_step(online, opt, states, ys, actions)


def tabular_update(kind: str, table: dict, state, action: int, reward: float,
                   next_state, next_actions: Sequence[int], terminal: bool,
                   lr: float, gamma: float, next_action: "int | None" = None) -> None:
    """In-place Q-learning or SARSA update on a dict-of-(state, action) table.

    Terminal transitions bootstrap from zero. Q-learning backs up the best
    feasible next value; SARSA backs up the value of the action actually
    taken next.
    """
    if kind not in ("q_learning", "sarsa"):
        raise ValueError(f"kind must be q_learning or sarsa, got {kind!r}")
    if terminal:
        follow = 0.0
    elif kind == "q_learning":
        follow = max((table.get((next_state, a), 0.0) for a in next_actions), default=0.0)
    else:
        if next_action is None:
            raise ValueError("sarsa update needs the next action")
        follow = table.get((next_state, next_action), 0.0)
    current = table.get((state, action), 0.0)
    table[(state, action)] = current + lr * (reward + gamma * follow - current)


class _HistoryWriter:
    """Streams (episode, reward, epsilon, loss) rows to a CSV log."""

    def __init__(self, path: "str | Path"):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(["episode", "reward", "epsilon", "loss"])

    def write(self, record: EpisodeRecord) -> None:
        loss = "" if math.isnan(record.loss) else repr(record.loss)
        self._writer.writerow([record.episode, repr(record.reward),
                               repr(record.epsilon), loss])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class _BaseAgent:
    kind = "base"
    uses_network = False

    def __init__(self, env: RebuildEnv, config: "AgentConfig | None" = None):
        self.env = env
        self.config = config or AgentConfig()
        self.rng = np.random.default_rng(self.config.seed)
        self.epsilon = self.config.epsilon_start

    def act(self, state: EnvState, feasible: frozenset[str], explore: bool = True) -> str:
        raise NotImplementedError

    def _observe(self, transition) -> float:
        """Per-step learning hook; returns the update loss (nan when none)."""
        return math.nan

    def _decay_epsilon(self) -> None:
        self.epsilon = max(self.config.epsilon_min,
                           self.epsilon * (1.0 - self.config.epsilon_decay))

    def train(self, episodes: "int | None" = None, log_path: "str | Path | None" = None,
              on_episode: "Callable[[EpisodeRecord], None] | None" = None
              ) -> list[EpisodeRecord]:
        episodes = self.config.episodes if episodes is None else episodes
        writer = _HistoryWriter(log_path) if log_path else None
        records: list[EpisodeRecord] = []
        try:
            for episode in range(1, episodes + 1):
                state = self.env.reset()
                total = 0.0
                losses: list[float] = []
                while not self.env.done:
                    action = self.act(state, self.env.feasible(), explore=True)
                    transition = self.env.step(action)
                    total += transition.reward
                    loss = self._observe(transition)
                    if not math.isnan(loss):
                        losses.append(loss)
                    state = transition.next_state
                self._decay_epsilon()
                record = EpisodeRecord(episode, total, self.epsilon,
                                       float(np.mean(losses)) if losses else math.nan)
                records.append(record)
                if writer:
                    writer.write(record)
                if on_episode:
                    on_episode(record)
        finally:
            if writer:
                writer.close()
        return records

    def rank_first_actions(self, state: EnvState, feasible: frozenset[str]) -> list[str]:
        """Feasible first moves, best first (used for alternative plans)."""
        return sorted(feasible)


class RandomAgent(_BaseAgent):
    kind = "random"

    def act(self, state, feasible, explore: bool = True) -> str:
        return random_policy(feasible, self.rng)

    def rank_first_actions(self, state, feasible) -> list[str]:
        ordered = sorted(feasible)
        return [ordered[i] for i in self.rng.permutation(len(ordered))]


class TabularAgent(_BaseAgent):
    """Q-learning or SARSA over a discretized (location, budget, time) state."""

    def __init__(self, env, config=None, *, algorithm: str = "q_learning"):
        super().__init__(env, config)
        if algorithm not in ("q_learning", "sarsa"):
            raise ValueError(f"unknown tabular algorithm {algorithm!r}")
        self.algorithm = algorithm
        self.kind = "qlearn" if algorithm == "q_learning" else "sarsa"
        self.table: dict = {}
        self._pending: "str | None" = None  # SARSA's committed follow-up action

    def _bucket(self, value: float, initial: float) -> int:
        if initial <= 0:
            return 0
        return min(TABULAR_BUCKETS - 1, int(TABULAR_BUCKETS * value / initial))

    def state_key(self, state: EnvState) -> tuple[int, int, int]:
        loc = -1 if state.location is None else self.env.action_index[state.location]
        return (loc,
                self._bucket(state.remaining_budget, self.env.initial_budget),
                self._bucket(state.remaining_time, self.env.initial_horizon))

    def _q_row(self, key) -> np.ndarray:
        row = np.zeros(self.env.n_actions)
        for idx in range(self.env.n_actions):
            row[idx] = self.table.get((key, idx), 0.0)
        return row

    def act(self, state, feasible, explore: bool = True) -> str:
        if explore and self._pending is not None and self._pending in feasible:
            action, self._pending = self._pending, None
            return action
        eps = self.epsilon if explore else 0.0
        return select_action(self._q_row(self.state_key(state)), feasible, eps,
                             self.rng, self.env.action_index)

    def _observe(self, transition) -> float:
        key = self.state_key(transition.state)
        next_key = self.state_key(transition.next_state)
        action = self.env.action_index[transition.action]
        next_idx = self.env.indices(transition.next_feasible)
        next_action = None
        if self.algorithm == "sarsa" and not transition.terminal:
            follow_id = self.act(transition.next_state,
                                 frozenset(transition.next_feasible), explore=True)
            self._pending = follow_id  # commit so the backup stays on-policy
            next_action = self.env.action_index[follow_id]
        tabular_update(self.algorithm, self.table, key, action, transition.reward,
                       next_key, next_idx, transition.terminal,
                       self.config.tabular_lr, self.config.gamma,
                       next_action=next_action)
        return math.nan

    def rank_first_actions(self, state, feasible) -> list[str]:
        row = self._q_row(self.state_key(state))
        return sorted(feasible, key=lambda a: (-row[self.env.action_index[a]], a))


class DDQNAgent(_BaseAgent):
    """Double-network Q-learner: online net trained against a periodically
    synchronized target net, from uniformly replayed transitions."""

    kind = "ddqn"
    uses_network = True

    def __init__(self, env, config=None):
        super().__init__(env, config)
        widths = (STATE_WIDTH, *HIDDEN_WIDTHS, env.n_actions)
        self.online = Network.initialize(widths, seed=self.config.seed)
        self.target = self.online.clone()
        self.optimizer = AdamState(learning_rate=self.config.learning_rate)
        self.buffer = ReplayBuffer(self.config.replay_capacity)
        self._updates = 0

    def q_values(self, state: EnvState) -> np.ndarray:
        return self.online.forward(self.env.encode(state))

    def act(self, state, feasible, explore: bool = True) -> str:
        eps = self.epsilon if explore else 0.0
        return select_action(self.q_values(state), feasible, eps, self.rng,
                             self.env.action_index)

    def _encode_step(self, transition, next_action: int = -1) -> _Step:
        # _observe runs right after env.step, so the pre-action state was seen
        # one plan item earlier.
        built = len(self.env.plan)
        return _Step(
            state=self.env.encode(transition.state, plan_length=built - 1),
            action=self.env.action_index[transition.action],
            reward=transition.reward,
            next_state=self.env.encode(transition.next_state, plan_length=built),
            terminal=transition.terminal,
            next_feasible=self.env.indices(transition.next_feasible),
            next_action=next_action,
        )

    def _observe(self, transition) -> float:
        self.buffer.push(self._encode_step(transition))
        if len(self.buffer) < self.config.effective_warmup:
            return math.nan
        batch = self.buffer.sample(self.rng, self.config.batch_size)
        loss = ddqn_update(self.online, self.target, self.optimizer, batch,
                           self.config.gamma)
        self._updates += 1
        if self._updates % self.config.target_sync_interval == 0:
            copy_parameters(self.online, self.target)
        return loss

    def rank_first_actions(self, state, feasible) -> list[str]:
        q = self.q_values(state)
        return sorted(feasible, key=lambda a: (-q[self.env.action_index[a]], a))


class DeepSarsaAgent(DDQNAgent):
    """On-policy deep variant: bootstraps from the action actually taken next,
    with a single network (no target copy)."""

    kind = "deep-sarsa"

    def __init__(self, env, config=None):
        super().__init__(env, config)
        self._pending: "str | None" = None

    def act(self, state, feasible, explore: bool = True) -> str:
        if explore and self._pending is not None and self._pending in feasible:
            action, self._pending = self._pending, None
            return action
        return super().act(state, feasible, explore=explore)

    def _observe(self, transition) -> float:
        next_action = -1
        if not transition.terminal:
            follow_id = self.act(transition.next_state,
                                 frozenset(transition.next_feasible), explore=True)
            self._pending = follow_id  # commit so the backup stays on-policy
            next_action = self.env.action_index[follow_id]
        self.buffer.push(self._encode_step(transition, next_action=next_action))
        if len(self.buffer) < self.config.effective_warmup:
            return math.nan
        batch = self.buffer.sample(self.rng, self.config.batch_size)
        states = np.stack([s.state for s in batch])
        actions = np.array([s.action for s in batch], dtype=int)
        ys = np.array([s.reward for s in batch], dtype=float)
        open_idx = [i for i, s in enumerate(batch) if not s.terminal]
        if open_idx:
            next_states = np.stack([batch[i].next_state for i in open_idx])
            q_next = self.online.forward(next_states)
            for row, i in enumerate(open_idx):
                ys[i] += self.config.gamma * float(q_next[row, batch[i].next_action])
        return train_step(self.online, self.optimizer, states, ys, actions)


def make_agent(kind: str, env: RebuildEnv, config: "AgentConfig | None" = None) -> _BaseAgent:
    if kind == "ddqn":
        return DDQNAgent(env, config)
    if kind == "deep-sarsa":
        return DeepSarsaAgent(env, config)
    if kind == "qlearn":
        return TabularAgent(env, config, algorithm="q_learning")
    if kind == "sarsa":
        return TabularAgent(env, config, algorithm="sarsa")
    if kind == "random":
        return RandomAgent(env, config)
    raise ValueError(f"unknown agent kind {kind!r}; expected one of {AGENT_KINDS}")


def rollout(env: RebuildEnv, agent: _BaseAgent, *, explore: bool = False,
            first_action: "str | None" = None) -> tuple[list[str], float]:
    """Run one episode (greedy by default); returns the item sequence and
    its cumulative reward."""
    state = env.reset()
    sequence: list[str] = []
    total = 0.0
    if first_action is not None and not env.done:
        transition = env.step(first_action)
        sequence.append(transition.action)
        total += transition.reward
        state = transition.next_state
        if transition.terminal:
            return sequence, total
    while not env.done:
        action = agent.act(state, env.feasible(), explore=explore)
        transition = env.step(action)
        sequence.append(transition.action)
        total += transition.reward
        state = transition.next_state
    return sequence, total


def evaluate_policy(env: RebuildEnv, agent: _BaseAgent, rollouts: int = 100, *,
                    explore: bool = False) -> float:
    """Mean episode reward over repeated rollouts of the current policy."""
    totals = [rollout(env, agent, explore=explore)[1] for _ in range(rollouts)]
    return float(np.mean(totals))


def write_history_csv(records: Sequence[EpisodeRecord], path: "str | Path") -> Path:
    writer = _HistoryWriter(path)
    try:
        for record in records:
            writer.write(record)
    finally:
        writer.close()
    return writer.path
