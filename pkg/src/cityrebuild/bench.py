"""Benchmark harness: run every policy on one instance, compare reward curves.

Emits a delimited summary plus per-(algorithm, seed) curve files, a plain
text digest, and rendered figures. Summary values are fully deterministic
for a given seed list; wall-clock timings live in their own sidecar since
they never are.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .agents import AGENT_KINDS, AgentConfig, EpisodeRecord, evaluate_policy, make_agent
from .env import RebuildEnv
from .model import Dataset

ALGORITHMS = ("qlearn", "sarsa", "deep-sarsa", "ddqn", "random")
MOVING_AVERAGE_WINDOW = 100


@dataclass
class AlgorithmRun:
    algorithm: str
    seed: int
    records: list[EpisodeRecord]
    final_reward: float  # greedy-evaluation mean over the evaluation rollouts
    wallclock_s: float
    diverged: bool = False
    error: "str | None" = None


@dataclass
class BenchResult:
    episodes: int
    eval_rollouts: int
    runs: list[AlgorithmRun]

    def runs_for(self, algorithm: str) -> list[AlgorithmRun]:
        return [r for r in self.runs if r.algorithm == algorithm]

    def summary_rows(self) -> list[dict]:
        rows = []
        for algorithm in dict.fromkeys(r.algorithm for r in self.runs):
            runs = self.runs_for(algorithm)
            finals = [r.final_reward for r in runs if not r.diverged]
            rows.append({
                "algorithm": algorithm,
                "episodes": self.episodes,
                "final_reward": float(np.mean(finals)) if finals else math.nan,
                "diverged": sum(r.diverged for r in runs),
            })
        return rows

    @property
    def any_diverged(self) -> bool:
        return any(r.diverged for r in self.runs)


def moving_average(values: Sequence[float], window: int = MOVING_AVERAGE_WINDOW
                   ) -> np.ndarray:
    """Trailing mean over up to ``window`` previous values."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    cumulative = np.cumsum(values)
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        total = cumulative[i] - (cumulative[lo - 1] if lo > 0 else 0.0)
        out[i] = total / (i - lo + 1)
    return out


def compare_algorithms(dataset: Dataset, budget: float, horizon: float,
                       episodes: int, seeds: Sequence[int], *,
                       algorithms: Sequence[str] = ALGORITHMS,
                       eval_rollouts: int = 100,
                       config: "AgentConfig | None" = None) -> BenchResult:
    """Train each algorithm for ``episodes`` per seed and score the greedy
    policy afterwards. A diverging run (non-finite loss) is reported on its
    row without aborting the others."""
    if episodes < 100:
        raise ValueError(f"episodes must be >= 100, got {episodes}")
    if not seeds:
        raise ValueError("need at least one seed")
    unknown = set(algorithms) - set(AGENT_KINDS)
    if unknown:
        raise ValueError(f"unknown algorithms: {sorted(unknown)}")

    base = config or AgentConfig()
    runs: list[AlgorithmRun] = []
    for algorithm in algorithms:
        for seed in seeds:
            cfg = AgentConfig(**{**base.__dict__, "seed": int(seed)})
            env = RebuildEnv(dataset, budget, horizon, seed=int(seed))
            agent = make_agent(algorithm, env, cfg)
            started = time.perf_counter()
            records: list[EpisodeRecord] = []
            diverged = False
            error = None
            try:
                records = agent.train(episodes=episodes)
                losses = [r.loss for r in records if not math.isnan(r.loss)]
                diverged = any(not math.isfinite(loss) for loss in losses)
                if getattr(agent, "uses_network", False):
                    finite = all(np.all(np.isfinite(w)) for w in agent.online.weights)
                    diverged = diverged or not finite
            except (ValueError, FloatingPointError) as exc:
                # train_step rejects non-finite batches, which is how a blown-up
                # network surfaces mid-run
                diverged, error = True, str(exc)
            final = math.nan
            if not diverged:
                final = evaluate_policy(env, agent, rollouts=eval_rollouts)
            runs.append(AlgorithmRun(
                algorithm=algorithm, seed=int(seed), records=records,
                final_reward=final,
                wallclock_s=time.perf_counter() - started,
                diverged=diverged, error=error,
            ))
    return BenchResult(episodes=episodes, eval_rollouts=eval_rollouts, runs=runs)


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_report(result: BenchResult, out_dir: "str | Path", *,
                figures: bool = True) -> list[Path]:
    """Write summary.csv, per-run curve CSVs, a digest, timings, and figures.

    summary.csv columns: algorithm, episodes, final_reward, diverged — all
    deterministic under fixed seeds. curve-<algorithm>-<seed>.csv columns:
    episode, reward, reward_ma100, epsilon, loss.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    summary = out / "summary.csv"
    with summary.open("w", newline="") as fh:
        fh.write("algorithm,episodes,final_reward,diverged\n")
        for row in result.summary_rows():
            fh.write(f"{row['algorithm']},{row['episodes']},"
                     f"{_fmt(row['final_reward'])},{row['diverged']}\n")
    written.append(summary)

    timings = out / "timings.csv"
    with timings.open("w", newline="") as fh:
        fh.write("algorithm,seed,wallclock_s\n")
        for run in result.runs:
            fh.write(f"{run.algorithm},{run.seed},{run.wallclock_s:.3f}\n")
    written.append(timings)

    for run in result.runs:
        curve = out / f"curve-{run.algorithm}-{run.seed}.csv"
        rewards = [r.reward for r in run.records]
        ma = moving_average(rewards) if rewards else np.array([])
        with curve.open("w", newline="") as fh:
            fh.write("episode,reward,reward_ma100,epsilon,loss\n")
            for record, smoothed in zip(run.records, ma):
                loss = "" if math.isnan(record.loss) else _fmt(record.loss)
                fh.write(f"{record.episode},{_fmt(record.reward)},"
                         f"{_fmt(smoothed)},{_fmt(record.epsilon)},{loss}\n")
        written.append(curve)

    digest = out / "digest.txt"
    lines = [f"benchmark over {result.episodes} episodes, "
             f"{result.eval_rollouts} evaluation rollouts", ""]
    ordered = sorted(result.summary_rows(),
                     key=lambda r: -(r["final_reward"]
                                     if math.isfinite(r["final_reward"]) else -math.inf))
    for row in ordered:
        lines.append(f"  {row['algorithm']:<12} final reward "
                     f"{row['final_reward']:.3f}  (diverged runs: {row['diverged']})")
    lines.append("")
    lines.append("wall-clock seconds per run (informational, machine-dependent):")
    for run in result.runs:
        lines.append(f"  {run.algorithm:<12} seed {run.seed}: {run.wallclock_s:.2f}s")
    digest.write_text("\n".join(lines) + "\n")
    written.append(digest)

    if figures:
        written.extend(render_figures(result, out))
    return written


def render_history_figure(records: Sequence[EpisodeRecord], path: "str | Path",
                          title: str = "training reward") -> Path:
    """Single-run reward curve (raw plus moving average) rendered to a file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rewards = [r.reward for r in records]
    episodes = [r.episode for r in records]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(episodes, rewards, alpha=0.3, linewidth=0.7, label="episode reward")
    if rewards:
        ax.plot(episodes, moving_average(rewards), linewidth=1.8,
                label=f"{MOVING_AVERAGE_WINDOW}-episode mean")
    ax.set_xlabel("episode")
    ax.set_ylabel("reward")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_figures(result: BenchResult, out_dir: "str | Path") -> list[Path]:
    """Reward-curve figure per algorithm plus one cross-algorithm comparison."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for algorithm in dict.fromkeys(r.algorithm for r in result.runs):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for run in result.runs_for(algorithm):
            rewards = [r.reward for r in run.records]
            if not rewards:
                continue
            episodes = [r.episode for r in run.records]
            ax.plot(episodes, rewards, alpha=0.25, linewidth=0.7)
            ax.plot(episodes, moving_average(rewards), linewidth=1.8,
                    label=f"seed {run.seed} (mean)")
        ax.set_xlabel("episode")
        ax.set_ylabel("episode reward")
        ax.set_title(f"{algorithm}: reward per episode")
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
        path = out / f"curves-{algorithm}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    fig, (ax_curve, ax_final) = plt.subplots(1, 2, figsize=(11, 4.5),
                                             gridspec_kw={"width_ratios": [2, 1]})
    for row in result.summary_rows():
        runs = result.runs_for(row["algorithm"])
        stacks = [np.array([r.reward for r in run.records]) for run in runs
                  if run.records]
        if not stacks:
            continue
        shortest = min(len(s) for s in stacks)
        mean_curve = np.mean([s[:shortest] for s in stacks], axis=0)
        ax_curve.plot(range(1, shortest + 1), moving_average(mean_curve),
                      label=row["algorithm"])
    ax_curve.set_xlabel("episode")
    ax_curve.set_ylabel(f"reward ({MOVING_AVERAGE_WINDOW}-episode mean)")
    ax_curve.set_title("training reward")
    ax_curve.legend(fontsize=8)

    rows = result.summary_rows()
    names = [r["algorithm"] for r in rows]
    finals = [r["final_reward"] for r in rows]
    ax_final.bar(names, finals)
    ax_final.set_ylabel("final greedy reward")
    ax_final.set_title("final evaluation")
    ax_final.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    path = out / "comparison.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
