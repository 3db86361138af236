"""Command-line surface: ingest/generate datasets, train plans, apply cycles,
benchmark policies, and serve the HTTP API.

Exit codes: 1 for validation problems, 2 when no feasible plan exists,
3 for internal failures. ``--json`` switches every verb to machine-readable
output.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .agents import AGENT_KINDS, AgentConfig
from .bench import ALGORITHMS, compare_algorithms, emit_report, render_history_figure
from .env import NothingToPlanError
from .model import DatasetError, load_dataset, save_dataset, to_document
from .planner import (ConflictError, Lineage, generate_instance, train_and_plan)
from .service import DEFAULT_DATA_DIR, create_app

EXIT_VALIDATION = 1
EXIT_NO_PLAN = 2
EXIT_INTERNAL = 3


class _Fail(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _run(fn):
    """Map library errors onto the documented exit codes."""
    try:
        return fn()
    except click.ClickException:
        raise
    except DatasetError as exc:
        raise _Fail("dataset validation failed:\n  " + "\n  ".join(exc.errors),
                    EXIT_VALIDATION) from exc
    except (ConflictError, KeyError, ValueError) as exc:
        message = str(exc.args[0]) if exc.args else str(exc)
        raise _Fail(message, EXIT_VALIDATION) from exc
    except NothingToPlanError as exc:
        raise _Fail(str(exc), EXIT_NO_PLAN) from exc
    except OSError as exc:
        raise _Fail(str(exc), EXIT_INTERNAL) from exc


def _echo(payload: dict, as_json: bool, human: str) -> None:
    if as_json:
        click.echo(json.dumps(payload, indent=2, default=str))
    else:
        click.echo(human)


@click.group()
@click.option("--data-dir", envvar="CITYREBUILD_DATA_DIR", default=DEFAULT_DATA_DIR,
              show_default=True, help="Directory holding the reconstruction history.")
@click.pass_context
def main(ctx: click.Context, data_dir: str) -> None:
    """Plan post-disaster reconstruction cycles under budget, time, priority,
    and access constraints."""
    ctx.obj = Path(data_dir)


@main.command()
@click.argument("source", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_obj
def ingest(data_dir: Path, source: str, as_json: bool) -> None:
    """Validate a dataset file and start a reconstruction history from it."""

    def work():
        dataset = load_dataset(source)
        lineage = Lineage.initialize(data_dir, dataset)
        return dataset, lineage

    dataset, lineage = _run(work)
    payload = {"cycle": dataset.cycle, "units": len(dataset.units),
               "roads": len(dataset.roads), "damaged": len(dataset.damaged_ids()),
               "data_dir": str(data_dir)}
    _echo(payload, as_json,
          f"ingested {len(dataset.units)} units / {len(dataset.roads)} roads "
          f"({len(dataset.damaged_ids())} damaged items) into {data_dir}")


@main.command()
@click.option("--units", default=20, show_default=True, type=int)
@click.option("--damage-rate", default=0.5, show_default=True, type=float)
@click.option("--dependency-rate", default=0.25, show_default=True, type=float)
@click.option("--road-damage-rate", default=None, type=float,
              help="Defaults to the building damage rate.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path(), default=None,
              help="Also write the instance to this JSON file.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def generate(data_dir: Path, units: int, damage_rate: float, dependency_rate: float,
             road_damage_rate: "float | None", seed: int, out: "str | None",
             as_json: bool) -> None:
    """Create a synthetic city instance and start a history from it."""

    def work():
        dataset = generate_instance(units, damage_rate, dependency_rate, seed,
                                    road_damage_rate=road_damage_rate)
        if out:
            save_dataset(dataset, out)
        Lineage.initialize(data_dir, dataset)
        return dataset

    dataset = _run(work)
    payload = {"units": len(dataset.units), "roads": len(dataset.roads),
               "damaged": len(dataset.damaged_ids()), "seed": seed,
               "data_dir": str(data_dir)}
    _echo(payload, as_json,
          f"generated {len(dataset.units)} units / {len(dataset.roads)} roads "
          f"({len(dataset.damaged_ids())} damaged items) into {data_dir}")


@main.command()
@click.option("--budget", required=True, type=float)
@click.option("--horizon", required=True, type=float,
              help="Plan time limit in months.")
@click.option("--episodes", default=2000, show_default=True, type=int)
@click.option("--agent", default="ddqn", show_default=True,
              type=click.Choice(AGENT_KINDS))
@click.option("--alternatives", default=2, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def train(data_dir: Path, budget: float, horizon: float, episodes: int, agent: str,
          alternatives: int, seed: int, as_json: bool) -> None:
    """Train a policy on the current snapshot and emit alternative plans."""

    def work():
        lineage = Lineage(data_dir)
        if not lineage.initialized:
            raise ConflictError(f"{data_dir} has no dataset; ingest or generate first")
        dataset = lineage.dataset()
        curve_dir = data_dir / "curves"
        log_path = curve_dir / f"train-c{dataset.cycle}-{agent}-seed{seed}.csv"
        result = train_and_plan(dataset, budget, horizon, AgentConfig(seed=seed),
                                alternatives=alternatives, agent_kind=agent,
                                episodes=episodes, log_path=log_path)
        render_history_figure(result.history, log_path.with_suffix(".png"),
                              title=f"{agent} training, cycle {dataset.cycle}")
        stored = lineage.register_plans(result.plans, dataset=dataset)
        return dataset, result, stored, log_path

    dataset, result, stored, log_path = _run(work)
    if not stored:
        payload = {"plans": [], "diagnostics": result.diagnostics}
        _echo(payload, as_json,
              "no feasible plan under the current constraints; "
              f"diagnostics: {result.diagnostics}")
        sys.exit(EXIT_NO_PLAN)
    payload = {
        "cycle": dataset.cycle,
        "plans": [p.to_dict(dataset) for p in stored],
        "curve_csv": str(log_path),
        "curve_figure": str(log_path.with_suffix(".png")),
        "plan_files": [str(data_dir / "plans" / f"{p.id}.json") for p in stored],
    }
    lines = [f"cycle {dataset.cycle}: {len(stored)} plan(s)"]
    for plan in stored:
        ev = plan.evaluation
        lines.append(f"  {plan.id}: {len(plan.items)} items, benefit {ev.social_benefit:.1f}, "
                     f"mean priority {ev.mean_priority:.2f}, cost {ev.total_cost:.1f}, "
                     f"duration {ev.total_duration:.1f}")
    _echo(payload, as_json, "\n".join(lines))


@main.group()
def plan() -> None:
    """Inspect candidate plans."""


@plan.command("show")
@click.option("--cycle", "cycle", default=None, type=int,
              help="Cycle to list (defaults to the current one).")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def plan_show(data_dir: Path, cycle: "int | None", as_json: bool) -> None:
    """List candidate plans with their evaluations."""

    def work():
        lineage = Lineage(data_dir)
        if not lineage.initialized:
            raise ConflictError(f"{data_dir} has no dataset; ingest or generate first")
        return lineage, lineage.candidates(cycle), lineage.dataset()

    lineage, candidates, dataset = _run(work)
    shown_cycle = cycle if cycle is not None else lineage.cycle()
    payload = {"cycle": shown_cycle, "plans": [p.to_dict() for p in candidates]}
    if not candidates:
        _echo(payload, as_json, f"cycle {shown_cycle}: no candidate plans yet")
        return
    lines = [f"cycle {shown_cycle}: {len(candidates)} candidate plan(s)"]
    for p in candidates:
        ev = p.evaluation
        lines.append(f"  {p.id}: benefit {ev.social_benefit:.1f}, "
                     f"mean priority {ev.mean_priority:.2f}, cost {ev.total_cost:.1f}, "
                     f"duration {ev.total_duration:.1f}, items: {', '.join(p.items)}")
        groups = " | ".join("[" + ", ".join(g) + "]" for g in p.parallel_sublists)
        lines.append(f"      parallel: {groups}")
    _echo(payload, as_json, "\n".join(lines))


@main.command()
@click.argument("plan_id")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def apply(data_dir: Path, plan_id: str, as_json: bool) -> None:
    """Apply a candidate plan and advance to the next cycle."""

    def work():
        lineage = Lineage(data_dir)
        if not lineage.initialized:
            raise ConflictError(f"{data_dir} has no dataset; ingest or generate first")
        return lineage.apply(plan_id)

    updated = _run(work)
    payload = {"applied": plan_id, "cycle": updated.cycle,
               "damaged_left": len(updated.damaged_ids())}
    _echo(payload, as_json,
          f"applied {plan_id}; now at cycle {updated.cycle} with "
          f"{len(updated.damaged_ids())} damaged items left")


@main.command()
@click.option("--budget", required=True, type=float)
@click.option("--horizon", required=True, type=float)
@click.option("--episodes", default=2000, show_default=True, type=int)
@click.option("--seeds", default="0,1,2", show_default=True,
              help="Comma-separated training seeds.")
@click.option("--algorithms", default=",".join(ALGORITHMS), show_default=True,
              help="Comma-separated subset of the supported algorithms.")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), default=None,
              help="Benchmark this dataset file instead of the current snapshot.")
@click.option("--out-dir", type=click.Path(), default=None,
              help="Report directory (default: <data-dir>/reports).")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def bench(data_dir: Path, budget: float, horizon: float, episodes: int, seeds: str,
          algorithms: str, dataset_path: "str | None", out_dir: "str | None",
          as_json: bool) -> None:
    """Compare all policies on one instance and write a report with figures."""

    def work():
        if dataset_path:
            dataset = load_dataset(dataset_path)
        else:
            lineage = Lineage(data_dir)
            if not lineage.initialized:
                raise ConflictError(f"{data_dir} has no dataset; ingest or generate first")
            dataset = lineage.dataset()
        seed_list = [int(s) for s in seeds.split(",") if s.strip() != ""]
        algorithm_list = tuple(a.strip() for a in algorithms.split(",") if a.strip())
        result = compare_algorithms(dataset, budget, horizon, episodes, seed_list,
                                    algorithms=algorithm_list)
        target = Path(out_dir) if out_dir else data_dir / "reports"
        files = emit_report(result, target)
        return result, files, target

    result, files, target = _run(work)
    payload = {"out_dir": str(target), "files": [str(f) for f in files],
               "summary": result.summary_rows(), "diverged": result.any_diverged}
    lines = [f"report written to {target}"]
    for row in result.summary_rows():
        lines.append(f"  {row['algorithm']:<12} final reward {row['final_reward']:.3f}")
    _echo(payload, as_json, "\n".join(lines))
    if result.any_diverged:
        sys.exit(EXIT_INTERNAL)


@main.command()
@click.option("--port", envvar="CITYREBUILD_PORT", default=8000, show_default=True,
              type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--frontend", "frontend_dir", type=click.Path(), default=None,
              help="Directory with the built web UI to serve at /.")
@click.pass_obj
def serve(data_dir: Path, port: int, host: str, frontend_dir: "str | None") -> None:
    """Run the HTTP API (and the web UI, when built)."""
    import uvicorn

    app = create_app(data_dir, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
