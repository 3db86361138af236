"""HTTP surface for interactive multi-cycle planning.

A thin adapter over the planner: every payload is a direct serialization of
library results, long-running training happens in background jobs polled by
id, and writes to a lineage are serialized behind a single lock. Machine
readable error codes: ``not_found``, ``conflict``, ``validation``.
"""

from __future__ import annotations

import itertools
import os
import threading
from collections import deque
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .agents import AGENT_KINDS, AgentConfig, EpisodeRecord
from .bench import moving_average
from .env import NothingToPlanError
from .model import DatasetError, to_document
from .planner import ConflictError, Lineage, train_and_plan

DEFAULT_DATA_DIR = "./cityrebuild-data"

JOB_QUEUED = "queued"
JOB_RUNNING = "running"
JOB_DONE = "done"
JOB_FAILED = "failed"
_TERMINAL = (JOB_DONE, JOB_FAILED)
REWARD_TAIL = 20


class TrainRequest(BaseModel):
    budget: float = Field(gt=0)
    horizon: float = Field(gt=0)
    episodes: int = Field(default=500, ge=1)
    agent: str = Field(default="ddqn")
    alternatives: int = Field(default=2, ge=1)
    seed: int = 0


class TrainJob:
    """Mutable job state; status can only move forward."""

    _order = {JOB_QUEUED: 0, JOB_RUNNING: 1, JOB_DONE: 2, JOB_FAILED: 2}

    def __init__(self, job_id: str, request: TrainRequest):
        self.id = job_id
        self.request = request
        self.status = JOB_QUEUED
        self.episodes_done = 0
        self.total_episodes = request.episodes
        self.reward_tail: deque = deque(maxlen=REWARD_TAIL)
        self.history: list[EpisodeRecord] = []
        self.plan_ids: list[str] = []
        self.error: Optional[str] = None
        self._lock = threading.Lock()

    def advance(self, status: str) -> None:
        with self._lock:
            if self._order[status] >= self._order[self.status]:
                self.status = status

    def on_episode(self, record: EpisodeRecord) -> None:
        with self._lock:
            self.episodes_done = record.episode
            self.reward_tail.append(record.reward)
            self.history.append(record)

    def to_dict(self) -> dict:
        with self._lock:
            return {
                "id": self.id,
                "status": self.status,
                "episodes_done": self.episodes_done,
                "total_episodes": self.total_episodes,
                "reward_tail": list(self.reward_tail),
                "plan_ids": list(self.plan_ids),
                "error": self.error,
                "agent": self.request.agent,
                "seed": self.request.seed,
            }


class ServiceState:
    def __init__(self, data_dir: "str | Path"):
        self.data_dir = Path(data_dir)
        self.jobs: dict[str, TrainJob] = {}
        self.write_lock = threading.Lock()
        self._job_counter = itertools.count(1)
        self._jobs_lock = threading.Lock()

    def lineage(self) -> Lineage:
        lineage = Lineage(self.data_dir)
        if not lineage.initialized:
            raise HTTPException(status_code=404, detail={
                "code": "not_found",
                "message": f"no dataset in {self.data_dir}; ingest or generate first",
            })
        return lineage

    def new_job(self, request: TrainRequest) -> TrainJob:
        with self._jobs_lock:
            job = TrainJob(f"job-{next(self._job_counter)}", request)
            self.jobs[job.id] = job
            return job


def _error(status_code: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status_code,
                         detail={"code": code, "message": message})


def create_app(data_dir: "str | Path | None" = None,
               frontend_dir: "str | Path | None" = None) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get("CITYREBUILD_DATA_DIR", DEFAULT_DATA_DIR))
    state = ServiceState(data_dir)
    app = FastAPI(title="cityrebuild", version="0.1.0")
    app.state.service = state

    @app.exception_handler(ConflictError)
    async def _conflict(request: Request, exc: ConflictError):
        return JSONResponse(status_code=409,
                            content={"error": {"code": "conflict", "message": str(exc)}})

    @app.exception_handler(DatasetError)
    async def _dataset_error(request: Request, exc: DatasetError):
        return JSONResponse(status_code=422,
                            content={"error": {"code": "validation",
                                               "message": str(exc),
                                               "errors": exc.errors}})

    @app.exception_handler(HTTPException)
    async def _http_error(request: Request, exc: HTTPException):
        detail = exc.detail if isinstance(exc.detail, dict) else {
            "code": "error", "message": str(exc.detail)}
        return JSONResponse(status_code=exc.status_code, content={"error": detail})

    @app.get("/api/dataset")
    def get_dataset():
        return to_document(state.lineage().dataset())

    @app.post("/api/jobs/train")
    def start_training(request: TrainRequest):
        if request.agent not in AGENT_KINDS:
            raise _error(422, "validation",
                         f"unknown agent {request.agent!r}; expected one of {AGENT_KINDS}")
        lineage = state.lineage()
        dataset = lineage.dataset()
        job = state.new_job(request)

        def run() -> None:
            job.advance(JOB_RUNNING)
            try:
                result = train_and_plan(
                    dataset, request.budget, request.horizon,
                    AgentConfig(seed=request.seed),
                    alternatives=request.alternatives,
                    agent_kind=request.agent,
                    episodes=request.episodes,
                    on_episode=job.on_episode,
                )
                with state.write_lock:
                    stored = Lineage(state.data_dir).register_plans(
                        result.plans, dataset=dataset)
                job.plan_ids = [p.id for p in stored]
                job.advance(JOB_DONE)
            except (NothingToPlanError, ConflictError, ValueError) as exc:
                job.error = str(exc)
                job.advance(JOB_FAILED)
            except Exception as exc:  # pragma: no cover - defensive
                job.error = f"internal error: {exc}"
                job.advance(JOB_FAILED)

        threading.Thread(target=run, daemon=True).start()
        return {"job_id": job.id, "status": job.status}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise _error(404, "not_found", f"unknown job {job_id!r}")
        return job.to_dict()

    @app.get("/api/plans")
    def plans(cycle: "int | None" = None):
        lineage = state.lineage()
        dataset = lineage.dataset()
        target_cycle = cycle if cycle is not None else lineage.cycle()
        candidates = lineage.candidates(target_cycle)
        threshold = None
        for record in lineage.records:
            if record.cycle == target_cycle:
                threshold = record.threshold
        return {"cycle": target_cycle, "threshold": threshold,
                "plans": [p.to_dict(dataset) for p in candidates]}

    @app.post("/api/plans/{plan_id}/apply")
    def apply(plan_id: str):
        if not state.write_lock.acquire(blocking=False):
            raise _error(409, "conflict", "another write is in flight")
        try:
            lineage = state.lineage()
            try:
                updated = lineage.apply(plan_id)
            except KeyError as exc:
                raise _error(404, "not_found", str(exc)) from exc
            return {"applied": plan_id, "cycle": updated.cycle}
        finally:
            state.write_lock.release()

    @app.get("/api/cycles")
    def cycles():
        return {"cycles": [r.to_dict() for r in state.lineage().records]}

    @app.get("/api/curves/{job_id}")
    def curves(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise _error(404, "not_found", f"unknown job {job_id!r}")
        with job._lock:
            history = list(job.history)
        rewards = [r.reward for r in history]
        return {
            "job_id": job_id,
            "episode": [r.episode for r in history],
            "reward": rewards,
            "reward_ma100": list(moving_average(rewards)) if rewards else [],
            "epsilon": [r.epsilon for r in history],
            "loss": [None if r.loss != r.loss else r.loss for r in history],
        }

    frontend = Path(frontend_dir) if frontend_dir else None
    if frontend is None:
        env_dir = os.environ.get("CITYREBUILD_FRONTEND")
        if env_dir:
            frontend = Path(env_dir)
        elif Path("frontend/dist").is_dir():
            frontend = Path("frontend/dist")
    if frontend and frontend.is_dir():
        app.mount("/", StaticFiles(directory=frontend, html=True), name="ui")

    return app
