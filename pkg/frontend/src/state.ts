// Application store: owns all server state and the polling loop. Rendering
// subscribes to snapshots; every mutation here is one documented API call.
// Apply is never optimistic — the view changes only after the server commits.

import { ApiClient, ApiError } from "./api";
import type {
    CurveSeries, CycleRecord, DatasetDoc, JobInfo, PlansResponse, TrainRequest,
} from "./types";

export const JOB_POLL_MS = 1000;

export interface AppState {
    dataset: DatasetDoc | null;
    plans: PlansResponse | null;
    cycles: CycleRecord[];
    job: JobInfo | null;
    curves: CurveSeries | null;
    request: TrainRequest;
    banner: { kind: "error" | "conflict" | "info"; message: string } | null;
    busy: boolean;
}

type Listener = (state: AppState) => void;
type Sleeper = (ms: number) => Promise<void>;

const defaultSleep: Sleeper = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

export class AppStore {
    readonly state: AppState = {
        dataset: null,
        plans: null,
        cycles: [],
        job: null,
        curves: null,
        request: {
            budget: 100000, horizon: 60, episodes: 500,
            agent: "ddqn", alternatives: 2, seed: 0,
        },
        banner: null,
        busy: false,
    };

    private listeners: Listener[] = [];

    constructor(
        private readonly api: ApiClient,
        private readonly sleep: Sleeper = defaultSleep,
        private readonly pollMs: number = JOB_POLL_MS,
    ) {}

    subscribe(listener: Listener): () => void {
        this.listeners.push(listener);
        return () => {
            this.listeners = this.listeners.filter((l) => l !== listener);
        };
    }

    private notify(): void {
        for (const listener of this.listeners) listener(this.state);
    }

    private fail(err: unknown): void {
        if (err instanceof ApiError && err.status === 409) {
            this.state.banner = { kind: "conflict", message: err.message };
        } else if (err instanceof ApiError) {
            this.state.banner = { kind: "error", message: err.message };
        } else {
            this.state.banner = { kind: "error", message: String(err) };
        }
        this.notify();
    }

    clearBanner(): void {
        this.state.banner = null;
        this.notify();
    }

    setRequest(patch: Partial<TrainRequest>): void {
        this.state.request = { ...this.state.request, ...patch };
        this.notify();
    }

    /** Load (or reload) everything the dashboard shows. Banners are left
     *  alone so a conflict toast survives the refresh that follows it. */
    async refresh(): Promise<void> {
        try {
            this.state.dataset = await this.api.getDataset();
            this.state.plans = await this.api.getPlans();
            this.state.cycles = (await this.api.getCycles()).cycles;
        } catch (err) {
            this.fail(err);
            return;
        }
        this.notify();
    }

    /** Launch a training job and poll it to completion (1s cadence). */
    async train(): Promise<JobInfo | null> {
        this.state.busy = true;
        this.state.curves = null;
        this.notify();
        try {
            const { job_id } = await this.api.startTraining(this.state.request);
            let job = await this.api.getJob(job_id);
            this.state.job = job;
            this.notify();
            while (job.status === "queued" || job.status === "running") {
                await this.sleep(this.pollMs);
                job = await this.api.getJob(job_id);
                this.state.job = job;
                this.notify();
            }
            this.state.curves = await this.api.getCurves(job_id);
            if (job.status === "failed") {
                this.state.banner = {
                    kind: "error",
                    message: job.error ?? "training failed",
                };
            }
            this.state.plans = await this.api.getPlans();
            this.notify();
            return job;
        } catch (err) {
            this.fail(err);
            return null;
        } finally {
            this.state.busy = false;
            this.notify();
        }
    }

    /** Apply one candidate; on a 409 the board is refreshed, not mutated. */
    async apply(planId: string): Promise<boolean> {
        try {
            await this.api.applyPlan(planId);
        } catch (err) {
            this.fail(err);
            await this.refresh().catch(() => undefined);
            return false;
        }
        await this.refresh();
        return true;
    }
}
