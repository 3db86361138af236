// Thin typed client over the planning service. Every method maps to exactly
// one documented route; no planning arithmetic happens here.

import type {
    CurveSeries, CycleRecord, DatasetDoc, JobInfo, PlansResponse, TrainRequest,
} from "./types";

export class ApiError extends Error {
    constructor(
        public readonly status: number,
        public readonly code: string,
        message: string,
    ) {
        super(message);
        this.name = "ApiError";
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
    constructor(
        private readonly base: string = "",
        private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    ) {}

    url(path: string): string {
        return `${this.base}${path}`;
    }

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        let response: Response;
        try {
            response = await this.fetchImpl(this.url(path), init);
        } catch (err) {
            throw new ApiError(0, "network", `cannot reach the server: ${err}`);
        }
        const body = await response.json().catch(() => ({}));
        if (!response.ok) {
            const envelope = (body as { error?: { code?: string; message?: string } }).error;
            throw new ApiError(
                response.status,
                envelope?.code ?? "error",
                envelope?.message ?? `request failed with ${response.status}`,
            );
        }
        return body as T;
    }

    getDataset(): Promise<DatasetDoc> {
        return this.request<DatasetDoc>("/api/dataset");
    }

    startTraining(body: TrainRequest): Promise<{ job_id: string; status: string }> {
        return this.request("/api/jobs/train", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
    }

    getJob(jobId: string): Promise<JobInfo> {
        return this.request<JobInfo>(`/api/jobs/${jobId}`);
    }

    getPlans(cycle?: number): Promise<PlansResponse> {
        const query = cycle === undefined ? "" : `?cycle=${cycle}`;
        return this.request<PlansResponse>(`/api/plans${query}`);
    }

    applyPlan(planId: string): Promise<{ applied: string; cycle: number }> {
        return this.request(`/api/plans/${planId}/apply`, { method: "POST" });
    }

    getCycles(): Promise<{ cycles: CycleRecord[] }> {
        return this.request("/api/cycles");
    }

    getCurves(jobId: string): Promise<CurveSeries> {
        return this.request<CurveSeries>(`/api/curves/${jobId}`);
    }
}
