// Payload shapes of the planning service API (see docs/api.md).

export interface UnitRow {
    id: string;
    kind: string;
    vulnerability: number | null;
    status: 0 | 1;
    cost: number;
    time: number;
    priority: number;
    direct_benefit: number;
}

export interface RoadRow {
    from: string;
    to: string;
    status: 0 | 1;
    length: number;
    cost: number;
    time: number;
    priority: number;
    direct_benefit: number;
}

export interface DependencyRow {
    blocked: string;
    blocker: string;
}

export interface DatasetDoc {
    cycle: number;
    units: UnitRow[];
    roads: RoadRow[];
    dependencies: DependencyRow[];
}

export interface PlanEvaluation {
    social_benefit: number;
    mean_priority: number;
    total_cost: number;
    total_duration: number;
    completion_times: number[];
}

export interface ConstraintResult {
    passed: boolean;
    slack?: number;
    margin?: number;
}

export interface PlanVerdict {
    feasible: boolean;
    cost: ConstraintResult;
    duration: ConstraintResult;
    priority: ConstraintResult;
    dependencies: { passed: boolean; violations: string[][] };
}

export interface PlanItemDetail {
    id: string;
    kind: string;
    cost: number;
    time: number;
    priority: number;
    direct_benefit: number;
}

export interface PlanDoc {
    id: string;
    items: string[];
    evaluation: PlanEvaluation;
    verdict: PlanVerdict;
    parallel_sublists: string[][];
    provenance: { agent: string; seed: number; cycle: number };
    item_details?: PlanItemDetail[];
}

export interface PlansResponse {
    cycle: number;
    threshold: number | null;
    plans: PlanDoc[];
}

export type JobStatus = "queued" | "running" | "done" | "failed";

export interface JobInfo {
    id: string;
    status: JobStatus;
    episodes_done: number;
    total_episodes: number;
    reward_tail: number[];
    plan_ids: string[];
    error: string | null;
    agent: string;
    seed: number;
}

export interface TrainRequest {
    budget: number;
    horizon: number;
    episodes: number;
    agent: string;
    alternatives: number;
    seed: number;
}

export interface CycleRecord {
    cycle: number;
    threshold: number;
    candidates: string[];
    selected: string | null;
    before_snapshot: string;
    after_snapshot: string | null;
}

export interface CurveSeries {
    job_id: string;
    episode: number[];
    reward: number[];
    reward_ma100: number[];
    epsilon: number[];
    loss: (number | null)[];
}
