// Plan comparison board: one card per candidate with the server-computed
// evaluation, constraint context, ordered items (dependency work badged),
// and parallel sub-lists as swimlanes. The card model is pure so the board
// can be tested without a DOM; the render step only lays it out.

import type { PlanDoc, PlansResponse } from "./types";

export interface PlanCardModel {
    id: string;
    feasible: boolean;
    socialBenefit: number;
    meanPriority: number;
    threshold: number | null;
    totalCost: number;
    budget: number | null;
    totalDuration: number;
    horizon: number | null;
    agent: string;
    items: { id: string; kind: string; isDependency: boolean }[];
    swimlanes: string[][];
}

export function planCardModel(plan: PlanDoc, threshold: number | null,
                              budget: number | null,
                              horizon: number | null): PlanCardModel {
    const kinds = new Map((plan.item_details ?? []).map((d) => [d.id, d.kind]));
    return {
        id: plan.id,
        feasible: plan.verdict.feasible,
        socialBenefit: plan.evaluation.social_benefit,
        meanPriority: plan.evaluation.mean_priority,
        threshold,
        totalCost: plan.evaluation.total_cost,
        budget,
        totalDuration: plan.evaluation.total_duration,
        horizon,
        agent: plan.provenance.agent,
        items: plan.items.map((id) => ({
            id,
            kind: kinds.get(id) ?? "",
            isDependency: (kinds.get(id) ?? "") === "Road" || id.includes("-"),
        })),
        swimlanes: plan.parallel_sublists,
    };
}

export function cardModels(response: PlansResponse, budget: number | null,
                           horizon: number | null): PlanCardModel[] {
    return response.plans.map((p) =>
        planCardModel(p, response.threshold, budget, horizon));
}

const fmt = (value: number) => value.toLocaleString("en-US", {
    maximumFractionDigits: 1,
});

export function renderPlanBoard(container: HTMLElement, models: PlanCardModel[],
                                onApply: (planId: string) => void): void {
    container.replaceChildren();
    if (models.length === 0) {
        const empty = document.createElement("p");
        empty.className = "muted";
        empty.textContent = "No candidate plans yet — start a training run.";
        container.appendChild(empty);
        return;
    }
    for (const model of models) {
        const card = document.createElement("div");
        card.className = "plan-card";
        card.dataset.planId = model.id;

        const head = document.createElement("div");
        head.className = "plan-head";
        const badge = model.feasible ? "feasible" : "infeasible";
        head.innerHTML = `<h3>${model.id}</h3>` +
            `<span class="badge ${badge}">${badge}</span>` +
            `<span class="muted">${model.agent}</span>`;
        card.appendChild(head);

        const stats = document.createElement("dl");
        stats.className = "plan-stats";
        const rows: [string, string][] = [
            ["social benefit", fmt(model.socialBenefit)],
            ["mean priority", `${fmt(model.meanPriority)}` +
                (model.threshold != null ? ` (needs ≥ ${fmt(model.threshold)})` : "")],
            ["cost", fmt(model.totalCost) +
                (model.budget != null ? ` of ${fmt(model.budget)}` : "")],
            ["duration", `${fmt(model.totalDuration)} months` +
                (model.horizon != null ? ` of ${fmt(model.horizon)}` : "")],
        ];
        for (const [label, value] of rows) {
            const dt = document.createElement("dt");
            dt.textContent = label;
            const dd = document.createElement("dd");
            dd.textContent = value;
            stats.append(dt, dd);
        }
        card.appendChild(stats);

        const order = document.createElement("ol");
        order.className = "plan-items";
        for (const item of model.items) {
            const li = document.createElement("li");
            li.textContent = item.id;
            if (item.isDependency) {
                const tag = document.createElement("span");
                tag.className = "dep-badge";
                tag.textContent = "dependency";
                li.appendChild(tag);
            }
            order.appendChild(li);
        }
        card.appendChild(order);

        const lanes = document.createElement("div");
        lanes.className = "swimlanes";
        model.swimlanes.forEach((lane, index) => {
            const row = document.createElement("div");
            row.className = "swimlane";
            row.innerHTML = `<span class="lane-label">batch ${index + 1}</span>` +
                lane.map((id) => `<span class="lane-item">${id}</span>`).join("");
            lanes.appendChild(row);
        });
        card.appendChild(lanes);

        const apply = document.createElement("button");
        apply.className = "apply-button";
        apply.textContent = `Apply ${model.id}`;
        apply.addEventListener("click", () => onApply(model.id));
        card.appendChild(apply);

        container.appendChild(card);
    }
}
