// Dashboard bootstrap: wires the store to the graph, plan board, cycle
// history, and training controls.

import { ApiClient } from "./api";
import { RewardChart } from "./curves";
import { CityGraph } from "./graph";
import { cardModels, renderPlanBoard } from "./plans";
import { AppStore } from "./state";
import type { AppState } from "./state";

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
}

const store = new AppStore(new ApiClient(""));
const graph = new CityGraph(el("graph"));
const chart = new RewardChart(el("curve"));

function renderBanner(state: AppState): void {
    const banner = el("banner");
    if (!state.banner) {
        banner.style.display = "none";
        return;
    }
    banner.style.display = "flex";
    banner.className = `banner ${state.banner.kind}`;
    el("banner-message").textContent = state.banner.message;
}

function renderStatus(state: AppState): void {
    const status = el("job-status");
    if (state.job) {
        const { status: s, episodes_done, total_episodes } = state.job;
        const tail = state.job.reward_tail;
        const last = tail.length ? ` · reward ${tail[tail.length - 1].toFixed(1)}` : "";
        status.textContent = `${s} · episode ${episodes_done}/${total_episodes}${last}`;
    } else {
        status.textContent = "idle";
    }
    (el("train-button") as HTMLButtonElement).disabled = state.busy;
}

function renderCycles(state: AppState): void {
    const list = el("cycle-history");
    list.replaceChildren();
    for (const record of state.cycles) {
        const li = document.createElement("li");
        const applied = record.selected ? `applied ${record.selected}` : "open";
        li.textContent = `cycle ${record.cycle} · threshold ≥ ${record.threshold} · ${applied}`;
        list.appendChild(li);
    }
}

let lastDatasetJson = "";

store.subscribe((state) => {
    renderBanner(state);
    renderStatus(state);
    renderCycles(state);
    if (state.dataset) {
        const serialized = JSON.stringify(state.dataset);
        if (serialized !== lastDatasetJson) {
            lastDatasetJson = serialized;
            graph.update(state.dataset);
            el("cycle-label").textContent = `cycle ${state.dataset.cycle}`;
        }
    }
    if (state.plans) {
        const models = cardModels(state.plans, state.request.budget,
                                  state.request.horizon);
        renderPlanBoard(el("plans"), models, (planId) => void store.apply(planId));
    }
    if (state.curves) chart.update(state.curves);
});

el("train-button").addEventListener("click", () => {
    const read = (id: string) => Number((el(id) as HTMLInputElement).value);
    store.setRequest({
        budget: read("budget"),
        horizon: read("horizon"),
        episodes: read("episodes"),
        agent: (el("agent") as HTMLSelectElement).value,
    });
    void store.train();
});

el("banner-retry").addEventListener("click", () => {
    store.clearBanner();
    void store.refresh();
});

void store.refresh();
