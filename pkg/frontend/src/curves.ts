// Training reward chart: the raw per-episode series plus the server-computed
// moving average. The client never recomputes metrics, it only draws them.

import * as d3 from "d3";
import type { CurveSeries } from "./types";

export class RewardChart {
    private svg: d3.Selection<SVGSVGElement, unknown, null, undefined>;

    constructor(container: HTMLElement,
                private readonly width = 560,
                private readonly height = 240,
                private readonly margin = { top: 12, right: 12, bottom: 28, left: 44 }) {
        this.svg = d3.select(container).append("svg")
            .attr("viewBox", `0 0 ${width} ${height}`)
            .attr("width", "100%");
    }

    update(series: CurveSeries): void {
        this.svg.selectAll("*").remove();
        if (series.episode.length === 0) return;

        const x = d3.scaleLinear()
            .domain([1, series.episode[series.episode.length - 1]])
            .range([this.margin.left, this.width - this.margin.right]);
        const rewards = series.reward.concat(series.reward_ma100);
        const y = d3.scaleLinear()
            .domain([Math.min(0, d3.min(rewards) ?? 0), d3.max(rewards) ?? 1])
            .nice()
            .range([this.height - this.margin.bottom, this.margin.top]);

        this.svg.append("g")
            .attr("transform", `translate(0,${this.height - this.margin.bottom})`)
            .call(d3.axisBottom(x).ticks(6));
        this.svg.append("g")
            .attr("transform", `translate(${this.margin.left},0)`)
            .call(d3.axisLeft(y).ticks(5));

        const rawLine = d3.line<number>()
            .x((_, i) => x(series.episode[i]))
            .y((value) => y(value));
        this.svg.append("path")
            .datum(series.reward)
            .attr("fill", "none")
            .attr("stroke", "#7fb3d5")
            .attr("stroke-width", 1)
            .attr("opacity", 0.6)
            .attr("d", rawLine);
        this.svg.append("path")
            .datum(series.reward_ma100)
            .attr("fill", "none")
            .attr("stroke", "#1a5276")
            .attr("stroke-width", 2)
            .attr("d", rawLine);
    }
}
