// City graph rendering: force-directed layout of units and roads, with the
// damage colour code (red = damaged, green = intact/rebuilt) and directed
// arrows for precedence constraints. Pure model helpers are separated from
// the d3 layer so they can be tested headlessly.

import * as d3 from "d3";
import type { DatasetDoc, DependencyRow, RoadRow, UnitRow } from "./types";

export const DAMAGED_COLOR = "#c0392b";
export const INTACT_COLOR = "#27ae60";

export interface GraphNode extends d3.SimulationNodeDatum {
    id: string;
    unit: UnitRow;
}

export interface GraphLink extends d3.SimulationLinkDatum<GraphNode> {
    source: string | GraphNode;
    target: string | GraphNode;
    road: RoadRow;
}

export interface GraphModel {
    nodes: GraphNode[];
    links: GraphLink[];
    dependencies: DependencyRow[];
}

export function nodeColor(unit: Pick<UnitRow, "status">): string {
    return unit.status === 0 ? DAMAGED_COLOR : INTACT_COLOR;
}

export function edgeStroke(road: Pick<RoadRow, "status">): string {
    return road.status === 0 ? DAMAGED_COLOR : "#2c3e50";
}

export function edgeDash(road: Pick<RoadRow, "status">): string {
    return road.status === 0 ? "5,4" : "";
}

export function roadKey(road: Pick<RoadRow, "from" | "to">): string {
    return `${road.from}-${road.to}`;
}

export function unitTooltip(unit: UnitRow): string {
    return [
        `${unit.id} — ${unit.kind}`,
        `priority ${unit.priority}`,
        `cost ${unit.cost}`,
        `time ${unit.time} months`,
        `${unit.direct_benefit} people/day`,
    ].join("\n");
}

export function buildGraphModel(dataset: DatasetDoc): GraphModel {
    const nodes = dataset.units.map((unit) => ({ id: unit.id, unit }));
    const links = dataset.roads.map((road) => ({
        source: road.from,
        target: road.to,
        road,
    }));
    return { nodes, links, dependencies: dataset.dependencies };
}

/** Ids whose colour flips to intact between two snapshots (e.g. after apply). */
export function recoloredIds(before: DatasetDoc, after: DatasetDoc): string[] {
    const wasDamaged = new Set<string>();
    for (const unit of before.units) if (unit.status === 0) wasDamaged.add(unit.id);
    for (const road of before.roads) if (road.status === 0) wasDamaged.add(roadKey(road));
    const turned: string[] = [];
    for (const unit of after.units) {
        if (unit.status === 1 && wasDamaged.has(unit.id)) turned.push(unit.id);
    }
    for (const road of after.roads) {
        if (road.status === 1 && wasDamaged.has(roadKey(road))) turned.push(roadKey(road));
    }
    return turned.sort();
}

export class CityGraph {
    private svg: d3.Selection<SVGSVGElement, unknown, null, undefined>;
    private simulation: d3.Simulation<GraphNode, GraphLink> | null = null;
    private tooltip: HTMLDivElement;
    private positions = new Map<string, { x: number; y: number }>();

    constructor(private readonly container: HTMLElement,
                private readonly width = 640,
                private readonly height = 440) {
        this.svg = d3.select(container).append("svg")
            .attr("viewBox", `0 0 ${width} ${height}`)
            .attr("width", "100%");
        const defs = this.svg.append("defs");
        defs.append("marker")
            .attr("id", "dep-arrow")
            .attr("viewBox", "0 -5 10 10")
            .attr("refX", 18)
            .attr("markerWidth", 7)
            .attr("markerHeight", 7)
            .attr("orient", "auto")
            .append("path")
            .attr("d", "M0,-5L10,0L0,5")
            .attr("fill", "#8e44ad");
        this.tooltip = document.createElement("div");
        this.tooltip.className = "graph-tooltip";
        this.tooltip.style.display = "none";
        container.appendChild(this.tooltip);
    }

    /** Render (or re-render) the snapshot; node positions persist across
     *  updates so an applied plan recolours in place. */
    update(dataset: DatasetDoc): void {
        const model = buildGraphModel(dataset);
        for (const node of model.nodes) {
            const kept = this.positions.get(node.id);
            if (kept) {
                node.x = kept.x;
                node.y = kept.y;
            }
        }
        this.svg.selectAll("g").remove();
        const roadLayer = this.svg.append("g");
        const depLayer = this.svg.append("g");
        const nodeLayer = this.svg.append("g");

        const roads = roadLayer.selectAll("line")
            .data(model.links)
            .join("line")
            .attr("stroke", (l) => edgeStroke(l.road))
            .attr("stroke-dasharray", (l) => edgeDash(l.road))
            .attr("stroke-width", 1.6);

        const byId = new Map(model.nodes.map((n) => [n.id, n]));
        const depPairs = model.dependencies
            .filter((d) => byId.has(d.blocked) && byId.has(d.blocker));
        const deps = depLayer.selectAll("line")
            .data(depPairs)
            .join("line")
            .attr("stroke", "#8e44ad")
            .attr("stroke-width", 1.2)
            .attr("marker-end", "url(#dep-arrow)");

        const nodes = nodeLayer.selectAll<SVGCircleElement, GraphNode>("circle")
            .data(model.nodes, (n: GraphNode) => n.id)
            .join("circle")
            .attr("r", 9)
            .attr("fill", (n) => nodeColor(n.unit))
            .attr("stroke", "#1b2631")
            .attr("data-id", (n) => n.id);

        nodes.on("mouseenter", (event: MouseEvent, n: GraphNode) => {
            this.tooltip.textContent = unitTooltip(n.unit);
            this.tooltip.style.display = "block";
            this.tooltip.style.left = `${event.offsetX + 14}px`;
            this.tooltip.style.top = `${event.offsetY + 14}px`;
        }).on("mouseleave", () => {
            this.tooltip.style.display = "none";
        });

        const labels = nodeLayer.selectAll<SVGTextElement, GraphNode>("text")
            .data(model.nodes, (n: GraphNode) => n.id)
            .join("text")
            .attr("font-size", 9)
            .attr("dy", -12)
            .attr("text-anchor", "middle")
            .text((n) => n.id);

        const place = () => {
            roads
                .attr("x1", (l) => (l.source as GraphNode).x ?? 0)
                .attr("y1", (l) => (l.source as GraphNode).y ?? 0)
                .attr("x2", (l) => (l.target as GraphNode).x ?? 0)
                .attr("y2", (l) => (l.target as GraphNode).y ?? 0);
            deps
                .attr("x1", (d) => byId.get(d.blocked)?.x ?? 0)
                .attr("y1", (d) => byId.get(d.blocked)?.y ?? 0)
                .attr("x2", (d) => byId.get(d.blocker)?.x ?? 0)
                .attr("y2", (d) => byId.get(d.blocker)?.y ?? 0);
            nodes.attr("cx", (n) => n.x ?? 0).attr("cy", (n) => n.y ?? 0);
            labels.attr("x", (n) => n.x ?? 0).attr("y", (n) => n.y ?? 0);
            for (const n of model.nodes) {
                this.positions.set(n.id, { x: n.x ?? 0, y: n.y ?? 0 });
            }
        };

        this.simulation?.stop();
        this.simulation = d3.forceSimulation(model.nodes)
            .force("link", d3.forceLink<GraphNode, GraphLink>(model.links)
                .id((n) => n.id)
                .distance((l) => 30 + 10 * l.road.length))
            .force("charge", d3.forceManyBody().strength(-180))
            .force("center", d3.forceCenter(this.width / 2, this.height / 2))
            .on("tick", place);
    }
}
