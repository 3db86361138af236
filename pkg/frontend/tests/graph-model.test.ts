import { describe, expect, it } from "vitest";

import {
    buildGraphModel, DAMAGED_COLOR, edgeDash, edgeStroke, INTACT_COLOR,
    nodeColor, recoloredIds, roadKey, unitTooltip,
} from "../src/graph";
import type { DatasetDoc, UnitRow } from "../src/types";

const unit = (id: string, status: 0 | 1): UnitRow => ({
    id, kind: "Residential Area", vulnerability: status === 0 ? 2 : 5,
    status, cost: 10, time: 5, priority: 9, direct_benefit: 25,
});

const dataset = (): DatasetDoc => ({
    cycle: 1,
    units: [unit("a", 0), unit("b", 1), unit("c", 0)],
    roads: [
        { from: "a", to: "b", status: 1, length: 1, cost: 0, time: 0, priority: 8, direct_benefit: 0 },
        { from: "b", to: "c", status: 0, length: 2, cost: 4, time: 2, priority: 8, direct_benefit: 0 },
    ],
    dependencies: [{ blocked: "c", blocker: "b-c" }],
});

describe("damage colour code", () => {
    it("paints damaged units red and intact units green", () => {
        expect(nodeColor({ status: 0 })).toBe(DAMAGED_COLOR);
        expect(nodeColor({ status: 1 })).toBe(INTACT_COLOR);
    });

    it("draws damaged roads red and dashed, intact roads solid", () => {
        expect(edgeStroke({ status: 0 })).toBe(DAMAGED_COLOR);
        expect(edgeDash({ status: 0 })).toBe("5,4");
        expect(edgeDash({ status: 1 })).toBe("");
        expect(edgeStroke({ status: 1 })).not.toBe(DAMAGED_COLOR);
    });
});

describe("graph model", () => {
    it("keeps every unit, road, and dependency", () => {
        const model = buildGraphModel(dataset());
        expect(model.nodes.map((n) => n.id)).toEqual(["a", "b", "c"]);
        expect(model.links).toHaveLength(2);
        expect(model.dependencies).toEqual([{ blocked: "c", blocker: "b-c" }]);
    });

    it("tooltips expose kind, priority, cost, time, and population", () => {
        const text = unitTooltip(unit("a", 0));
        for (const fragment of ["Residential Area", "priority 9", "cost 10",
                                "time 5", "25 people/day"]) {
            expect(text).toContain(fragment);
        }
    });

    it("road keys follow the endpoint-pair convention", () => {
        expect(roadKey({ from: "7", to: "22" })).toBe("7-22");
    });
});

describe("recolouring after an applied plan", () => {
    it("reports exactly the items that turned intact", () => {
        const before = dataset();
        const after = dataset();
        after.cycle = 2;
        after.units = [unit("a", 1), unit("b", 1), unit("c", 0)];
        after.roads = before.roads.map((r) =>
            r.from === "b" ? { ...r, status: 1 as const } : r);
        expect(recoloredIds(before, after)).toEqual(["a", "b-c"]);
    });

    it("is empty when nothing changed", () => {
        expect(recoloredIds(dataset(), dataset())).toEqual([]);
    });
});
