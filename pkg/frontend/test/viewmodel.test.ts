import { describe, expect, it } from "vitest";

import { parseReferences } from "../src/refs.js";
import type { MemoryModel, TreeResponse } from "../src/types.js";
import { canvasView, cardView, resolveChip, timelineView } from "../src/viewmodel.js";

function memory(over: Partial<MemoryModel>): MemoryModel {
    return {
        id: "mem_0001", source: "snippet", title: "T", summary: "S",
        contextSentence: "C", tags: ["a"], rawText: null, imageRef: null,
        userMemo: null,
        provenance: { appName: "Chrome", windowTitle: "W", url: null },
        capturedAt: 1_700_000_000_000, branchId: null, hidden: false,
        archived: false, updatedBadge: false, perceptualHash: null,
        sequence: 1, ...over,
    };
}

function tree(memories: MemoryModel[], branches: TreeResponse["branches"] = []): TreeResponse {
    return { sessionId: "s", version: 1, summary: "sum", memories, branches, links: [] };
}

describe("canvas view", () => {
    it("renders one group with two cards", () => {
        const t = tree(
            [memory({ id: "m1", branchId: "b1", sequence: 1 }),
             memory({ id: "m2", branchId: "b1", sequence: 2 })],
            [{ id: "b1", name: "G", summary: "", tags: [], parentId: null, createdAt: 1 }]);
        const view = canvasView(t);
        expect(view.groups).toHaveLength(1);
        expect(view.groups[0].cards.map((c) => c.memoryId)).toEqual(["m2", "m1"]);
        expect(view.unclustered).toHaveLength(0);
    });

    it("omits hidden and archived cards", () => {
        const t = tree([
            memory({ id: "m1", hidden: true }),
            memory({ id: "m2", sequence: 2, archived: true }),
            memory({ id: "m3", sequence: 3 }),
        ]);
        const view = canvasView(t);
        expect(view.unclustered.map((c) => c.memoryId)).toEqual(["m3"]);
    });

    it("nests child branches inside parents", () => {
        const t = tree(
            [memory({ id: "m1", branchId: "b2" })],
            [{ id: "b1", name: "Parent", summary: "", tags: [], parentId: null, createdAt: 1 },
             { id: "b2", name: "Child", summary: "", tags: [], parentId: "b1", createdAt: 2 }]);
        const view = canvasView(t);
        expect(view.groups).toHaveLength(1);
        expect(view.groups[0].children[0].name).toBe("Child");
        expect(view.groups[0].children[0].cards[0].memoryId).toBe("m1");
    });

    it("is deterministic for identical input", () => {
        const t = tree(
            [memory({ id: "m1" }), memory({ id: "m2", sequence: 2 })],
            [{ id: "b1", name: "G", summary: "", tags: [], parentId: null, createdAt: 1 }]);
        expect(JSON.stringify(canvasView(t))).toBe(JSON.stringify(canvasView(t)));
    });
});

describe("card view", () => {
    it("colors by source and shows memo stickies only for snippets", () => {
        expect(cardView(memory({ source: "snippet", userMemo: "note" })).memo).toBe("note");
        expect(cardView(memory({ source: "snippet" })).color).toBe("#f5d76e");
        expect(cardView(memory({ source: "observation" })).color).toBe("#7ec8a9");
        expect(cardView(memory({ source: "chat", provenance: { appName: "", windowTitle: "", url: null } })).color)
            .toBe("#7fa8f5");
    });

    it("carries the updated badge and provenance line", () => {
        const view = cardView(memory({ updatedBadge: true }));
        expect(view.updatedBadge).toBe(true);
        expect(view.provenanceLine).toContain("Chrome — W");
    });
});

describe("timeline", () => {
    it("orders newest first, keeps hidden, drops archived", () => {
        const t = tree([
            memory({ id: "m1", sequence: 1 }),
            memory({ id: "m2", sequence: 2, hidden: true }),
            memory({ id: "m3", sequence: 3, archived: true }),
        ]);
        expect(timelineView(t).map((c) => c.memoryId)).toEqual(["m2", "m1"]);
    });
});

describe("chip resolution", () => {
    it("resolves known memories and branches, flags missing", () => {
        const t = tree(
            [memory({ id: "m1" })],
            [{ id: "b1", name: "G", summary: "", tags: [], parentId: null, createdAt: 1 }]);
        const text = "see (((T(m1)))) and (((cluster: G(b1)))) and (((Gone(m404))))";
        const [memTag, clusterTag, ghostTag] = parseReferences(text);
        expect(resolveChip(memTag, t)).toMatchObject({ resolved: true, targetKind: "memory" });
        expect(resolveChip(clusterTag, t)).toMatchObject({ resolved: true, targetKind: "branch" });
        expect(resolveChip(ghostTag, t)).toMatchObject({ resolved: false, targetKind: null });
    });
});
