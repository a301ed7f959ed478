// Pure projections from the authoritative TreeResponse to view structures.
// The UI holds no truth of its own: every view is a function of the
// latest API payloads.

import type { ReferenceTag } from "./refs.js";
import type { BranchModel, MemoryModel, TreeResponse } from "./types.js";

export const SOURCE_COLORS: Record<MemoryModel["source"], string> = {
    snippet: "#f5d76e",      // yellow
    observation: "#7ec8a9",  // green
    chat: "#7fa8f5",         // blue
};

export interface CardView {
    memoryId: string;
    title: string;
    provenanceLine: string;
    contentPreview: string;
    tags: string[];
    contextSentence: string;
    memo: string | null;
    color: string;
    updatedBadge: boolean;
    hidden: boolean;
    archived: boolean;
    source: MemoryModel["source"];
    sequence: number;
}

export interface GroupView {
    branchId: string;
    name: string;
    summary: string;
    children: GroupView[];
    cards: CardView[];
}

export interface CanvasView {
    groups: GroupView[];      // roots, nesting mirrors parent links
    unclustered: CardView[];
}

export function cardView(memory: MemoryModel): CardView {
    const prov = [memory.provenance.appName, memory.provenance.windowTitle]
        .filter(Boolean).join(" — ");
    const when = new Date(memory.capturedAt).toISOString().slice(0, 16).replace("T", " ");
    const preview = memory.rawText ?? memory.summary;
    return {
        memoryId: memory.id,
        title: memory.title,
        provenanceLine: prov ? `${prov} · ${when}` : when,
        contentPreview: preview.length > 160 ? preview.slice(0, 157) + "..." : preview,
        tags: memory.tags,
        contextSentence: memory.contextSentence,
        memo: memory.source === "snippet" ? memory.userMemo : null,
        color: SOURCE_COLORS[memory.source],
        updatedBadge: memory.updatedBadge,
        hidden: memory.hidden,
        archived: memory.archived,
        source: memory.source,
        sequence: memory.sequence,
    };
}

// Hidden and archived cards stay off the canvas; ordering is
// deterministic (branches by creation, cards newest-first).
export function canvasView(tree: TreeResponse): CanvasView {
    const visible = tree.memories.filter((m) => !m.hidden && !m.archived);
    const byBranch = new Map<string | null, MemoryModel[]>();
    for (const memory of visible) {
        const key = memory.branchId;
        if (!byBranch.has(key)) byBranch.set(key, []);
        byBranch.get(key)!.push(memory);
    }
    for (const members of byBranch.values()) {
        members.sort((a, b) => b.sequence - a.sequence);
    }

    const childIndex = new Map<string | null, BranchModel[]>();
    for (const branch of tree.branches) {
        const key = branch.parentId;
        if (!childIndex.has(key)) childIndex.set(key, []);
        childIndex.get(key)!.push(branch);
    }
    for (const children of childIndex.values()) {
        children.sort((a, b) => a.createdAt - b.createdAt || a.id.localeCompare(b.id));
    }

    const build = (branch: BranchModel): GroupView => ({
        branchId: branch.id,
        name: branch.name,
        summary: branch.summary,
        children: (childIndex.get(branch.id) ?? []).map(build),
        cards: (byBranch.get(branch.id) ?? []).map(cardView),
    });

    return {
        groups: (childIndex.get(null) ?? []).map(build),
        unclustered: (byBranch.get(null) ?? []).map(cardView),
    };
}

export function timelineView(tree: TreeResponse): CardView[] {
    return [...tree.memories]
        .filter((m) => !m.archived)
        .sort((a, b) => b.sequence - a.sequence)
        .map(cardView);
}

export interface ChipResolution {
    tag: ReferenceTag;
    resolved: boolean;
    targetKind: "memory" | "branch" | null;
}

// A chip resolves when its id names a live memory or branch; anything
// else renders as an explicit "missing reference" chip.
export function resolveChip(tag: ReferenceTag, tree: TreeResponse): ChipResolution {
    if (tag.kind === "cluster") {
        const hit = tree.branches.some((b) => b.id === tag.refId);
        return { tag, resolved: hit, targetKind: hit ? "branch" : null };
    }
    const hit = tree.memories.some((m) => m.id === tag.refId);
    return { tag, resolved: hit, targetKind: hit ? "memory" : null };
}
