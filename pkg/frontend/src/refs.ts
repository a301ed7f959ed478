// Inline reference grammar: (((title(id)))) and (((cluster: name(id)))).
// Mirrors the engine's parser: labels may contain parens but never span
// another ((( opener; the id is the last paren group before the )))).

export interface ReferenceTag {
    kind: "memory" | "cluster";
    label: string;
    refId: string;
    start: number;
    end: number;
}

const LABEL = "(?:(?!\\(\\(\\()[^\\n])*?";
const TAG_RE = new RegExp(
    "\\(\\(\\((?:cluster:[ \\t]*(" + LABEL + ")|(" + LABEL + "))" +
    "\\(([^()\\n]+)\\)\\)\\)\\)", "g");

export function parseReferences(text: string): ReferenceTag[] {
    const tags: ReferenceTag[] = [];
    for (const match of text.matchAll(TAG_RE)) {
        const [full, clusterLabel, memoryLabel, refId] = match;
        tags.push({
            kind: clusterLabel !== undefined ? "cluster" : "memory",
            label: clusterLabel !== undefined ? clusterLabel : memoryLabel,
            refId,
            start: match.index ?? 0,
            end: (match.index ?? 0) + full.length,
        });
    }
    return tags;
}

export interface MessageSegment {
    kind: "text" | "chip";
    text: string;
    tag?: ReferenceTag;
}

// Split a chat message into prose and chip segments for rendering.
export function segmentMessage(text: string): MessageSegment[] {
    const segments: MessageSegment[] = [];
    let cursor = 0;
    for (const tag of parseReferences(text)) {
        if (tag.start > cursor) {
            segments.push({ kind: "text", text: text.slice(cursor, tag.start) });
        }
        segments.push({ kind: "chip", text: tag.label, tag });
        cursor = tag.end;
    }
    if (cursor < text.length) {
        segments.push({ kind: "text", text: text.slice(cursor) });
    }
    return segments;
}
