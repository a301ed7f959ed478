// Wire types for the /v1 API.

export interface Provenance {
    appName: string;
    windowTitle: string;
    url: string | null;
}

export interface MemoryModel {
    id: string;
    source: "snippet" | "observation" | "chat";
    title: string;
    summary: string;
    contextSentence: string;
    tags: string[];
    rawText: string | null;
    imageRef: string | null;
    userMemo: string | null;
    provenance: Provenance;
    capturedAt: number;
    branchId: string | null;
    hidden: boolean;
    archived: boolean;
    updatedBadge: boolean;
    perceptualHash: string | null;
    sequence: number;
}

export interface BranchModel {
    id: string;
    name: string;
    summary: string;
    tags: string[];
    parentId: string | null;
    createdAt: number;
}

export interface LinkModel {
    memoryA: string;
    memoryB: string;
    score: number;
}

export interface TreeResponse {
    sessionId: string;
    version: number;
    summary: string;
    memories: MemoryModel[];
    branches: BranchModel[];
    links: LinkModel[];
}

export interface MutationResponse {
    result: Record<string, unknown>;
    tree: TreeResponse;
}

export interface ChatCandidate {
    label: "A" | "B";
    text: string;
    references: ReferenceTagWire[];
}

export interface ReferenceTagWire {
    kind: "memory" | "cluster";
    label: string;
    refId: string;
    span: [number, number];
}

export interface ChatResponse {
    queryId: string;
    pendingChoice: boolean;
    text: string | null;
    references: ReferenceTagWire[];
    gate: Record<string, unknown> | null;
    candidates: ChatCandidate[] | null;
}

export interface SessionResponse {
    sessionId: string;
    manifest: Record<string, unknown>;
}
