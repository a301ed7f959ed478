// Typed client for the /v1 API. Counts calls so tests can assert the
// one-gesture-one-call rule.

import type {
    ChatResponse,
    MutationResponse,
    SessionResponse,
    TreeResponse,
} from "./types.js";

export class ApiError extends Error {
    constructor(public code: string, message: string, public status: number) {
        super(message);
    }
}

export class ApiClient {
    callCount = 0;

    constructor(private baseUrl: string, private sessionId: string = "",
                private token: string = "") {}

    get session(): string {
        return this.sessionId;
    }

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        this.callCount += 1;
        const headers: Record<string, string> = { "content-type": "application/json" };
        if (this.token) headers["authorization"] = `Bearer ${this.token}`;
        const resp = await fetch(`${this.baseUrl}${path}`, {
            method,
            headers,
            body: body === undefined ? undefined : JSON.stringify(body),
        });
        const payload = await resp.json();
        if (!resp.ok) {
            throw new ApiError(payload.code ?? "internal",
                               payload.message ?? resp.statusText, resp.status);
        }
        return payload as T;
    }

    async createSession(): Promise<SessionResponse> {
        const created = await this.request<SessionResponse>("POST", "/v1/sessions", {});
        this.sessionId = created.sessionId;
        return created;
    }

    async openSession(sessionId: string): Promise<SessionResponse> {
        const got = await this.request<SessionResponse>("GET", `/v1/sessions/${sessionId}`);
        this.sessionId = sessionId;
        return got;
    }

    getTree(): Promise<TreeResponse> {
        return this.request("GET", `/v1/sessions/${this.sessionId}/tree`);
    }

    getSummary(): Promise<{ summary: string; version: number }> {
        return this.request("GET", `/v1/sessions/${this.sessionId}/summary`);
    }

    captureSnippet(text: string, userMemo: string | null, provenance: {
        appName: string; windowTitle: string; url?: string | null;
    }): Promise<Record<string, unknown>> {
        return this.request("POST", `/v1/sessions/${this.sessionId}/capture/snippet`,
                            { text, userMemo, provenance });
    }

    captureObservation(imageBase64: string, provenance: {
        appName: string; windowTitle: string; url?: string | null;
    }): Promise<Record<string, unknown>> {
        return this.request("POST",
                            `/v1/sessions/${this.sessionId}/capture/observation`,
                            { imageBase64, provenance });
    }

    chat(message: string, explicitMemoryIds: string[] = [],
         explicitBranchIds: string[] = [], probe = false): Promise<ChatResponse> {
        return this.request("POST", `/v1/sessions/${this.sessionId}/chat`,
                            { message, explicitMemoryIds, explicitBranchIds, probe });
    }

    probeChoice(queryId: string, chosen: "A" | "B"): Promise<MutationResponse> {
        return this.request("POST", `/v1/sessions/${this.sessionId}/probe/choice`,
                            { queryId, chosen });
    }

    moveMemory(memoryId: string, targetBranchId: string | null): Promise<MutationResponse> {
        return this.request("POST", `/v1/sessions/${this.sessionId}/tree/move`,
                            { memoryId, targetBranchId });
    }

    groupMemories(memoryIds: string[], name: string | null): Promise<MutationResponse> {
        return this.request("POST", `/v1/sessions/${this.sessionId}/tree/group`,
                            { memoryIds, name });
    }

    reorg(instruction: string, memoryIds?: string[],
          branchIds?: string[]): Promise<MutationResponse> {
        return this.request("POST", `/v1/sessions/${this.sessionId}/tree/reorg`,
                            { instruction, memoryIds, branchIds });
    }

    editMemory(memoryId: string, edit: {
        title?: string; summary?: string; contextSentence?: string;
        tags?: string[]; userMemo?: string;
    }): Promise<MutationResponse> {
        return this.request("POST",
                            `/v1/sessions/${this.sessionId}/memories/${memoryId}`, edit);
    }

    setVisibility(memoryId: string, hidden: boolean,
                  archived: boolean): Promise<MutationResponse> {
        return this.request(
            "POST",
            `/v1/sessions/${this.sessionId}/memories/${memoryId}/visibility`,
            { hidden, archived });
    }

    deleteBranch(branchId: string): Promise<MutationResponse> {
        return this.request("DELETE",
                            `/v1/sessions/${this.sessionId}/branches/${branchId}`);
    }
}
