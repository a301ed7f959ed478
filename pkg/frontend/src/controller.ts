// Gesture layer: every user gesture issues exactly one API call and the
// view state is replaced from the authoritative response. No optimistic
// divergence; on error the state is left untouched and a toast is queued.

import { ApiClient, ApiError } from "./api.js";
import type { ChatResponse, MutationResponse, TreeResponse } from "./types.js";
import type { ReferenceTagWire, ChatCandidate } from "./types.js";

export interface ChatEntry {
    role: "user" | "assistant";
    text: string;
    references: ReferenceTagWire[];
}

export interface PendingPair {
    queryId: string;
    message: string;
    candidates: ChatCandidate[];
}

export interface AppState {
    tree: TreeResponse | null;
    chatLog: ChatEntry[];
    pendingPair: PendingPair | null;
    selection: string[];        // multi-selected card ids
    staged: string[];           // add-to-chat / @-mention refs for next message
    stagedBranches: string[];
    toasts: string[];
}

export class Controller {
    state: AppState = {
        tree: null, chatLog: [], pendingPair: null,
        selection: [], staged: [], stagedBranches: [], toasts: [],
    };
    onChange: (state: AppState) => void = () => {};

    constructor(public api: ApiClient) {}

    private emit() {
        this.onChange(this.state);
    }

    private fail(err: unknown) {
        const message = err instanceof ApiError ? `${err.code}: ${err.message}`
            : String(err);
        this.state.toasts = [...this.state.toasts, message];
        this.emit();
    }

    private applyMutation(resp: MutationResponse) {
        this.state.tree = resp.tree;
        this.emit();
    }

    /** Poll tick: refresh only when the engine version moved. */
    async refresh(): Promise<void> {
        try {
            const tree = await this.api.getTree();
            if (!this.state.tree || tree.version !== this.state.tree.version) {
                this.state.tree = tree;
                this.emit();
            }
        } catch (err) {
            this.fail(err);
        }
    }

    async dragMove(memoryId: string, targetBranchId: string | null): Promise<void> {
        try {
            this.applyMutation(await this.api.moveMemory(memoryId, targetBranchId));
        } catch (err) {
            this.fail(err);
        }
    }

    async groupCreate(memoryIds: string[], name: string | null = null): Promise<void> {
        try {
            this.applyMutation(await this.api.groupMemories(memoryIds, name));
            this.state.selection = [];
            this.emit();
        } catch (err) {
            this.fail(err);
        }
    }

    async reorgPrompt(instruction: string, memoryIds?: string[]): Promise<void> {
        try {
            this.applyMutation(await this.api.reorg(instruction, memoryIds));
        } catch (err) {
            this.fail(err);
        }
    }

    async editCard(memoryId: string, edit: {
        title?: string; summary?: string; contextSentence?: string;
        tags?: string[]; userMemo?: string;
    }): Promise<void> {
        try {
            this.applyMutation(await this.api.editMemory(memoryId, edit));
        } catch (err) {
            this.fail(err);
        }
    }

    async toggleVisibility(memoryId: string, hidden: boolean,
                           archived: boolean): Promise<void> {
        try {
            this.applyMutation(await this.api.setVisibility(memoryId, hidden, archived));
        } catch (err) {
            this.fail(err);
        }
    }

    /** Add-to-chat / @-mention staging is local; the API call happens on send. */
    stageForChat(memoryId: string) {
        if (!this.state.staged.includes(memoryId)) {
            this.state.staged = [...this.state.staged, memoryId];
            this.emit();
        }
    }

    stageBranchForChat(branchId: string) {
        if (!this.state.stagedBranches.includes(branchId)) {
            this.state.stagedBranches = [...this.state.stagedBranches, branchId];
            this.emit();
        }
    }

    toggleSelect(memoryId: string) {
        this.state.selection = this.state.selection.includes(memoryId)
            ? this.state.selection.filter((id) => id !== memoryId)
            : [...this.state.selection, memoryId];
        this.emit();
    }

    async sendChat(message: string, probe = false): Promise<ChatResponse | null> {
        const memoryIds = this.state.staged;
        const branchIds = this.state.stagedBranches;
        this.state.chatLog = [...this.state.chatLog,
                              { role: "user", text: message, references: [] }];
        this.emit();
        try {
            const resp = await this.api.chat(message, memoryIds, branchIds, probe);
            this.state.staged = [];
            this.state.stagedBranches = [];
            if (resp.pendingChoice && resp.candidates) {
                this.state.pendingPair = {
                    queryId: resp.queryId, message, candidates: resp.candidates,
                };
            } else if (resp.text !== null) {
                this.state.chatLog = [...this.state.chatLog, {
                    role: "assistant", text: resp.text, references: resp.references,
                }];
            }
            this.emit();
            return resp;
        } catch (err) {
            this.fail(err);
            return null;
        }
    }

    async chooseProbe(chosen: "A" | "B"): Promise<void> {
        const pair = this.state.pendingPair;
        if (!pair) return;
        try {
            const resp = await this.api.probeChoice(pair.queryId, chosen);
            const candidate = pair.candidates.find((c) => c.label === chosen)!;
            this.state.pendingPair = null;
            this.state.chatLog = [...this.state.chatLog, {
                role: "assistant", text: candidate.text,
                references: candidate.references,
            }];
            this.applyMutation(resp);
        } catch (err) {
            this.fail(err);
        }
    }
}
