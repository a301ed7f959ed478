// DOM rendering: a pure function of AppState. Re-rendered wholesale on
// every state change; gestures are wired back into the controller.

import type { Controller, AppState, ChatEntry } from "./controller.js";
import { segmentMessage } from "./refs.js";
import { canvasView, cardView, resolveChip, timelineView } from "./viewmodel.js";
import type { CardView, GroupView } from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className = "", text = ""): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text) node.textContent = text;
    return node;
}

export class Renderer {
    constructor(private root: HTMLElement, private controller: Controller) {
        controller.onChange = () => this.render(controller.state);
    }

    render(state: AppState) {
        this.root.replaceChildren();
        this.root.append(this.banner(state), this.main(state), this.toasts(state));
    }

    private banner(state: AppState): HTMLElement {
        const bar = el("header", "banner");
        bar.append(el("span", "banner-title", "ctxmem"));
        bar.append(el("span", "banner-summary",
                      state.tree?.summary ?? "connecting..."));
        if (state.tree) {
            bar.append(el("span", "banner-version", `v${state.tree.version}`));
        }
        return bar;
    }

    private main(state: AppState): HTMLElement {
        const layout = el("div", "layout");
        layout.append(this.overviewPanel(state), this.canvasPanel(state),
                      this.chatPanel(state));
        return layout;
    }

    // -- timeline / overview tabs ------------------------------------------

    private overviewPanel(state: AppState): HTMLElement {
        const panel = el("section", "panel overview");
        panel.append(el("h2", "", "Timeline"));
        if (!state.tree) return panel;
        for (const card of timelineView(state.tree)) {
            const row = el("div", "timeline-row");
            row.style.borderLeftColor = card.color;
            row.append(el("span", "timeline-title",
                          card.hidden ? `${card.title} (hidden)` : card.title));
            row.append(el("span", "timeline-prov", card.provenanceLine));
            panel.append(row);
        }
        return panel;
    }

    // -- canvas ----------------------------------------------------------------

    private canvasPanel(state: AppState): HTMLElement {
        const panel = el("section", "panel canvas");
        const controls = el("div", "canvas-controls");
        const groupBtn = el("button", "", "Create Group");
        groupBtn.onclick = () => {
            if (state.selection.length) this.controller.groupCreate(state.selection);
        };
        const reorgInput = el("input") as HTMLInputElement;
        reorgInput.placeholder = "Prompt with AI (e.g. group these by project)";
        const reorgBtn = el("button", "", "Reorganize");
        reorgBtn.onclick = () => {
            if (reorgInput.value) this.controller.reorgPrompt(reorgInput.value);
        };
        controls.append(groupBtn, reorgInput, reorgBtn);
        panel.append(controls);

        if (!state.tree) return panel;
        const view = canvasView(state.tree);
        const scene = el("div", "scene");
        scene.ondragover = (ev) => ev.preventDefault();
        scene.ondrop = (ev) => {
            ev.preventDefault();
            const id = ev.dataTransfer?.getData("text/memory-id");
            if (id) this.controller.dragMove(id, null);
        };
        for (const group of view.groups) scene.append(this.group(group, state));
        for (const card of view.unclustered) scene.append(this.card(card, state));
        panel.append(scene);
        return panel;
    }

    private group(view: GroupView, state: AppState): HTMLElement {
        const box = el("div", "group");
        box.dataset.branchId = view.branchId;
        const head = el("div", "group-head", view.name);
        head.title = view.summary;
        const mention = el("button", "mini", "@");
        mention.title = "Add cluster to chat";
        mention.onclick = () => this.controller.stageBranchForChat(view.branchId);
        head.append(mention);
        box.append(head);
        box.ondragover = (ev) => { ev.preventDefault(); ev.stopPropagation(); };
        box.ondrop = (ev) => {
            ev.preventDefault();
            ev.stopPropagation();
            const id = ev.dataTransfer?.getData("text/memory-id");
            if (id) this.controller.dragMove(id, view.branchId);
        };
        for (const child of view.children) box.append(this.group(child, state));
        for (const card of view.cards) box.append(this.card(card, state));
        return box;
    }

    private card(view: CardView, state: AppState): HTMLElement {
        const node = el("div", "card");
        node.id = `card-${view.memoryId}`;
        node.style.background = view.color;
        node.draggable = true;
        node.ondragstart = (ev) =>
            ev.dataTransfer?.setData("text/memory-id", view.memoryId);
        if (state.selection.includes(view.memoryId)) node.classList.add("selected");

        const head = el("div", "card-head");
        head.append(el("strong", "", view.title));
        if (view.updatedBadge) head.append(el("span", "badge", "Updated"));
        node.append(head);
        node.append(el("div", "card-prov", view.provenanceLine));
        node.append(el("div", "card-preview", view.contentPreview));
        node.append(el("div", "card-context", view.contextSentence));
        const tags = el("div", "card-tags");
        for (const tag of view.tags) tags.append(el("span", "tag", tag));
        node.append(tags);
        if (view.memo) node.append(el("div", "memo-sticky", view.memo));

        const actions = el("div", "card-actions");
        const select = el("button", "mini", "Select");
        select.onclick = () => this.controller.toggleSelect(view.memoryId);
        const addToChat = el("button", "mini", "Add to Chat");
        addToChat.onclick = () => this.controller.stageForChat(view.memoryId);
        const edit = el("button", "mini", "Edit");
        edit.onclick = () => {
            const title = prompt("Title (max 24 chars)", view.title);
            if (title !== null) this.controller.editCard(view.memoryId, { title });
        };
        const hide = el("button", "mini", "Hide");
        hide.onclick = () =>
            this.controller.toggleVisibility(view.memoryId, true, view.archived);
        actions.append(select, addToChat, edit, hide);
        node.append(actions);
        return node;
    }

    // -- chat -----------------------------------------------------------------------

    private chatPanel(state: AppState): HTMLElement {
        const panel = el("section", "panel chat");
        panel.append(el("h2", "", "Chat"));
        const log = el("div", "chat-log");
        for (const entry of state.chatLog) log.append(this.message(entry, state));
        panel.append(log);

        if (state.pendingPair) panel.append(this.chooser(state));

        const staged = el("div", "staged");
        for (const id of state.staged) staged.append(el("span", "chip", `@${id}`));
        for (const id of state.stagedBranches) staged.append(el("span", "chip", `@cluster:${id}`));
        panel.append(staged);

        const input = el("input", "chat-input") as HTMLInputElement;
        input.placeholder = "Ask about your context...";
        const send = el("button", "", "Send");
        send.onclick = () => {
            if (input.value) {
                this.controller.sendChat(input.value, true);
                input.value = "";
            }
        };
        const row = el("div", "chat-row");
        row.append(input, send);
        panel.append(row);
        return panel;
    }

    private message(entry: ChatEntry, state: AppState): HTMLElement {
        const node = el("div", `msg msg-${entry.role}`);
        for (const segment of segmentMessage(entry.text)) {
            if (segment.kind === "text" || !state.tree) {
                node.append(document.createTextNode(segment.text));
                continue;
            }
            const resolution = resolveChip(segment.tag!, state.tree);
            const chip = el("button",
                            resolution.resolved ? "chip" : "chip chip-missing",
                            resolution.resolved ? segment.text : "missing reference");
            if (resolution.resolved && resolution.targetKind === "memory") {
                chip.onclick = () => {
                    const card = document.getElementById(`card-${segment.tag!.refId}`);
                    card?.scrollIntoView({ behavior: "smooth", block: "center" });
                    card?.classList.add("flash");
                    setTimeout(() => card?.classList.remove("flash"), 1200);
                };
            }
            node.append(chip);
        }
        return node;
    }

    private chooser(state: AppState): HTMLElement {
        const pair = state.pendingPair!;
        const box = el("div", "chooser");
        box.append(el("div", "chooser-title", "Which response do you prefer?"));
        const row = el("div", "chooser-row");
        for (const candidate of pair.candidates) {
            const col = el("div", "chooser-option");
            col.append(el("div", "chooser-text", candidate.text));
            const pick = el("button", "", `Choose ${candidate.label}`);
            pick.onclick = () => this.controller.chooseProbe(candidate.label);
            col.append(pick);
            row.append(col);
        }
        box.append(row);
        return box;
    }

    private toasts(state: AppState): HTMLElement {
        const box = el("div", "toasts");
        for (const toast of state.toasts.slice(-3)) {
            box.append(el("div", "toast", toast));
        }
        return box;
    }
}

export { cardView };
