// Boot: create or resume a session, then poll the engine every 2 seconds.
// The engine is the source of truth; the poller refreshes only when the
// session version moves.

import { ApiClient } from "./api.js";
import { Controller } from "./controller.js";
import { Renderer } from "./render.js";

const POLL_MS = 2000;

async function boot() {
    const params = new URLSearchParams(window.location.search);
    const base = params.get("api") ?? "http://127.0.0.1:8787";
    const api = new ApiClient(base, "", params.get("token") ?? "");

    const existing = params.get("session");
    if (existing) {
        await api.openSession(existing);
    } else {
        const created = await api.createSession();
        params.set("session", created.sessionId);
        history.replaceState(null, "", `?${params}`);
    }

    const controller = new Controller(api);
    new Renderer(document.getElementById("app")!, controller);
    await controller.refresh();
    setInterval(() => controller.refresh(), POLL_MS);

    // capture simulation panel: paste text or upload an image with fake
    // provenance (stands in for OS-level capture, which is out of scope)
    wireCapturePanel(controller);
}

function wireCapturePanel(controller: Controller) {
    const text = document.getElementById("cap-text") as HTMLTextAreaElement;
    const memo = document.getElementById("cap-memo") as HTMLInputElement;
    const app = document.getElementById("cap-app") as HTMLInputElement;
    const windowTitle = document.getElementById("cap-window") as HTMLInputElement;
    const file = document.getElementById("cap-file") as HTMLInputElement;

    (document.getElementById("cap-snippet") as HTMLButtonElement).onclick = async () => {
        if (!text.value) return;
        await controller.api.captureSnippet(text.value, memo.value || null, {
            appName: app.value || "Simulated",
            windowTitle: windowTitle.value || "Capture Panel",
        });
        text.value = "";
        await controller.refresh();
    };

    (document.getElementById("cap-observe") as HTMLButtonElement).onclick = async () => {
        const blob = file.files?.[0];
        if (!blob) return;
        const buffer = new Uint8Array(await blob.arrayBuffer());
        let binary = "";
        buffer.forEach((b) => { binary += String.fromCharCode(b); });
        await controller.api.captureObservation(btoa(binary), {
            appName: app.value || "Simulated",
            windowTitle: windowTitle.value || blob.name,
        });
        await controller.refresh();
    };
}

boot().catch((err) => {
    const node = document.getElementById("app");
    if (node) node.textContent = `failed to start: ${err}`;
});
