/**
 * Browser entry point: wires the pure view/render modules to the DOM and
 * the service client. One session per tab; controls are disabled while a
 * request is in flight.
 */

import { ApiClient, ServiceError } from "./api.js";
import { renderFindings, renderTimeline, renderTree } from "./render.js";
import { serializeTree } from "./tree.js";
import {
  canRun,
  canStep,
  canSubmit,
  highlightMap,
  initialState,
  onCommandResult,
  onRunResult,
  onServiceError,
  onSessionCreated,
  onStepResult,
  toggleCollapsed,
  type ViewState,
} from "./view.js";

const api = new ApiClient(
  (document.querySelector("meta[name=service-url]") as HTMLMetaElement)?.content ??
    "http://127.0.0.1:8344",
);

let state: ViewState = initialState();

const el = (id: string) => document.getElementById(id)!;

function download(filename: string, text: string, mime: string): void {
  const blob = new Blob([text], { type: mime });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = filename;
  a.click();
  URL.revokeObjectURL(a.href);
}

function redraw(): void {
  el("banner").textContent = state.banner ?? "";
  el("banner").hidden = state.banner === null;
  el("library").textContent = state.libraryIds.join(", ");
  el("history").innerHTML = state.history
    .map((h) => `<li>${h.command} (${h.attempts} attempt(s), ${h.ok ? "ok" : "flagged"})</li>`)
    .join("");
  el("tree").innerHTML = state.tree
    ? `<ul>${renderTree(state.tree.root, highlightMap(state), state.collapsed)}</ul>`
    : "<p>no tree yet</p>";
  el("findings").innerHTML = renderFindings(state.findings);
  el("timeline").innerHTML = renderTimeline(state.events);
  (el("submit") as HTMLButtonElement).disabled = !canSubmit(state);
  (el("step") as HTMLButtonElement).disabled = !canStep(state);
  (el("run") as HTMLButtonElement).disabled = !canRun(state);
  (el("export-xml") as HTMLButtonElement).disabled = state.tree === null;
  (el("export-trace") as HTMLButtonElement).disabled = state.events.length === 0;
}

async function guarded(work: () => Promise<void>): Promise<void> {
  if (state.busy) return;
  state = { ...state, busy: true };
  redraw();
  try {
    await work();
  } catch (err) {
    if (err instanceof ServiceError) {
      state = onServiceError(state, err.status, err.code, err.message);
    } else {
      state = { ...state, banner: String(err) };
    }
  } finally {
    state = { ...state, busy: false };
    redraw();
  }
}

el("create-session").addEventListener("click", () =>
  guarded(async () => {
    const library = JSON.parse((el("library-input") as HTMLTextAreaElement).value);
    const worldText = (el("world-input") as HTMLTextAreaElement).value.trim();
    const world = worldText ? JSON.parse(worldText) : undefined;
    const { session_id } = await api.createSession(library, world);
    const snapshot = await api.getSession(session_id);
    state = onSessionCreated(state, session_id, snapshot.library);
  }),
);

el("submit").addEventListener("click", () =>
  guarded(async () => {
    const text = (el("command-input") as HTMLInputElement).value;
    const result = await api.sendCommand(state.sessionId!, text);
    state = onCommandResult(state, text, result);
  }),
);

el("step").addEventListener("click", () =>
  guarded(async () => {
    state = onStepResult(state, await api.step(state.sessionId!));
  }),
);

el("run").addEventListener("click", () =>
  guarded(async () => {
    state = onRunResult(state, await api.run(state.sessionId!));
  }),
);

el("export-xml").addEventListener("click", () => {
  if (state.tree) {
    download("tree.xml", serializeTree(state.tree), "application/xml");
  }
});

el("export-trace").addEventListener("click", () => {
  download(
    "trace.json",
    JSON.stringify({ events: state.events, final: state.finalStatus ?? "running" }, null, 2),
    "application/json",
  );
});

el("tree").addEventListener("click", (event) => {
  const details = (event.target as HTMLElement).closest("details");
  if (details?.dataset.index) {
    event.preventDefault();
    state = toggleCollapsed(state, Number(details.dataset.index));
    redraw();
  }
});

redraw();
