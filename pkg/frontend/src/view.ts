/**
 * Console view state and pure transitions. Every field is derived from a
 * service response; the reducers never invent tree or trace facts.
 */

import type {
  CommandResult,
  Finding,
  StepResult,
  Trace,
  TraceEvent,
} from "./api.js";
import { countNodes, parseTreeXml, type ParsedTree } from "./tree.js";

export interface HistoryEntry {
  command: string;
  attempts: number;
  ok: boolean;
}

export interface ViewState {
  sessionId: string | null;
  libraryIds: string[];
  history: HistoryEntry[];
  tree: ParsedTree | null;
  treeXml: string | null;
  nodeCount: number;
  findings: Finding[];
  events: TraceEvent[];
  finalStatus: string | null;
  busy: boolean;
  banner: string | null;
  collapsed: Set<number>;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    libraryIds: [],
    history: [],
    tree: null,
    treeXml: null,
    nodeCount: 0,
    findings: [],
    events: [],
    finalStatus: null,
    busy: false,
    banner: null,
    collapsed: new Set(),
  };
}

export function onSessionCreated(
  state: ViewState,
  sessionId: string,
  libraryIds: string[],
): ViewState {
  return { ...initialState(), sessionId, libraryIds };
}

export function onCommandResult(
  state: ViewState,
  command: string,
  result: CommandResult,
): ViewState {
  const tree = parseTreeXml(result.tree_xml);
  if (countNodes(tree.root) !== result.node_count) {
    throw new Error(
      `rendered ${countNodes(tree.root)} nodes but the service reported ${result.node_count}`,
    );
  }
  return {
    ...state,
    tree,
    treeXml: result.tree_xml,
    nodeCount: result.node_count,
    findings: result.report.findings,
    events: [],
    finalStatus: null,
    banner: null,
    collapsed: new Set(),
    history: [
      ...state.history,
      { command, attempts: result.attempts, ok: result.report.ok },
    ],
  };
}

export function onStepResult(state: ViewState, result: StepResult): ViewState {
  const finalStatus = result.status === "running" ? null : result.status;
  return {
    ...state,
    events: [...state.events, ...result.new_events],
    finalStatus,
    banner: finalStatus ? `execution finished: ${finalStatus}` : state.banner,
  };
}

export function onRunResult(state: ViewState, trace: Trace): ViewState {
  const finalStatus = trace.final === "running" ? null : trace.final;
  return {
    ...state,
    events: trace.events,
    finalStatus,
    banner: finalStatus ? `execution finished: ${finalStatus}` : state.banner,
  };
}

export function onServiceError(
  state: ViewState,
  status: number,
  code: string,
  message: string,
): ViewState {
  const banner =
    status === 502
      ? "language-model backend unreachable"
      : `${code}: ${message}`;
  return { ...state, banner };
}

export function toggleCollapsed(state: ViewState, index: number): ViewState {
  const collapsed = new Set(state.collapsed);
  if (collapsed.has(index)) {
    collapsed.delete(index);
  } else {
    collapsed.add(index);
  }
  return { ...state, collapsed };
}

/** Preorder indices that carry at least one finding, with worst severity. */
export function highlightMap(state: ViewState): Map<number, "error" | "warning"> {
  const map = new Map<number, "error" | "warning">();
  for (const finding of state.findings) {
    const existing = map.get(finding.node_path);
    if (existing !== "error") {
      map.set(finding.node_path, finding.severity);
    }
  }
  return map;
}

export function canStep(state: ViewState): boolean {
  return state.tree !== null && state.finalStatus === null && !state.busy;
}

export function canRun(state: ViewState): boolean {
  return canStep(state);
}

export function canSubmit(state: ViewState): boolean {
  return state.sessionId !== null && !state.busy;
}

export function exportTraceJson(state: ViewState): string {
  return (
    JSON.stringify(
      {
        events: state.events,
        final: state.finalStatus ?? "running",
      },
      null,
      2,
    ) + "\n"
  );
}
