import { describe, expect, it } from "vitest";

import type { CommandResult } from "../src/api.js";
import { renderFindings, renderTree } from "../src/render.js";
import { countNodes } from "../src/tree.js";
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
} from "../src/view.js";

const TREE_XML = [
  '<root main_tree_to_execute="MainTree">',
  '  <BehaviorTree ID="MainTree">',
  "    <Sequence>",
  '      <Action ID="OpenDoor"/>',
  '      <Action ID="EnterDoor"/>',
  "    </Sequence>",
  "  </BehaviorTree>",
  "</root>",
].join("\n") + "\n";

function commandResult(overrides: Partial<CommandResult> = {}): CommandResult {
  return {
    tree_xml: TREE_XML,
    report: { ok: true, findings: [] },
    attempts: 1,
    node_count: 3,
    ...overrides,
  };
}

function stateWithTree() {
  let state = onSessionCreated(initialState(), "s1", ["OpenDoor", "EnterDoor"]);
  state = onCommandResult(state, "open then enter", commandResult());
  return state;
}

describe("session and command flow", () => {
  it("starts with controls disabled", () => {
    const state = initialState();
    expect(canSubmit(state)).toBe(false);
    expect(canStep(state)).toBe(false);
  });

  it("command result installs the tree verbatim from the response", () => {
    const state = stateWithTree();
    expect(state.treeXml).toBe(TREE_XML);
    expect(state.tree).not.toBeNull();
    expect(countNodes(state.tree!.root)).toBe(state.nodeCount);
    expect(state.history).toEqual([
      { command: "open then enter", attempts: 1, ok: true },
    ]);
  });

  it("rejects a node count that disagrees with the service", () => {
    const state = onSessionCreated(initialState(), "s1", []);
    expect(() =>
      onCommandResult(state, "x", commandResult({ node_count: 7 })),
    ).toThrow(/service reported 7/);
  });

  it("a new command clears the previous trace", () => {
    let state = stateWithTree();
    state = onStepResult(state, {
      status: "success",
      new_events: [
        { tick_index: 0, preorder_path: 1, node: "OpenDoor", status: "success" },
      ],
    });
    state = onCommandResult(state, "again", commandResult());
    expect(state.events).toEqual([]);
    expect(state.finalStatus).toBeNull();
  });
});

describe("finding highlights", () => {
  it("maps node_path to severity and marks the right rendered node", () => {
    let state = stateWithTree();
    state = {
      ...state,
      findings: [
        { severity: "error", code: "UnknownNode", node_path: 2, message: "no EnterDoor" },
      ],
    };
    const highlights = highlightMap(state);
    expect(highlights.get(2)).toBe("error");

    const html = renderTree(state.tree!.root, highlights, state.collapsed);
    expect(html).toContain('finding-error" data-index="2">EnterDoor');
    expect(html).not.toContain('finding-error" data-index="1"');
  });

  it("error outranks warning on the same node", () => {
    let state = stateWithTree();
    state = {
      ...state,
      findings: [
        { severity: "warning", code: "UnsatisfiedPrecondition", node_path: 1, message: "w" },
        { severity: "error", code: "UnknownNode", node_path: 1, message: "e" },
      ],
    };
    expect(highlightMap(state).get(1)).toBe("error");
  });

  it("renders finding rows with their node path", () => {
    const html = renderFindings([
      { severity: "warning", code: "UnsatisfiedPrecondition", node_path: 3, message: "m" },
    ]);
    expect(html).toContain('data-node-path="3"');
    expect(html).toContain("UnsatisfiedPrecondition");
  });
});

describe("execution controls", () => {
  it("step stays enabled while running", () => {
    let state = stateWithTree();
    state = onStepResult(state, {
      status: "running",
      new_events: [
        { tick_index: 0, preorder_path: 1, node: "OpenDoor", status: "running" },
      ],
    });
    expect(state.finalStatus).toBeNull();
    expect(canStep(state)).toBe(true);
  });

  it("terminal status disables step and run and raises a banner", () => {
    let state = stateWithTree();
    state = onStepResult(state, { status: "success", new_events: [] });
    expect(canStep(state)).toBe(false);
    expect(canRun(state)).toBe(false);
    expect(state.banner).toContain("success");
  });

  it("run installs the full trace", () => {
    let state = stateWithTree();
    state = onRunResult(state, {
      events: [
        { tick_index: 0, preorder_path: 1, node: "OpenDoor", status: "success" },
        { tick_index: 0, preorder_path: 2, node: "EnterDoor", status: "success" },
        { tick_index: 0, preorder_path: 0, node: "Sequence", status: "success" },
      ],
      final: "success",
      ticks_used: 1,
    });
    expect(state.events).toHaveLength(3);
    expect(state.finalStatus).toBe("success");
  });

  it("busy blocks everything", () => {
    const state = { ...stateWithTree(), busy: true };
    expect(canSubmit(state)).toBe(false);
    expect(canStep(state)).toBe(false);
  });
});

describe("errors and collapsing", () => {
  it("502 shows the backend-unreachable banner", () => {
    const state = onServiceError(stateWithTree(), 502, "BackendUnavailable", "down");
    expect(state.banner).toBe("language-model backend unreachable");
  });

  it("other errors show code and message", () => {
    const state = onServiceError(stateWithTree(), 409, "TerminalState", "done");
    expect(state.banner).toBe("TerminalState: done");
  });

  it("collapse toggling folds the rendered subtree", () => {
    let state = stateWithTree();
    const openHtml = renderTree(state.tree!.root, new Map(), state.collapsed);
    expect(openHtml).toContain("<details open");
    state = toggleCollapsed(state, 0);
    const closedHtml = renderTree(state.tree!.root, new Map(), state.collapsed);
    expect(closedHtml).toContain('<details data-index="0"');
    state = toggleCollapsed(state, 0);
    expect(state.collapsed.size).toBe(0);
  });
});
