/**
 * Pure HTML string builders so rendering is testable without a browser.
 * The entry script attaches these strings to the document and wires events.
 */

import { nodeLabel, type TreeNode } from "./tree.js";
import type { Finding, TraceEvent } from "./api.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderTree(
  node: TreeNode,
  highlights: Map<number, "error" | "warning">,
  collapsed: Set<number>,
): string {
  const severity = highlights.get(node.index);
  const classes = ["node", node.kind.toLowerCase()];
  if (severity) {
    classes.push(`finding-${severity}`);
  }
  const label =
    `<span class="${classes.join(" ")}" data-index="${node.index}">` +
    `${escapeHtml(nodeLabel(node))}</span>`;
  if (node.children.length === 0) {
    return `<li>${label}</li>`;
  }
  const open = collapsed.has(node.index) ? "" : " open";
  const children = node.children
    .map((c) => renderTree(c, highlights, collapsed))
    .join("");
  return (
    `<li><details${open} data-index="${node.index}">` +
    `<summary>${label}</summary><ul>${children}</ul></details></li>`
  );
}

export function renderFindings(findings: Finding[]): string {
  if (findings.length === 0) {
    return '<p class="clean">no findings</p>';
  }
  const items = findings
    .map(
      (f) =>
        `<li class="finding-${f.severity}" data-node-path="${f.node_path}">` +
        `${escapeHtml(f.severity)} ${escapeHtml(f.code)}: ${escapeHtml(f.message)}</li>`,
    )
    .join("");
  return `<ul class="findings">${items}</ul>`;
}

export function renderTimeline(events: TraceEvent[]): string {
  const items = events
    .map(
      (e) =>
        `<li class="tick-${e.status}" data-tick="${e.tick_index}" ` +
        `data-node-path="${e.preorder_path}">` +
        `t${e.tick_index} ${escapeHtml(e.node)}: ${e.status}</li>`,
    )
    .join("");
  return `<ol class="timeline">${items}</ol>`;
}
