/**
 * Presentation-side model of the canonical tree XML the service returns.
 *
 * The console performs no behavior-tree logic: this module only converts
 * the service's XML into a nested structure for rendering, and back again
 * so the loss-free display invariant can be checked.
 */

export type NodeKind =
  | "Sequence"
  | "Fallback"
  | "Action"
  | "Condition"
  | "SubTree";

export interface TreeNode {
  kind: NodeKind;
  /** Leaf identifier; controls have none. */
  id: string | null;
  /** Preorder index within the tree; matches service node_path values. */
  index: number;
  children: TreeNode[];
}

export interface ParsedTree {
  treeId: string;
  root: TreeNode;
}

const CONTROL_KINDS = new Set<NodeKind>(["Sequence", "Fallback"]);
const LEAF_KINDS = new Set<NodeKind>(["Action", "Condition", "SubTree"]);

const TAG_RE = /<(\/?)([A-Za-z]+)((?:\s+[A-Za-z_]+="[^"]*")*)\s*(\/?)>/g;
const ATTR_RE = /([A-Za-z_]+)="([^"]*)"/g;

interface Tag {
  closing: boolean;
  name: string;
  attrs: Record<string, string>;
  selfClosing: boolean;
}

function tokenize(xml: string): Tag[] {
  const tags: Tag[] = [];
  for (const m of xml.matchAll(TAG_RE)) {
    const attrs: Record<string, string> = {};
    for (const a of (m[3] ?? "").matchAll(ATTR_RE)) {
      attrs[a[1]] = a[2];
    }
    tags.push({
      closing: m[1] === "/",
      name: m[2],
      attrs,
      selfClosing: m[4] === "/",
    });
  }
  return tags;
}

export function parseTreeXml(xml: string): ParsedTree {
  const tags = tokenize(xml);
  if (tags.length < 4 || tags[0].name !== "root") {
    throw new Error("document must start with a <root> element");
  }
  if (tags[1].name !== "BehaviorTree") {
    throw new Error("expected a <BehaviorTree> element under <root>");
  }
  const treeId = tags[1].attrs["ID"];
  if (!treeId) {
    throw new Error("<BehaviorTree> is missing its ID attribute");
  }

  let counter = 0;
  const stack: TreeNode[] = [];
  const roots: TreeNode[] = [];

  const attach = (node: TreeNode) => {
    if (stack.length === 0) {
      roots.push(node);
    } else {
      stack[stack.length - 1].children.push(node);
    }
  };

  for (const tag of tags.slice(2, -2)) {
    if (tag.closing) {
      const done = stack.pop();
      if (!done || done.kind !== tag.name) {
        throw new Error(`mismatched closing tag </${tag.name}>`);
      }
      continue;
    }
    const kind = tag.name as NodeKind;
    if (tag.selfClosing) {
      if (!LEAF_KINDS.has(kind)) {
        throw new Error(`unexpected self-closing <${tag.name}/>`);
      }
      attach({ kind, id: tag.attrs["ID"] ?? null, index: counter++, children: [] });
    } else {
      if (!CONTROL_KINDS.has(kind)) {
        throw new Error(`unexpected element <${tag.name}>`);
      }
      const node: TreeNode = { kind, id: null, index: counter++, children: [] };
      attach(node);
      stack.push(node);
    }
  }

  if (stack.length > 0) {
    throw new Error(`unclosed <${stack[stack.length - 1].kind}> element`);
  }
  if (roots.length !== 1) {
    throw new Error(`expected exactly one tree root, found ${roots.length}`);
  }
  return { treeId, root: roots[0] };
}

function emit(node: TreeNode, depth: number, lines: string[]): void {
  const pad = "  ".repeat(depth);
  if (CONTROL_KINDS.has(node.kind)) {
    lines.push(`${pad}<${node.kind}>`);
    for (const child of node.children) {
      emit(child, depth + 1, lines);
    }
    lines.push(`${pad}</${node.kind}>`);
  } else {
    lines.push(`${pad}<${node.kind} ID="${node.id ?? ""}"/>`);
  }
}

/** Canonical serialization matching the service's own formatter. */
export function serializeTree(tree: ParsedTree): string {
  const lines = [
    `<root main_tree_to_execute="${tree.treeId}">`,
    `  <BehaviorTree ID="${tree.treeId}">`,
  ];
  emit(tree.root, 2, lines);
  lines.push("  </BehaviorTree>");
  lines.push("</root>");
  return lines.join("\n") + "\n";
}

export function countNodes(node: TreeNode): number {
  return 1 + node.children.reduce((sum, c) => sum + countNodes(c), 0);
}

export function nodeByIndex(root: TreeNode, index: number): TreeNode | null {
  if (root.index === index) return root;
  for (const child of root.children) {
    const hit = nodeByIndex(child, index);
    if (hit) return hit;
  }
  return null;
}

export function nodeLabel(node: TreeNode): string {
  return node.id ?? node.kind;
}
