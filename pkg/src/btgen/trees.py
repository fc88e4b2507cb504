"""Behavior-tree data model: typed nodes, structural invariants, tree algebra."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class TickStatus(Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    RUNNING = "running"


class Role(Enum):
    SEQUENCE = "Sequence"
    FALLBACK = "Fallback"
    ACTION = "Action"
    CONDITION = "Condition"
    SUBTREE_REF = "SubTree"
    # A bare-tag leaf whose role is not yet resolved against a library.
    UNKNOWN = "Unknown"


CONTROL_ROLES = {Role.SEQUENCE, Role.FALLBACK}
LEAF_ROLES = {Role.ACTION, Role.CONDITION, Role.SUBTREE_REF, Role.UNKNOWN}


class TreeError(Exception):
    """Base for structural behavior-tree errors."""


class MultipleRootChildren(TreeError):
    pass


class InvalidNode(TreeError):
    pass


class SubtreeNotReferenced(TreeError):
    pass


class RecursiveDefinition(TreeError):
    pass


@dataclass(frozen=True)
class Node:
    role: Role
    id: str | None = None
    children: tuple = ()

    def is_control(self):
        return self.role in CONTROL_ROLES

    def is_leaf(self):
        return self.role in LEAF_ROLES


def seq(*children: Node) -> Node:
    return Node(Role.SEQUENCE, children=tuple(children))


def fallback(*children: Node) -> Node:
    return Node(Role.FALLBACK, children=tuple(children))


def action(node_id: str) -> Node:
    return Node(Role.ACTION, id=node_id)


def condition(node_id: str) -> Node:
    return Node(Role.CONDITION, id=node_id)


def subtree_ref(node_id: str) -> Node:
    return Node(Role.SUBTREE_REF, id=node_id)


def bare(node_id: str) -> Node:
    return Node(Role.UNKNOWN, id=node_id)


def _check_node(node: Node) -> None:
    if node.is_control():
        if node.id is not None:
            raise InvalidNode(f"{node.role.value} node must not carry an id")
        if not node.children:
            raise InvalidNode(f"{node.role.value} node has no children")
    elif node.is_leaf():
        if node.children:
            raise InvalidNode(f"{node.role.value} leaf must not have children")
        if not node.id or not IDENT_RE.match(node.id):
            raise InvalidNode(f"bad leaf id: {node.id!r}")
    else:  # pragma: no cover - Role is a closed set
        raise InvalidNode(f"unknown role {node.role!r}")
    for child in node.children:
        _check_node(child)


@dataclass(frozen=True)
class BehaviorTree:
    tree_id: str
    root_child: Node


def make_tree(tree_id: str, root_children: list[Node]) -> BehaviorTree:
    """Build a validated tree; exactly one node may sit under the root."""
    if not tree_id or not IDENT_RE.match(tree_id):
        raise InvalidNode(f"bad tree id: {tree_id!r}")
    if len(root_children) != 1:
        raise MultipleRootChildren(
            f"tree {tree_id!r} has {len(root_children)} root children, expected 1"
        )
    _check_node(root_children[0])
    return BehaviorTree(tree_id, root_children[0])


def preorder(tree: BehaviorTree) -> list[tuple[int, Node]]:
    """(depth, node) pairs, parent before children, siblings in order."""
    out: list[tuple[int, Node]] = []

    def walk(node: Node, depth: int) -> None:
        out.append((depth, node))
        for child in node.children:
            walk(child, depth + 1)

    walk(tree.root_child, 0)
    return out


def node_count(tree: BehaviorTree) -> int:
    return len(preorder(tree))


def collect_leaves(tree: BehaviorTree) -> set[tuple[str, Role]]:
    return {(n.id, n.role) for _, n in preorder(tree) if n.is_leaf()}


def substitute_subtree(
    tree: BehaviorTree, subtree_id: str, definition: BehaviorTree
) -> BehaviorTree:
    """Replace every SubTree reference to subtree_id with the definition's body."""
    if any(
        n.role is Role.SUBTREE_REF and n.id == subtree_id
        for _, n in preorder(definition)
    ):
        raise RecursiveDefinition(f"definition of {subtree_id!r} references itself")

    hits = 0

    def rewrite(node: Node) -> Node:
        nonlocal hits
        if node.role is Role.SUBTREE_REF and node.id == subtree_id:
            hits += 1
            return definition.root_child
        if node.children:
            return Node(node.role, node.id, tuple(rewrite(c) for c in node.children))
        return node

    new_root = rewrite(tree.root_child)
    if hits == 0:
        raise SubtreeNotReferenced(f"{subtree_id!r} does not occur in {tree.tree_id!r}")
    return BehaviorTree(tree.tree_id, new_root)
