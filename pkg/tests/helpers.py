"""Shared test utilities: random tree generation and preorder rebuild."""

import random

from btgen.library import LibRole, NodeLibrary, NodeSpec
from btgen.trees import BehaviorTree, Node, Role, collect_leaves, preorder

LEAF_NAMES = [f"Leaf{i}" for i in range(60)]


def random_tree(rng: random.Random, max_depth=6, max_nodes=40,
                allow_subtrees=False) -> BehaviorTree:
    """A structurally valid tree within the given depth/size budget."""
    budget = [rng.randint(1, max_nodes)]
    names = iter(rng.sample(LEAF_NAMES, len(LEAF_NAMES)))

    def leaf():
        roles = [Role.ACTION, Role.ACTION, Role.CONDITION]
        if allow_subtrees:
            roles.append(Role.SUBTREE_REF)
        budget[0] -= 1
        try:
            name = next(names)
        except StopIteration:
            name = f"Extra{rng.randint(0, 10**6)}"
        return Node(rng.choice(roles), id=name)

    def build(depth):
        if depth >= max_depth or budget[0] <= 1 or rng.random() < 0.35:
            return leaf()
        role = rng.choice([Role.SEQUENCE, Role.FALLBACK])
        budget[0] -= 1
        n_children = rng.randint(1, 4)
        children = []
        for _ in range(n_children):
            if budget[0] <= 0:
                break
            children.append(build(depth + 1))
        if not children:
            return leaf()
        return Node(role, children=tuple(children))

    root = build(0)
    return BehaviorTree("MainTree", root)


def library_for(tree: BehaviorTree) -> NodeLibrary:
    """Smallest library that makes the tree structurally valid."""
    role_map = {
        Role.ACTION: LibRole.ACTION,
        Role.CONDITION: LibRole.CONDITION,
        Role.SUBTREE_REF: LibRole.SUBTREE,
        Role.UNKNOWN: LibRole.ACTION,
    }
    entries = []
    seen = set()
    for leaf_id, role in sorted(collect_leaves(tree)):
        if leaf_id in seen:
            continue
        seen.add(leaf_id)
        entries.append(NodeSpec(leaf_id, role_map[role], f"does {leaf_id}"))
    return NodeLibrary(tuple(entries))


def rebuild_from_preorder(pairs) -> Node:
    """Inverse of preorder(): reconstruct the root node from (depth, node)."""
    stack = []
    root = None
    for depth, node in pairs:
        shell = [node, []]  # original node, rebuilt children
        while len(stack) > depth:
            stack.pop()
        if depth == 0:
            root = shell
        else:
            stack[-1][1].append(shell)
        stack.append(shell)

    def realize(shell):
        node, kids = shell
        if not kids:
            return Node(node.role, node.id)
        return Node(node.role, node.id, tuple(realize(k) for k in kids))

    return realize(root)


def leaf_outcome_assignment(tree, rng):
    from btgen.trees import TickStatus

    return {
        leaf_id: rng.choice([TickStatus.SUCCESS, TickStatus.FAILURE])
        for leaf_id, _ in collect_leaves(tree)
    }


def expected_single_tick_events(tree, outcomes):
    """Independent event-order oracle for a one-tick run: (label, status)
    pairs with short-circuiting applied by hand."""
    from btgen.trees import TickStatus

    events = []

    def walk(node):
        if node.role is Role.SEQUENCE:
            status = TickStatus.SUCCESS
            for child in node.children:
                status = walk(child)
                if status is TickStatus.FAILURE:
                    break
            events.append(("Sequence", status))
            return status
        if node.role is Role.FALLBACK:
            status = TickStatus.FAILURE
            for child in node.children:
                status = walk(child)
                if status is TickStatus.SUCCESS:
                    break
            events.append(("Fallback", status))
            return status
        status = outcomes[node.id]
        events.append((node.id, status))
        return status

    walk(tree.root_child)
    return events


def leaf_ids(tree):
    return sorted({leaf_id for leaf_id, _ in collect_leaves(tree)})


def count_nodes(tree):
    return len(preorder(tree))
