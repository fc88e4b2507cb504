"""Executable-on-robot checks: structure against a library, ordering lint
over precondition/effect facts, and policy-driven repair."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .library import LibRole, NodeLibrary, contains, lookup
from .trees import BehaviorTree, Node, Role, preorder
from .xml_io import ParseError, ParseErrorKind

_ROLE_MAP = {
    LibRole.ACTION: Role.ACTION,
    LibRole.CONDITION: Role.CONDITION,
    LibRole.SUBTREE: Role.SUBTREE_REF,
}


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


class FindingCode(Enum):
    UNKNOWN_NODE = "UnknownNode"
    ROLE_MISMATCH = "RoleMismatch"
    MULTIPLE_ROOT_CHILDREN = "MultipleRootChildren"
    EMPTY_CONTROL = "EmptyControl"
    UNRESOLVED_BARE_TAG = "UnresolvedBareTag"
    UNSATISFIED_PRECONDITION = "UnsatisfiedPrecondition"
    UNUSED_SUBTREE = "UnusedSubtree"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: FindingCode
    node_path: int  # preorder index
    message: str

    def to_dict(self):
        return {
            "severity": self.severity.value,
            "code": self.code.value,
            "node_path": self.node_path,
            "message": self.message,
        }


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)
    # Tree with bare-tag leaves resolved to their library roles, when
    # structural validation got that far.
    resolved: BehaviorTree | None = None

    @property
    def ok(self) -> bool:
        return not any(f.severity is Severity.ERROR for f in self.findings)

    def codes(self):
        return {f.code for f in self.findings}

    def to_dict(self):
        return {"ok": self.ok, "findings": [f.to_dict() for f in self.findings]}


def validate_structure(tree: BehaviorTree, library: NodeLibrary) -> ValidationReport:
    """Check every leaf against the library; resolve bare tags to their
    library role. Faults are findings, never exceptions."""
    report = ValidationReport()
    resolution: dict[int, Role] = {}

    for index, (_, node) in enumerate(preorder(tree)):
        if not node.is_leaf():
            continue
        if node.role is Role.UNKNOWN:
            if not contains(library, node.id):
                report.findings.append(Finding(
                    Severity.ERROR, FindingCode.UNRESOLVED_BARE_TAG, index,
                    f"bare tag <{node.id}/> matches no library node",
                ))
            else:
                resolution[index] = _ROLE_MAP[lookup(library, node.id).role]
            continue
        if not contains(library, node.id):
            report.findings.append(Finding(
                Severity.ERROR, FindingCode.UNKNOWN_NODE, index,
                f"{node.role.value} {node.id!r} is not in the library",
            ))
            continue
        lib_role = _ROLE_MAP[lookup(library, node.id).role]
        if lib_role is not node.role:
            report.findings.append(Finding(
                Severity.ERROR, FindingCode.ROLE_MISMATCH, index,
                f"{node.id!r} used as {node.role.value} but library says "
                f"{lib_role.value}",
            ))

    if report.ok:
        report.resolved = BehaviorTree(
            tree.tree_id, _resolve_preorder(tree.root_child, resolution)
        )
    return report


def _resolve_preorder(root: Node, resolution: dict[int, Role]) -> Node:
    counter = [0]

    def walk(node: Node) -> Node:
        index = counter[0]
        counter[0] += 1
        children = tuple(walk(c) for c in node.children)
        if index in resolution:
            return Node(resolution[index], id=node.id)
        return Node(node.role, node.id, children) if children != node.children else node

    return walk(root)


def validate_logic(tree: BehaviorTree, library: NodeLibrary) -> ValidationReport:
    """Abstract interpretation over guaranteed fact sets.

    Sequence threads facts left to right; Fallback analyzes each child from
    the entry facts and keeps only the intersection afterwards. A missing
    precondition is flagged only when some library node could provide it;
    otherwise it is assumed environment-given.
    """
    report = ValidationReport(resolved=tree)
    providable = set()
    for e in library.entries:
        providable |= e.effects

    index_of = {id(node): i for i, (_, node) in enumerate(preorder(tree))}

    def annotations(node: Node):
        if node.is_leaf() and contains(library, node.id):
            spec = lookup(library, node.id)
            return spec.preconditions, spec.effects
        return frozenset(), frozenset()

    def analyze(node: Node, facts: frozenset) -> frozenset:
        """Returns the facts guaranteed to hold after node succeeds."""
        if node.role is Role.SEQUENCE:
            for child in node.children:
                facts = analyze(child, facts)
            return facts
        if node.role is Role.FALLBACK:
            outs = [analyze(child, facts) for child in node.children]
            result = outs[0]
            for out in outs[1:]:
                result &= out
            return result
        pre, eff = annotations(node)
        missing = (pre - facts) & providable
        if missing:
            report.findings.append(Finding(
                Severity.WARNING, FindingCode.UNSATISFIED_PRECONDITION,
                index_of[id(node)],
                f"{node.id!r} needs {sorted(missing)} which is not guaranteed yet",
            ))
        return facts | eff

    analyze(tree.root_child, frozenset())
    return report


class RepairPolicy(Enum):
    NONE = "none"
    WRAP_ROOT = "wrap-root"
    DROP_UNKNOWN = "drop-unknown"
    BOTH = "both"


class RepairFailed(Exception):
    pass


def repair(tree_or_error, library: NodeLibrary, policy: RepairPolicy) -> BehaviorTree:
    """Apply the allowed fixes until the tree validates structurally clean."""
    wrap = policy in (RepairPolicy.WRAP_ROOT, RepairPolicy.BOTH)
    drop = policy in (RepairPolicy.DROP_UNKNOWN, RepairPolicy.BOTH)

    if isinstance(tree_or_error, ParseError):
        err = tree_or_error
        if (err.kind is ParseErrorKind.MULTIPLE_ROOT_CHILDREN and wrap
                and err.partial_children):
            tree = BehaviorTree(
                "MainTree", Node(Role.SEQUENCE, children=tuple(err.partial_children))
            )
        else:
            raise RepairFailed(f"policy {policy.value} cannot fix {err.kind.value}")
    else:
        tree = tree_or_error

    report = validate_structure(tree, library)
    if report.ok:
        return report.resolved

    if not drop:
        raise RepairFailed(
            f"policy {policy.value} cannot fix {sorted(c.value for c in report.codes())}"
        )

    bad = {
        f.node_path
        for f in report.findings
        if f.code in (FindingCode.UNKNOWN_NODE, FindingCode.UNRESOLVED_BARE_TAG)
    }
    index_of = {}
    for i, (_, node) in enumerate(preorder(tree)):
        index_of.setdefault(id(node), i)

    def prune(node: Node) -> Node | None:
        if node.is_leaf():
            return None if index_of[id(node)] in bad else node
        kept = tuple(c for c in (prune(child) for child in node.children) if c)
        if not kept:
            return None
        return Node(node.role, node.id, kept)

    new_root = prune(tree.root_child)
    if new_root is None:
        raise RepairFailed("dropping unknown leaves emptied the tree")
    repaired = BehaviorTree(tree.tree_id, new_root)
    report = validate_structure(repaired, library)
    if not report.ok:
        raise RepairFailed(
            f"still invalid after repair: {sorted(c.value for c in report.codes())}"
        )
    return report.resolved
