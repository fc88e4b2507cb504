"""Node library: the capability set a robot exposes, plus prompt rendering.

File format (JSON):

    {"nodes": [{"id": str,
                "role": "action" | "condition" | "subtree",
                "description": str,
                "preconditions": [str]?,
                "effects": [str]?,
                "definition_xml": str?}]}
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum

from . import xml_io
from .trees import IDENT_RE, BehaviorTree

log = logging.getLogger(__name__)


class LibRole(Enum):
    ACTION = "action"
    CONDITION = "condition"
    SUBTREE = "subtree"


class LibraryErrorKind(Enum):
    DUPLICATE_ID = "DuplicateId"
    BAD_ROLE = "BadRole"
    MALFORMED = "Malformed"
    NOT_FOUND = "NotFound"
    EMPTY_LIBRARY = "EmptyLibrary"


class LibraryError(Exception):
    def __init__(self, kind: LibraryErrorKind, message: str):
        super().__init__(f"{kind.value}: {message}")
        self.kind = kind
        self.message = message


@dataclass(frozen=True)
class NodeSpec:
    id: str
    role: LibRole
    description: str
    preconditions: frozenset = frozenset()
    effects: frozenset = frozenset()
    definition: BehaviorTree | None = None


@dataclass(frozen=True)
class NodeLibrary:
    entries: tuple = ()

    def ids(self):
        return [e.id for e in self.entries]

    def __len__(self):
        return len(self.entries)


def _check_entries(entries) -> None:
    seen = set()
    for e in entries:
        if e.id in seen:
            raise LibraryError(LibraryErrorKind.DUPLICATE_ID, f"duplicate id {e.id!r}")
        seen.add(e.id)
        if not IDENT_RE.match(e.id):
            raise LibraryError(LibraryErrorKind.MALFORMED, f"bad id {e.id!r}")
        if e.role is LibRole.CONDITION and e.preconditions:
            raise LibraryError(
                LibraryErrorKind.MALFORMED,
                f"condition {e.id!r} must not declare preconditions",
            )


def make_library(entries) -> NodeLibrary:
    entries = tuple(entries)
    _check_entries(entries)
    return NodeLibrary(entries)


def load_library(text: str) -> NodeLibrary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LibraryError(LibraryErrorKind.MALFORMED, f"bad JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list):
        raise LibraryError(LibraryErrorKind.MALFORMED, 'expected {"nodes": [...]}')

    entries = []
    for raw in doc["nodes"]:
        if not isinstance(raw, dict) or "id" not in raw or "role" not in raw:
            raise LibraryError(LibraryErrorKind.MALFORMED, f"bad entry: {raw!r}")
        try:
            role = LibRole(raw["role"])
        except ValueError:
            raise LibraryError(
                LibraryErrorKind.BAD_ROLE, f"unknown role {raw['role']!r}"
            ) from None
        definition = None
        if raw.get("definition_xml"):
            if role is not LibRole.SUBTREE:
                raise LibraryError(
                    LibraryErrorKind.MALFORMED,
                    f"{raw['id']!r}: only subtree entries may carry a definition",
                )
            definition = xml_io.parse(raw["definition_xml"])
        elif role is LibRole.SUBTREE:
            log.warning("subtree %r has no definition", raw["id"])
        entries.append(
            NodeSpec(
                id=str(raw["id"]),
                role=role,
                description=str(raw.get("description", "")),
                preconditions=frozenset(raw.get("preconditions", ())),
                effects=frozenset(raw.get("effects", ())),
                definition=definition,
            )
        )
    return make_library(entries)


def save_library(library: NodeLibrary) -> str:
    nodes = []
    for e in library.entries:
        item = {"id": e.id, "role": e.role.value, "description": e.description}
        if e.preconditions:
            item["preconditions"] = sorted(e.preconditions)
        if e.effects:
            item["effects"] = sorted(e.effects)
        if e.definition is not None:
            item["definition_xml"] = xml_io.serialize(e.definition)
        nodes.append(item)
    return json.dumps({"nodes": nodes}, indent=2) + "\n"


def render_for_prompt(library: NodeLibrary) -> str:
    """Deterministic listing shown to the model; annotations stay private."""
    if not library.entries:
        raise LibraryError(LibraryErrorKind.EMPTY_LIBRARY, "library is empty")
    lines = ["Available nodes:"]
    for e in library.entries:
        role = e.role.value.capitalize()
        lines.append(f"- {role} {e.id}: {e.description}")
    return "\n".join(lines)


_PROMPT_LINE_RE = re.compile(r"- (Action|Condition|Subtree) ([A-Za-z][A-Za-z0-9_]*): (.*)")


def parse_prompt_library(text: str) -> NodeLibrary:
    """Recover a library from its render_for_prompt block inside a prompt."""
    lines = text.splitlines()
    try:
        start = lines.index("Available nodes:")
    except ValueError:
        raise LibraryError(
            LibraryErrorKind.MALFORMED, "no 'Available nodes:' block"
        ) from None
    entries = []
    for line in lines[start + 1:]:
        m = _PROMPT_LINE_RE.fullmatch(line)
        if not m:
            break
        entries.append(NodeSpec(id=m.group(2), role=LibRole(m.group(1).lower()),
                                description=m.group(3)))
    return make_library(entries)


def lookup(library: NodeLibrary, node_id: str) -> NodeSpec:
    for e in library.entries:
        if e.id == node_id:
            return e
    raise LibraryError(LibraryErrorKind.NOT_FOUND, f"no node {node_id!r}")


def contains(library: NodeLibrary, node_id: str) -> bool:
    return any(e.id == node_id for e in library.entries)


def add_subtree_node(
    library: NodeLibrary, tree: BehaviorTree, description: str
) -> NodeLibrary:
    if contains(library, tree.tree_id):
        raise LibraryError(
            LibraryErrorKind.DUPLICATE_ID, f"library already has {tree.tree_id!r}"
        )
    spec = NodeSpec(
        id=tree.tree_id, role=LibRole.SUBTREE, description=description, definition=tree
    )
    return NodeLibrary(library.entries + (spec,))
