"""Parse and serialize the behavior-tree XML dialect, round-trip safe.

Document shape:

    <root main_tree_to_execute="T">
      <BehaviorTree ID="T">
        ...exactly one node...
      </BehaviorTree>
    </root>

Leaves are `<Action ID="X"/>`, `<Condition ID="X"/>`, `<SubTree ID="X"/>`;
bare tags like `<X/>` are accepted on input (role Unknown, resolved later
against a node library) and always normalized on output.
"""

from __future__ import annotations

import xml.parsers.expat
from dataclasses import dataclass, field
from enum import Enum
from xml.sax.saxutils import quoteattr

from .trees import IDENT_RE, BehaviorTree, Node, Role


class ParseErrorKind(Enum):
    MALFORMED = "Malformed"
    UNKNOWN_TAG = "UnknownTag"
    MISSING_ATTRIBUTE = "MissingAttribute"
    MULTIPLE_ROOT_CHILDREN = "MultipleRootChildren"
    MULTIPLE_TREE_DEFINITIONS = "MultipleTreeDefinitions"
    EMPTY_CONTROL = "EmptyControl"


class ParseError(Exception):
    def __init__(self, kind, line, column, message, partial_children=None):
        super().__init__(f"{kind.value} at {line}:{column}: {message}")
        self.kind = kind
        self.line = line
        self.column = column
        self.message = message
        # For MultipleRootChildren: the parsed orphan children, so a
        # repair pass can wrap them without re-parsing.
        self.partial_children = partial_children


@dataclass
class _Elem:
    tag: str
    attrs: dict
    line: int
    column: int
    children: list = field(default_factory=list)


def _build_dom(text: str) -> _Elem:
    """Parse with expat, keeping 1-based line/column per element."""
    if "<!DOCTYPE" in text or "<!ENTITY" in text:
        raise ParseError(
            ParseErrorKind.MALFORMED, 1, 1, "DTD/entity declarations are not allowed"
        )

    parser = xml.parsers.expat.ParserCreate()
    stack: list[_Elem] = []
    top: list[_Elem] = []

    def pos():
        return parser.CurrentLineNumber, parser.CurrentColumnNumber + 1

    def start(tag, attrs):
        line, col = pos()
        elem = _Elem(tag, attrs, line, col)
        if stack:
            stack[-1].children.append(elem)
        else:
            top.append(elem)
        stack.append(elem)

    def end(tag):
        stack.pop()

    def chardata(data):
        if data.strip():
            line, col = pos()
            raise ParseError(
                ParseErrorKind.MALFORMED, line, col,
                f"unexpected text content {data.strip()[:40]!r}",
            )

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chardata
    try:
        parser.Parse(text, True)
    except xml.parsers.expat.ExpatError as exc:
        raise ParseError(
            ParseErrorKind.MALFORMED,
            max(1, parser.ErrorLineNumber),
            max(1, parser.ErrorColumnNumber + 1),
            xml.parsers.expat.errors.messages[exc.code],
        ) from exc
    return top[0]


_LEAF_TAGS = {"Action": Role.ACTION, "Condition": Role.CONDITION, "SubTree": Role.SUBTREE_REF}
_CONTROL_TAGS = {"Sequence": Role.SEQUENCE, "Fallback": Role.FALLBACK}


def _to_node(elem: _Elem) -> Node:
    if elem.tag in _CONTROL_TAGS:
        if not elem.children:
            raise ParseError(
                ParseErrorKind.EMPTY_CONTROL, elem.line, elem.column,
                f"{elem.tag} has no children",
            )
        return Node(_CONTROL_TAGS[elem.tag],
                    children=tuple(_to_node(c) for c in elem.children))
    if elem.tag in _LEAF_TAGS:
        node_id = elem.attrs.get("ID")
        if not node_id:
            raise ParseError(
                ParseErrorKind.MISSING_ATTRIBUTE, elem.line, elem.column,
                f"{elem.tag} without ID attribute",
            )
        if not IDENT_RE.match(node_id):
            raise ParseError(
                ParseErrorKind.MALFORMED, elem.line, elem.column,
                f"bad node id {node_id!r}",
            )
        if elem.children:
            raise ParseError(
                ParseErrorKind.MALFORMED, elem.line, elem.column,
                f"{elem.tag} leaf must not have children",
            )
        return Node(_LEAF_TAGS[elem.tag], id=node_id)
    # Bare tag: an unresolved leaf named after the tag itself.
    if IDENT_RE.match(elem.tag) and not elem.children:
        return Node(Role.UNKNOWN, id=elem.tag)
    raise ParseError(
        ParseErrorKind.UNKNOWN_TAG, elem.line, elem.column,
        f"unrecognized tag <{elem.tag}>",
    )


def parse(text: str) -> BehaviorTree:
    """Parse a document; raises ParseError with a kind and 1-based position."""
    root = _build_dom(text)
    if root.tag != "root":
        raise ParseError(
            ParseErrorKind.UNKNOWN_TAG, root.line, root.column,
            f"top-level element must be <root>, got <{root.tag}>",
        )
    defs = [c for c in root.children if c.tag == "BehaviorTree"]
    stray = [c for c in root.children if c.tag != "BehaviorTree"]
    if stray:
        raise ParseError(
            ParseErrorKind.UNKNOWN_TAG, stray[0].line, stray[0].column,
            f"unexpected <{stray[0].tag}> under <root>",
        )
    if not defs:
        raise ParseError(
            ParseErrorKind.MALFORMED, root.line, root.column,
            "no BehaviorTree element",
        )

    selector = root.attrs.get("main_tree_to_execute")
    if selector is None:
        if len(defs) > 1:
            raise ParseError(
                ParseErrorKind.MULTIPLE_TREE_DEFINITIONS, defs[1].line, defs[1].column,
                f"{len(defs)} BehaviorTree elements and no main_tree_to_execute",
            )
        chosen = defs[0]
    else:
        matches = [d for d in defs if d.attrs.get("ID") == selector]
        if not matches:
            raise ParseError(
                ParseErrorKind.MALFORMED, root.line, root.column,
                f"main_tree_to_execute names undefined tree {selector!r}",
            )
        if len(matches) > 1:
            raise ParseError(
                ParseErrorKind.MULTIPLE_TREE_DEFINITIONS,
                matches[1].line, matches[1].column,
                f"tree {selector!r} defined more than once",
            )
        chosen = matches[0]

    tree_id = chosen.attrs.get("ID")
    if not tree_id:
        raise ParseError(
            ParseErrorKind.MISSING_ATTRIBUTE, chosen.line, chosen.column,
            "BehaviorTree without ID attribute",
        )
    if not IDENT_RE.match(tree_id):
        raise ParseError(
            ParseErrorKind.MALFORMED, chosen.line, chosen.column,
            f"bad tree id {tree_id!r}",
        )
    if len(chosen.children) != 1:
        children = []
        for c in chosen.children:
            try:
                children.append(_to_node(c))
            except ParseError:
                pass  # best effort; repair only needs the parseable ones
        raise ParseError(
            ParseErrorKind.MULTIPLE_ROOT_CHILDREN, chosen.line, chosen.column,
            f"BehaviorTree {tree_id!r} has {len(chosen.children)} children, expected 1",
            partial_children=children,
        )
    return BehaviorTree(tree_id, _to_node(chosen.children[0]))


def try_parse(text: str):
    """parse() variant returning the error instead of raising."""
    try:
        return parse(text), None
    except ParseError as err:
        return None, err


_SERIALIZE_TAGS = {
    Role.ACTION: "Action",
    Role.CONDITION: "Condition",
    Role.SUBTREE_REF: "SubTree",
}


def _emit(node: Node, depth: int, lines: list[str]) -> None:
    pad = "  " * depth
    if node.is_control():
        tag = node.role.value
        lines.append(f"{pad}<{tag}>")
        for child in node.children:
            _emit(child, depth + 1, lines)
        lines.append(f"{pad}</{tag}>")
    else:
        if node.role is Role.UNKNOWN:
            raise ValueError(
                f"cannot serialize unresolved bare-tag leaf {node.id!r}; "
                "resolve it against a library first"
            )
        tag = _SERIALIZE_TAGS[node.role]
        lines.append(f"{pad}<{tag} ID={quoteattr(node.id)}/>")


def serialize(tree: BehaviorTree) -> str:
    """Canonical form: 2-space indent, fixed attribute order, trailing newline."""
    lines = [f"<root main_tree_to_execute={quoteattr(tree.tree_id)}>"]
    lines.append(f"  <BehaviorTree ID={quoteattr(tree.tree_id)}>")
    _emit(tree.root_child, 2, lines)
    lines.append("  </BehaviorTree>")
    lines.append("</root>")
    return "\n".join(lines) + "\n"
