"""Command-to-tree generation: prompt construction, completion
post-processing, validated generation with retries, and recursive
subtree closure."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import library as lib_mod
from . import trees, xml_io
from .backends import INSTRUCTION_PREFIX, id_to_words
from .library import LibRole, LibraryError, LibraryErrorKind, NodeLibrary
from .trees import Role
from .validate import RepairFailed, RepairPolicy, repair, validate_logic, validate_structure
from .xml_io import ParseError


class GenerationError(Exception):
    pass


class EmptyCommand(GenerationError):
    pass


class ExtractError(GenerationError):
    """No usable XML in the completion."""


class AllAttemptsFailed(GenerationError):
    def __init__(self, outcome):
        super().__init__(f"no valid tree after {outcome.attempts} attempt(s)")
        self.outcome = outcome


class DepthExceeded(GenerationError):
    pass


def build_instruction(command: str, library: NodeLibrary) -> str:
    """Fixed prefix sentence, then the command, then the node listing.
    There is deliberately no separate input section."""
    if not command.strip():
        raise EmptyCommand("command must be non-empty")
    if not library.entries:
        raise LibraryError(LibraryErrorKind.EMPTY_LIBRARY, "library is empty")
    return f"{INSTRUCTION_PREFIX}\n{command}\n{lib_mod.render_for_prompt(library)}"


_FENCE_RE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.DOTALL)
_ENTITY_MAP = [
    ("&lt;", "<"), ("&gt;", ">"), ("&quot;", '"'), ("&#39;", "'"), ("&amp;", "&"),
]


def postprocess(raw: str) -> str:
    """Normalize a completion down to its first balanced <root> element."""
    text = raw
    fences = _FENCE_RE.findall(text)
    if fences:
        text = "\n".join(fences)
    text = text.replace("\\n", "\n").replace("\\t", "\t")
    if "<" not in text:
        # Entirely entity-escaped output: undo one level of escaping.
        for entity, char in _ENTITY_MAP:
            text = text.replace(entity, char)
    span = extract_root_span(text)
    if span is None:
        raise ExtractError("completion contains no <root> element")
    return span


def extract_root_span(text: str):
    """First balanced `<root ...> ... </root>` span, or None."""
    start = text.find("<root")
    while start != -1:
        follow = text[start + 5: start + 6]
        if follow in ("", ">", " ", "\t", "\n", "/"):
            break
        start = text.find("<root", start + 1)
    if start == -1:
        return None
    depth = 0
    for m in re.finditer(r"<root\b[^>]*?/>|<root\b|</root\s*>", text[start:]):
        token = m.group(0)
        if token.endswith("/>"):
            if depth == 0:
                return text[start: start + m.end()]
        elif token.startswith("</"):
            depth -= 1
            if depth == 0:
                return text[start: start + m.end()]
        else:
            depth += 1
    return None


@dataclass
class GenerateOptions:
    retries: int = 2
    repair_policy: RepairPolicy = RepairPolicy.NONE


@dataclass
class GenerationOutcome:
    raw: str = ""
    extracted_xml: str = ""
    tree: trees.BehaviorTree | None = None
    report: object = None
    parse_error: ParseError | None = None
    attempts: int = 0


def _attempt(backend, prompt: str, library: NodeLibrary,
             policy: RepairPolicy) -> GenerationOutcome:
    outcome = GenerationOutcome(attempts=1)
    outcome.raw = backend.complete(prompt)
    try:
        outcome.extracted_xml = postprocess(outcome.raw)
    except ExtractError:
        return outcome
    tree, err = xml_io.try_parse(outcome.extracted_xml)
    if err is not None:
        outcome.parse_error = err
        if policy is RepairPolicy.NONE:
            return outcome
        try:
            tree = repair(err, library, policy)
        except RepairFailed:
            return outcome
    report = validate_structure(tree, library)
    if not report.ok and policy is not RepairPolicy.NONE:
        try:
            tree = repair(tree, library, policy)
            report = validate_structure(tree, library)
        except RepairFailed:
            pass
    if report.ok:
        tree = report.resolved
        logic = validate_logic(tree, library)
        report.findings.extend(logic.findings)
        outcome.tree = tree
        outcome.extracted_xml = xml_io.serialize(tree)
    outcome.report = report
    return outcome


def generate(backend, command: str, library: NodeLibrary,
             options: GenerateOptions | None = None) -> GenerationOutcome:
    """One full generation cycle; retries the same prompt while the result
    has error-level faults."""
    options = options or GenerateOptions()
    prompt = build_instruction(command, library)
    outcome = GenerationOutcome()
    for attempt in range(options.retries + 1):
        outcome = _attempt(backend, prompt, library, options.repair_policy)
        outcome.attempts = attempt + 1
        if outcome.tree is not None:
            return outcome
    return outcome


def generate_checked(backend, command, library, options=None) -> GenerationOutcome:
    """generate(), but a missing tree is an error."""
    outcome = generate(backend, command, library, options)
    if outcome.tree is None:
        raise AllAttemptsFailed(outcome)
    return outcome


def generate_recursive(backend, command: str, library: NodeLibrary,
                       depth_limit: int = 3, options=None):
    """Top-level generation followed by sub-generations for every subtree
    reference that has no definition yet; returns the fully concrete tree
    and the library grown with the new subtree definitions."""
    if depth_limit < 1:
        raise ValueError("depth_limit must be >= 1")
    outcome = generate_checked(backend, command, library, options)
    tree = outcome.tree

    concrete_only = lib_mod.make_library(
        e for e in library.entries if e.role is not LibRole.SUBTREE
    )

    for _ in range(depth_limit - 1):
        refs = _subtree_refs(tree)
        if not refs:
            break
        for ref_id in refs:
            if lib_mod.contains(library, ref_id):
                spec = lib_mod.lookup(library, ref_id)
                if spec.definition is not None:
                    tree = trees.substitute_subtree(tree, ref_id, spec.definition)
                    continue
            sub_command = _subtree_command(ref_id, library)
            sub_outcome = generate_checked(
                backend, sub_command, concrete_only, options
            )
            definition = trees.BehaviorTree(ref_id, sub_outcome.tree.root_child)
            tree = trees.substitute_subtree(tree, ref_id, definition)
            library = _install_definition(library, definition, sub_command)

    remaining = _subtree_refs(tree)
    if remaining:
        raise DepthExceeded(
            f"unresolved subtree references at depth limit: {remaining}"
        )
    return tree, library


def _subtree_refs(tree):
    seen = []
    for _, node in trees.preorder(tree):
        if node.role is Role.SUBTREE_REF and node.id not in seen:
            seen.append(node.id)
    return seen


def _install_definition(library, definition, description):
    """Add the subtree to the library, or attach the definition to an
    existing definition-less entry."""
    if not lib_mod.contains(library, definition.tree_id):
        return lib_mod.add_subtree_node(library, definition, description)
    entries = []
    for e in library.entries:
        if e.id == definition.tree_id:
            e = lib_mod.NodeSpec(
                id=e.id, role=LibRole.SUBTREE,
                description=e.description or description,
                preconditions=e.preconditions, effects=e.effects,
                definition=definition,
            )
        entries.append(e)
    return lib_mod.NodeLibrary(tuple(entries))


def _subtree_command(ref_id: str, library: NodeLibrary) -> str:
    if lib_mod.contains(library, ref_id):
        desc = lib_mod.lookup(library, ref_id).description
        if desc:
            return desc
    return id_to_words(ref_id)
