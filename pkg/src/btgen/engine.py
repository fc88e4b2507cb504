"""Tick execution engine: Sequence/Fallback with memory, scripted world
executor, execution traces, and a recursive reference evaluator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .library import LibRole, NodeLibrary
from .trees import BehaviorTree, Node, Role, TickStatus, preorder


class EngineError(Exception):
    pass


class UnsubstitutedSubtree(EngineError):
    pass


class ConditionReturnedRunning(EngineError):
    pass


class MissingOutcome(EngineError):
    pass


@dataclass(frozen=True)
class TraceEvent:
    tick_index: int
    preorder_path: int
    node_id_or_role: str
    status: TickStatus

    def to_dict(self):
        return {
            "tick_index": self.tick_index,
            "preorder_path": self.preorder_path,
            "node": self.node_id_or_role,
            "status": self.status.value,
        }


@dataclass
class ExecutionTrace:
    events: list[TraceEvent] = field(default_factory=list)
    final: TickStatus = TickStatus.RUNNING
    ticks_used: int = 0

    def to_dict(self):
        return {
            "events": [e.to_dict() for e in self.events],
            "final": self.final.value,
            "ticks_used": self.ticks_used,
        }

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict()) + "\n" for e in self.events)


class ScriptedExecutor:
    """Plays back per-leaf outcome lists; the last entry repeats.

    In fact mode, Conditions succeed iff all their effect facts currently
    hold and Actions apply their library effects on Success.
    """

    def __init__(self, outcomes=None, facts=None, fact_mode=False,
                 library: NodeLibrary | None = None):
        self._script = {k: list(v) for k, v in (outcomes or {}).items()}
        for leaf, statuses in self._script.items():
            if not statuses:
                raise ValueError(f"empty outcome list for {leaf!r}")
        self._initial_facts = set(facts or ())
        self.fact_mode = fact_mode
        self.library = library
        self.reset()

    @classmethod
    def from_json(cls, text: str, library: NodeLibrary | None = None):
        doc = json.loads(text)
        outcomes = {
            leaf: [TickStatus(s) for s in statuses]
            for leaf, statuses in doc.get("outcomes", {}).items()
        }
        return cls(outcomes, doc.get("facts"), doc.get("fact_mode", False), library)

    def reset(self):
        self._cursor = {k: 0 for k in self._script}
        self.facts = set(self._initial_facts)

    def _next_scripted(self, leaf_id, default):
        if leaf_id not in self._script:
            return default
        statuses = self._script[leaf_id]
        i = self._cursor[leaf_id]
        self._cursor[leaf_id] = min(i + 1, len(statuses) - 1)
        return statuses[i]

    def _spec(self, leaf_id):
        if self.library is None:
            return None
        for e in self.library.entries:
            if e.id == leaf_id:
                return e
        return None

    def tick_leaf(self, leaf_id: str, role: Role) -> TickStatus:
        if self.fact_mode and role is Role.CONDITION:
            spec = self._spec(leaf_id)
            if spec is not None and spec.role is LibRole.CONDITION and spec.effects:
                return (TickStatus.SUCCESS if spec.effects <= self.facts
                        else TickStatus.FAILURE)
            return self._next_scripted(leaf_id, TickStatus.SUCCESS)
        status = self._next_scripted(leaf_id, TickStatus.SUCCESS)
        if self.fact_mode and role is Role.ACTION and status is TickStatus.SUCCESS:
            spec = self._spec(leaf_id)
            if spec is not None:
                self.facts |= spec.effects
        return status


class Engine:
    """Executes one tree with memory semantics: a composite resumes at the
    child that last returned Running, and a finished child is not re-ticked
    while its parent is still in flight."""

    def __init__(self, tree: BehaviorTree, executor):
        for _, node in preorder(tree):
            if node.role is Role.SUBTREE_REF:
                raise UnsubstitutedSubtree(
                    f"subtree {node.id!r} must be substituted before execution"
                )
            if node.role is Role.UNKNOWN:
                raise UnsubstitutedSubtree(
                    f"bare-tag leaf {node.id!r} must be resolved before execution"
                )
        self.tree = tree
        self.executor = executor
        self._index_of = {}
        for i, (_, node) in enumerate(preorder(tree)):
            self._index_of.setdefault(id(node), i)
        self._memory: dict[int, int] = {}  # composite preorder index -> resumption child
        self.trace = ExecutionTrace()

    def reset(self):
        self._memory.clear()
        self.executor.reset()
        self.trace = ExecutionTrace()

    def _tick_node(self, node: Node, tick_index: int) -> TickStatus:
        index = self._index_of[id(node)]
        if node.role in (Role.SEQUENCE, Role.FALLBACK):
            bail = (TickStatus.FAILURE if node.role is Role.SEQUENCE
                    else TickStatus.SUCCESS)
            done = (TickStatus.SUCCESS if node.role is Role.SEQUENCE
                    else TickStatus.FAILURE)
            start = self._memory.get(index, 0)
            for i in range(start, len(node.children)):
                status = self._tick_node(node.children[i], tick_index)
                if status is TickStatus.RUNNING:
                    self._memory[index] = i
                    self._record(tick_index, index, node.role.value, status)
                    return status
                if status is bail:
                    self._memory.pop(index, None)
                    self._record(tick_index, index, node.role.value, status)
                    return status
                self._memory[index] = i + 1
            self._memory.pop(index, None)
            self._record(tick_index, index, node.role.value, done)
            return done

        status = self.executor.tick_leaf(node.id, node.role)
        if node.role is Role.CONDITION and status is TickStatus.RUNNING:
            raise ConditionReturnedRunning(f"condition {node.id!r} returned Running")
        self._record(tick_index, index, node.id, status)
        return status

    def _record(self, tick_index, index, label, status):
        self.trace.events.append(TraceEvent(tick_index, index, label, status))

    def tick(self) -> TickStatus:
        tick_index = self.trace.ticks_used
        status = self._tick_node(self.tree.root_child, tick_index)
        self.trace.ticks_used += 1
        self.trace.final = status
        if status is not TickStatus.RUNNING:
            self._memory.clear()
        return status

    def run(self, max_ticks: int = 100) -> ExecutionTrace:
        if max_ticks < 1:
            raise ValueError("max_ticks must be >= 1")
        for _ in range(max_ticks):
            if self.tick() is not TickStatus.RUNNING:
                break
        return self.trace


def run(tree: BehaviorTree, executor, max_ticks: int = 100) -> ExecutionTrace:
    return Engine(tree, executor).run(max_ticks)


def oracle_eval(tree: BehaviorTree, outcomes: dict) -> TickStatus:
    """Reference recursive evaluation over fixed Success/Failure outcomes."""

    def ev(node: Node) -> TickStatus:
        if node.role is Role.SEQUENCE:
            for child in node.children:
                if ev(child) is TickStatus.FAILURE:
                    return TickStatus.FAILURE
            return TickStatus.SUCCESS
        if node.role is Role.FALLBACK:
            for child in node.children:
                if ev(child) is TickStatus.SUCCESS:
                    return TickStatus.SUCCESS
            return TickStatus.FAILURE
        if node.id not in outcomes:
            raise MissingOutcome(f"no outcome for leaf {node.id!r}")
        status = outcomes[node.id]
        if status is TickStatus.RUNNING:
            raise MissingOutcome(f"oracle outcomes must be Success/Failure, "
                                 f"got Running for {node.id!r}")
        return status

    return ev(tree.root_child)
