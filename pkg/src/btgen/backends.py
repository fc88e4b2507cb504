"""Completion backends: OpenAI-compatible HTTP, deterministic mock, and
transcript replay. All expose complete(prompt) -> text."""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
from dataclasses import dataclass

from . import library as lib_mod
from . import xml_io
from .library import LibRole, LibraryError, NodeLibrary
from .trees import BehaviorTree, Node, Role

INSTRUCTION_PREFIX = (
    "Write a behavior tree for the robot to execute the command "
    "using only available nodes."
)


class BackendUnavailable(Exception):
    pass


@dataclass
class BackendConfig:
    kind: str = "mock"  # mock | replay | http
    endpoint: str = ""
    model_name: str = "local-model"
    temperature: float = 0.2
    max_tokens: int = 1024
    api_key_env: str = "LLM_API_KEY"
    transcript_path: str = ""
    timeout: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    @classmethod
    def from_json(cls, text: str):
        return cls(**json.loads(text))


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class HttpBackend:
    """POSTs a single-user-message chat completion request."""

    def __init__(self, config: BackendConfig):
        self.config = config

    def complete(self, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        try:
            resp = requests.post(
                self.config.endpoint, json=payload, headers=headers,
                timeout=self.config.timeout,
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"backend request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(
                f"backend returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise BackendUnavailable(f"malformed completion response: {exc}") from exc


class ReplayBackend:
    """Plays a recorded transcript: a JSON list of {prompt_hash, completion}
    consumed in order. A null/absent hash skips the check."""

    def __init__(self, transcript):
        if isinstance(transcript, str):
            transcript = json.loads(transcript)
        self._entries = list(transcript)
        self._pos = 0

    @classmethod
    def from_file(cls, path: str):
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def complete(self, prompt: str) -> str:
        if self._pos >= len(self._entries):
            raise BackendUnavailable("transcript exhausted")
        entry = self._entries[self._pos]
        self._pos += 1
        expected = entry.get("prompt_hash")
        if expected and expected != prompt_hash(prompt):
            raise BackendUnavailable(
                f"transcript entry {self._pos - 1} recorded a different prompt"
            )
        return entry["completion"]


_MOVEMENT_POOL = [
    "MoveToTarget", "MoveForward", "NavigateToDock", "TurnLeft", "TurnRight",
    "PatrolCorridor", "DriveToShelf", "MoveToCharger", "MoveToKitchen",
    "NavigateToExit", "DriveAroundObstacle", "MoveToWindow", "TurnAround",
    "PatrolPerimeter", "MoveToTable", "NavigateToHallway",
]
_MANIPULATION_POOL = [
    "PickUpObject", "PlaceObject", "GraspItem", "ReleaseItem",
    "PushButton", "LiftCrate", "StackBox", "OpenGripper",
    "PickUpCup", "PlaceOnShelf", "GraspHandle", "PushCart",
    "LiftTray", "StackPlates", "PickUpTool", "PlaceInBin",
]
_CONDITION_POOL = [
    "IsPathClear", "IsBatteryOk", "ObjectDetected", "IsGripperEmpty",
    "IsDoorOpen", "IsAreaSafe", "TargetVisible", "IsShelfReachable",
]
_COND_KEYWORDS = ("check", "if", "verify", "when")


class MockBackend:
    """Deterministic template backend: a pure function of (prompt, seed).

    Recognizes the four prompt shapes this toolkit produces (command,
    random tree, node library, description) and answers each with a
    plausible, always-wellformed completion.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _rng(self, prompt: str) -> random.Random:
        return random.Random(f"{self.seed}:{prompt_hash(prompt)}")

    def complete(self, prompt: str) -> str:
        if prompt.startswith(INSTRUCTION_PREFIX):
            return self._complete_command(prompt)
        if "node library" in prompt and "<root" in prompt:
            return self._complete_library(prompt)
        if "Describe" in prompt and "<root" in prompt:
            return self._complete_description(prompt)
        if "Requirements:" in prompt:
            return self._complete_random_tree(prompt)
        return self._complete_command(prompt)

    def _complete_command(self, prompt: str) -> str:
        rng = self._rng(prompt)
        try:
            library = lib_mod.parse_prompt_library(prompt)
        except LibraryError:
            library = NodeLibrary()
        command = ""
        lines = prompt.splitlines()
        if len(lines) >= 2:
            command = lines[1]

        actions = [e for e in library.entries if e.role is LibRole.ACTION]
        conditions = [e for e in library.entries if e.role is LibRole.CONDITION]
        subtrees = [e for e in library.entries if e.role is LibRole.SUBTREE]
        if not actions and not subtrees:
            return "Sorry, there are no executable nodes available."

        pool = actions or subtrees
        count = min(len(pool), rng.randint(2, 4))
        picked = rng.sample(pool, count) if count <= len(pool) else pool
        children = [
            Node(Role.ACTION if e.role is LibRole.ACTION else Role.SUBTREE_REF, id=e.id)
            for e in picked
        ]
        command_words = set(re.findall(r"[a-z]+", command.lower()))
        if conditions and command_words & set(_COND_KEYWORDS):
            children.insert(0, Node(Role.CONDITION, id=conditions[0].id))
        tree = BehaviorTree("MainTree", Node(Role.SEQUENCE, children=tuple(children)))
        return "```xml\n" + xml_io.serialize(tree) + "```"

    def _complete_random_tree(self, prompt: str) -> str:
        rng = self._rng(prompt)
        movement = rng.sample(_MOVEMENT_POOL, rng.randint(1, 4))
        manipulation = rng.sample(_MANIPULATION_POOL, rng.randint(1, 4))
        leaves = [Node(Role.ACTION, id=name) for name in movement + manipulation]
        rng.shuffle(leaves)
        if rng.random() < 0.5:
            cond = Node(Role.CONDITION, id=rng.choice(_CONDITION_POOL))
            alt = Node(Role.ACTION, id=rng.choice(_MOVEMENT_POOL))
            leaves.insert(rng.randrange(len(leaves) + 1),
                          Node(Role.FALLBACK, children=(cond, alt)))
        tree = BehaviorTree("MainTree", Node(Role.SEQUENCE, children=tuple(leaves)))
        return xml_io.serialize(tree)

    @staticmethod
    def _extract_tree(prompt: str) -> BehaviorTree:
        start = prompt.index("<root")
        depth = 0
        for m in re.finditer(r"<root\b|</root>", prompt[start:]):
            if m.group(0) == "</root>":
                depth -= 1
                if depth == 0:
                    end = start + m.end()
                    return xml_io.parse(prompt[start:end])
            else:
                depth += 1
        raise BackendUnavailable("prompt carries an unterminated <root> element")

    def _complete_library(self, prompt: str) -> str:
        tree = self._extract_tree(prompt)
        from .trees import collect_leaves

        nodes = []
        for leaf_id, role in sorted(collect_leaves(tree)):
            lib_role = {
                Role.ACTION: "action",
                Role.CONDITION: "condition",
                Role.SUBTREE_REF: "subtree",
                Role.UNKNOWN: "action",
            }[role]
            nodes.append({
                "id": leaf_id,
                "role": lib_role,
                "description": id_to_words(leaf_id).capitalize(),
            })
        return json.dumps({"nodes": nodes}, indent=2)

    def _complete_description(self, prompt: str) -> str:
        tree = self._extract_tree(prompt)
        from .trees import preorder

        phrases = []
        for _, node in preorder(tree):
            if node.role in (Role.ACTION, Role.UNKNOWN, Role.SUBTREE_REF):
                phrases.append(id_to_words(node.id))
            elif node.role is Role.CONDITION:
                phrases.append(f"make sure {id_to_words(node.id)}")
        if not phrases:
            return ""
        if len(phrases) == 1:
            body = phrases[0]
        else:
            body = ", then ".join([phrases[0]] + phrases[1:-1])
            body += f", and finally {phrases[-1]}"
        return f"The robot should {body}."


def id_to_words(node_id: str) -> str:
    """Split an identifier on case boundaries and underscores: MoveTo -> 'move to'."""
    words = re.findall(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z0-9]+|[A-Z]+", node_id)
    return " ".join(w.lower() for w in words)


def make_backend(config: BackendConfig):
    if config.kind == "mock":
        return MockBackend(config.seed)
    if config.kind == "replay":
        return ReplayBackend.from_file(config.transcript_path)
    if config.kind == "http":
        return HttpBackend(config)
    raise ValueError(f"unknown backend kind {config.kind!r}")
