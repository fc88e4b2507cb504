"""Instruction-following dataset manufacture: the three-request pipeline
(random tree, node library, verbal description), duplicate filtering,
dataset checking, and training-configuration emission."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import library as lib_mod
from . import xml_io
from .backends import id_to_words
from .generate import build_instruction, postprocess
from .library import LibRole, NodeLibrary, NodeSpec
from .trees import collect_leaves
from .validate import validate_structure

log = logging.getLogger(__name__)

DEFAULT_CONSTRAINTS = (
    "the behavior tree must be executable by a mobile robot",
    "the behavior must have a peaceful application",
    "the behavior must contain elements describing the robot's movement "
    "and manipulation of objects",
)


class DatasetError(Exception):
    pass


class EmptyDescription(DatasetError):
    pass


class ValidationFailed(DatasetError):
    pass


class TargetUnreachable(DatasetError):
    pass


@dataclass(frozen=True)
class GenerationProfile:
    robot_kind: str = "mobile robot"
    constraints: tuple = DEFAULT_CONSTRAINTS

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("constraints must be non-empty")


@dataclass(frozen=True)
class DatasetSample:
    instruction: str
    input: str
    output: str

    def to_dict(self):
        return {"instruction": self.instruction, "input": self.input,
                "output": self.output}


@dataclass
class DatasetReport:
    accepted: int = 0
    rejected: int = 0
    duplicates: int = 0
    parse_rate: float = 1.0
    validity_rate: float = 1.0
    duplicate_rate: float = 0.0
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "duplicates": self.duplicates,
            "parse_rate": self.parse_rate,
            "validity_rate": self.validity_rate,
            "duplicate_rate": self.duplicate_rate,
            "notes": self.notes,
        }


def _load_template(name: str, template_dir=None) -> str:
    if template_dir is not None:
        return (Path(template_dir) / name).read_text(encoding="utf-8")
    return resources.files("btgen.templates").joinpath(name).read_text(encoding="utf-8")


def request_random_bt(backend, profile: GenerationProfile,
                      variation: str = "", template_dir=None) -> str:
    prompt = _load_template("random_bt.txt", template_dir)
    prompt = prompt.replace(
        "{{constraints}}", "\n".join(f"- {c}" for c in profile.constraints)
    )
    prompt = prompt.replace("{{variation}}", variation)
    xml_text = postprocess(backend.complete(prompt))
    tree = xml_io.parse(xml_text)  # must be self-consistent, no library yet
    return xml_io.serialize(tree)


def request_library(backend, bt_xml: str, template_dir=None) -> NodeLibrary:
    tree = xml_io.parse(bt_xml)
    prompt = _load_template("node_library.txt", template_dir)
    prompt = prompt.replace("{{bt_xml}}", bt_xml)
    library = lib_mod.load_library(backend.complete(prompt))

    # The library must cover every leaf; backfill anything the model missed.
    entries = list(library.entries)
    known = set(library.ids())
    for leaf_id, role in sorted(collect_leaves(tree)):
        if leaf_id in known:
            continue
        log.warning("library completion missed %r; auto-adding", leaf_id)
        lib_role = LibRole.CONDITION if role.value == "Condition" else LibRole.ACTION
        entries.append(NodeSpec(
            id=leaf_id, role=lib_role,
            description=id_to_words(leaf_id).capitalize(),
        ))
        known.add(leaf_id)
    return lib_mod.make_library(entries)


def request_description(backend, bt_xml: str, template_dir=None) -> str:
    xml_io.parse(bt_xml)
    prompt = _load_template("description.txt", template_dir)
    prompt = prompt.replace("{{bt_xml}}", bt_xml)
    description = backend.complete(prompt).strip()
    if not description:
        raise EmptyDescription("backend returned an empty description")
    return " ".join(description.split())


def assemble_sample(description: str, library: NodeLibrary,
                    bt_xml: str) -> DatasetSample:
    tree = xml_io.parse(bt_xml)
    report = validate_structure(tree, library)
    if not report.ok:
        raise ValidationFailed(
            f"output does not validate: {sorted(c.value for c in report.codes())}"
        )
    return DatasetSample(
        instruction=build_instruction(description, library),
        input="",
        output=xml_io.serialize(report.resolved),
    )


def _tokens(text: str) -> set:
    return set(re.findall(r"[a-z0-9]+", text.lower()))


def jaccard(a: str, b: str) -> float:
    ta, tb = _tokens(a), _tokens(b)
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


def make_dataset(backend, count: int, profile: GenerationProfile,
                 out_path, seed: int = 0, duplicate_threshold: float = 0.9,
                 template_dir=None) -> DatasetReport:
    """Run the three-request pipeline until `count` samples pass the
    validity and diversity filters, then write them as one JSON array."""
    if count < 1:
        raise ValueError("count must be >= 1")
    report = DatasetReport()
    samples: list[DatasetSample] = []
    descriptions: list[str] = []
    attempts = 0
    max_attempts = 3 * count
    while len(samples) < count:
        if attempts >= max_attempts:
            raise TargetUnreachable(
                f"only {len(samples)}/{count} samples after {attempts} attempts"
            )
        variation = f"(sample tag {seed}-{attempts})"
        attempts += 1
        try:
            bt_xml = request_random_bt(backend, profile, variation, template_dir)
            library = request_library(backend, bt_xml, template_dir)
            description = request_description(backend, bt_xml, template_dir)
            sample = assemble_sample(description, library, bt_xml)
        except (DatasetError, xml_io.ParseError, lib_mod.LibraryError) as exc:
            report.rejected += 1
            report.notes.append(f"attempt {attempts}: {exc}")
            continue
        if any(jaccard(description, seen) > duplicate_threshold
               for seen in descriptions):
            report.duplicates += 1
            continue
        descriptions.append(description)
        samples.append(sample)

    report.accepted = len(samples)
    total = report.accepted + report.rejected
    report.validity_rate = report.accepted / total if total else 1.0
    report.duplicate_rate = report.duplicates / attempts if attempts else 0.0
    Path(out_path).write_text(
        json.dumps([s.to_dict() for s in samples], indent=2) + "\n",
        encoding="utf-8",
    )
    return report


def check_dataset(path) -> DatasetReport:
    """Re-validate an existing dataset file sample by sample."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed dataset file: {exc}") from exc
    if not isinstance(doc, list):
        raise DatasetError("dataset file must be a JSON array")

    report = DatasetReport()
    n = len(doc)
    parses = valid = 0
    descriptions = []
    for i, raw in enumerate(doc):
        if not isinstance(raw, dict) or raw.get("input", "") != "":
            report.notes.append(f"sample {i}: bad shape or non-empty input")
            report.rejected += 1
            continue
        tree, err = xml_io.try_parse(raw.get("output", ""))
        if err is not None:
            report.notes.append(f"sample {i}: {err}")
            report.rejected += 1
            continue
        parses += 1
        try:
            library = lib_mod.parse_prompt_library(raw.get("instruction", ""))
            ok = validate_structure(tree, library).ok
        except lib_mod.LibraryError as exc:
            report.notes.append(f"sample {i}: {exc}")
            ok = False
        if ok:
            valid += 1
            report.accepted += 1
        else:
            report.rejected += 1
        descriptions.append(raw.get("instruction", ""))

    dupes = 0
    for i in range(len(descriptions)):
        for j in range(i):
            if jaccard(descriptions[i], descriptions[j]) > 0.9:
                dupes += 1
                break
    report.duplicates = dupes
    report.parse_rate = parses / n if n else 0.0
    report.validity_rate = valid / n if n else 0.0
    report.duplicate_rate = dupes / n if n else 0.0
    return report


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-4
    batch_size: int = 128
    micro_batch_size: int = 4
    epochs: int = 3
    val_fraction: float = 0.10
    method: str = "LoRA"

    def __post_init__(self):
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")

    def to_dict(self):
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "micro_batch_size": self.micro_batch_size,
            "epochs": self.epochs,
            "val_fraction": self.val_fraction,
            "method": self.method,
        }


def emit_train_config(dataset_path, out_path, low_memory: bool = False,
                      epochs: int | None = None) -> TrainConfig:
    """Write the fine-tuning configuration for a dataset. The low-memory
    profile trades batch size for footprint; smaller datasets may bump
    the epoch count."""
    if not Path(dataset_path).exists():
        raise DatasetError(f"no dataset at {dataset_path}")
    kwargs = {}
    if low_memory:
        kwargs.update(batch_size=32, micro_batch_size=1)
    if epochs is not None:
        kwargs.update(epochs=epochs)
    config = TrainConfig(**kwargs)
    doc = {"dataset": str(dataset_path), **config.to_dict()}
    Path(out_path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return config
