"""Command-line surface for the toolkit, including a line-oriented
operator REPL.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset as ds
from . import library as lib_mod
from . import stats as st
from . import xml_io
from .backends import BackendConfig, BackendUnavailable, make_backend
from .engine import Engine, EngineError, ScriptedExecutor
from .generate import (
    AllAttemptsFailed,
    GenerateOptions,
    generate,
    generate_checked,
)
from .validate import RepairPolicy, validate_logic, validate_structure

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3


def _human(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(payload, args, render=None) -> None:
    if getattr(args, "format", "text") == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(render(payload) if render else json.dumps(payload, indent=2))


def _load_library(path) -> lib_mod.NodeLibrary:
    return lib_mod.load_library(Path(path).read_text(encoding="utf-8"))


def _load_world(path, library):
    if path is None:
        return ScriptedExecutor(library=library)
    return ScriptedExecutor.from_json(
        Path(path).read_text(encoding="utf-8"), library
    )


def _backend_from_args(args):
    if getattr(args, "backend", None):
        config = BackendConfig.from_json(
            Path(args.backend).read_text(encoding="utf-8")
        )
    else:
        config = BackendConfig(seed=getattr(args, "seed", 0))
    return make_backend(config)


def _full_report(tree, library):
    report = validate_structure(tree, library)
    if report.ok:
        report.findings.extend(validate_logic(report.resolved, library).findings)
    return report


def cmd_validate(args):
    tree, err = xml_io.try_parse(Path(args.tree).read_text(encoding="utf-8"))
    if err is not None:
        _emit({"ok": False, "parse_error": str(err)}, args)
        return EXIT_INVALID
    report = _full_report(tree, _load_library(args.library))
    _emit(report.to_dict(), args)
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_fmt(args):
    tree = xml_io.parse(Path(args.tree).read_text(encoding="utf-8"))
    sys.stdout.write(xml_io.serialize(tree))
    return EXIT_OK


def cmd_run(args):
    library = _load_library(args.library)
    tree = xml_io.parse(Path(args.tree).read_text(encoding="utf-8"))
    report = validate_structure(tree, library)
    if not report.ok:
        _emit(report.to_dict(), args)
        return EXIT_INVALID
    engine = Engine(report.resolved, _load_world(args.world, library))
    trace = engine.run(args.max_ticks)
    _emit(trace.to_dict(), args,
          render=lambda t: trace.to_jsonl() + f"final: {t['final']}")
    return EXIT_OK


def cmd_generate(args):
    library = _load_library(args.library)
    backend = _backend_from_args(args)
    try:
        outcome = generate(
            backend, args.command, library,
            GenerateOptions(retries=args.retries,
                            repair_policy=RepairPolicy(args.repair)),
        )
    except BackendUnavailable as exc:
        _human(f"backend error: {exc}")
        return EXIT_BACKEND
    if outcome.tree is None:
        _emit({"ok": False, "attempts": outcome.attempts, "raw": outcome.raw}, args)
        return EXIT_INVALID
    payload = {
        "tree_xml": xml_io.serialize(outcome.tree),
        "report": outcome.report.to_dict(),
        "attempts": outcome.attempts,
    }
    _emit(payload, args, render=lambda p: p["tree_xml"])
    return EXIT_OK


def cmd_repl(args):
    library = _load_library(args.library)
    backend = _backend_from_args(args)
    engine = None
    _human("operator loop ready; enter a command, or q to quit")
    for line in sys.stdin:
        line = line.strip()
        if not line or line == "q":
            break
        if line == "r" or line == "s":
            if engine is None:
                _human("no tree installed yet")
                continue
            try:
                if line == "r":
                    trace = engine.run(args.max_ticks)
                    print(f"final: {trace.final.value} after {trace.ticks_used} ticks")
                else:
                    print(f"tick: {engine.tick().value}")
            except EngineError as exc:
                _human(str(exc))
            continue
        if line == "n":
            engine = None
            _human("cleared; enter a new command")
            continue
        try:
            outcome = generate_checked(
                backend, line, library,
                GenerateOptions(repair_policy=RepairPolicy.BOTH),
            )
        except BackendUnavailable as exc:
            _human(f"backend error: {exc}")
            return EXIT_BACKEND
        except AllAttemptsFailed as exc:
            _human(str(exc))
            continue
        print(xml_io.serialize(outcome.tree), end="")
        for finding in outcome.report.findings:
            _human(f"{finding.severity.value}: {finding.code.value}: {finding.message}")
        engine = Engine(outcome.tree, _load_world(args.world, library))
        _human("[r]un / [s]tep / [n]ew command")
    return EXIT_OK


def cmd_dataset_make(args):
    backend = _backend_from_args(args)
    profile = ds.GenerationProfile()
    try:
        report = ds.make_dataset(backend, args.count, profile, args.out,
                                 seed=args.seed)
    except BackendUnavailable as exc:
        _human(f"backend error: {exc}")
        return EXIT_BACKEND
    _emit(report.to_dict(), args)
    return EXIT_OK


def cmd_dataset_check(args):
    report = ds.check_dataset(args.path)
    _emit(report.to_dict(), args)
    return EXIT_OK if report.validity_rate == 1.0 else EXIT_INVALID


def cmd_eval_gen(args):
    backend = _backend_from_args(args)
    suite = []
    for item in json.loads(Path(args.suite).read_text(encoding="utf-8")):
        suite.append((item["command"], _load_library(item["library_path"])))
    try:
        metrics = st.generation_metrics(backend, suite)
    except BackendUnavailable as exc:
        _human(f"backend error: {exc}")
        return EXIT_BACKEND
    _emit(metrics.to_dict(), args)
    return EXIT_OK


def cmd_eval_study(args):
    matrix = st.AnswerMatrix.from_csv(
        Path(args.answers).read_text(encoding="utf-8"),
        skip_header=args.skip_header,
    )
    result = st.study_stats(matrix, mu=args.mu, alpha=args.alpha)
    _emit(result.to_dict(), args, render=lambda r: "\n".join(
        f"{k}: {v}" for k, v in r.items()
    ))
    return EXIT_OK


def cmd_train_config(args):
    config = ds.emit_train_config(args.dataset, args.out,
                                  low_memory=args.low_memory, epochs=args.epochs)
    _emit(config.to_dict(), args)
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    if getattr(args, "backend", None):
        config = BackendConfig.from_json(
            Path(args.backend).read_text(encoding="utf-8")
        )
    else:
        config = BackendConfig(seed=args.seed)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btgen")

    def common(sp, backend=False, world=False):
        sp.add_argument("--format", choices=["text", "json"], default="text")
        if backend:
            sp.add_argument("--backend", help="backend config JSON path")
            sp.add_argument("--seed", type=int, default=0)
        if world:
            sp.add_argument("--world", help="world script JSON path")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a tree against a library")
    p.add_argument("tree")
    p.add_argument("--library", required=True)
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fmt", help="print canonical XML")
    p.add_argument("tree")
    common(p)
    p.set_defaults(func=cmd_fmt)

    p = sub.add_parser("run", help="execute a tree against a world script")
    p.add_argument("tree")
    p.add_argument("--library", required=True)
    p.add_argument("--max-ticks", type=int, default=100)
    common(p, world=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="generate a tree from a command")
    p.add_argument("--command", required=True)
    p.add_argument("--library", required=True)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--repair", default="both",
                   choices=[rp.value for rp in RepairPolicy])
    common(p, backend=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("repl", help="interactive operator loop")
    p.add_argument("--library", required=True)
    p.add_argument("--max-ticks", type=int, default=100)
    common(p, backend=True, world=True)
    p.set_defaults(func=cmd_repl)

    p_ds = sub.add_parser("dataset", help="dataset tooling")
    ds_sub = p_ds.add_subparsers(dest="dataset_command", required=True)
    p = ds_sub.add_parser("make")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    common(p, backend=True)
    p.set_defaults(func=cmd_dataset_make)
    p = ds_sub.add_parser("check")
    p.add_argument("path")
    common(p)
    p.set_defaults(func=cmd_dataset_check)

    p_ev = sub.add_parser("eval", help="evaluation tooling")
    ev_sub = p_ev.add_subparsers(dest="eval_command", required=True)
    p = ev_sub.add_parser("gen")
    p.add_argument("--suite", required=True)
    common(p, backend=True)
    p.set_defaults(func=cmd_eval_gen)
    p = ev_sub.add_parser("study")
    p.add_argument("answers")
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--skip-header", action="store_true")
    common(p)
    p.set_defaults(func=cmd_eval_study)

    p = sub.add_parser("train-config", help="emit fine-tuning configuration")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--low-memory", action="store_true")
    p.add_argument("--epochs", type=int)
    common(p)
    p.set_defaults(func=cmd_train_config)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8344)
    p.add_argument("--backend", help="backend config JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        _human(f"file not found: {exc.filename}")
        return EXIT_USAGE
    except (xml_io.ParseError, lib_mod.LibraryError, ds.DatasetError) as exc:
        _human(str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
