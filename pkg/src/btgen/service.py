"""HTTP JSON facade: sessions holding a library + simulated world, command
generation, stepped or batched execution, and validation."""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import library as lib_mod
from . import xml_io
from .backends import BackendConfig, BackendUnavailable, make_backend
from .engine import Engine, EngineError, ScriptedExecutor
from .generate import GenerateOptions, generate
from .trees import TickStatus, node_count
from .validate import RepairPolicy, validate_logic, validate_structure


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, extra=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.extra = extra or {}


@dataclass
class Session:
    session_id: str
    library: lib_mod.NodeLibrary
    world_doc: dict
    engine: Engine | None = None
    tree_xml: str | None = None
    events_sent: int = 0
    last_access: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def make_executor(self):
        import json

        return ScriptedExecutor.from_json(json.dumps(self.world_doc), self.library)


def create_app(backend_config: BackendConfig | None = None,
               session_ttl: float = 3600.0,
               generate_options: GenerateOptions | None = None) -> FastAPI:
    app = FastAPI(title="bt operator service")
    backend_config = backend_config or BackendConfig()
    options = generate_options or GenerateOptions(
        repair_policy=RepairPolicy.BOTH
    )
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()
    backend = make_backend(backend_config)

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message, **exc.extra}
        return JSONResponse(status_code=exc.status, content=body)

    def evict_stale():
        now = time.monotonic()
        with store_lock:
            stale = [k for k, s in sessions.items()
                     if now - s.last_access > session_ttl]
            for k in stale:
                del sessions[k]

    def get_session(session_id: str) -> Session:
        evict_stale()
        with store_lock:
            session = sessions.get(session_id)
        if session is None:
            raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
        session.last_access = time.monotonic()
        return session

    @app.post("/sessions", status_code=201)
    async def create_session(payload: dict):
        import json

        lib_doc = payload.get("library")
        if lib_doc is None:
            raise ApiError(400, "MissingLibrary", "payload must carry a library")
        try:
            library = lib_mod.load_library(json.dumps(lib_doc))
        except lib_mod.LibraryError as exc:
            raise ApiError(400, exc.kind.value, exc.message)
        world_doc = payload.get("world") or {}
        try:
            ScriptedExecutor.from_json(json.dumps(world_doc), library)
        except (ValueError, KeyError) as exc:
            raise ApiError(400, "BadWorld", f"invalid world script: {exc}")
        session = Session(uuid.uuid4().hex, library, world_doc)
        with store_lock:
            sessions[session.session_id] = session
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}")
    async def snapshot(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "library": [e.id for e in session.library.entries],
                "tree_xml": session.tree_xml,
                "node_count": (node_count(session.engine.tree)
                               if session.engine else 0),
                "final": (session.engine.trace.final.value
                          if session.engine and session.engine.trace.ticks_used
                          else None),
                "ticks_used": (session.engine.trace.ticks_used
                               if session.engine else 0),
            }

    @app.post("/sessions/{session_id}/command")
    async def command(session_id: str, payload: dict):
        session = get_session(session_id)
        text = (payload or {}).get("text", "")
        if not text.strip():
            raise ApiError(400, "EmptyCommand", "command text must be non-empty")
        with session.lock:
            try:
                outcome = generate(backend, text, session.library, options)
            except BackendUnavailable as exc:
                raise ApiError(502, "BackendUnavailable", str(exc))
            if outcome.tree is None:
                raise ApiError(
                    422, "AllAttemptsFailed",
                    f"no valid tree after {outcome.attempts} attempt(s)",
                    extra={"raw": outcome.raw, "attempts": outcome.attempts},
                )
            session.tree_xml = xml_io.serialize(outcome.tree)
            session.engine = Engine(outcome.tree, session.make_executor())
            session.events_sent = 0
            return {
                "tree_xml": session.tree_xml,
                "report": outcome.report.to_dict(),
                "attempts": outcome.attempts,
                "node_count": node_count(outcome.tree),
            }

    def _require_engine(session: Session) -> Engine:
        if session.engine is None:
            raise ApiError(409, "NoTreeInstalled", "install a tree first")
        engine = session.engine
        if engine.trace.ticks_used and engine.trace.final is not TickStatus.RUNNING:
            raise ApiError(409, "TerminalState",
                           f"execution already ended with {engine.trace.final.value}")
        return engine

    @app.post("/sessions/{session_id}/step")
    async def step(session_id: str):
        session = get_session(session_id)
        with session.lock:
            engine = _require_engine(session)
            try:
                status = engine.tick()
            except EngineError as exc:
                raise ApiError(409, type(exc).__name__, str(exc))
            new_events = engine.trace.events[session.events_sent:]
            session.events_sent = len(engine.trace.events)
            return {
                "status": status.value,
                "new_events": [e.to_dict() for e in new_events],
            }

    @app.post("/sessions/{session_id}/run")
    async def run(session_id: str, payload: dict | None = None):
        session = get_session(session_id)
        max_ticks = int((payload or {}).get("max_ticks", 100))
        if max_ticks < 1:
            raise ApiError(400, "BadMaxTicks", "max_ticks must be >= 1")
        with session.lock:
            engine = _require_engine(session)
            try:
                engine.run(max_ticks)
            except EngineError as exc:
                raise ApiError(409, type(exc).__name__, str(exc))
            session.events_sent = len(engine.trace.events)
            return engine.trace.to_dict()

    @app.post("/sessions/{session_id}/validate")
    async def validate(session_id: str, payload: dict):
        session = get_session(session_id)
        tree_xml = (payload or {}).get("tree_xml", "")
        tree, err = xml_io.try_parse(tree_xml)
        if err is not None:
            raise ApiError(400, err.kind.value, err.message,
                           extra={"line": err.line, "column": err.column})
        with session.lock:
            report = validate_structure(tree, session.library)
            if report.ok:
                logic = validate_logic(report.resolved, session.library)
                report.findings.extend(logic.findings)
            return report.to_dict()

    return app
