"""Local HTTP service exposing session engines under /v1.

The service is the only mutation surface: every endpoint funnels through
one SessionEngine per session. Binds loopback by default; when
CTXMEM_TOKEN is set, all /v1 routes require that bearer token. With a
non-synchronous provider, capture endpoints switch to a job/polling style
(202 + jobId).
"""

from __future__ import annotations

import base64
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..analyzer.base import Analyzer
from ..analyzer.mock import MockAnalyzer
from ..config import EngineConfig
from ..errors import (
    ArgumentError,
    ConflictError,
    CtxmemError,
    FormatError,
    IntegrityError,
    ProviderError,
    ValidationError,
)
from ..models import Provenance
from ..retrieval import score_memory
from ..session import SessionEngine
from ..store import SessionStore
from . import schemas as S

_STATUS = {"badRequest": 400, "notFound": 404, "conflict": 409,
           "providerUnavailable": 503, "internal": 500}


class ApiException(Exception):
    def __init__(self, code: str, message: str, detail: str | None = None):
        self.error = S.ApiError(code=code, message=message, detail=detail)
        super().__init__(message)


def _classify(exc: CtxmemError) -> ApiException:
    if isinstance(exc, ProviderError):
        return ApiException("providerUnavailable", str(exc))
    if isinstance(exc, ConflictError):
        return ApiException("conflict", str(exc))
    if isinstance(exc, (ArgumentError, ValidationError, FormatError, IntegrityError)):
        return ApiException("badRequest", str(exc))
    return ApiException("internal", str(exc))


class SessionRegistry:
    def __init__(self, root: Path, analyzer: Analyzer, config: EngineConfig):
        self.root = Path(root)
        self.analyzer = analyzer
        self.config = config
        self._engines: dict[str, SessionEngine] = {}
        self._lock = threading.Lock()

    def create(self, session_id: str | None = None) -> SessionEngine:
        with self._lock:
            engine = SessionEngine.create(self.root, self.analyzer, self.config,
                                          session_id=session_id)
            self._engines[engine.session_id] = engine
            return engine

    def get(self, session_id: str) -> SessionEngine:
        with self._lock:
            if session_id not in self._engines:
                if session_id not in SessionStore.list_sessions(self.root):
                    raise ApiException("notFound", f"unknown session {session_id!r}")
                self._engines[session_id] = SessionEngine.open(
                    self.root, session_id, self.analyzer, self.config)
            return self._engines[session_id]


class JobBoard:
    """In-memory pending jobs for slow (remote-provider) captures."""

    def __init__(self):
        self._jobs: dict[str, dict] = {}
        self._lock = threading.Lock()

    def start(self, fn) -> str:
        job_id = "job_" + uuid.uuid4().hex[:10]
        with self._lock:
            self._jobs[job_id] = {"status": "pending", "result": None, "error": None}

        def run():
            try:
                result = fn()
                with self._lock:
                    self._jobs[job_id] = {"status": "done", "result": result, "error": None}
            except CtxmemError as exc:
                err = _classify(exc).error
                with self._lock:
                    self._jobs[job_id] = {"status": "error", "result": None,
                                          "error": err.model_dump()}

        threading.Thread(target=run, daemon=True).start()
        return job_id

    def get(self, job_id: str) -> dict:
        with self._lock:
            if job_id not in self._jobs:
                raise ApiException("notFound", f"unknown job {job_id!r}")
            return dict(self._jobs[job_id])


def _decode_image(b64: str | None) -> bytes | None:
    if not b64:
        return None
    try:
        return base64.b64decode(b64, validate=True)
    except Exception as exc:
        raise ApiException("badRequest", f"invalid base64 image: {exc}") from exc


def _tree_response(engine: SessionEngine) -> S.TreeResponse:
    tree = engine.tree
    return S.TreeResponse(
        sessionId=engine.session_id,
        version=engine.version,
        summary=engine.summary(),
        memories=[S.MemoryModel(**m.to_dict()) for m in tree.memories.values()],
        branches=[S.BranchModel(**b.to_dict()) for b in tree.branches.values()],
        links=[S.LinkModel(**l.to_dict()) for l in tree.links],
    )


def _mutation(engine: SessionEngine, result: dict | None = None) -> S.MutationResponse:
    return S.MutationResponse(result=result or {}, tree=_tree_response(engine))


def create_app(data_dir: str | Path = "./data", analyzer: Analyzer | None = None,
               config: EngineConfig | None = None) -> FastAPI:
    config = config or EngineConfig.load(os.environ.get("CTXMEM_CONFIG") or None)
    if analyzer is None:
        if os.environ.get("CTXMEM_PROVIDER", "mock") == "remote":
            from ..analyzer.remote import RemoteAnalyzer
            analyzer = RemoteAnalyzer()
        else:
            analyzer = MockAnalyzer(config.strong_link_threshold)
    registry = SessionRegistry(Path(data_dir), analyzer, config)
    jobs = JobBoard()
    app = FastAPI(title="ctxmem", version="0.1.0")
    app.state.registry = registry
    token = os.environ.get("CTXMEM_TOKEN", "")

    # the web client is served from its own local origin
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.middleware("http")
    async def bearer_gate(request: Request, call_next):
        if token and request.url.path.startswith("/v1"):
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {token}":
                return JSONResponse(status_code=401, content={
                    "code": "badRequest", "message": "missing or invalid bearer token",
                    "detail": None})
        return await call_next(request)

    def _error_response(error: S.ApiError) -> JSONResponse:
        content = error.model_dump()
        if error.code == "providerUnavailable":
            content["queued"] = False  # capture was not parked for retry
        return JSONResponse(status_code=_STATUS[error.code], content=content)

    @app.exception_handler(ApiException)
    async def api_exception_handler(request: Request, exc: ApiException):
        return _error_response(exc.error)

    @app.exception_handler(CtxmemError)
    async def engine_exception_handler(request: Request, exc: CtxmemError):
        return _error_response(_classify(exc).error)

    # -- sessions ------------------------------------------------------------

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/sessions", status_code=201, response_model=S.SessionResponse)
    def create_session(body: S.SessionCreateRequest | None = None):
        engine = registry.create(body.sessionId if body else None)
        return S.SessionResponse(sessionId=engine.session_id, manifest=engine.manifest())

    @app.get("/v1/sessions/{sid}", response_model=S.SessionResponse)
    def get_session(sid: str):
        engine = registry.get(sid)
        return S.SessionResponse(sessionId=engine.session_id, manifest=engine.manifest())

    # -- capture ---------------------------------------------------------------

    def _run_capture(fn):
        """Synchronous providers answer inline; slow ones get a job id."""
        if analyzer.synchronous:
            return None, fn()
        return jobs.start(fn), None

    @app.post("/v1/sessions/{sid}/capture/snippet", status_code=201)
    def capture_snippet(sid: str, body: S.SnippetCaptureRequest):
        engine = registry.get(sid)
        image = _decode_image(body.imageBase64)
        prov = Provenance(body.provenance.appName, body.provenance.windowTitle,
                          body.provenance.url)

        def work():
            return engine.capture_snippet(text=body.text, image=image,
                                          user_memo=body.userMemo, provenance=prov)

        job_id, result = _run_capture(work)
        if job_id:
            return JSONResponse(status_code=202,
                                content={"jobId": job_id, "status": "pending"})
        return S.CaptureResponse(**result)

    @app.post("/v1/sessions/{sid}/capture/observation")
    def capture_observation(sid: str, body: S.ObservationCaptureRequest):
        engine = registry.get(sid)
        image = _decode_image(body.imageBase64)
        prov = Provenance(body.provenance.appName, body.provenance.windowTitle,
                          body.provenance.url)

        def work():
            return engine.capture_observation(image=image, provenance=prov)

        job_id, result = _run_capture(work)
        if job_id:
            return JSONResponse(status_code=202,
                                content={"jobId": job_id, "status": "pending"})
        status = 201 if result.get("memoryId") else 200
        return JSONResponse(status_code=status,
                            content=S.CaptureResponse(**result).model_dump())

    @app.get("/v1/sessions/{sid}/jobs/{job_id}", response_model=S.JobResponse)
    def get_job(sid: str, job_id: str):
        registry.get(sid)
        job = jobs.get(job_id)
        return S.JobResponse(jobId=job_id, **job)

    # -- chat + probe -------------------------------------------------------------

    @app.post("/v1/sessions/{sid}/chat", response_model=S.ChatResponse)
    def chat(sid: str, body: S.ChatRequest):
        engine = registry.get(sid)
        result = engine.chat(body.message, body.explicitMemoryIds,
                             body.explicitBranchIds, probe=body.probe)
        return S.ChatResponse(**result)

    @app.post("/v1/sessions/{sid}/probe/choice", response_model=S.MutationResponse)
    def probe_choice(sid: str, body: S.ProbeChoiceRequest):
        engine = registry.get(sid)
        result = engine.resolve_probe_choice(body.queryId, body.chosen)
        return _mutation(engine, result)

    # -- views -----------------------------------------------------------------------

    @app.get("/v1/sessions/{sid}/tree", response_model=S.TreeResponse)
    def get_tree(sid: str):
        return _tree_response(registry.get(sid))

    @app.get("/v1/sessions/{sid}/timeline", response_model=S.TimelineResponse)
    def get_timeline(sid: str):
        engine = registry.get(sid)
        return S.TimelineResponse(
            sessionId=engine.session_id, version=engine.version,
            memories=[S.MemoryModel(**m.to_dict()) for m in engine.timeline()])

    @app.get("/v1/sessions/{sid}/summary", response_model=S.SummaryResponse)
    def get_summary(sid: str):
        engine = registry.get(sid)
        return S.SummaryResponse(summary=engine.summary(), version=engine.version)

    @app.post("/v1/sessions/{sid}/score", response_model=S.ScoreResponse)
    def score(sid: str, body: S.ScoreRequest):
        engine = registry.get(sid)
        now = body.now if body.now is not None else engine.clock()
        scores = []
        for m in engine.tree.retrievable():
            try:
                scores.append(score_memory(m, body.query, now,
                                           engine.config.source_boost).to_dict())
            except ArgumentError as exc:
                raise ApiException("badRequest", str(exc)) from exc
        scores.sort(key=lambda s: (-s["score"], s["memoryId"]))
        return S.ScoreResponse(query=body.query, scores=scores)

    # -- tree mutations ------------------------------------------------------------------

    @app.post("/v1/sessions/{sid}/tree/move", response_model=S.MutationResponse)
    def tree_move(sid: str, body: S.MoveRequest):
        engine = registry.get(sid)
        engine.move_memory(body.memoryId, body.targetBranchId)
        return _mutation(engine, {"memoryId": body.memoryId,
                                  "branchId": body.targetBranchId})

    @app.post("/v1/sessions/{sid}/tree/group", response_model=S.MutationResponse)
    def tree_group(sid: str, body: S.GroupRequest):
        engine = registry.get(sid)
        branch_id = engine.group_memories(body.memoryIds, body.name)
        return _mutation(engine, {"branchId": branch_id})

    @app.post("/v1/sessions/{sid}/tree/reorg", response_model=S.MutationResponse)
    def tree_reorg(sid: str, body: S.ReorgRequest):
        engine = registry.get(sid)
        result = engine.reorg(body.instruction, body.memoryIds, body.branchIds)
        return _mutation(engine, result)

    @app.post("/v1/sessions/{sid}/memories/{mid}", response_model=S.MutationResponse)
    def edit_memory(sid: str, mid: str, body: S.MemoryEditRequest):
        engine = registry.get(sid)
        changed = engine.edit_memory(mid, title=body.title, summary=body.summary,
                                     context_sentence=body.contextSentence,
                                     tags=body.tags, user_memo=body.userMemo)
        return _mutation(engine, {"memoryId": mid, "changed": changed})

    @app.post("/v1/sessions/{sid}/memories/{mid}/visibility",
              response_model=S.MutationResponse)
    def set_visibility(sid: str, mid: str, body: S.VisibilityRequest):
        engine = registry.get(sid)
        engine.set_visibility(mid, body.hidden, body.archived)
        return _mutation(engine, {"memoryId": mid, "hidden": body.hidden,
                                  "archived": body.archived})

    @app.delete("/v1/sessions/{sid}/branches/{bid}", response_model=S.MutationResponse)
    def delete_branch(sid: str, bid: str):
        engine = registry.get(sid)
        engine.delete_branch(bid)
        return _mutation(engine, {"branchId": bid, "deleted": True})

    return app
