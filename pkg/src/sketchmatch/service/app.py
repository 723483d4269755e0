"""HTTP service around the sketching core.

Stateless endpoints generate, run and verify whole streams; sessions keep a
pipeline sketch alive across update batches so that several producers can
feed separate sessions and merge them.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bench import run, verify
from ..instances import generate
from ..pipeline import ConfigError, Pipeline
from ..stream import SketchMismatch, StreamError, format_stream, parse_stream, updates_to_arrays
from .schemas import (BitsResponse, GenerateResponse, InstanceSpecModel, MergeRequest, RunRequest,
                      SessionCreate, SessionInfo, UpdateBatch, VerifyRequest, VerifyResponse)


@dataclass
class Session:
    pipeline: Pipeline
    updates: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


def create_app() -> FastAPI:
    app = FastAPI(title="sketchmatch", version=__version__)
    sessions: dict[str, Session] = {}
    registry = threading.Lock()

    @app.exception_handler(StreamError)
    async def stream_error(request: Request, exc: StreamError):
        return JSONResponse(status_code=400, content={"detail": str(exc), "line": exc.line})

    @app.exception_handler(ConfigError)
    async def config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(SketchMismatch)
    async def mismatch(request: Request, exc: SketchMismatch):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    def session(sid: str) -> Session:
        try:
            return sessions[sid]
        except KeyError:
            raise HTTPException(404, f"no session {sid}") from None

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/streams/generate", response_model=GenerateResponse)
    def generate_stream(spec: InstanceSpecModel):
        try:
            stream = generate(spec.to_spec())
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        return GenerateResponse(text=format_stream(stream), n=stream.n, updates=len(stream),
                                planted_mu=spec.to_spec().planted_mu)

    @app.post("/runs")
    def run_stream(req: RunRequest):
        stream = parse_stream(req.stream)
        return run(stream, req.options.to_config(stream.n), timing=req.timing)

    @app.post("/verify", response_model=VerifyResponse)
    def verify_report(req: VerifyRequest):
        return verify(parse_stream(req.stream), req.report).as_dict()

    @app.post("/sessions", response_model=SessionInfo, status_code=201)
    def create_session(body: SessionCreate):
        pipeline = Pipeline(body.config.to_config())
        sid = uuid.uuid4().hex
        with registry:
            sessions[sid] = Session(pipeline)
        return SessionInfo(id=sid, n=pipeline.n, updates=0)

    @app.post("/sessions/{sid}/updates", response_model=SessionInfo)
    def add_updates(sid: str, batch: UpdateBatch):
        s = session(sid)
        us, vs, ds = updates_to_arrays(batch.updates, s.pipeline.n)
        with s.lock:
            if us.size:
                s.pipeline.feed_arrays(us, vs, ds)
            s.updates += int(us.size)
            return SessionInfo(id=sid, n=s.pipeline.n, updates=s.updates)

    @app.post("/sessions/{sid}/merge", response_model=SessionInfo)
    def merge_session(sid: str, body: MergeRequest):
        s, other = session(sid), session(body.other)
        if s is other:
            raise HTTPException(422, "cannot merge a session into itself")
        first, second = (s, other) if sid < body.other else (other, s)
        with first.lock, second.lock:
            s.pipeline.check_compatible(other.pipeline)
            s.pipeline._add_state(other.pipeline)
            s.updates += other.updates
            return SessionInfo(id=sid, n=s.pipeline.n, updates=s.updates)

    @app.post("/sessions/{sid}/recover")
    def recover(sid: str):
        s = session(sid)
        with s.lock:
            return s.pipeline.recover().as_dict()

    @app.get("/sessions/{sid}/bits", response_model=BitsResponse)
    def bits(sid: str):
        return session(sid).pipeline.bits_report()

    @app.delete("/sessions/{sid}", status_code=204)
    def delete(sid: str):
        with registry:
            if sessions.pop(sid, None) is None:
                raise HTTPException(404, f"no session {sid}")

    return app


app = create_app()
