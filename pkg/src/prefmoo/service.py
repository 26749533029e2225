"""HTTP session service for human-in-the-loop optimization.

JSON over HTTP; one session per decision maker, fully independent sessions.
Within a session every state transition is serialized; conflicting requests
(answering a stale query, asking for a second query while one is pending) get
a 409 and never corrupt state.  Sessions snapshot to one JSON file per
session after every mutation so long-lived human sessions survive restarts.

Objective vectors cross the wire in original units; dimensions are
zero-based.  In external-objective mode the service never evaluates
objectives: the client supplies y via observe.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .benchmarks import benchmark_names, get_benchmark
from .engine import Engine, SessionConfig

__all__ = ["create_app"]

_CONFIG_FIELDS = (
    "seed", "utility", "query_selection", "sigma_pc", "sigma_ir", "alpha",
    "rho", "n_init", "n_posterior_samples", "mcmc_burn_in",
    "mcmc_refresh_burn_in", "mcmc_thin", "pool_size", "ei_weight_samples",
    "mc_samples", "pgpm_mc_draws", "dtlz_norm",
)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"error": message, "code": code}, status_code=status)


class _Session:
    def __init__(self, sid: str, engine: Engine):
        self.id = sid
        self.engine = engine
        self.lock = threading.Lock()


class _Store:
    """In-memory session registry with JSON-file persistence."""

    def __init__(self, data_dir=None):
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict = {}
        self._registry_lock = threading.Lock()

    def create(self, engine: Engine) -> _Session:
        sid = uuid.uuid4().hex[:12]
        session = _Session(sid, engine)
        with self._registry_lock:
            self._sessions[sid] = session
        self.persist(session)
        return session

    def get(self, sid: str) -> _Session | None:
        with self._registry_lock:
            session = self._sessions.get(sid)
        if session is not None:
            return session
        if self.data_dir:
            path = self.data_dir / f"{sid}.json"
            if path.exists():
                engine = Engine.from_state(json.loads(path.read_text()))
                session = _Session(sid, engine)
                with self._registry_lock:
                    self._sessions.setdefault(sid, session)
                return self._sessions[sid]
        return None

    def persist(self, session: _Session) -> None:
        if self.data_dir:
            path = self.data_dir / f"{session.id}.json"
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(session.engine.to_state()))
            tmp.replace(path)


def _build_engine(body: dict) -> Engine:
    benchmark = body.get("benchmark")
    kwargs = {k: body[k] for k in _CONFIG_FIELDS if k in body}
    if benchmark:
        if benchmark not in benchmark_names():
            raise ValueError(f"unknown benchmark {benchmark!r}; "
                             f"valid: {', '.join(benchmark_names())}")
        spec = get_benchmark(benchmark, kwargs.get("dtlz_norm", "euclidean"))
        config = SessionConfig(L=spec.L, d=spec.d, benchmark=benchmark, **kwargs)
        return Engine(config)
    L, d = int(body.get("L", 0)), int(body.get("d", 0))
    config = SessionConfig(L=L, d=d, **kwargs)
    candidates = body.get("candidates")
    if candidates is None:
        raise ValueError("external-objective mode requires a candidate list")
    bounds = body.get("bounds")
    return Engine(config, candidates=candidates, bounds=bounds)


def _query_payload(session: _Session) -> dict:
    """Pending query with objective vectors converted to original units."""
    engine = session.engine
    pending = engine.pending
    payload = {"id": pending["id"], "kind": pending["kind"],
               "f": engine.to_raw(np.asarray(pending["f"])).tolist()}
    if pending["kind"] == "pc":
        payload["f_other"] = engine.to_raw(np.asarray(pending["f_other"])).tolist()
    else:
        payload["dimensions"] = [f"f{l + 1}" for l in range(engine.config.L)]
    return payload


def _posterior_summary(engine: Engine) -> dict:
    mean = engine.posterior_mean_w()
    out = {"posterior_mean_w": None if mean is None else np.round(mean, 6).tolist()}
    if engine.samples is not None:
        qs = np.quantile(engine.samples.weights, [0.05, 0.5, 0.95], axis=0)
        out["w_quantiles"] = {"p05": qs[0].tolist(), "p50": qs[1].tolist(),
                              "p95": qs[2].tolist()}
    return out


def _state_doc(session: _Session) -> dict:
    engine = session.engine
    doc = {
        "id": session.id,
        "L": engine.config.L,
        "d": engine.config.d,
        "benchmark": engine.config.benchmark,
        "utility": engine.config.utility,
        "counts": {
            "observations": engine.n_observations,
            "pc": len(engine.dataset.pc),
            "ir": len(engine.dataset.ir),
        },
        "incumbent": engine.incumbent(),
        "pending": _query_payload(session) if engine.pending else None,
        "query_log": engine.query_log[-10:],
    }
    doc.update(_posterior_summary(engine))
    return doc


def create_app(data_dir=None) -> FastAPI:
    app = FastAPI(title="prefmoo session service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    store = _Store(data_dir)
    app.state.store = store

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "invalid_config", "request body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "invalid_config", "request body must be an object")
        try:
            engine = _build_engine(body)
        except (ValueError, TypeError, KeyError) as exc:
            return _error(400, "invalid_config", str(exc))
        session = store.create(engine)
        return {"id": session.id, "L": engine.config.L, "d": engine.config.d}

    @app.get("/sessions/{sid}")
    def get_state(sid: str):
        session = store.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid!r}")
        with session.lock:
            return _state_doc(session)

    @app.get("/sessions/{sid}/query")
    def next_query(sid: str, kind: str = "pc"):
        session = store.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid!r}")
        if kind not in ("pc", "ir"):
            return _error(400, "bad_kind", "kind must be 'pc' or 'ir'")
        with session.lock:
            if session.engine.pending is not None:
                return _error(409, "pending_query",
                              "answer the pending query before asking for another")
            session.engine.build_query(kind)
            store.persist(session)
            return _query_payload(session)

    @app.post("/sessions/{sid}/answer")
    async def submit_answer(sid: str, request: Request):
        session = store.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid!r}")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_answer", "request body must be JSON")
        qid = body.get("query_id")
        with session.lock:
            engine = session.engine
            if engine.pending is None or engine.pending["id"] != qid:
                return _error(409, "stale_query",
                              f"query {qid!r} is not the pending query")
            kind = engine.pending["kind"]
            if kind == "pc":
                preferred = body.get("preferred")
                if preferred not in ("first", "second"):
                    return _error(400, "bad_answer",
                                  "PC answer needs preferred: 'first' or 'second'")
                answer = 1 if preferred == "first" else 0
            else:
                dim = body.get("dim")
                if not isinstance(dim, int) or not 0 <= dim < engine.config.L:
                    return _error(400, "bad_answer",
                                  f"IR answer needs an integer dim in [0, {engine.config.L})")
                answer = dim
            engine.submit_answer(qid, answer)
            store.persist(session)
            out = {"counts": {"pc": len(engine.dataset.pc),
                              "ir": len(engine.dataset.ir)}}
            out.update(_posterior_summary(engine))
            return out

    @app.get("/sessions/{sid}/suggest")
    def suggest(sid: str):
        session = store.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid!r}")
        with session.lock:
            engine = session.engine
            initial = engine.n_init_suggested < engine.config.n_init
            idx, score = engine.suggest()
            store.persist(session)
            return {"index": int(idx),
                    "x": engine.candidates[idx].tolist(),
                    "ei": None if np.isnan(score) else float(score),
                    "initial": initial}

    @app.post("/sessions/{sid}/observe")
    async def observe(sid: str, request: Request):
        session = store.get(sid)
        if session is None:
            return _error(404, "not_found", f"no session {sid!r}")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "dimension_mismatch", "request body must be JSON")
        x = body.get("x")
        y = body.get("y")
        engine = session.engine
        if (not isinstance(x, list) or len(x) != engine.config.d
                or not all(isinstance(v, (int, float)) for v in x)):
            return _error(400, "dimension_mismatch",
                          f"x must be a list of {engine.config.d} numbers")
        if (not isinstance(y, list) or len(y) != engine.config.L
                or not all(isinstance(v, (int, float)) for v in y)):
            return _error(400, "dimension_mismatch",
                          f"y must be a list of {engine.config.L} numbers")
        with session.lock:
            engine.observe(engine.x_to_unit(np.asarray(x, dtype=float)),
                           np.asarray(y, dtype=float))
            store.persist(session)
            return {"observations": engine.n_observations}

    return app
