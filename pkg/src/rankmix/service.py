"""HTTP session service for live human-in-the-loop ranking studies.

One service process serves one dataset. Each session walks a strict phase
machine: ``active`` (queries chosen by the acquisition strategy, posterior
refreshed after every response), then ``evaluation`` (random queries pre-drawn
at session creation, held out of training), then ``done``. Accepted responses
are appended to one JSONL file per session; restarting the service replays
those files through the same deterministic update path, recovering every
session exactly.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import asdict, dataclass
from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from .acquisition import (AnnealSchedule, select_query_ig, select_query_random,
                          select_query_vr)
from .errors import InvalidInputError
from .evaluation import holdout_loglik
from .experiment import derive_rng
from .model import Dataset, ObservationLog, RankingQuery, RankingResponse
from .posterior import Prior, mh_sample, mle_estimate

_MH, _ACQ, _EVAL = 3, 4, 2  # purpose codes, shared scheme with the harness

PHASE_ACTIVE = "active"
PHASE_EVAL = "evaluation"
PHASE_DONE = "done"


@dataclass(frozen=True)
class SessionSettings:
    """Per-session knobs; defaults match the full-scale study settings."""

    strategy: str = "ig"
    k: int = 6
    n_active: int = 15
    n_eval: int = 10
    m_model: int = 2
    seed: int = 0
    n_chains: int = 100
    mh_iters: int = 200
    mh_step: float = 0.15
    sa_chains: int = 10
    sa_iters: int = 30
    sa_start_temp: float = 10.0
    sa_cooling: float = 0.9

    def __post_init__(self) -> None:
        if self.strategy not in ("ig", "random", "vr"):
            raise InvalidInputError(f"unknown strategy {self.strategy!r}")
        if self.k < 2 or self.n_active < 0 or self.n_eval < 0:
            raise InvalidInputError("bad session settings")

    def schedule(self) -> AnnealSchedule:
        return AnnealSchedule(self.sa_chains, self.sa_iters,
                              self.sa_start_temp, self.sa_cooling)


class Session:
    """All mutable state for one ranking session; single-writer via ``lock``."""

    def __init__(self, session_id: str, dataset: Dataset,
                 settings: SessionSettings):
        self.id = session_id
        self.dataset = dataset
        self.settings = settings
        self.lock = threading.Lock()
        self.prior = Prior(settings.m_model, dataset.dimension)
        self.log = ObservationLog(dataset)
        self.used: set[frozenset[str]] = set()
        self.answered = 0
        self.eval_pairs: list[tuple[RankingQuery, RankingResponse]] = []

        self.samples = mh_sample(
            self.prior, self.log, settings.n_chains, settings.mh_iters,
            settings.mh_step, derive_rng(settings.seed, 0, _MH))

        eval_rng = derive_rng(settings.seed, 0, _EVAL)
        eval_used: set[frozenset[str]] = set()
        self.eval_queries = [
            select_query_random(dataset, settings.k, eval_used, eval_rng)
            for _ in range(settings.n_eval)]

        self.pending: Optional[RankingQuery] = None
        self._advance_pending()

    @property
    def total(self) -> int:
        return self.settings.n_active + self.settings.n_eval

    @property
    def phase(self) -> str:
        if self.answered < self.settings.n_active:
            return PHASE_ACTIVE
        if self.answered < self.total:
            return PHASE_EVAL
        return PHASE_DONE

    def _select_active_query(self, step: int) -> RankingQuery:
        rng = derive_rng(self.settings.seed, step, _ACQ)
        if self.settings.strategy == "ig":
            return select_query_ig(self.dataset, self.samples, self.settings.k,
                                   self.settings.schedule(), rng)
        if self.settings.strategy == "vr":
            return select_query_vr(self.dataset, self.samples, self.settings.k,
                                   self.settings.schedule(), rng)
        return select_query_random(self.dataset, self.settings.k, self.used, rng)

    def _advance_pending(self) -> None:
        phase = self.phase
        if phase == PHASE_ACTIVE:
            self.pending = self._select_active_query(self.answered + 1)
        elif phase == PHASE_EVAL:
            self.pending = self.eval_queries[self.answered - self.settings.n_active]
        else:
            self.pending = None

    def apply_response(self, ranking: "list[str]",
                       query_index: "int | None") -> None:
        """Validate and apply one response; raises HTTPException on contract
        violations. Caller holds the lock and handles persistence."""
        if self.pending is None:
            raise HTTPException(status_code=410, detail="session is done")
        if query_index is not None and query_index != self.answered:
            raise HTTPException(
                status_code=409,
                detail=f"stale submission: query index {query_index}, "
                       f"expected {self.answered}")
        response = _parse_ranking(ranking)
        if not response.matches_query(self.pending):
            raise HTTPException(
                status_code=409,
                detail="ranking is not a permutation of the pending query")
        in_active = self.phase == PHASE_ACTIVE
        if in_active:
            self.log.record(self.pending, response)
            step = self.answered + 1
            self.samples = mh_sample(
                self.prior, self.log, self.settings.n_chains,
                self.settings.mh_iters, self.settings.mh_step,
                derive_rng(self.settings.seed, step, _MH))
        else:
            self.eval_pairs.append((self.pending, response))
        self.answered += 1
        self._advance_pending()

    def estimate_payload(self) -> dict[str, Any]:
        est = mle_estimate(self.prior, self.log, self.samples)
        ll = None
        if self.eval_pairs:
            ll = holdout_loglik(self.dataset, self.samples, self.eval_pairs)
        return {
            "weights": [[float(v) for v in row] for row in est.weights],
            "mixing": [float(v) for v in est.mixing],
            "holdout_loglik": ll,
            "n_eval_responses": len(self.eval_pairs),
            "phase": self.phase,
        }

    def view(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "phase": self.phase,
            "answered": self.answered,
            "total": self.total,
            "n_active": self.settings.n_active,
            "n_eval": self.settings.n_eval,
            "k": self.settings.k,
            "strategy": self.settings.strategy,
        }

    def query_payload(self) -> dict[str, Any]:
        if self.pending is None:
            raise HTTPException(status_code=410, detail="session is done")
        items = []
        for tid in self.pending.trajectory_ids:
            t = self.dataset[tid]
            items.append({"id": t.id,
                          "features": [float(v) for v in t.features],
                          "meta": {str(k): str(v) for k, v in t.meta.items()}})
        return {
            "index": self.answered,
            "phase": self.phase,
            "progress": {"answered": self.answered, "total": self.total},
            "items": items,
        }


def _parse_ranking(ranking: "list[str]") -> RankingResponse:
    try:
        return RankingResponse(ranking)
    except InvalidInputError as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc


class SessionStore:
    """Session registry with JSONL persistence and replay recovery."""

    def __init__(self, dataset: Dataset, defaults: SessionSettings,
                 data_dir: "str | None"):
        self.dataset = dataset
        self.defaults = defaults
        self.data_dir = data_dir
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        if data_dir:
            os.makedirs(data_dir, exist_ok=True)
            self._recover()

    def _path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, f"session-{session_id}.jsonl")

    def _append_event(self, session_id: str, event: dict[str, Any]) -> None:
        if not self.data_dir:
            return
        with open(self._path(session_id), "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _recover(self) -> None:
        for name in sorted(os.listdir(self.data_dir)):
            if not (name.startswith("session-") and name.endswith(".jsonl")):
                continue
            path = os.path.join(self.data_dir, name)
            with open(path) as fh:
                events = [json.loads(line) for line in fh if line.strip()]
            if not events or events[0].get("type") != "create":
                continue
            head = events[0]
            session = Session(head["id"], self.dataset,
                              SessionSettings(**head["settings"]))
            for event in events[1:]:
                if event.get("type") != "response":
                    continue
                session.apply_response(event["ranking"], event.get("index"))
            self.sessions[session.id] = session

    def create(self, overrides: dict[str, Any]) -> Session:
        settings = SessionSettings(**{**asdict(self.defaults), **overrides})
        session_id = uuid.uuid4().hex[:12]
        session = Session(session_id, self.dataset, settings)
        with self._lock:
            self.sessions[session_id] = session
        self._append_event(session_id, {
            "type": "create", "id": session_id, "settings": asdict(settings)})
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id!r}")
        return session

    def record_response(self, session: Session, ranking: "list[str]",
                        query_index: "int | None") -> None:
        with session.lock:
            session.apply_response(ranking, query_index)
            self._append_event(session.id, {
                "type": "response", "index": session.answered - 1,
                "ranking": list(ranking)})


class CreateSessionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    strategy: Optional[str] = None
    k: Optional[int] = None
    n_active: Optional[int] = None
    n_eval: Optional[int] = None
    m_model: Optional[int] = None
    seed: Optional[int] = None
    n_chains: Optional[int] = None
    mh_iters: Optional[int] = None
    mh_step: Optional[float] = None
    sa_chains: Optional[int] = None
    sa_iters: Optional[int] = None
    sa_start_temp: Optional[float] = None
    sa_cooling: Optional[float] = None


class ResponseBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    ranking: "list[str]" = Field(min_length=1)
    query_index: Optional[int] = None


def create_app(dataset: Dataset, defaults: SessionSettings | None = None,
               data_dir: "str | None" = None) -> FastAPI:
    """Build the service around one dataset.

    ``defaults`` seeds every session's settings; the create request may
    override any of them (small sampler settings make scripted tests fast).
    """
    store = SessionStore(dataset, defaults or SessionSettings(), data_dir)
    app = FastAPI(title="rankmix session service")
    app.state.store = store

    @app.get("/healthz")
    def healthz() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest) -> dict[str, Any]:
        overrides = {k: v for k, v in body.model_dump().items() if v is not None}
        try:
            session = store.create(overrides)
        except InvalidInputError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return session.view()

    @app.get("/sessions/{session_id}/query")
    def get_query(session_id: str) -> dict[str, Any]:
        session = store.get(session_id)
        with session.lock:
            return session.query_payload()

    @app.post("/sessions/{session_id}/response")
    def post_response(session_id: str, body: ResponseBody) -> dict[str, Any]:
        session = store.get(session_id)
        store.record_response(session, body.ranking, body.query_index)
        return session.view()

    @app.get("/sessions/{session_id}/estimate")
    def get_estimate(session_id: str) -> dict[str, Any]:
        session = store.get(session_id)
        with session.lock:
            return session.estimate_payload()

    return app
