"""HTTP/JSON session service: one interactive acquisition per human oracle.

The acquisition loop runs in a session thread against a blocking oracle;
each pending partial query is parked until an answer is posted.  Exactly one
query is pending in the awaiting-answer phase, and an idempotency token
guards double submission.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import bench, model
from .acquisition import Acquisition, Collapse
from .oracle import AbortSession, Oracle


class CreateSession(BaseModel):
    problem: dict
    strategy: str = "cutoff"
    cutoff_ms: float = 1000.0
    seed: int = 0


class PostAnswer(BaseModel):
    answer: str  # "yes" | "no" | "abort"
    token: str


class _Bridge(Oracle):
    """Blocks the acquisition thread until the session receives an answer."""

    def __init__(self, session: "Session"):
        self.session = session

    def ask(self, e: model.Assignment) -> bool:
        return self.session.wait_for_answer(e)


class Session:
    def __init__(self, sid: str, spec: bench.ProblemSpec, strategy: str,
                 cutoff_ms: float, seed: int, log_path: Optional[str] = None):
        self.id = sid
        self.spec = spec
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)
        self.phase = "generating"
        self.epoch = 0  # bumps on every phase transition
        self.pending: Optional[dict] = None
        self.answer_slot: Optional[bool] = None
        self.abort_flag = False
        self.history: list[dict] = []
        self.seen_tokens: set = set()
        self.error: Optional[str] = None
        self.query_number = 0
        self.log_path = log_path
        self.engine = Acquisition(
            spec.vocab, spec.basis, _Bridge(self), strategy=strategy,
            cutoff_ms=cutoff_ms, seed=seed, background=spec.background or None)
        self.thread = threading.Thread(target=self._run, daemon=True,
                                       name=f"session-{sid}")

    # -- engine side ---------------------------------------------------------

    def _log(self, event: dict):
        if not self.log_path:
            return
        with open(self.log_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(event) + "\n")

    def _run(self):
        try:
            self.engine.run()
            with self.cond:
                self.phase = "converged"
                self.pending = None
                self.epoch += 1
                self.cond.notify_all()
            self._log({"event": "converged",
                       "learned": [model.describe(c) for c in self.engine.learned]})
        except AbortSession:
            with self.cond:
                self.phase = "aborted"
                self.pending = None
                self.epoch += 1
                self.cond.notify_all()
            self._log({"event": "aborted"})
        except Collapse as e:
            with self.cond:
                self.phase = "aborted"
                self.error = f"answers are inconsistent with the basis: {e}"
                self.pending = None
                self.epoch += 1
                self.cond.notify_all()
        except Exception as e:  # surface engine crashes to clients
            with self.cond:
                self.phase = "aborted"
                self.error = str(e)
                self.pending = None
                self.epoch += 1
                self.cond.notify_all()

    def wait_for_answer(self, e: model.Assignment) -> bool:
        origin = "main-loop"
        payload = self._assignment_payload(e)
        with self.cond:
            self.query_number += 1
            self.pending = {"number": self.query_number, **payload,
                            "origin": origin}
            self.phase = "awaiting-answer"
            self.epoch += 1
            self.cond.notify_all()
            self._log({"event": "query", **self.pending})
            while self.answer_slot is None and not self.abort_flag:
                self.cond.wait()
            if self.abort_flag:
                raise AbortSession()
            answer = self.answer_slot
            self.answer_slot = None
            self.phase = "generating"
            self.epoch += 1
            self.history.append({**self.pending,
                                 "answer": "yes" if answer else "no"})
            self.pending = None
            self.cond.notify_all()
            self._log({"event": "answer", "number": self.query_number,
                       "answer": "yes" if answer else "no"})
            return answer

    def _assignment_payload(self, e: model.Assignment) -> dict:
        bound = e.as_dict()
        return {"bindings": bound,
                "unassigned": [v for v in self.spec.vocab.variables
                               if v not in bound]}

    # -- client side -----------------------------------------------------------

    def state_locked(self) -> dict:
        return {
            "id": self.id,
            "phase": self.phase,
            "pending_query": dict(self.pending) if self.pending else None,
            "learned": [model.describe(c) for c in self.engine.learned],
            "remaining_basis": self.engine.basis_size(),
            "history": list(self.history),
            "layout": self.spec.layout,
            "error": self.error,
        }

    def state(self) -> dict:
        with self.lock:
            return self.state_locked()

    def wait_stable(self, from_epoch: int = -1, timeout_s: float = 30.0):
        """Wait until the session leaves the given epoch and is not generating."""
        deadline = time.monotonic() + timeout_s
        with self.cond:
            while self.epoch <= from_epoch or self.phase == "generating":
                left = deadline - time.monotonic()
                if left <= 0:
                    break
                self.cond.wait(timeout=left)

    def submit(self, answer: str, token: str) -> dict:
        with self.cond:
            if token in self.seen_tokens:
                return self.state_locked()  # replay: no-op, current state
            if self.phase != "awaiting-answer":
                raise HTTPException(status_code=409,
                                    detail=f"no pending query in phase {self.phase}")
            self.seen_tokens.add(token)
            epoch = self.epoch
            if answer == "abort":
                self.abort_flag = True
            else:
                self.answer_slot = answer == "yes"
            self.cond.notify_all()
        self.wait_stable(from_epoch=epoch)
        return self.state()


def create_app(log_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="quacq sessions")
    sessions: dict[str, Session] = {}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSession):
        if req.strategy not in ("basic", "cutoff", "maxviol"):
            raise HTTPException(status_code=400,
                                detail=f"unknown strategy {req.strategy!r}")
        if req.strategy == "cutoff" and req.cutoff_ms < 1:
            raise HTTPException(status_code=400, detail="cutoff_ms must be >= 1")
        try:
            spec = bench.problem_spec_from_dict(req.problem)
        except (ValueError, KeyError, TypeError) as e:
            raise HTTPException(status_code=400, detail=f"invalid problem: {e}")
        sid = uuid.uuid4().hex[:12]
        log_path = os.path.join(log_dir, f"{sid}.jsonl") if log_dir else None
        session = Session(sid, spec, req.strategy, req.cutoff_ms, req.seed,
                          log_path)
        sessions[sid] = session
        session.thread.start()
        session.wait_stable()
        return session.state()

    def _get(sid: str) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return s

    @app.get("/sessions/{sid}")
    def get_state(sid: str):
        return _get(sid).state()

    @app.post("/sessions/{sid}/answer")
    def post_answer(sid: str, body: PostAnswer):
        if body.answer not in ("yes", "no", "abort"):
            raise HTTPException(status_code=400,
                                detail="answer must be yes, no or abort")
        return _get(sid).submit(body.answer, body.token)

    @app.get("/sessions/{sid}/network")
    def get_network(sid: str):
        s = _get(sid)
        with s.lock:
            return {
                "converged": s.phase == "converged",
                "constraints": [
                    {"text": model.describe(c), **model.constraint_entry(c)}
                    for c in s.engine.learned],
            }

    return app
