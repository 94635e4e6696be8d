"""HTTP annotation service for the two-stage judgment protocol.

Stage 1: raters mark which items they have seen.  Stage 2: the service
serves sampled three-bucket ordering tasks and records the submitted
judgments.  Every state change is a record in an append-only event log;
replaying the log from scratch reconstructs the full service state, and
the judgment stream exports in the corpus judgments.jsonl format.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .corpus import CorpusError, ItemCatalog, Judgment, SoftAttribute, judgment_to_json
from .tasksampler import AnnotationTask, SamplerError, SeenSet, TaskGenerator
from .textrank import ScoredList

STAGE_SEEN_SELECTION = "SEEN_SELECTION"
STAGE_JUDGING = "JUDGING"

EVENT_SESSION_CREATED = "SessionCreated"
EVENT_SEEN_SUBMITTED = "SeenSubmitted"
EVENT_TASK_SERVED = "TaskServed"
EVENT_JUDGMENT_SUBMITTED = "JudgmentSubmitted"

DEFAULT_MIN_SEEN = 11


class ServiceError(Exception):
    """API-visible failure with an HTTP status and a stable error code."""

    def __init__(self, status: int, code: str, message: str,
                 details: Mapping | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = dict(details or {})

    def body(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


@dataclass
class Session:
    session_id: str
    rater_id: str
    created_at: float
    stage: str


@dataclass(frozen=True)
class JudgmentRecord:
    judgment: Judgment
    task_id: str
    submitted_at: float
    seq: int


class EventLog:
    """Append-only JSONL event log with strictly increasing sequence numbers."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path is not None else None
        self.events: list[dict] = []
        self._fh = None
        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        self.events.append(json.loads(line))
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")

    @property
    def next_seq(self) -> int:
        return self.events[-1]["seq"] + 1 if self.events else 1

    def append(self, event_type: str, payload: Mapping, at: float) -> dict:
        event = {"seq": self.next_seq, "type": event_type, "at": at, **payload}
        if self._fh is not None:
            # One write per event keeps concurrent records from interleaving.
            self._fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._fh.flush()
        self.events.append(event)
        return event

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class ServiceState:
    """All mutable service state, derived entirely from the event log.

    Mutations funnel through a single lock; each accepted operation appends
    exactly one event and then applies it, so the in-memory state is always
    the fold of the log.
    """

    def __init__(self, catalog: ItemCatalog, attributes: Iterable[SoftAttribute],
                 rankings: Mapping[str, Mapping[str, ScoredList]],
                 log_path: str | Path | None = None,
                 min_seen: int = DEFAULT_MIN_SEEN, seed: int = 0, m_bins: int = 5):
        self.catalog = catalog
        self.attributes = {a.id: a for a in attributes}
        self.generator = TaskGenerator(rankings, m=m_bins)
        self.min_seen = min_seen
        self.seed = seed
        self.lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self.rater_seen: dict[str, set[str]] = defaultdict(set)
        self.live_seen_counts: Counter = Counter()
        self.open_tasks: dict[str, AnnotationTask] = {}
        self.judgments: list[JudgmentRecord] = []
        self.judged_counts: Counter = Counter()
        self.session_judged: Counter = Counter()
        self.log = EventLog(log_path)
        for event in self.log.events:
            self._apply(event)

    # -- event application (pure state fold) --------------------------------

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == EVENT_SESSION_CREATED:
            self.sessions[event["session_id"]] = Session(
                session_id=event["session_id"], rater_id=event["rater_id"],
                created_at=event["at"], stage=event["stage"])
        elif kind == EVENT_SEEN_SUBMITTED:
            session = self.sessions[event["session_id"]]
            for item_id in event["added"]:
                if item_id not in self.rater_seen[session.rater_id]:
                    self.live_seen_counts[item_id] += 1
                self.rater_seen[session.rater_id].add(item_id)
            session.stage = event["stage"]
        elif kind == EVENT_TASK_SERVED:
            task = AnnotationTask(
                task_id=event["task_id"], rater_id=event["rater_id"],
                attribute_id=event["attribute_id"], anchor_id=event["anchor_id"],
                candidate_ids=tuple(event["candidate_ids"]), created_at=event["at"])
            self.open_tasks[event["session_id"]] = task
        elif kind == EVENT_JUDGMENT_SUBMITTED:
            judgment = Judgment(
                rater_id=event["rater_id"], attribute_id=event["attribute_id"],
                anchor_id=event["anchor_id"], less=tuple(event["less"]),
                same=tuple(event["same"]), more=tuple(event["more"]),
                seq=event["seq"])
            self.judgments.append(JudgmentRecord(
                judgment=judgment, task_id=event["task_id"],
                submitted_at=event["at"], seq=event["seq"]))
            self.judged_counts[event["attribute_id"]] += 1
            self.session_judged[event["session_id"]] += 1
            self.open_tasks.pop(event["session_id"], None)
        else:
            raise ValueError(f"unknown event type {kind!r}")

    def _record(self, event_type: str, payload: Mapping, at: float | None = None) -> dict:
        event = self.log.append(event_type, payload, time.time() if at is None else at)
        self._apply(event)
        return event

    # -- queries -------------------------------------------------------------

    def effective_seen_counts(self) -> dict[str, int]:
        counts = {item.id: item.seen_count for item in self.catalog}
        for item_id, n in self.live_seen_counts.items():
            counts[item_id] = counts.get(item_id, 0) + n
        return counts

    def session_or_error(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise ServiceError(404, "unknown_session",
                               f"no session {session_id!r}")
        return session

    def snapshot(self) -> dict:
        """Canonical view of the mutable state, for replay comparison."""
        return {
            "sessions": {s.session_id: (s.rater_id, s.stage, s.created_at)
                         for s in self.sessions.values()},
            "rater_seen": {r: sorted(v) for r, v in self.rater_seen.items() if v},
            "live_seen_counts": dict(self.live_seen_counts),
            "open_tasks": {sid: (t.task_id, t.rater_id, t.attribute_id, t.anchor_id,
                                 t.candidate_ids)
                           for sid, t in self.open_tasks.items()},
            "judgments": [(r.seq, r.task_id, r.judgment.rater_id,
                           r.judgment.attribute_id, r.judgment.anchor_id,
                           r.judgment.less, r.judgment.same, r.judgment.more)
                          for r in self.judgments],
            "judged_counts": dict(self.judged_counts),
            "next_seq": self.log.next_seq,
        }

    # -- operations ----------------------------------------------------------

    def create_session(self, rater_id: str) -> Session:
        if not rater_id or not rater_id.strip():
            raise ServiceError(400, "invalid_rater", "rater_id must be non-empty")
        with self.lock:
            session_id = secrets.token_hex(16)
            event = self._record(EVENT_SESSION_CREATED, {
                "session_id": session_id, "rater_id": rater_id,
                "stage": STAGE_SEEN_SELECTION})
            return self.sessions[event["session_id"]]

    def submit_seen(self, session_id: str, item_ids: list[str]) -> tuple[str, Session]:
        with self.lock:
            session = self.session_or_error(session_id)
            if session.stage != STAGE_SEEN_SELECTION:
                raise ServiceError(409, "wrong_stage",
                                   "seen items can only be submitted in stage 1",
                                   {"stage": session.stage})
            unknown = sorted({i for i in item_ids if i not in self.catalog})
            if unknown:
                raise ServiceError(400, "unknown_items",
                                   "some items are not in the catalog",
                                   {"item_ids": unknown})
            already = self.rater_seen[session.rater_id]
            added = sorted(set(item_ids) - already)
            total = len(already) + len(added)
            stage = STAGE_JUDGING if total >= self.min_seen else STAGE_SEEN_SELECTION
            self._record(EVENT_SEEN_SUBMITTED, {
                "session_id": session_id, "rater_id": session.rater_id,
                "added": added, "stage": stage})
            status = "ok" if stage == STAGE_JUDGING else "insufficient"
            return status, self.sessions[session_id]

    def next_task(self, session_id: str) -> AnnotationTask:
        with self.lock:
            session = self.session_or_error(session_id)
            if session.stage != STAGE_JUDGING:
                raise ServiceError(409, "wrong_stage",
                                   "submit enough seen items before requesting tasks",
                                   {"stage": session.stage})
            open_task = self.open_tasks.get(session_id)
            if open_task is not None:
                return open_task
            seen = SeenSet(rater_id=session.rater_id,
                           items=frozenset(self.rater_seen[session.rater_id]))
            seq = self.log.next_seq
            rng = np.random.default_rng((self.seed, seq))
            try:
                task = self.generator.generate_next(
                    seen, self.judged_counts, self.effective_seen_counts(), rng,
                    task_id=f"task-{seq}")
            except SamplerError as exc:
                raise ServiceError(409, "no_task", str(exc)) from None
            event = self._record(EVENT_TASK_SERVED, {
                "session_id": session_id, "task_id": task.task_id,
                "rater_id": task.rater_id, "attribute_id": task.attribute_id,
                "anchor_id": task.anchor_id,
                "candidate_ids": list(task.candidate_ids)})
            return self.open_tasks[event["session_id"]]

    def submit_judgment(self, session_id: str, task_id: str, less: list[str],
                        same: list[str], more: list[str]) -> JudgmentRecord:
        with self.lock:
            session = self.session_or_error(session_id)
            task = self.open_tasks.get(session_id)
            if task is None or task.task_id != task_id:
                raise ServiceError(404, "unknown_task",
                                   f"task {task_id!r} is not this session's open task")
            submitted = list(less) + list(same) + list(more)
            if task.anchor_id in submitted:
                raise ServiceError(400, "anchor_bucketed",
                                   "the anchor is the reference item and is never "
                                   "placed in a bucket",
                                   {"anchor_id": task.anchor_id})
            duplicates = sorted({i for i in submitted if submitted.count(i) > 1})
            if duplicates:
                raise ServiceError(400, "duplicate_items",
                                   "items may appear in exactly one bucket",
                                   {"item_ids": duplicates})
            candidates = set(task.candidate_ids)
            foreign = sorted(set(submitted) - candidates)
            if foreign:
                raise ServiceError(400, "foreign_items",
                                   "items were not part of the served task",
                                   {"item_ids": foreign})
            missing = sorted(candidates - set(submitted))
            if missing:
                raise ServiceError(400, "missing_items",
                                   "every served candidate must be placed in a bucket",
                                   {"item_ids": missing})
            try:
                Judgment(rater_id=session.rater_id, attribute_id=task.attribute_id,
                         anchor_id=task.anchor_id, less=tuple(less), same=tuple(same),
                         more=tuple(more))
            except CorpusError as exc:
                raise ServiceError(400, "invalid_judgment", str(exc)) from None
            self._record(EVENT_JUDGMENT_SUBMITTED, {
                "session_id": session_id, "task_id": task_id,
                "rater_id": session.rater_id, "attribute_id": task.attribute_id,
                "anchor_id": task.anchor_id, "less": list(less),
                "same": list(same), "more": list(more)})
            return self.judgments[-1]

    def export_judgments(self, attribute_id: str | None = None,
                         rater_id: str | None = None) -> Iterator[str]:
        """Judgment records as corpus-format JSONL lines, in log order."""
        with self.lock:
            records = list(self.judgments)
        for record in records:
            j = record.judgment
            if attribute_id is not None and j.attribute_id != attribute_id:
                continue
            if rater_id is not None and j.rater_id != rater_id:
                continue
            yield judgment_to_json(j) + "\n"


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

class CreateSessionBody(BaseModel):
    rater_id: str


class SeenBody(BaseModel):
    item_ids: list[str]


class JudgmentBody(BaseModel):
    task_id: str
    less: list[str]
    same: list[str]
    more: list[str]


def _task_json(state: ServiceState, session_id: str, task: AnnotationTask) -> dict:
    def card(item_id: str) -> dict:
        item = state.catalog.get(item_id)
        return {"id": item_id, "title": item.title if item else item_id}

    attribute = state.attributes.get(task.attribute_id)
    return {
        "task_id": task.task_id,
        "rater_id": task.rater_id,
        "attribute": attribute.phrase if attribute else task.attribute_id,
        "anchor": card(task.anchor_id),
        "candidates": [card(i) for i in task.candidate_ids],
        "created_at": task.created_at,
        "tasks_done": int(state.session_judged.get(session_id, 0)),
    }


def build_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="softattr annotation service")
    app.state.service = state

    @app.exception_handler(ServiceError)
    async def service_error_handler(_req: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(StarletteHTTPException)
    async def http_error_handler(_req: Request, exc: StarletteHTTPException):
        body = exc.detail if isinstance(exc.detail, dict) else {
            "code": "http_error", "message": str(exc.detail), "details": {}}
        return JSONResponse(status_code=exc.status_code, content=body)

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={
            "code": "invalid_request", "message": "request body failed validation",
            "details": {"errors": exc.errors()}})

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        session = state.create_session(body.rater_id)
        return {"session_id": session.session_id, "rater_id": session.rater_id,
                "stage": session.stage}

    @app.get("/items")
    def list_items(offset: int = 0, limit: int = 50):
        if offset < 0 or limit < 1:
            raise ServiceError(400, "invalid_page",
                               "offset must be >= 0 and limit >= 1")
        items = list(state.catalog)
        page = items[offset:offset + limit]
        return {"total": len(items), "offset": offset, "limit": limit,
                "items": [{"id": i.id, "title": i.title} for i in page]}

    @app.post("/sessions/{session_id}/seen")
    def submit_seen(session_id: str, body: SeenBody):
        status, session = state.submit_seen(session_id, body.item_ids)
        return {"status": status, "stage": session.stage,
                "seen_count": len(state.rater_seen[session.rater_id]),
                "min_seen": state.min_seen}

    @app.get("/sessions/{session_id}/task")
    def next_task(session_id: str):
        task = state.next_task(session_id)
        return _task_json(state, session_id, task)

    @app.post("/sessions/{session_id}/judgments")
    def submit_judgment(session_id: str, body: JudgmentBody):
        record = state.submit_judgment(session_id, body.task_id, body.less,
                                       body.same, body.more)
        return {"status": "ok", "seq": record.seq, "task_id": record.task_id}

    @app.get("/export/judgments")
    def export_judgments(attribute: str | None = None, rater_id: str | None = None):
        lines = state.export_judgments(attribute_id=attribute, rater_id=rater_id)
        return StreamingResponse(lines, media_type="application/x-ndjson")

    return app
