"""HTTP facade over sessions and experiments, with event-log persistence.

Sessions are synchronous and answer-withholding: the pending question payload
never carries the correct label. Experiments run on a background thread with
a polled status endpoint. All session state is derived from an append-only
JSONL event log, so a restarted process replays to the exact prior state.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import engine
from .curriculum import (
    BUNDLED_CURRICULA,
    Curriculum,
    bundled_curriculum_path,
    load_curriculum,
)
from .engine import SessionConfig, SessionState
from .errors import AdaptQuizError, GenerationFailed, ValidationError
from .experiment import planned_attempts, run_experiment
from .prompting import DEFAULT_CONTEXT_CAP
from .provider import Provider, ProviderConfig, create_provider
from .questions import LABELS, Question


@dataclass
class SessionRuntime:
    state: SessionState
    log_path: Path
    curriculum_name: str
    pending: Question | None = None
    pending_ask_difficulty: int = 0
    asked: dict[tuple[str, str], list[Question]] = field(default_factory=dict)
    created_at: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class ExperimentRuntime:
    status: str = "running"  # running | done | failed
    total_attempts: int = 1
    done_attempts: int = 0
    result: dict | None = None
    error: str = ""


class ServiceState:
    def __init__(self, data_dir: Path, provider: Provider | None,
                 curricula_dir: Path | None):
        self.data_dir = data_dir
        self.provider = provider
        self.curricula_dir = curricula_dir
        self.sessions: dict[str, SessionRuntime] = {}
        self.experiments: dict[str, ExperimentRuntime] = {}
        self._lock = threading.Lock()
        self._restore_sessions()

    # -- curricula -----------------------------------------------------------

    def find_curriculum(self, name: str) -> Curriculum | None:
        if self.curricula_dir is not None:
            candidate = self.curricula_dir / f"{name}.json"
            if candidate.exists():
                return load_curriculum(candidate)
        if name in BUNDLED_CURRICULA:
            return load_curriculum(bundled_curriculum_path(name))
        return None

    # -- session lifecycle -----------------------------------------------------

    def create_session(self, curriculum_name: str, curriculum: Curriculum,
                       config: SessionConfig) -> SessionRuntime:
        session_id = secrets.token_hex(16)
        state = SessionState(session_id=session_id, curriculum=curriculum, config=config)
        log_path = self.data_dir / "sessions" / f"{session_id}.jsonl"
        runtime = SessionRuntime(state=state, log_path=log_path,
                                 curriculum_name=curriculum_name,
                                 created_at=time.time())
        engine.append_event(log_path, engine.session_created_event(state, curriculum_name))
        with self._lock:
            self.sessions[session_id] = runtime
        return runtime

    def _restore_sessions(self) -> None:
        sessions_dir = self.data_dir / "sessions"
        if not sessions_dir.is_dir():
            return
        for log_path in sorted(sessions_dir.glob("*.jsonl")):
            replayed = engine.load_session_log(log_path)
            self.sessions[replayed.state.session_id] = SessionRuntime(
                state=replayed.state,
                log_path=log_path,
                curriculum_name=replayed.curriculum_name,
                pending=replayed.pending,
                pending_ask_difficulty=replayed.pending_ask_difficulty,
                asked=replayed.asked,
            )

    def session(self, session_id: str) -> SessionRuntime:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session") from None


def _question_payload(q: Question, ask_difficulty: int) -> dict:
    # answer (and explanation) withheld until the answer is posted
    return {
        "complete": False,
        "question_id": q.id,
        "subject": q.chapter.subject,
        "chapter": q.chapter.chapter,
        "stem": q.stem,
        "options": dict(zip(LABELS, q.options)),
        "difficulty": ask_difficulty,
    }


def create_app(
    data_dir: str | Path,
    provider_cfg: ProviderConfig | None = None,
    curricula_dir: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """Build the application. ``provider_cfg`` backs live session generation;
    experiments carry their own provider configs in the POST body."""
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    provider = create_provider(provider_cfg) if provider_cfg else None
    svc = ServiceState(data_dir, provider,
                       Path(curricula_dir) if curricula_dir else None)

    app = FastAPI(title="adaptquiz")
    app.state.svc = svc

    @app.exception_handler(AdaptQuizError)
    async def _domain_error(_request: Request, exc: AdaptQuizError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        name = body.get("curriculum")
        if not isinstance(name, str) or not name:
            raise HTTPException(status_code=400, detail="curriculum name required")
        curriculum = svc.find_curriculum(name)
        if curriculum is None:
            raise HTTPException(status_code=404, detail=f"unknown curriculum {name!r}")
        try:
            config = SessionConfig.from_dict(body.get("config", {}))
        except (ValidationError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        runtime = svc.create_session(name, curriculum, config)
        return {
            "session_id": runtime.state.session_id,
            "curriculum": name,
            "config": config.to_dict(),
            "created_at": runtime.created_at,
        }

    @app.get("/sessions/{session_id}/next")
    async def next_question(session_id: str):
        runtime = svc.session(session_id)
        with runtime.lock:
            if runtime.pending is not None:
                return _question_payload(runtime.pending, runtime.pending_ask_difficulty)
            request = engine.next_question_request(runtime.state)
            if request is None:
                return {"complete": True}
            ref, difficulty = request
            if svc.provider is None:
                raise HTTPException(status_code=502,
                                    detail="no generation provider configured")
            previous = runtime.asked.get(ref.key(), [])[-DEFAULT_CONTEXT_CAP:]
            grade = runtime.state.curriculum.grade_of(ref)
            try:
                q = engine.generate_question(svc.provider, ref, difficulty,
                                             previous=previous, grade=grade)
            except GenerationFailed as exc:
                raise HTTPException(status_code=502, detail=str(exc)) from exc
            runtime.pending = q
            runtime.pending_ask_difficulty = difficulty
            runtime.asked.setdefault(ref.key(), []).append(q)
            engine.append_event(runtime.log_path,
                                engine.question_generated_event(q, difficulty))
            return _question_payload(q, difficulty)

    @app.post("/sessions/{session_id}/answers")
    async def post_answer(session_id: str, body: dict):
        runtime = svc.session(session_id)
        chosen = body.get("chosen")
        question_id = body.get("question_id")
        if chosen not in LABELS:
            raise HTTPException(status_code=400,
                                detail=f"chosen must be one of {list(LABELS)}")
        with runtime.lock:
            pending = runtime.pending
            if pending is None or question_id != pending.id:
                raise HTTPException(status_code=409, detail="stale or unknown question id")
            state = runtime.state
            engine.record_answer(state, pending, chosen)
            attempt = state.attempts[-1]
            engine.append_event(runtime.log_path, engine.attempt_event(attempt))
            runtime.pending = None
            progress = state.progress_of(pending.chapter)
            return {
                "correct": attempt.correct,
                "correct_label": pending.answer,
                "new_difficulty": progress.difficulty,
                "mastered": progress.mastered,
            }

    @app.get("/sessions/{session_id}/report")
    async def report(session_id: str):
        runtime = svc.session(session_id)
        with runtime.lock:
            return engine.session_report(runtime.state)

    @app.post("/experiments", status_code=201)
    async def start_experiment(body: dict):
        try:
            from .experiment import ExperimentConfig
            cfg = ExperimentConfig.from_dict(body)
        except (ValidationError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        experiment_id = secrets.token_hex(8)
        runtime = ExperimentRuntime(total_attempts=max(planned_attempts(cfg), 1))
        svc.experiments[experiment_id] = runtime
        run_dir = data_dir / "experiments" / experiment_id

        def _run():
            def _tick():
                runtime.done_attempts += 1
            try:
                artifacts = run_experiment(body, run_dir, on_attempt=_tick)
                runtime.result = artifacts.result.to_dict()
                runtime.status = "done"
            except Exception as exc:  # surfaced via the status endpoint
                runtime.error = str(exc)
                runtime.status = "failed"

        threading.Thread(target=_run, daemon=True).start()
        return {"experiment_id": experiment_id}

    @app.get("/experiments/{experiment_id}")
    async def experiment_status(experiment_id: str):
        runtime = svc.experiments.get(experiment_id)
        if runtime is None:
            # a finished run may predate this process: look for its artifacts
            result_path = data_dir / "experiments" / experiment_id / "result.json"
            if result_path.exists():
                return {"status": "done",
                        "result": json.loads(result_path.read_text(encoding="utf-8"))}
            raise HTTPException(status_code=404, detail="unknown experiment")
        if runtime.status == "running":
            return {"status": "running",
                    "progress": runtime.done_attempts / runtime.total_attempts}
        if runtime.status == "failed":
            return {"status": "failed", "error": runtime.error}
        return {"status": "done", "result": runtime.result}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
