"""Adaptive session loop: chapter rotation, difficulty escalation, mastery
detection, and event-log persistence.

The rules: a correct answer raises the chapter's difficulty by one (capped at
5); a wrong answer holds it; a chapter is mastered after K consecutive correct
answers each asked at difficulty >= the pass threshold, and mastered chapters
leave the rotation (or are down-weighted).
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

from .curriculum import ChapterRef, Curriculum, curriculum_from_dict
from .errors import GenerationFailed, MalformedBlock, MasteredChapter, ValidationError
from .prompting import build_generation_prompt
from .provider import Provider
from .questions import Question, parse_question_block
from .util import format_percent

MAX_DIFFICULTY = 5

REMOVE = "remove"
DOWNWEIGHT = "downweight"


@dataclass(frozen=True)
class SessionConfig:
    initial_difficulty: int = 1
    pass_threshold: int = 3
    streak_to_master: int = 3
    mastered_policy: str = REMOVE
    downweight: float = 0.25

    def __post_init__(self):
        if not 1 <= self.initial_difficulty <= MAX_DIFFICULTY:
            raise ValidationError("initial difficulty must be in [1, 5]")
        if not 1 <= self.pass_threshold <= MAX_DIFFICULTY:
            raise ValidationError("pass threshold must be in [1, 5]")
        if self.streak_to_master < 1:
            raise ValidationError("streak requirement must be >= 1")
        if self.mastered_policy not in (REMOVE, DOWNWEIGHT):
            raise ValidationError(f"unknown mastered-chapter policy {self.mastered_policy!r}")
        if not 0.0 <= self.downweight <= 1.0:
            raise ValidationError("downweight must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "initial_difficulty": self.initial_difficulty,
            "pass_threshold": self.pass_threshold,
            "streak_to_master": self.streak_to_master,
            "mastered_policy": self.mastered_policy,
            "downweight": self.downweight,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionConfig":
        known = {f: doc[f] for f in (
            "initial_difficulty", "pass_threshold", "streak_to_master",
            "mastered_policy", "downweight") if f in doc}
        unknown = set(doc) - set(known)
        if unknown:
            raise ValidationError(f"unknown session config fields: {sorted(unknown)}")
        return cls(**known)


@dataclass
class ChapterProgress:
    difficulty: int
    streak: int = 0
    mastered: bool = False


@dataclass(frozen=True)
class Attempt:
    question_id: str
    chapter: ChapterRef
    difficulty: int  # difficulty the state machine asked at
    chosen: str
    correct: bool
    ts: float

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "subject": self.chapter.subject,
            "chapter": self.chapter.chapter,
            "difficulty": self.difficulty,
            "chosen": self.chosen,
            "correct": self.correct,
            "ts": self.ts,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Attempt":
        return cls(
            question_id=doc["question_id"],
            chapter=ChapterRef(doc["subject"], doc["chapter"]),
            difficulty=doc["difficulty"],
            chosen=doc["chosen"],
            correct=doc["correct"],
            ts=doc["ts"],
        )


@dataclass
class SessionState:
    session_id: str
    curriculum: Curriculum
    config: SessionConfig = field(default_factory=SessionConfig)
    chapters: dict[tuple[str, str], ChapterProgress] = field(default_factory=dict)
    attempts: list[Attempt] = field(default_factory=list)

    def __post_init__(self):
        if not self.chapters:
            self.chapters = {
                ref.key(): ChapterProgress(difficulty=self.config.initial_difficulty)
                for ref in self.curriculum.chapter_refs()
            }

    def progress_of(self, ref: ChapterRef) -> ChapterProgress:
        try:
            return self.chapters[ref.key()]
        except KeyError:
            raise ValidationError(f"chapter not in session curriculum: {ref}") from None

    def all_mastered(self) -> bool:
        return all(p.mastered for p in self.chapters.values())


def next_question_request(state: SessionState) -> tuple[ChapterRef, int] | None:
    """Pick the next chapter and its current difficulty, or None when done.

    Unmastered chapters rotate round-robin in curriculum order, resuming
    after the chapter of the most recent attempt; the rotation is a pure
    function of history, so replay lands on the same choice.
    """
    refs = state.curriculum.chapter_refs()
    if state.config.mastered_policy == DOWNWEIGHT:
        weights = [
            state.config.downweight if state.progress_of(r).mastered else 1.0
            for r in refs
        ]
        if sum(weights) == 0:
            return None
        rng = random.Random(f"{state.session_id}:{len(state.attempts)}")
        ref = rng.choices(refs, weights=weights, k=1)[0]
        return ref, state.progress_of(ref).difficulty

    if state.all_mastered():
        return None
    start = 0
    if state.attempts:
        last_key = state.attempts[-1].chapter.key()
        for i, r in enumerate(refs):
            if r.key() == last_key:
                start = i + 1
                break
    for offset in range(len(refs)):
        ref = refs[(start + offset) % len(refs)]
        progress = state.progress_of(ref)
        if not progress.mastered:
            return ref, progress.difficulty
    return None


def _apply_attempt(state: SessionState, attempt: Attempt) -> ChapterProgress:
    progress = state.progress_of(attempt.chapter)
    state.attempts.append(attempt)
    if attempt.correct and attempt.difficulty >= state.config.pass_threshold:
        progress.streak += 1
    else:
        progress.streak = 0
    if attempt.correct:
        progress.difficulty = min(attempt.difficulty + 1, MAX_DIFFICULTY)
    if progress.streak >= state.config.streak_to_master:
        progress.mastered = True
    return progress


def record_answer(state: SessionState, q: Question, chosen: str) -> SessionState:
    """Grade ``chosen`` against the question, append the attempt, and apply
    the difficulty/streak/mastery rules. Raises MasteredChapter for retired
    chapters."""
    if chosen not in ("a", "b", "c", "d"):
        raise ValidationError(f"chosen label must be a-d, got {chosen!r}")
    progress = state.progress_of(q.chapter)
    if progress.mastered:
        raise MasteredChapter(f"chapter already mastered: {q.chapter}")
    attempt = Attempt(
        question_id=q.id,
        chapter=q.chapter,
        difficulty=progress.difficulty,
        chosen=chosen,
        correct=(chosen == q.answer),
        ts=time.time(),
    )
    _apply_attempt(state, attempt)
    return state


def check_mastery(state: SessionState, ref: ChapterRef) -> bool:
    """True iff the chapter's last K attempts are all correct and were each
    asked at difficulty >= the pass threshold. Recomputed from history,
    independent of the live streak counter."""
    k = state.config.streak_to_master
    t = state.config.pass_threshold
    history = [a for a in state.attempts if a.chapter.key() == ref.key()]
    if len(history) < k:
        return False
    return all(a.correct and a.difficulty >= t for a in history[-k:])


def session_report(state: SessionState) -> dict:
    """Per-chapter and overall accuracy summary with deterministic ordering."""
    chapters = []
    total = 0
    total_correct = 0
    for ref in state.curriculum.chapter_refs():
        progress = state.progress_of(ref)
        history = [a for a in state.attempts if a.chapter.key() == ref.key()]
        correct = sum(1 for a in history if a.correct)
        total += len(history)
        total_correct += correct
        chapters.append({
            "subject": ref.subject,
            "chapter": ref.chapter,
            "attempts": len(history),
            "correct": correct,
            "accuracy": format_percent(correct, len(history)),
            "final_difficulty": progress.difficulty,
            "mastered": progress.mastered,
        })
    return {
        "session_id": state.session_id,
        "chapters": chapters,
        "overall": {
            "attempts": total,
            "correct": total_correct,
            "accuracy": format_percent(total_correct, total),
        },
        "complete": state.config.mastered_policy == REMOVE and state.all_mastered(),
    }


def generate_question(
    provider: Provider,
    chapter: ChapterRef,
    difficulty: int,
    previous: list[Question] | tuple[Question, ...] = (),
    grade: int = 9,
    retries: int = 3,
) -> Question:
    """Request one question block from the teacher backend, re-requesting on
    malformed output up to ``retries`` extra times."""
    last: MalformedBlock | None = None
    for _ in range(retries + 1):
        messages = build_generation_prompt(chapter, difficulty, count=1,
                                           previous=previous, grade=grade)
        reply = provider.complete(messages)
        try:
            return parse_question_block(reply, chapter)[0]
        except MalformedBlock as exc:
            last = exc
    raise GenerationFailed(f"malformed output after {retries + 1} attempts: {last}")


# --- event-log persistence -------------------------------------------------

def session_created_event(state: SessionState, curriculum_name: str = "") -> dict:
    return {
        "type": "session_created",
        "ts": time.time(),
        "session_id": state.session_id,
        "curriculum_name": curriculum_name,
        "curriculum": state.curriculum.to_dict(),
        "config": state.config.to_dict(),
    }


def question_generated_event(q: Question, ask_difficulty: int) -> dict:
    return {
        "type": "question_generated",
        "ts": time.time(),
        "question": q.to_dict(),
        "ask_difficulty": ask_difficulty,
    }


def attempt_event(attempt: Attempt) -> dict:
    return {"type": "attempt", **attempt.to_dict()}


def append_event(path: str | Path, event: dict) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")


@dataclass
class ReplayedSession:
    state: SessionState
    pending: Question | None
    pending_ask_difficulty: int
    asked: dict[tuple[str, str], list[Question]]
    curriculum_name: str


def replay_events(events: list[dict]) -> ReplayedSession:
    """Rebuild a session (state, pending question, per-chapter ask history)
    by folding the event log. State derived this way equals the live state."""
    if not events or events[0].get("type") != "session_created":
        raise ValidationError("event log must start with a session_created record")
    header = events[0]
    state = SessionState(
        session_id=header["session_id"],
        curriculum=curriculum_from_dict(header["curriculum"]),
        config=SessionConfig.from_dict(header["config"]),
    )
    pending: Question | None = None
    pending_difficulty = 0
    asked: dict[tuple[str, str], list[Question]] = {}
    for event in events[1:]:
        kind = event.get("type")
        if kind == "question_generated":
            pending = Question.from_dict(event["question"])
            pending_difficulty = event["ask_difficulty"]
            asked.setdefault(pending.chapter.key(), []).append(pending)
        elif kind == "attempt":
            _apply_attempt(state, Attempt.from_dict(event))
            pending = None
        else:
            raise ValidationError(f"unknown event type {kind!r}")
    return ReplayedSession(
        state=state,
        pending=pending,
        pending_ask_difficulty=pending_difficulty,
        asked=asked,
        curriculum_name=header.get("curriculum_name", ""),
    )


def load_session_log(path: str | Path) -> ReplayedSession:
    events = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            events.append(json.loads(line))
    return replay_events(events)
