"""Drives a backend in the student role: one question per fresh session,
graded against the key."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnparseableAnswer
from .prompting import TeachingMode, build_student_prompt, parse_student_answer
from .provider import Provider
from .questions import Question


@dataclass(frozen=True)
class StudentRun:
    question_id: str
    variant: str
    raw_reply: str
    label: str | None
    parse_failed: bool
    correct: bool


def answer_question(provider: Provider, q: Question, mode: TeachingMode) -> StudentRun:
    """Present one question in a fresh prompt, parse the reply, grade it.

    A reply with no extractable label scores as incorrect and is flagged,
    not raised; transport failures propagate.
    """
    messages = build_student_prompt(q, mode)
    reply = provider.complete(messages)
    try:
        label = parse_student_answer(reply, q)
    except UnparseableAnswer:
        return StudentRun(
            question_id=q.id, variant=mode.variant.value, raw_reply=reply,
            label=None, parse_failed=True, correct=False,
        )
    return StudentRun(
        question_id=q.id, variant=mode.variant.value, raw_reply=reply,
        label=label, parse_failed=False, correct=(label == q.answer),
    )
