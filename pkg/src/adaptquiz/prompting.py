"""Builds the chat messages for question generation, student answering, and
answer explanation, and extracts option labels from free-form student replies.

Prompt wording lives in versioned template files under ``templates/``;
placeholders: {grade}, {subject}, {chapter}, {count}, {difficulty},
{previous_block}, {question_block}, {examples_block}.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources

from .curriculum import ChapterRef
from .errors import InvalidDifficulty, MissingExplanation, UnparseableAnswer, ValidationError
from .questions import LABELS, Question, normalize_stem, render_question_block

# prior-stem context is bounded to keep generation prompts a sane size
DEFAULT_CONTEXT_CAP = 20

_COUNT_WORDS = {
    1: "one", 2: "two", 3: "three", 4: "four", 5: "five",
    6: "six", 7: "seven", 8: "eight", 9: "nine", 10: "ten",
}


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self):
        if not self.content:
            raise ValidationError("message content must be non-empty")

    def to_dict(self) -> dict:
        return {"role": self.role.value, "content": self.content}


class TeachingVariant(str, Enum):
    ZERO_SHOT = "zero_shot"
    EXAMPLES = "examples"
    EXAMPLES_WITH_EXPLANATIONS = "examples_with_explanations"


@dataclass(frozen=True)
class TeachingMode:
    """Instructional condition for one student run: no examples, or exactly
    three solved examples, optionally with their explanations."""

    variant: TeachingVariant
    examples: tuple[Question, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.variant is TeachingVariant.ZERO_SHOT:
            if self.examples:
                raise ValidationError("zero-shot mode takes no examples")
        elif len(self.examples) != 3:
            raise ValidationError("teaching modes require exactly 3 examples")


@lru_cache(maxsize=None)
def _template(name: str) -> str:
    return resources.files("adaptquiz").joinpath("templates", name).read_text(encoding="utf-8")


def _count_phrase(count: int) -> str:
    return _COUNT_WORDS.get(count, str(count))


def _previous_block(previous: list[Question] | tuple[Question, ...], cap: int | None) -> str:
    if not previous:
        return ""
    deduped: list[Question] = []
    seen: set[str] = set()
    for q in previous:
        key = normalize_stem(q.stem)
        if key not in seen:
            seen.add(key)
            deduped.append(q)
    if cap is not None:
        deduped = deduped[-cap:]
    lines = ["Make sure the new questions are different from previous ones."]
    for i, q in enumerate(deduped, start=1):
        lines.append(f'Previous question {i}: "{q.stem}" (Difficulty level: {q.difficulty})')
    return "\n".join(lines)


def build_generation_prompt(
    chapter: ChapterRef,
    difficulty: int,
    count: int,
    previous: list[Question] | tuple[Question, ...] = (),
    grade: int = 9,
    context_cap: int | None = DEFAULT_CONTEXT_CAP,
) -> list[ChatMessage]:
    """One user message asking for ``count`` new questions at ``difficulty``.

    When ``previous`` is non-empty the message lists the prior stems (most
    recent ``context_cap``, deduplicated) so the model avoids repeats.
    """
    if not isinstance(difficulty, int) or not 1 <= difficulty <= 5:
        raise InvalidDifficulty(f"difficulty must be in [1, 5], got {difficulty!r}")
    if count < 1:
        raise ValidationError("count must be >= 1")
    name = "generate_one.txt" if count == 1 else "generate_many.txt"
    content = _template(name).format(
        grade=grade,
        subject=chapter.subject,
        chapter=chapter.chapter,
        count=_count_phrase(count),
        difficulty=difficulty,
        previous_block=_previous_block(previous, context_cap),
    ).strip()
    return [ChatMessage(Role.USER, content)]


def _question_block_without_answer(q: Question) -> str:
    lines = [f"Question: {q.stem}"]
    lines.extend(f"{label}) {text}" for label, text in zip(LABELS, q.options))
    return "\n".join(lines)


def _example_block(q: Question, with_explanation: bool) -> str:
    shown = q if with_explanation else Question(
        chapter=q.chapter, stem=q.stem, options=q.options, answer=q.answer,
        difficulty=q.difficulty, explanation=None, id=q.id,
    )
    return render_question_block(shown)


def build_student_prompt(q: Question, mode: TeachingMode) -> list[ChatMessage]:
    """Fresh message sequence for answering one question; no carried history.

    The target question never includes its own answer line.
    """
    if mode.variant is TeachingVariant.ZERO_SHOT:
        content = _template("student_zero_shot.txt").format(
            question_block=_question_block_without_answer(q),
        ).strip()
        return [ChatMessage(Role.USER, content)]

    with_expl = mode.variant is TeachingVariant.EXAMPLES_WITH_EXPLANATIONS
    if with_expl:
        for ex in mode.examples:
            if ex.explanation is None:
                raise MissingExplanation(f"example {ex.id} has no explanation")
    examples_block = "\n\n".join(_example_block(ex, with_expl) for ex in mode.examples)
    content = _template("student_with_examples.txt").format(
        examples_block=examples_block,
        question_block=_question_block_without_answer(q),
    ).strip()
    return [ChatMessage(Role.USER, content)]


def build_explanation_prompt(q: Question) -> list[ChatMessage]:
    """Ask the teacher model to justify a question's correct answer."""
    shown = Question(chapter=q.chapter, stem=q.stem, options=q.options, answer=q.answer,
                     difficulty=q.difficulty, explanation=None, id=q.id)
    content = _template("explain_answer.txt").format(
        question_block=render_question_block(shown),
    ).strip()
    return [ChatMessage(Role.USER, content)]


_BARE_RE = re.compile(r"^\W*([a-dA-D])\W*$")
_PHRASE_RE = re.compile(
    r"(?:answer|option|choice)\s*(?:is|:|=)?\s*[\"'(]*([a-dA-D])\b", re.IGNORECASE
)
_TOKEN_RE = re.compile(r"\b([a-dA-D])\b")


def parse_student_answer(text: str, q: Question) -> str:
    """Extract the first unambiguous option label from a free-form reply.

    Tried in order: the reply is a bare label; an "answer is X" phrasing;
    standalone letter tokens or a unique option-text match. Conflicting
    labels raise rather than guessing.
    """
    if not isinstance(text, str) or not text.strip():
        raise UnparseableAnswer("empty reply")

    m = _BARE_RE.match(text.strip())
    if m:
        return m.group(1).lower()

    phrased = {m.lower() for m in _PHRASE_RE.findall(text)}
    if len(phrased) == 1:
        return phrased.pop()
    if len(phrased) > 1:
        raise UnparseableAnswer(f"conflicting labels: {sorted(phrased)}")

    tokens = {m.lower() for m in _TOKEN_RE.findall(text)}
    if len(tokens) == 1:
        return tokens.pop()
    if len(tokens) > 1:
        raise UnparseableAnswer(f"conflicting labels: {sorted(tokens)}")

    lowered = text.lower()
    text_hits = [label for label, opt in zip(LABELS, q.options) if opt.lower() in lowered]
    if len(text_hits) == 1:
        return text_hits[0]
    if len(text_hits) > 1:
        raise UnparseableAnswer(f"reply matches several option texts: {text_hits}")
    raise UnparseableAnswer("no option label found")
