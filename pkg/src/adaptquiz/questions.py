"""Four-option multiple-choice questions and the strict text grammar for them.

The wire format, one block per question, blocks separated by blank lines:

    Question: <stem>
    a) <text>
    b) <text>
    c) <text>
    d) <text>
    Answer: <label>) <text>
    Difficulty rating: <1-5>
    Explanation: <text>        (optional)

The parser tolerates label case and ``)`` vs ``.`` delimiters and an
``Answer:`` line that carries only the label; rendering always emits the
canonical lowercase ``)`` form shown above.
"""

from __future__ import annotations

import hashlib
import re
import string
from dataclasses import dataclass, field

from .curriculum import ChapterRef
from .errors import MalformedBlock, ValidationError

LABELS = ("a", "b", "c", "d")

_OPTION_RE = re.compile(r"^([a-dA-D])[).]\s*(.*)$")
_ANSWER_RE = re.compile(r"^answer\s*:\s*\(?([a-dA-D])(?:[).:]|\b)\s*(.*)$", re.IGNORECASE)
_QUESTION_RE = re.compile(r"^question\s*:\s*(.*)$", re.IGNORECASE)
_DIFFICULTY_RE = re.compile(r"^difficulty\s+rating\s*:\s*(.*)$", re.IGNORECASE)
_EXPLANATION_RE = re.compile(r"^explanation\s*:\s*(.*)$", re.IGNORECASE)


def _content_id(chapter: ChapterRef, stem: str, options: tuple[str, ...],
                answer: str, difficulty: int) -> str:
    h = hashlib.sha256()
    for part in (chapter.subject, chapter.chapter, stem, *options, answer, str(difficulty)):
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return "q" + h.hexdigest()[:12]


def _check_text(name: str, value: str) -> None:
    # single-line, no edge whitespace: required so parse(render(q)) == q
    if not isinstance(value, str) or not value:
        raise ValidationError(f"{name} must be non-empty text")
    if "\n" in value or "\r" in value:
        raise ValidationError(f"{name} must be single-line text")
    if value != value.strip():
        raise ValidationError(f"{name} must not carry leading/trailing whitespace")


@dataclass
class Question:
    """One validated multiple-choice item.

    ``id`` is derived from content when not supplied, so equal content gets a
    stable identifier; it is excluded from equality so parse/render round
    trips compare on substance.
    """

    chapter: ChapterRef
    stem: str
    options: tuple[str, str, str, str]
    answer: str
    difficulty: int
    explanation: str | None = None
    id: str = field(default="", compare=False)

    def __post_init__(self):
        _check_text("stem", self.stem)
        if len(self.options) != 4:
            raise ValidationError("exactly 4 options required")
        self.options = tuple(self.options)  # type: ignore[assignment]
        for opt in self.options:
            _check_text("option", opt)
        if self.answer not in LABELS:
            raise ValidationError(f"answer label must be one of {LABELS}")
        if not isinstance(self.difficulty, int) or not 1 <= self.difficulty <= 5:
            raise ValidationError("difficulty must be an integer in [1, 5]")
        if self.explanation is not None:
            _check_text("explanation", self.explanation)
        if not self.id:
            self.id = _content_id(self.chapter, self.stem, self.options,
                                  self.answer, self.difficulty)

    @property
    def answer_text(self) -> str:
        return self.options[LABELS.index(self.answer)]

    def with_explanation(self, text: str) -> "Question":
        return Question(chapter=self.chapter, stem=self.stem, options=self.options,
                        answer=self.answer, difficulty=self.difficulty,
                        explanation=text, id=self.id)

    def to_dict(self, include_answer: bool = True) -> dict:
        doc: dict = {
            "id": self.id,
            "subject": self.chapter.subject,
            "chapter": self.chapter.chapter,
            "stem": self.stem,
            "options": dict(zip(LABELS, self.options)),
            "difficulty": self.difficulty,
        }
        if include_answer:
            doc["answer"] = self.answer
            doc["explanation"] = self.explanation
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Question":
        options = doc["options"]
        if isinstance(options, dict):
            opts = tuple(options[l] for l in LABELS)
        else:
            opts = tuple(options)
        return cls(
            chapter=ChapterRef(doc["subject"], doc["chapter"]),
            stem=doc["stem"],
            options=opts,  # type: ignore[arg-type]
            answer=doc["answer"],
            difficulty=doc["difficulty"],
            explanation=doc.get("explanation"),
            id=doc.get("id", ""),
        )


def render_question_block(q: Question) -> str:
    """Emit the canonical text block for a question."""
    lines = [f"Question: {q.stem}"]
    for label, text in zip(LABELS, q.options):
        lines.append(f"{label}) {text}")
    lines.append(f"Answer: {q.answer}) {q.answer_text}")
    lines.append(f"Difficulty rating: {q.difficulty}")
    if q.explanation is not None:
        lines.append(f"Explanation: {q.explanation}")
    return "\n".join(lines)


def _split_blocks(text: str) -> list[list[str]]:
    blocks: list[list[str]] = []
    current: list[str] = []
    for raw_line in text.replace("\r\n", "\n").replace("\r", "\n").split("\n"):
        line = raw_line.strip()
        if line:
            current.append(line)
        elif current:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)
    return blocks


def _parse_one(lines: list[str], index: int, chapter: ChapterRef) -> Question:
    m = _QUESTION_RE.match(lines[0])
    if m is None:
        raise MalformedBlock(index, "no question header")
    stem_parts = [m.group(1).strip()]
    i = 1
    # stems may wrap onto continuation lines until the first option line
    while i < len(lines) and not _OPTION_RE.match(lines[i]):
        if _ANSWER_RE.match(lines[i]) or _DIFFICULTY_RE.match(lines[i]):
            raise MalformedBlock(index, "expected 4 options before the answer line")
        stem_parts.append(lines[i])
        i += 1
    stem = " ".join(p for p in stem_parts if p)
    if not stem:
        raise MalformedBlock(index, "empty question stem")

    options: list[str] = []
    for expected in LABELS:
        if i >= len(lines):
            raise MalformedBlock(index, f"wrong option count: {len(options)} of 4")
        m = _OPTION_RE.match(lines[i])
        if m is None:
            raise MalformedBlock(index, f"wrong option count: {len(options)} of 4")
        label, text = m.group(1).lower(), m.group(2).strip()
        if label != expected:
            raise MalformedBlock(
                index, f"wrong option count or order: got {label!r}, want {expected!r}")
        if not text:
            raise MalformedBlock(index, f"option {label!r} has empty text")
        options.append(text)
        i += 1
    if i < len(lines) and _OPTION_RE.match(lines[i]):
        raise MalformedBlock(index, "wrong option count: more than 4")

    if i >= len(lines):
        raise MalformedBlock(index, "missing answer line")
    m = _ANSWER_RE.match(lines[i])
    if m is None:
        if lines[i].lower().startswith("answer"):
            raise MalformedBlock(index, "answer label not in {a, b, c, d}")
        raise MalformedBlock(index, "missing answer line")
    answer = m.group(1).lower()
    i += 1

    if i >= len(lines):
        raise MalformedBlock(index, "missing difficulty line")
    m = _DIFFICULTY_RE.match(lines[i])
    if m is None:
        raise MalformedBlock(index, "missing difficulty line")
    raw_difficulty = m.group(1).strip()
    try:
        difficulty = int(raw_difficulty)
    except ValueError:
        raise MalformedBlock(index, f"non-integer difficulty: {raw_difficulty!r}") from None
    if not 1 <= difficulty <= 5:
        raise MalformedBlock(index, f"difficulty {difficulty} outside 1-5")
    i += 1

    explanation: str | None = None
    if i < len(lines):
        m = _EXPLANATION_RE.match(lines[i])
        if m is None:
            raise MalformedBlock(index, f"unexpected trailing line: {lines[i]!r}")
        # explanations may wrap; join the remainder of the block
        parts = [m.group(1).strip()] + lines[i + 1:]
        explanation = " ".join(p for p in parts if p)
        if not explanation:
            raise MalformedBlock(index, "empty explanation text")

    try:
        return Question(chapter=chapter, stem=stem, options=tuple(options),  # type: ignore[arg-type]
                        answer=answer, difficulty=difficulty, explanation=explanation)
    except ValidationError as exc:
        raise MalformedBlock(index, str(exc)) from exc


def parse_question_block(text: str, chapter: ChapterRef) -> list[Question]:
    """Parse one or more question blocks, in document order.

    Total over arbitrary input: anything that does not match the grammar
    raises MalformedBlock(index, reason) rather than crashing.
    """
    if not isinstance(text, str):
        raise MalformedBlock(0, "input is not text")
    blocks = _split_blocks(text)
    if not blocks:
        raise MalformedBlock(0, "no question header")
    return [_parse_one(lines, i, chapter) for i, lines in enumerate(blocks)]


_WS_RE = re.compile(r"\s+")


def normalize_stem(stem: str) -> str:
    collapsed = _WS_RE.sub(" ", stem).strip()
    return collapsed.strip(string.punctuation + " ").lower()


def is_duplicate(a: Question, b: Question) -> bool:
    """Stem-based novelty check: equal after case/whitespace/edge-punctuation
    normalization. Distractors do not participate."""
    return normalize_stem(a.stem) == normalize_stem(b.stem)
