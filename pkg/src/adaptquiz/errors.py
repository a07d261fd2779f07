"""Exception types shared across the package."""

from __future__ import annotations


class AdaptQuizError(Exception):
    """Base class for every domain error raised by this package."""


class ParseError(AdaptQuizError):
    """A structured input file could not be parsed."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class ValidationError(AdaptQuizError):
    """Structurally parseable input that violates a domain invariant."""


class MalformedBlock(AdaptQuizError):
    """A question block did not match the strict grammar."""

    def __init__(self, index: int, reason: str):
        self.index = index
        self.reason = reason
        super().__init__(f"block {index}: {reason}")


class InvalidDifficulty(AdaptQuizError):
    """Difficulty outside the 1-5 range."""


class MissingExplanation(AdaptQuizError):
    """An explanations-mode example carries no explanation text."""


class UnparseableAnswer(AdaptQuizError):
    """No unambiguous option label could be extracted from a reply."""


class TransportError(AdaptQuizError):
    """Remote backend failed after exhausting retries."""


class AuthError(AdaptQuizError):
    """Remote backend rejected the request credentials."""


class ScriptExhausted(AdaptQuizError):
    """The mock script has no remaining reply matching the request."""


class MasteredChapter(AdaptQuizError):
    """An answer was submitted for a chapter already retired as mastered."""


class GenerationFailed(AdaptQuizError):
    """Question generation kept producing unusable output after retries."""

    def __init__(self, reason: str, level: int | None = None, slot: int | None = None):
        self.level = level
        self.slot = slot
        where = "" if level is None else f" (level {level}, slot {slot})"
        super().__init__(f"{reason}{where}")


class IncompleteCells(AdaptQuizError):
    """Aggregation input is missing one or more (level, condition) cells."""


class IncompleteCell(AdaptQuizError):
    """A grading table cell does not contain the expected record count."""

    def __init__(self, model: str, course: str, count: int, expected: int):
        self.model = model
        self.course = course
        self.count = count
        self.expected = expected
        super().__init__(
            f"cell ({course}, {model}) has {count} records, expected {expected}"
        )
