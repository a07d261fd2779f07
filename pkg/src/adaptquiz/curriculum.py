"""Subject/chapter hierarchy that scopes question generation and mastery tracking."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ParseError, ValidationError

BUNDLED_CURRICULA = ("grade9-math", "grade9-algebra")


@dataclass(frozen=True)
class ChapterRef:
    """A (subject, chapter) pair naming one chapter of a curriculum."""

    subject: str
    chapter: str

    def key(self) -> tuple[str, str]:
        return (self.subject, self.chapter)


@dataclass(frozen=True)
class Subject:
    name: str
    grade: int
    chapters: tuple[str, ...]


@dataclass(frozen=True)
class Curriculum:
    """Immutable after load; safe to share across concurrent readers."""

    subjects: tuple[Subject, ...] = field(default_factory=tuple)

    def chapter_refs(self) -> list[ChapterRef]:
        """All chapters in curriculum order (subject order, then chapter order)."""
        return [
            ChapterRef(s.name, c) for s in self.subjects for c in s.chapters
        ]

    def subject_named(self, name: str) -> Subject | None:
        for s in self.subjects:
            if s.name == name:
                return s
        return None

    def grade_of(self, ref: ChapterRef) -> int:
        s = self.subject_named(ref.subject)
        if s is None:
            raise ValidationError(f"unknown subject: {ref.subject!r}")
        return s.grade

    def to_dict(self) -> dict:
        return {
            "subjects": [
                {"name": s.name, "grade": s.grade, "chapters": list(s.chapters)}
                for s in self.subjects
            ]
        }


def resolve(curriculum: Curriculum, ref: ChapterRef) -> bool:
    """True iff the (subject, chapter) pair exists in the curriculum."""
    s = curriculum.subject_named(ref.subject)
    return s is not None and ref.chapter in s.chapters


def curriculum_from_dict(doc: object) -> Curriculum:
    """Validate a parsed curriculum document; rejects duplicates and empty lists."""
    if not isinstance(doc, dict) or not isinstance(doc.get("subjects"), list):
        raise ValidationError("curriculum document must be {\"subjects\": [...]}")
    raw_subjects = doc["subjects"]
    if not raw_subjects:
        raise ValidationError("curriculum must contain at least one subject")
    subjects: list[Subject] = []
    seen_names: set[str] = set()
    for i, raw in enumerate(raw_subjects):
        if not isinstance(raw, dict):
            raise ValidationError(f"subjects[{i}] must be an object")
        name = raw.get("name")
        grade = raw.get("grade")
        chapters = raw.get("chapters")
        if not isinstance(name, str) or not name:
            raise ValidationError(f"subjects[{i}].name must be a non-empty string")
        if name in seen_names:
            raise ValidationError(f"duplicate subject name: {name!r}")
        seen_names.add(name)
        if not isinstance(grade, int) or isinstance(grade, bool) or grade <= 0:
            raise ValidationError(f"subjects[{i}].grade must be a positive integer")
        if not isinstance(chapters, list) or not chapters:
            raise ValidationError(f"subject {name!r} must list at least one chapter")
        seen_chapters: set[str] = set()
        for c in chapters:
            if not isinstance(c, str) or not c:
                raise ValidationError(f"subject {name!r} has a non-string chapter")
            if c in seen_chapters:
                raise ValidationError(f"duplicate chapter {c!r} in subject {name!r}")
            seen_chapters.add(c)
        subjects.append(Subject(name=name, grade=grade, chapters=tuple(chapters)))
    return Curriculum(subjects=tuple(subjects))


def load_curriculum(path: str | Path) -> Curriculum:
    """Load and validate a curriculum JSON file.

    Raises FileNotFoundError, ParseError (bad JSON), or ValidationError.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.msg) from exc
    return curriculum_from_dict(doc)


def bundled_curriculum_path(name: str) -> Path:
    """Filesystem path of a curriculum file shipped with the package."""
    if name not in BUNDLED_CURRICULA:
        raise ValidationError(f"no bundled curriculum named {name!r}")
    return Path(str(resources.files("adaptquiz").joinpath("data", f"{name}.json")))


def load_named_curriculum(name_or_path: str | Path) -> Curriculum:
    """Load a curriculum from a file path, falling back to the bundled set by name."""
    p = Path(name_or_path)
    if p.exists():
        return load_curriculum(p)
    if str(name_or_path) in BUNDLED_CURRICULA:
        return load_curriculum(bundled_curriculum_path(str(name_or_path)))
    raise FileNotFoundError(f"no curriculum file or bundled name: {name_or_path}")
