from __future__ import annotations

import json

import pytest

from adaptquiz.curriculum import (
    ChapterRef,
    bundled_curriculum_path,
    curriculum_from_dict,
    load_curriculum,
    load_named_curriculum,
    resolve,
)
from adaptquiz.errors import ParseError, ValidationError


def test_bundled_math_curriculum_contents():
    cur = load_curriculum(bundled_curriculum_path("grade9-math"))
    names = [s.name for s in cur.subjects]
    assert names == ["Numbers", "Financial Mathematics"]
    numbers = cur.subject_named("Numbers")
    assert numbers.grade == 9
    assert "Powers with decimal and fractional bases" in numbers.chapters
    assert "Conversion between standard and scientific notation" in numbers.chapters
    assert "Division with exponents - integral bases" in numbers.chapters
    fin = cur.subject_named("Financial Mathematics")
    assert list(fin.chapters) == ["Simple interest", "Compound interest", "Balance a budget"]


def test_zero_subjects_rejected(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text('{"subjects": []}')
    with pytest.raises(ValidationError):
        load_curriculum(p)


def test_duplicate_chapter_rejected(tmp_path):
    doc = {"subjects": [{"name": "Financial Mathematics", "grade": 9,
                         "chapters": ["Simple interest", "Simple interest"]}]}
    p = tmp_path / "dup.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ValidationError, match="duplicate chapter"):
        load_curriculum(p)


def test_duplicate_subject_and_empty_chapters_rejected():
    with pytest.raises(ValidationError, match="duplicate subject"):
        curriculum_from_dict({"subjects": [
            {"name": "A", "grade": 9, "chapters": ["x"]},
            {"name": "A", "grade": 9, "chapters": ["y"]},
        ]})
    with pytest.raises(ValidationError):
        curriculum_from_dict({"subjects": [{"name": "A", "grade": 9, "chapters": []}]})


def test_resolve_cross_subject_mismatch():
    cur = load_curriculum(bundled_curriculum_path("grade9-math"))
    assert resolve(cur, ChapterRef("Numbers", "Simple interest")) is False
    assert resolve(cur, ChapterRef("Financial Mathematics", "Compound interest")) is True


def test_resolve_experiment_topic():
    cur = load_curriculum(bundled_curriculum_path("grade9-algebra"))
    assert resolve(cur, ChapterRef("Algebra", "Solve linear equations: word problems"))


def test_load_serialize_load_identity(tmp_path):
    cur = load_curriculum(bundled_curriculum_path("grade9-math"))
    p = tmp_path / "roundtrip.json"
    p.write_text(json.dumps(cur.to_dict()))
    assert load_curriculum(p) == cur


def test_parse_error_carries_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"subjects": [\n  {"name": }\n]}')
    with pytest.raises(ParseError) as err:
        load_curriculum(p)
    assert err.value.line == 2


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_curriculum("/nonexistent/curriculum.json")
    with pytest.raises(FileNotFoundError):
        load_named_curriculum("no-such-bundle")


def test_named_lookup_accepts_bundled_names():
    cur = load_named_curriculum("grade9-math")
    assert cur.subject_named("Numbers") is not None


def test_grade_lookup():
    cur = load_named_curriculum("grade9-algebra")
    assert cur.grade_of(ChapterRef("Algebra", "Solve linear equations: word problems")) == 9
    with pytest.raises(ValidationError):
        cur.grade_of(ChapterRef("History", "Anything"))
