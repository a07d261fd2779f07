"""Shared builders for questions, mock scripts, and experiment fixtures."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from adaptquiz.curriculum import ChapterRef
from adaptquiz.experiment import (
    TEACH_WITH_EXPLANATION,
    ExperimentConfig,
    QuestionBank,
    split_bank,
)
from adaptquiz.provider import MockProvider, ProviderConfig
from adaptquiz.questions import LABELS, Question, render_question_block

ALGEBRA_TOPIC = ChapterRef("Algebra", "Solve linear equations: word problems")
POWERS_REF = ChapterRef("Numbers", "Powers with decimal and fractional bases")

FIGURE_BLOCK = (
    "Question: What is the value of 1.5 raised to the power of 2?\n"
    "a) 2.25\n"
    "b) 3.0\n"
    "c) 2.5\n"
    "d) 1.75\n"
    "Answer: a) 2.25\n"
    "Difficulty rating: 1"
)


def make_question(
    stem: str = "What is 2 + 2?",
    chapter: ChapterRef = ALGEBRA_TOPIC,
    options: tuple[str, str, str, str] = ("4", "5", "6", "7"),
    answer: str = "a",
    difficulty: int = 1,
    explanation: str | None = None,
) -> Question:
    return Question(chapter=chapter, stem=stem, options=options,
                    answer=answer, difficulty=difficulty, explanation=explanation)


def write_script(path: Path, entries: list) -> Path:
    """Entries: plain reply strings or full {match, reply, ...} records."""
    records = [e if isinstance(e, dict) else {"match": "*", "reply": e} for e in entries]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(records, ensure_ascii=False, indent=1), encoding="utf-8")
    return path


def mock_provider(tmp_path: Path, entries: list, transcript: str = "",
                  name: str = "script.json") -> MockProvider:
    script = write_script(tmp_path / name, entries)
    cfg = ProviderConfig(backend="mock", script_path=str(script),
                         transcript_path=transcript)
    return MockProvider(cfg)


def bank_questions(levels=(1, 2, 3, 4, 5), per_level: int = 10,
                   topic: ChapterRef = ALGEBRA_TOPIC) -> QuestionBank:
    """Deterministic duplicate-free bank with varied answer labels."""
    bank = QuestionBank(topic=topic, grade=9)
    for level in levels:
        bank.levels[level] = []
        for slot in range(per_level):
            value = level * 10 + slot
            bank.levels[level].append(Question(
                chapter=topic,
                stem=f"A number increased by {value} equals {2 * value}. What is the number?",
                options=(str(value), str(value + 1), str(value + 2), str(value + 3)),
                answer=LABELS[slot % 4],
                difficulty=level,
            ))
    return bank


def bank_blocks(bank: QuestionBank) -> list[str]:
    return [render_question_block(q) for q in bank.all_questions()]


def teacher_script_entries(bank: QuestionBank, explanations: int = 0) -> list[str]:
    entries = bank_blocks(bank)
    entries.extend(
        f"The correct choice follows from solving the equation directly (note {i})."
        for i in range(explanations)
    )
    return entries


def student_script_entries(
    bank: QuestionBank,
    seed: int,
    conditions: list[str],
    trials: int,
    counts: dict[str, dict[int, int]],
    test_size: int = 7,
) -> list[str]:
    """Replies in exact consumption order: condition, level, question, trial.

    ``counts[condition][level]`` attempts score correct; the rest get a
    deliberately wrong label.
    """
    splits = split_bank(bank, seed, test_size=test_size)
    entries: list[str] = []
    for condition in conditions:
        for level in sorted(splits):
            want = counts[condition][level]
            test_set, _teach = splits[level]
            attempt = 0
            for q in test_set:
                wrong = LABELS[(LABELS.index(q.answer) + 1) % 4]
                for _ in range(trials):
                    entries.append(q.answer if attempt < want else wrong)
                    attempt += 1
    return entries


def experiment_config_doc(
    teacher_script: Path,
    student_script: Path,
    conditions: list[str],
    trials: int = 5,
    seed: int = 7,
    levels=(1, 2, 3, 4, 5),
) -> dict:
    return {
        "curriculum": "grade9-algebra",
        "topic": {"subject": ALGEBRA_TOPIC.subject, "chapter": ALGEBRA_TOPIC.chapter},
        "levels": list(levels),
        "per_level_count": 10,
        "test_size": 7,
        "teach_size": 3,
        "conditions": conditions,
        "trials": trials,
        "seed": seed,
        "teacher": {"backend": "mock", "script": str(teacher_script)},
        "student": {"backend": "mock", "script": str(student_script)},
    }


def build_experiment_fixture(
    tmp_path: Path,
    conditions: list[str],
    counts: dict[str, dict[int, int]],
    trials: int = 5,
    seed: int = 7,
) -> dict:
    """Write teacher and student mock scripts plus a config doc for a full
    offline experiment whose per-cell correct counts are exactly ``counts``."""
    bank = bank_questions()
    n_explanations = 15 if TEACH_WITH_EXPLANATION in conditions else 0
    teacher = write_script(tmp_path / "teacher_script.json",
                           teacher_script_entries(bank, explanations=n_explanations))
    student = write_script(
        tmp_path / "student_script.json",
        student_script_entries(bank, seed, conditions, trials, counts),
    )
    return experiment_config_doc(teacher, student, conditions, trials=trials, seed=seed)


@pytest.fixture
def figure_question() -> Question:
    return Question(
        chapter=POWERS_REF,
        stem="What is the value of 1.5 raised to the power of 2?",
        options=("2.25", "3.0", "2.5", "1.75"),
        answer="a",
        difficulty=1,
    )
