"""Teacher/student evaluation pipeline: bank generation with anti-duplication,
seeded 7/3 splits, three teaching conditions over repeated trials, table
rendering, manual-grading import, and fine-tuning export.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .curriculum import ChapterRef, Curriculum, load_named_curriculum, resolve
from .errors import (
    GenerationFailed,
    IncompleteCell,
    IncompleteCells,
    MalformedBlock,
    ParseError,
    ValidationError,
)
from .prompting import (
    TeachingMode,
    TeachingVariant,
    build_explanation_prompt,
    build_generation_prompt,
)
from .provider import Provider, ProviderConfig, create_provider
from .questions import Question, is_duplicate, parse_question_block, render_question_block
from .student import answer_question
from .util import percent_floor, percent_half_up

BASELINE = "baseline"
TEACH_NO_EXPLANATION = "teach_no_explanation"
TEACH_WITH_EXPLANATION = "teach_with_explanation"
CONDITIONS = (BASELINE, TEACH_NO_EXPLANATION, TEACH_WITH_EXPLANATION)

CONDITION_TITLES = {
    BASELINE: "Baseline",
    TEACH_NO_EXPLANATION: "Teaching without Explanation",
    TEACH_WITH_EXPLANATION: "Teaching with Explanation",
}

GRADES_CSV_HEADER = ["question_id", "model", "course", "correct", "difficulty_ok", "note"]


@dataclass(frozen=True)
class ExperimentConfig:
    curriculum: str
    topic: ChapterRef
    levels: tuple[int, ...] = (1, 2, 3, 4, 5)
    per_level_count: int = 10
    test_size: int = 7
    teach_size: int = 3
    conditions: tuple[str, ...] = CONDITIONS
    trials: int = 5
    seed: int = 0
    teacher: ProviderConfig | None = None
    student: ProviderConfig | None = None

    def __post_init__(self):
        if not self.levels or any(not 1 <= l <= 5 for l in self.levels):
            raise ValidationError("levels must be a non-empty subset of 1..5")
        if len(set(self.levels)) != len(self.levels):
            raise ValidationError("levels must be distinct")
        if self.per_level_count < 1:
            raise ValidationError("per-level question count must be >= 1")
        if self.test_size + self.teach_size != self.per_level_count:
            raise ValidationError("test + teach sizes must equal the per-level count")
        if self.test_size < 1 or self.teach_size < 0:
            raise ValidationError("split sizes out of range")
        for c in self.conditions:
            if c not in CONDITIONS:
                raise ValidationError(f"unknown condition {c!r}")
        if not self.conditions:
            raise ValidationError("at least one condition required")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        topic = doc.get("topic")
        if not isinstance(topic, dict) or "subject" not in topic or "chapter" not in topic:
            raise ValidationError("config needs topic: {subject, chapter}")
        teacher = doc.get("teacher")
        student = doc.get("student")
        if not isinstance(teacher, dict) or not isinstance(student, dict):
            raise ValidationError("config needs teacher and student provider objects")
        return cls(
            curriculum=doc.get("curriculum", ""),
            topic=ChapterRef(topic["subject"], topic["chapter"]),
            levels=tuple(doc.get("levels", (1, 2, 3, 4, 5))),
            per_level_count=doc.get("per_level_count", 10),
            test_size=doc.get("test_size", 7),
            teach_size=doc.get("teach_size", 3),
            conditions=tuple(doc.get("conditions", CONDITIONS)),
            trials=doc.get("trials", 5),
            seed=doc.get("seed", 0),
            # generation wants diversity, grading wants determinism
            teacher=ProviderConfig.from_dict(teacher, default_temperature=0.7),
            student=ProviderConfig.from_dict(student, default_temperature=0.0),
        )

    def config_hash(self, raw_doc: dict) -> str:
        canonical = json.dumps(raw_doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass
class QuestionBank:
    topic: ChapterRef
    grade: int
    levels: dict[int, list[Question]] = field(default_factory=dict)

    def all_questions(self) -> list[Question]:
        return [q for level in sorted(self.levels) for q in self.levels[level]]

    def to_dict(self) -> dict:
        return {
            "topic": {"subject": self.topic.subject, "chapter": self.topic.chapter},
            "grade": self.grade,
            "levels": {str(l): [q.to_dict() for q in qs] for l, qs in sorted(self.levels.items())},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QuestionBank":
        topic = ChapterRef(doc["topic"]["subject"], doc["topic"]["chapter"])
        levels = {
            int(l): [Question.from_dict(q) for q in qs]
            for l, qs in doc["levels"].items()
        }
        return cls(topic=topic, grade=doc.get("grade", 9), levels=levels)


def save_bank(bank: QuestionBank, path: str | Path) -> None:
    Path(path).write_text(json.dumps(bank.to_dict(), ensure_ascii=False, indent=2,
                                     sort_keys=True) + "\n", encoding="utf-8")


def load_bank(path: str | Path) -> QuestionBank:
    return QuestionBank.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def generate_bank(
    cfg: ExperimentConfig,
    teacher: Provider,
    curriculum: Curriculum,
    retries_per_slot: int = 3,
) -> QuestionBank:
    """Fill every level slot by slot, one generation call per question.

    Each request carries every stem accepted so far (uncapped) so new output
    stays distinct; duplicates and off-level self-ratings are rejected and
    regenerated, up to ``retries_per_slot`` extra calls per slot.
    """
    if not resolve(curriculum, cfg.topic):
        raise ValidationError(f"topic not in curriculum: {cfg.topic}")
    grade = curriculum.grade_of(cfg.topic)
    bank = QuestionBank(topic=cfg.topic, grade=grade)
    accepted: list[Question] = []
    for level in cfg.levels:
        bank.levels[level] = []
        for slot in range(cfg.per_level_count):
            question = _generate_slot(cfg, teacher, accepted, level, slot,
                                      grade, retries_per_slot)
            bank.levels[level].append(question)
            accepted.append(question)
    return bank


def _generate_slot(cfg: ExperimentConfig, teacher: Provider, accepted: list[Question],
                   level: int, slot: int, grade: int, retries: int) -> Question:
    reason = "no attempts made"
    for _ in range(retries + 1):
        messages = build_generation_prompt(cfg.topic, level, count=1,
                                           previous=accepted, grade=grade,
                                           context_cap=None)
        reply = teacher.complete(messages)
        try:
            question = parse_question_block(reply, cfg.topic)[0]
        except MalformedBlock as exc:
            reason = str(exc)
            continue
        if question.difficulty != level:
            reason = f"self-rated difficulty {question.difficulty}, requested {level}"
            continue
        if any(is_duplicate(question, prior) for prior in accepted):
            reason = f"duplicate stem: {question.stem!r}"
            continue
        return question
    raise GenerationFailed(reason, level=level, slot=slot)


def split_bank(bank: QuestionBank, seed: int,
               test_size: int = 7) -> dict[int, tuple[list[Question], list[Question]]]:
    """Seeded per-level partition into (test, teach) question lists.

    The level's questions are Fisher-Yates shuffled by
    ``random.Random(f"{seed}:{level}")``; the first ``test_size`` become the
    testing set and the remainder the teaching set. Same seed, same split.
    """
    splits: dict[int, tuple[list[Question], list[Question]]] = {}
    for level in sorted(bank.levels):
        questions = list(bank.levels[level])
        if test_size >= len(questions):
            raise ValidationError(
                f"test size {test_size} leaves no teaching set at level {level}")
        rng = random.Random(f"{seed}:{level}")
        rng.shuffle(questions)
        splits[level] = (questions[:test_size], questions[test_size:])
    return splits


def _teaching_mode(condition: str, teach_set: list[Question]) -> TeachingMode:
    if condition == BASELINE:
        return TeachingMode(TeachingVariant.ZERO_SHOT)
    examples = tuple(teach_set[:3])
    if condition == TEACH_NO_EXPLANATION:
        return TeachingMode(TeachingVariant.EXAMPLES, examples)
    return TeachingMode(TeachingVariant.EXAMPLES_WITH_EXPLANATIONS, examples)


def run_condition(
    cfg: ExperimentConfig,
    student: Provider,
    splits: dict[int, tuple[list[Question], list[Question]]],
    condition: str,
    on_attempt=None,
) -> list[CellResult]:
    """Evaluate one teaching condition: every test question of every level,
    ``trials`` times each, in a fresh session per attempt.

    Attempts run sequentially by default; a student provider configured with
    in_flight > 1 fans them out over a thread pool (counts are
    order-independent, but scripted mock playback is only reproducible
    sequentially).
    """
    workers = max(student.cfg.in_flight, 1)
    fragments: list[CellResult] = []
    for level in sorted(splits):
        test_set, teach_set = splits[level]
        mode = _teaching_mode(condition, teach_set)
        jobs = [q for q in test_set for _ in range(cfg.trials)]
        if workers == 1:
            runs = [answer_question(student, q, mode) for q in jobs]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                runs = list(pool.map(lambda q: answer_question(student, q, mode), jobs))
        if on_attempt is not None:
            for _ in runs:
                on_attempt()
        fragments.append(CellResult(
            level=level, condition=condition, attempts=len(runs),
            correct=sum(r.correct for r in runs),
            parse_failures=sum(r.parse_failed for r in runs),
        ))
    return fragments


def ensure_explanations(
    bank: QuestionBank,
    splits: dict[int, tuple[list[Question], list[Question]]],
    teacher: Provider,
) -> None:
    """Second teacher pass: fill in explanations for teaching-set questions
    that lack one (the generation format has no explanation field)."""
    for level in sorted(splits):
        test_set, teach_set = splits[level]
        for i, q in enumerate(teach_set):
            if q.explanation is not None:
                continue
            reply = teacher.complete(build_explanation_prompt(q))
            text = " ".join(reply.split()).strip()
            if not text:
                raise GenerationFailed("empty explanation reply", level=level, slot=i)
            updated = q.with_explanation(text)
            teach_set[i] = updated
            bank.levels[level][bank.levels[level].index(q)] = updated


@dataclass(frozen=True)
class CellResult:
    level: int
    condition: str
    attempts: int
    correct: int
    parse_failures: int

    @property
    def percentage(self) -> float:
        return float(percent_half_up(self.correct, self.attempts))

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "condition": self.condition,
            "attempts": self.attempts,
            "correct": self.correct,
            "parse_failures": self.parse_failures,
            "percentage": self.percentage,
        }


@dataclass
class ExperimentResult:
    config_hash: str
    seed: int
    topic: ChapterRef
    trials: int
    test_size: int
    conditions: tuple[str, ...]
    levels: tuple[int, ...]
    cells: list[CellResult]
    started_at: float = 0.0
    finished_at: float = 0.0

    def cell(self, level: int, condition: str) -> CellResult:
        for c in self.cells:
            if c.level == level and c.condition == condition:
                return c
        raise IncompleteCells(f"missing cell ({level}, {condition})")

    def to_dict(self) -> dict:
        # deterministic: no wall-clock fields (those live in the run metadata)
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "topic": {"subject": self.topic.subject, "chapter": self.topic.chapter},
            "trials": self.trials,
            "test_size": self.test_size,
            "conditions": list(self.conditions),
            "levels": list(self.levels),
            "cells": [c.to_dict() for c in sorted(
                self.cells, key=lambda c: (self.conditions.index(c.condition), c.level))],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentResult":
        return cls(
            config_hash=doc["config_hash"],
            seed=doc["seed"],
            topic=ChapterRef(doc["topic"]["subject"], doc["topic"]["chapter"]),
            trials=doc["trials"],
            test_size=doc["test_size"],
            conditions=tuple(doc["conditions"]),
            levels=tuple(doc["levels"]),
            cells=[CellResult(level=c["level"], condition=c["condition"],
                              attempts=c["attempts"], correct=c["correct"],
                              parse_failures=c["parse_failures"])
                   for c in doc["cells"]],
        )


def aggregate(cfg: ExperimentConfig, fragments: list[CellResult],
              config_hash: str) -> ExperimentResult:
    """Collect condition fragments into one result, verifying every
    (level, condition) cell is present."""
    have = {(c.level, c.condition) for c in fragments}
    missing = [
        (level, condition)
        for condition in cfg.conditions
        for level in cfg.levels
        if (level, condition) not in have
    ]
    if missing:
        raise IncompleteCells(f"missing cells: {missing}")
    return ExperimentResult(
        config_hash=config_hash,
        seed=cfg.seed,
        topic=cfg.topic,
        trials=cfg.trials,
        test_size=cfg.test_size,
        conditions=cfg.conditions,
        levels=tuple(sorted(cfg.levels)),
        cells=list(fragments),
    )


def render_result_table(result: ExperimentResult) -> str:
    """Plain-text table: rows are difficulty levels, columns are conditions."""
    headers = ["Difficulty Level"] + [
        f"{CONDITION_TITLES[c]} (%)" for c in result.conditions
    ]
    rows = [headers]
    for level in result.levels:
        row = [str(level)]
        for condition in result.conditions:
            row.append(f"{result.cell(level, condition).percentage:.2f}%")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(rows):
        lines.append(" | ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_result_csv(result: ExperimentResult) -> str:
    out = ["level," + ",".join(result.conditions)]
    for level in result.levels:
        cells = [f"{result.cell(level, c).percentage:.2f}" for c in result.conditions]
        out.append(f"{level}," + ",".join(cells))
    return "\n".join(out) + "\n"


# --- manual grading (question-quality evaluation) ---------------------------

@dataclass(frozen=True)
class GradingRecord:
    question_id: str
    model: str
    course: str
    correct: bool
    difficulty_ok: bool
    note: str = ""


_BOOL_WORDS = {
    "true": True, "false": False, "1": True, "0": False,
    "yes": True, "no": False, "y": True, "n": False,
}


def _parse_bool(value: str, line: int, column: str) -> bool:
    try:
        return _BOOL_WORDS[value.strip().lower()]
    except KeyError:
        raise ParseError(line, f"{column} must be a boolean, got {value!r}") from None


def import_grades(path: str | Path) -> list[GradingRecord]:
    """Read a manual-grading CSV (question_id,model,course,correct,difficulty_ok,note)."""
    records: list[GradingRecord] = []
    seen: set[tuple[str, str, str]] = set()
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, "empty grading file") from None
        if [h.strip() for h in header] != GRADES_CSV_HEADER:
            raise ParseError(1, f"header must be {','.join(GRADES_CSV_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 5:
                raise ParseError(line_no, f"expected at least 5 columns, got {len(row)}")
            question_id, model, course = (cell.strip() for cell in row[:3])
            if not question_id or not model or not course:
                raise ParseError(line_no, "question_id, model, and course are required")
            key = (question_id, model, course)
            if key in seen:
                raise ParseError(line_no, f"duplicate grading record for {key}")
            seen.add(key)
            records.append(GradingRecord(
                question_id=question_id,
                model=model,
                course=course,
                correct=_parse_bool(row[3], line_no, "correct"),
                difficulty_ok=_parse_bool(row[4], line_no, "difficulty_ok"),
                note=row[5].strip() if len(row) > 5 else "",
            ))
    return records


def grading_summary(records: list[GradingRecord],
                    expected_per_cell: int = 30) -> dict[str, dict[str, int]]:
    """Per (course, model) correct percentages, truncated to whole percents.

    Every cell must hold exactly ``expected_per_cell`` records.
    """
    counts: dict[tuple[str, str], list[int]] = {}
    courses: list[str] = []
    models: list[str] = []
    for rec in records:
        if rec.course not in courses:
            courses.append(rec.course)
        if rec.model not in models:
            models.append(rec.model)
        cell = counts.setdefault((rec.course, rec.model), [0, 0])
        cell[0] += 1
        cell[1] += int(rec.correct)
    summary: dict[str, dict[str, int]] = {}
    for course in courses:
        summary[course] = {}
        for model in models:
            total, correct = counts.get((course, model), [0, 0])
            if total != expected_per_cell:
                raise IncompleteCell(model, course, total, expected_per_cell)
            summary[course][model] = percent_floor(correct, total)
    return summary


def render_grading_table(summary: dict[str, dict[str, int]]) -> str:
    """Plain-text table: rows are courses, columns are graded models."""
    models = list(next(iter(summary.values())).keys()) if summary else []
    rows = [["Course"] + models]
    for course, by_model in summary.items():
        rows.append([course] + [f"{by_model[m]}%" for m in models])
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for i, row in enumerate(rows):
        lines.append(" | ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# --- fine-tuning export ------------------------------------------------------

def finetune_request_sentence(grade: int, topic: ChapterRef, difficulty: int) -> str:
    return (
        f"Create a question for grade {grade} course in '{topic.subject}', "
        f"chapter: '{topic.chapter}', with difficulty level {difficulty}."
    )


def export_finetune(bank: QuestionBank, path: str | Path) -> int:
    """Write one JSONL training pair per bank question: the generation request
    as the user message and the canonical question block as the assistant
    message. Returns the number of lines written."""
    lines = []
    for q in bank.all_questions():
        record = {
            "messages": [
                {
                    "role": "user",
                    "content": finetune_request_sentence(bank.grade, q.chapter, q.difficulty),
                },
                {
                    "role": "assistant",
                    "content": render_question_block(q),
                },
            ]
        }
        lines.append(json.dumps(record, ensure_ascii=False))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return len(lines)


# --- end-to-end run ----------------------------------------------------------

@dataclass
class RunArtifacts:
    result: ExperimentResult
    bank: QuestionBank
    result_path: Path
    table_path: Path


def run_experiment(
    raw_config: dict,
    run_dir: str | Path,
    on_attempt=None,
) -> RunArtifacts:
    """Execute a full experiment from a parsed config document, writing
    bank.json, result.json, run_meta.json, table2.txt and table2.csv under
    ``run_dir``."""
    cfg = ExperimentConfig.from_dict(raw_config)
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()

    curriculum = load_named_curriculum(cfg.curriculum)
    teacher_cfg = cfg.teacher
    student_cfg = cfg.student
    if not teacher_cfg.transcript_path:
        teacher_cfg = replace(teacher_cfg, transcript_path=str(run_dir / "teacher_transcript.jsonl"))
    if not student_cfg.transcript_path:
        student_cfg = replace(student_cfg, transcript_path=str(run_dir / "student_transcript.jsonl"))
    teacher = create_provider(teacher_cfg)
    student = create_provider(student_cfg)

    bank = generate_bank(cfg, teacher, curriculum)
    splits = split_bank(bank, cfg.seed, test_size=cfg.test_size)
    if TEACH_WITH_EXPLANATION in cfg.conditions:
        ensure_explanations(bank, splits, teacher)
    save_bank(bank, run_dir / "bank.json")

    fragments: list[CellResult] = []
    for condition in cfg.conditions:
        fragments.extend(run_condition(cfg, student, splits, condition, on_attempt=on_attempt))

    result = aggregate(cfg, fragments, cfg.config_hash(raw_config))
    result.started_at = started
    result.finished_at = time.time()

    result_path = run_dir / "result.json"
    result_path.write_text(
        json.dumps(result.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    (run_dir / "run_meta.json").write_text(
        json.dumps({"started_at": result.started_at, "finished_at": result.finished_at},
                   indent=2) + "\n",
        encoding="utf-8",
    )
    table_path = run_dir / "table2.txt"
    table_path.write_text(render_result_table(result), encoding="utf-8")
    (run_dir / "table2.csv").write_text(render_result_csv(result), encoding="utf-8")
    return RunArtifacts(result=result, bank=bank, result_path=result_path,
                        table_path=table_path)


def planned_attempts(cfg: ExperimentConfig) -> int:
    return len(cfg.conditions) * len(cfg.levels) * cfg.test_size * cfg.trials
