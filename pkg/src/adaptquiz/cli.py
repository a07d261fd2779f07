"""Operator command line: every workflow the HTTP service offers, headless.

Exit codes: 0 success, 1 domain error, 2 usage error. ``--json`` switches
stdout to machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from pathlib import Path

from . import engine
from .curriculum import load_curriculum, load_named_curriculum
from .engine import SessionConfig, SessionState
from .errors import AdaptQuizError
from .experiment import (
    export_finetune,
    grading_summary,
    import_grades,
    load_bank,
    render_grading_table,
    render_result_table,
    run_experiment,
)
from .prompting import DEFAULT_CONTEXT_CAP
from .provider import ProviderConfig, create_provider
from .questions import LABELS


def _default_data_dir() -> str:
    return os.environ.get("ADAPTQUIZ_DATA_DIR", "adaptquiz-data")


def _provider_from_args(args: argparse.Namespace, default_temperature: float) -> ProviderConfig:
    if args.provider == "mock":
        if not args.script:
            raise AdaptQuizError("--provider mock requires --script")
        return ProviderConfig(backend="mock", script_path=args.script,
                              transcript_path=args.transcript or "")
    if not args.endpoint or not args.model:
        raise AdaptQuizError("--provider remote requires --endpoint and --model")
    return ProviderConfig(
        backend="remote", endpoint=args.endpoint, model=args.model,
        temperature=args.temperature if args.temperature is not None else default_temperature,
        transcript_path=args.transcript or "",
    )


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--provider", choices=("mock", "remote"), default="mock")
    parser.add_argument("--script", help="mock script file (JSON list of {match, reply})")
    parser.add_argument("--endpoint", help="remote chat-completions base URL")
    parser.add_argument("--model", help="remote model name")
    parser.add_argument("--temperature", type=float, default=None)
    parser.add_argument("--transcript", help="transcript JSONL path")


def _render_session_report(report: dict) -> str:
    lines = ["Session report"]
    for ch in report["chapters"]:
        mastered = " [mastered]" if ch["mastered"] else ""
        lines.append(
            f"  {ch['subject']} / {ch['chapter']}: "
            f"{ch['correct']}/{ch['attempts']} correct ({ch['accuracy']}), "
            f"difficulty {ch['final_difficulty']}{mastered}"
        )
    overall = report["overall"]
    lines.append(
        f"Overall: {overall['correct']}/{overall['attempts']} correct ({overall['accuracy']})"
    )
    if report["complete"]:
        lines.append("All chapters mastered.")
    return "\n".join(lines)


# --- subcommands -------------------------------------------------------------

def _cmd_curriculum_validate(args: argparse.Namespace) -> int:
    curriculum = load_curriculum(args.file)
    n_chapters = sum(len(s.chapters) for s in curriculum.subjects)
    if args.json:
        print(json.dumps({"ok": True, "subjects": len(curriculum.subjects),
                          "chapters": n_chapters}))
    else:
        print(f"OK: {len(curriculum.subjects)} subjects, {n_chapters} chapters")
    return 0


def _session_loop(state: SessionState, provider, log_path: Path | None,
                  answer_source, echo: bool, limit: int | None = None) -> dict:
    """Shared adaptive loop for interactive and simulated sessions.

    ``answer_source(question, number)`` returns a label or None to stop;
    ``limit`` stops before generating question limit+1.
    """
    asked: dict[tuple[str, str], list] = {}
    number = 0
    while True:
        if limit is not None and number >= limit:
            break
        request = engine.next_question_request(state)
        if request is None:
            if echo:
                print("Session complete - all chapters mastered.")
            break
        ref, difficulty = request
        previous = asked.get(ref.key(), [])[-DEFAULT_CONTEXT_CAP:]
        grade = state.curriculum.grade_of(ref)
        q = engine.generate_question(provider, ref, difficulty,
                                     previous=previous, grade=grade)
        asked.setdefault(ref.key(), []).append(q)
        if log_path is not None:
            engine.append_event(log_path, engine.question_generated_event(q, difficulty))
        number += 1
        if echo:
            print(f"Question {number} ({ref.subject} / {ref.chapter}, difficulty {difficulty})")
            print(q.stem)
            for label, text in zip(LABELS, q.options):
                print(f"  {label}) {text}")
        chosen = answer_source(q, number)
        if chosen is None:
            break
        engine.record_answer(state, q, chosen)
        attempt = state.attempts[-1]
        if log_path is not None:
            engine.append_event(log_path, engine.attempt_event(attempt))
        progress = state.progress_of(ref)
        if echo:
            if attempt.correct:
                print(f"Correct! Difficulty is now {progress.difficulty}.")
            else:
                print(f"Incorrect. Correct answer: {q.answer}. "
                      f"Difficulty stays {progress.difficulty}.")
            if progress.mastered:
                print(f"Chapter mastered: {ref.subject} / {ref.chapter}")
            print()
    return engine.session_report(state)


def _cmd_session_run(args: argparse.Namespace) -> int:
    if not args.interactive:
        raise AdaptQuizError("session run currently supports --interactive only; "
                             "use `simulate` for scripted sessions")
    curriculum = load_named_curriculum(args.curriculum)
    provider = create_provider(_provider_from_args(args, default_temperature=0.7))
    state = SessionState(session_id=args.session_id or secrets.token_hex(16),
                         curriculum=curriculum)
    log_path = None
    if args.data_dir:
        log_path = Path(args.data_dir) / "sessions" / f"{state.session_id}.jsonl"
        engine.append_event(log_path, engine.session_created_event(state, args.curriculum))

    def from_stdin(_q, _number):
        while True:
            try:
                raw = input("Your answer [a-d, q to quit]: ").strip().lower()
            except EOFError:
                return None
            if raw == "q":
                return None
            if raw in LABELS:
                return raw
            print("Please answer a, b, c, d, or q.")

    report = _session_loop(state, provider, log_path, from_stdin, echo=True)
    print(_render_session_report(report))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    curriculum = load_named_curriculum(args.curriculum)
    provider = create_provider(ProviderConfig(backend="mock", script_path=args.script))
    state = SessionState(session_id=args.session_id or "simulated",
                         curriculum=curriculum)

    scripted: list[str] | None = None
    if args.answers:
        scripted = json.loads(Path(args.answers).read_text(encoding="utf-8"))
        if not isinstance(scripted, list) or any(l not in LABELS for l in scripted):
            raise AdaptQuizError("--answers must be a JSON list of labels a-d")

    def next_answer(q, number):
        if scripted is None:
            return q.answer
        return scripted[number - 1]

    limit = args.max_questions if scripted is None else min(args.max_questions,
                                                            len(scripted))
    report = _session_loop(state, provider, None, next_answer, echo=False, limit=limit)
    if args.json:
        print(json.dumps(report, ensure_ascii=False, sort_keys=True))
    else:
        print(_render_session_report(report))
    return 0


def _cmd_experiment_run(args: argparse.Namespace) -> int:
    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    experiment_id = args.id or secrets.token_hex(8)
    run_dir = Path(args.data_dir) / "experiments" / experiment_id
    artifacts = run_experiment(raw, run_dir)
    if args.json:
        print(json.dumps({"experiment_id": experiment_id,
                          "run_dir": str(run_dir),
                          "result": artifacts.result.to_dict()},
                         ensure_ascii=False, sort_keys=True))
    else:
        print(f"experiment {experiment_id} finished; artifacts in {run_dir}")
        print(render_result_table(artifacts.result), end="")
    return 0


def _cmd_export_finetune(args: argparse.Namespace) -> int:
    bank = load_bank(args.bank)
    count = export_finetune(bank, args.out)
    if args.json:
        print(json.dumps({"lines": count, "out": args.out}))
    else:
        print(f"wrote {count} training pairs to {args.out}")
    return 0


def _cmd_grade_import(args: argparse.Namespace) -> int:
    records = import_grades(args.file)
    stored = Path(args.data_dir) / "grades.csv"
    stored.parent.mkdir(parents=True, exist_ok=True)
    stored.write_text(Path(args.file).read_text(encoding="utf-8"), encoding="utf-8")
    if args.json:
        print(json.dumps({"records": len(records), "stored": str(stored)}))
    else:
        print(f"imported {len(records)} grading records -> {stored}")
    return 0


def _cmd_report_table1(args: argparse.Namespace) -> int:
    grades_path = args.grades or str(Path(args.data_dir) / "grades.csv")
    records = import_grades(grades_path)
    summary = grading_summary(records, expected_per_cell=args.per_cell)
    if args.json:
        print(json.dumps(summary, ensure_ascii=False, sort_keys=True))
    else:
        print(render_grading_table(summary), end="")
    return 0


def _cmd_report_table2(args: argparse.Namespace) -> int:
    from .experiment import ExperimentResult
    if args.result:
        result_path = Path(args.result)
    else:
        if not args.experiment:
            raise AdaptQuizError("need --experiment <id> or --result <file>")
        result_path = Path(args.data_dir) / "experiments" / args.experiment / "result.json"
    doc = json.loads(result_path.read_text(encoding="utf-8"))
    result = ExperimentResult.from_dict(doc)
    if args.json:
        print(json.dumps(result.to_dict(), ensure_ascii=False, sort_keys=True))
    else:
        print(render_result_table(result), end="")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    provider_cfg = None
    if args.script or args.endpoint:
        provider_cfg = _provider_from_args(args, default_temperature=0.7)
    app = create_app(args.data_dir, provider_cfg,
                     curricula_dir=args.curricula_dir, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptquiz")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curriculum", help="curriculum file tools")
    csub = p.add_subparsers(dest="subcommand", required=True)
    v = csub.add_parser("validate", help="validate a curriculum JSON file")
    v.add_argument("file")
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=_cmd_curriculum_validate)

    p = sub.add_parser("session", help="live adaptive sessions")
    ssub = p.add_subparsers(dest="subcommand", required=True)
    r = ssub.add_parser("run", help="terminal question-and-answer loop")
    r.add_argument("--interactive", action="store_true")
    r.add_argument("--curriculum", required=True)
    r.add_argument("--session-id")
    r.add_argument("--data-dir", default="")
    _add_provider_flags(r)
    r.set_defaults(func=_cmd_session_run)

    p = sub.add_parser("simulate", help="scripted offline session against the mock provider")
    p.add_argument("--curriculum", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--answers", help="JSON list of labels; default answers correctly")
    p.add_argument("--max-questions", type=int, default=50)
    p.add_argument("--session-id")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="teacher/student evaluation runs")
    esub = p.add_subparsers(dest="subcommand", required=True)
    r = esub.add_parser("run", help="run an experiment from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--data-dir", default=_default_data_dir())
    r.add_argument("--id", help="experiment id (default: random)")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=_cmd_experiment_run)

    p = sub.add_parser("export-finetune", help="write the JSONL training file for a bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_export_finetune)

    p = sub.add_parser("grade", help="manual grading records")
    gsub = p.add_subparsers(dest="subcommand", required=True)
    g = gsub.add_parser("import", help="validate and store a grading CSV")
    g.add_argument("file")
    g.add_argument("--data-dir", default=_default_data_dir())
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=_cmd_grade_import)

    p = sub.add_parser("report", help="render result tables")
    rsub = p.add_subparsers(dest="subcommand", required=True)
    t1 = rsub.add_parser("table1", help="manual grading percentages per course/model")
    t1.add_argument("--grades", help="grading CSV (default: imported copy)")
    t1.add_argument("--data-dir", default=_default_data_dir())
    t1.add_argument("--per-cell", type=int, default=30)
    t1.add_argument("--json", action="store_true")
    t1.set_defaults(func=_cmd_report_table1)
    t2 = rsub.add_parser("table2", help="per-level per-condition accuracy table")
    t2.add_argument("--experiment", help="experiment id under the data dir")
    t2.add_argument("--result", help="explicit result.json path")
    t2.add_argument("--data-dir", default=_default_data_dir())
    t2.add_argument("--json", action="store_true")
    t2.set_defaults(func=_cmd_report_table2)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", default=_default_data_dir())
    p.add_argument("--curricula-dir")
    p.add_argument("--static", help="directory with the web UI bundle")
    _add_provider_flags(p)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdaptQuizError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
