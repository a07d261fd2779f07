from __future__ import annotations

import json

from adaptquiz.prompting import TeachingMode, TeachingVariant
from adaptquiz.student import answer_question
from tests.conftest import make_question, mock_provider

ZERO_SHOT = TeachingMode(TeachingVariant.ZERO_SHOT)


def test_correct_reply_graded_correct(tmp_path, figure_question):
    provider = mock_provider(tmp_path, ["a"])
    run = answer_question(provider, figure_question, ZERO_SHOT)
    assert run.correct is True
    assert run.label == "a"
    assert run.parse_failed is False


def test_mismatch_graded_incorrect(tmp_path):
    q = make_question(answer="b")
    provider = mock_provider(tmp_path, ["The answer is c"])
    run = answer_question(provider, q, ZERO_SHOT)
    assert run.correct is False
    assert run.label == "c"
    assert run.parse_failed is False


def test_unparseable_reply_flags_and_scores_wrong(tmp_path, figure_question):
    provider = mock_provider(tmp_path, ["I'm not sure"])
    run = answer_question(provider, figure_question, ZERO_SHOT)
    assert run.parse_failed is True
    assert run.label is None
    assert run.correct is False
    assert run.raw_reply == "I'm not sure"


def test_fresh_session_no_history_bleed(tmp_path):
    """Messages for question N never contain question N-1 content."""
    transcript = tmp_path / "t.jsonl"
    provider = mock_provider(tmp_path, ["a", "a"], transcript=str(transcript))
    q1 = make_question(stem="First unique stem?")
    q2 = make_question(stem="Second unique stem?")
    answer_question(provider, q1, ZERO_SHOT)
    answer_question(provider, q2, ZERO_SHOT)
    records = [json.loads(line) for line in transcript.read_text().splitlines()]
    second_contents = "\n".join(m["content"] for m in records[1]["messages"])
    assert "First unique stem?" not in second_contents
    assert len(records[1]["messages"]) == 1


def _examples(with_explanations: bool):
    expl = "Simplify both sides first." if with_explanations else None
    return tuple(make_question(stem=f"Worked example {i}?", difficulty=2,
                               explanation=expl) for i in range(3))


def test_mode_fidelity_in_transcript(tmp_path, figure_question):
    transcript = tmp_path / "t.jsonl"
    provider = mock_provider(tmp_path, ["a"] * 3, transcript=str(transcript))
    answer_question(provider, figure_question, ZERO_SHOT)
    answer_question(provider, figure_question,
                    TeachingMode(TeachingVariant.EXAMPLES, _examples(False)))
    answer_question(provider, figure_question,
                    TeachingMode(TeachingVariant.EXAMPLES_WITH_EXPLANATIONS,
                                 _examples(True)))
    records = [json.loads(line) for line in transcript.read_text().splitlines()]
    contents = ["\n".join(m["content"] for m in r["messages"]) for r in records]
    assert contents[0].count("\nAnswer:") == 0
    assert contents[1].count("\nAnswer:") == 3
    assert contents[1].count("Explanation:") == 0
    assert contents[2].count("\nAnswer:") == 3
    assert contents[2].count("Explanation:") == 3
