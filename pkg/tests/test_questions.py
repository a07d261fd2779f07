from __future__ import annotations

import json
import random
import string
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptquiz.curriculum import ChapterRef
from adaptquiz.errors import MalformedBlock, ValidationError
from adaptquiz.questions import (
    LABELS,
    Question,
    is_duplicate,
    normalize_stem,
    parse_question_block,
    render_question_block,
)
from tests.conftest import FIGURE_BLOCK, POWERS_REF, make_question

FIXTURES = Path(__file__).parent / "fixtures"


def test_parse_figure_block():
    qs = parse_question_block(FIGURE_BLOCK, POWERS_REF)
    assert len(qs) == 1
    q = qs[0]
    assert q.stem == "What is the value of 1.5 raised to the power of 2?"
    assert q.options == ("2.25", "3.0", "2.5", "1.75")
    assert q.answer == "a"
    assert q.difficulty == 1
    assert q.explanation is None


def test_empty_input_is_malformed():
    with pytest.raises(MalformedBlock) as err:
        parse_question_block("", POWERS_REF)
    assert err.value.index == 0
    assert "no question header" in err.value.reason


def test_two_block_fixture_matches_sidecar():
    text = (FIXTURES / "two_blocks.txt").read_text()
    expected = json.loads((FIXTURES / "two_blocks_expected.json").read_text())
    qs = parse_question_block(text, POWERS_REF)
    assert len(qs) == len(expected) == 2
    for q, want in zip(qs, expected):
        assert q.stem == want["stem"]
        assert dict(zip(LABELS, q.options)) == want["options"]
        assert q.answer == want["answer"]
        assert q.difficulty == want["difficulty"]
        assert q.explanation == want["explanation"]


def test_render_figure_block_byte_for_byte(figure_question):
    assert render_question_block(figure_question) == FIGURE_BLOCK


def test_explanation_line_present_iff_set():
    q = make_question(explanation="Multiply 1.5 by itself")
    assert render_question_block(q).endswith("Explanation: Multiply 1.5 by itself")
    assert "Explanation:" not in render_question_block(make_question())


def test_ids_assigned_and_stable():
    a = parse_question_block(FIGURE_BLOCK, POWERS_REF)[0]
    b = parse_question_block(FIGURE_BLOCK, POWERS_REF)[0]
    assert a.id and a.id == b.id


_text = st.text(
    alphabet=string.ascii_letters + string.digits + " +-*/=.,?!'%$()",
    min_size=1, max_size=60,
).map(lambda s: " ".join(s.split())).filter(bool)


@st.composite
def questions(draw):
    return Question(
        chapter=POWERS_REF,
        stem=draw(_text),
        options=tuple(draw(st.lists(_text, min_size=4, max_size=4))),
        answer=draw(st.sampled_from(LABELS)),
        difficulty=draw(st.integers(min_value=1, max_value=5)),
        explanation=draw(st.none() | _text),
    )


@settings(max_examples=200)
@given(questions())
def test_parse_render_round_trip(q):
    parsed = parse_question_block(render_question_block(q), POWERS_REF)
    assert parsed == [q]


@settings(max_examples=200)
@given(st.binary(max_size=400))
def test_parser_total_over_random_bytes(data):
    text = data.decode("utf-8", errors="replace")
    try:
        qs = parse_question_block(text, POWERS_REF)
    except MalformedBlock:
        return
    for q in qs:
        assert q.answer in LABELS
        assert q.options[LABELS.index(q.answer)]  # label closure


def test_label_tolerance_and_answer_forms():
    block = (
        "Question: Pick one.\n"
        "A. first\n"
        "B. second\n"
        "C. third\n"
        "D. fourth\n"
        "Answer: B\n"
        "Difficulty rating: 4"
    )
    q = parse_question_block(block, POWERS_REF)[0]
    assert q.answer == "b"
    assert q.options == ("first", "second", "third", "fourth")
    assert q.difficulty == 4


def test_multiline_stem_joined():
    block = FIGURE_BLOCK.replace(
        "Question: What is the value of 1.5 raised to the power of 2?",
        "Question: What is the value of 1.5\nraised to the power of 2?",
    )
    q = parse_question_block(block, POWERS_REF)[0]
    assert q.stem == "What is the value of 1.5 raised to the power of 2?"


@pytest.mark.parametrize("mutate, reason_part", [
    (lambda b: b.replace("c) 2.5\n", ""), "wrong option count"),
    (lambda b: b.replace("Answer: a) 2.25", "Answer: e) nope"), "answer label"),
    (lambda b: b.replace("Difficulty rating: 1", "Difficulty rating: 6"), "outside 1-5"),
    (lambda b: b.replace("Difficulty rating: 1", "Difficulty rating: easy"), "non-integer"),
    (lambda b: b.replace("Difficulty rating: 1", "Difficulty rating: 1\nBonus: nope"), "unexpected trailing"),
    (lambda b: b + "\nd) again", "unexpected trailing"),
])
def test_malformed_blocks(mutate, reason_part):
    with pytest.raises(MalformedBlock) as err:
        parse_question_block(mutate(FIGURE_BLOCK), POWERS_REF)
    assert reason_part in err.value.reason


def test_malformed_index_points_at_bad_block():
    text = FIGURE_BLOCK + "\n\n" + "Question: broken\nnot an option"
    with pytest.raises(MalformedBlock) as err:
        parse_question_block(text, POWERS_REF)
    assert err.value.index == 1


def test_is_duplicate_normalization():
    a = make_question(stem="What is 2+2?")
    b = make_question(stem="what is 2+2")
    assert is_duplicate(a, b)
    assert not is_duplicate(make_question(stem="What is 2+2?"),
                            make_question(stem="What is 3+3?"))
    c = make_question(stem="Identify the equivalent expression for 4a - 2b.")
    d = make_question(stem="identify the equivalent expression for 4a - 2b")
    assert is_duplicate(c, d)


def test_normalize_stem_collapses_interior_whitespace():
    assert normalize_stem("  What   is\t2+2?  ") == "what is 2+2"


def test_question_invariants_enforced():
    with pytest.raises(ValidationError):
        make_question(options=("1", "2", "3"))  # type: ignore[arg-type]
    with pytest.raises(ValidationError):
        make_question(answer="e")
    with pytest.raises(ValidationError):
        make_question(difficulty=0)
    with pytest.raises(ValidationError):
        make_question(difficulty=6)
    with pytest.raises(ValidationError):
        make_question(stem="line\nbreak")
    with pytest.raises(ValidationError):
        make_question(stem=" padded ")


def test_question_dict_round_trip():
    q = make_question(explanation="Because.")
    assert Question.from_dict(q.to_dict()) == q
    withheld = q.to_dict(include_answer=False)
    assert "answer" not in withheld and "explanation" not in withheld
