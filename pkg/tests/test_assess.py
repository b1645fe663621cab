"""Answer parsing, threshold decisions, and the assessment step."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from videoqa_agent.assess import (
    AnswerCandidate,
    AnswerParseError,
    AssessmentDecision,
    assess,
    decide,
    parse_answer_reply,
)
from videoqa_agent.gateway import Conversation

from helpers import make_item, scripted_gateway
from test_bank import make_bank

LABELS = ("A", "B", "C")


class TestParseAnswerReply:
    def test_yes_form(self):
        candidate = parse_answer_reply("Yes, the answer is B, (confidence score = 5)", LABELS)
        assert (candidate.option_label, candidate.confidence) == ("B", 5)

    def test_insufficient_form(self):
        candidate = parse_answer_reply(
            "No, I do not have enough information to answer the question. "
            "(confidence score = 0)",
            LABELS,
        )
        assert candidate.option_label is None
        assert candidate.confidence == 0

    def test_double_spaced_paper_format(self):
        candidate = parse_answer_reply("Yes, the  answer is C, (confidence  score = 4)", LABELS)
        assert (candidate.option_label, candidate.confidence) == ("C", 4)

    def test_last_confidence_occurrence_wins(self):
        text = (
            "Yes, the answer is c. The rubric says (confidence score = 3) but after "
            "reviewing the evidence I am certain. (confidence score = 5)"
        )
        candidate = parse_answer_reply(text, LABELS)
        assert (candidate.option_label, candidate.confidence) == ("C", 5)

    def test_out_of_range_clamped(self):
        assert parse_answer_reply("(confidence score = 9)", LABELS).confidence == 5
        assert parse_answer_reply("(confidence score = -2)", LABELS).confidence == 0

    def test_case_insensitive_label(self):
        candidate = parse_answer_reply("yes, THE ANSWER IS b (confidence score = 2)", LABELS)
        assert candidate.option_label == "B"

    def test_invalid_label_letter_ignored(self):
        candidate = parse_answer_reply("the answer is Z, (confidence score = 3)", LABELS)
        assert candidate.option_label is None

    def test_word_after_answer_is_not_a_label(self):
        candidate = parse_answer_reply("the answer is blue (confidence score = 3)", LABELS)
        assert candidate.option_label is None

    def test_no_marker_is_a_parse_failure(self):
        with pytest.raises(AnswerParseError):
            parse_answer_reply("gibberish", LABELS)

    @given(st.sampled_from("ABCDE"), st.integers(0, 5))
    def test_round_trip_canonical_reply(self, label, confidence):
        text = f"Yes, the  answer is {label}, (confidence  score = {confidence})"
        candidate = parse_answer_reply(text, tuple("ABCDE"))
        assert (candidate.option_label, candidate.confidence) == (label, confidence)


class TestDecide:
    def test_threshold_met(self):
        candidate = AnswerCandidate("B", "x", 5)
        assert decide(candidate, 5) is AssessmentDecision.ACCEPT

    def test_strictly_below_threshold(self):
        candidate = AnswerCandidate("B", "x", 4)
        assert decide(candidate, 5) is AssessmentDecision.RETRIEVE

    def test_degenerate_zero_threshold(self):
        candidate = AnswerCandidate(None, "x", 0)
        assert decide(candidate, 0) is AssessmentDecision.ACCEPT

    def test_invalid_threshold_rejected(self):
        with pytest.raises(ValueError):
            decide(AnswerCandidate(None, "x", 0), 6)

    @given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5))
    def test_monotone_in_confidence(self, low, high, threshold):
        low, high = min(low, high), max(low, high)
        if decide(AnswerCandidate(None, "x", low), threshold) is AssessmentDecision.ACCEPT:
            assert decide(AnswerCandidate(None, "x", high), threshold) is AssessmentDecision.ACCEPT


class TestAssess:
    def test_single_call_happy_path(self):
        gateway = scripted_gateway(["Yes, the answer is B, (confidence score = 5)"])
        conv = Conversation("s1")
        candidate = assess(make_bank(), make_item(), gateway, conv)
        assert (candidate.option_label, candidate.confidence) == ("B", 5)
        assert len(conv.turns) == 2

    def test_prompt_carries_bank_and_question(self):
        gateway = scripted_gateway(["Yes, the answer is A, (confidence score = 5)"])
        conv = Conversation("s1")
        assess(make_bank(), make_item(), gateway, conv)
        prompt = conv.turns[0].text
        assert "a man enters the room" in prompt  # bank render
        assert "What did the man place on the bed?" in prompt
        assert "B. a phone" in prompt  # lettered options
        assert "memory bank" in prompt

    def test_reprompt_then_success(self):
        gateway = scripted_gateway(
            ["gibberish", "Yes, the answer is C, (confidence score = 4)"]
        )
        conv = Conversation("s1")
        candidate = assess(make_bank(), make_item(), gateway, conv)
        assert (candidate.option_label, candidate.confidence) == ("C", 4)
        assert len(conv.turns) == 4

    def test_double_failure_degrades_to_insufficient(self):
        gateway = scripted_gateway(["gibberish", "gibberish"])
        conv = Conversation("s1")
        candidate = assess(make_bank(), make_item(), gateway, conv)
        assert candidate.option_label is None
        assert candidate.confidence == 0
