"""Single-step prediction-evaluation: answer plus self-reported confidence.

The model is asked for an answer and a 0-5 confidence in one call; the reply
parser is forgiving about prose but strict about the confidence marker, and
the caller gets one reprompt before the step fails soft to confidence 0 so
the session loop stays alive.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .bank import MemoryBank, render_for_prompt
from .gateway import Conversation, LlmGateway
from .prompts import answer_prompt
from .questions import MCQItem

logger = logging.getLogger(__name__)

CONFIDENCE_MIN = 0
CONFIDENCE_MAX = 5


class AnswerParseError(ValueError):
    """No confidence marker found in the reply."""


@dataclass(frozen=True)
class AnswerCandidate:
    """A parsed answer: option label (absent when the model declined or the
    reply was unusable), the raw reply, and the 0-5 confidence."""

    option_label: str | None
    free_text: str
    confidence: int

    def __post_init__(self) -> None:
        if not CONFIDENCE_MIN <= self.confidence <= CONFIDENCE_MAX:
            raise ValueError(f"confidence {self.confidence} outside 0..5")


class AssessmentDecision(Enum):
    ACCEPT = "accept"
    RETRIEVE = "retrieve"


_CONF_SCORE = re.compile(r"\(\s*confidence\s+score\s*=\s*(-?\d+)\s*\)", re.IGNORECASE)
_ANSWER_LABEL = re.compile(
    r"the\s+answer\s+is\s*:?\s*(?:option\s+)?[('\"]?([A-Za-z])[)'\".,:;!]?(?![A-Za-z0-9])",
    re.IGNORECASE,
)

REPROMPT_ANSWER = (
    "Your reply did not follow the required format. Please answer again, strictly as "
    "'Yes, the answer is xx, (confidence score = xx)' with xx replaced, or as "
    "'No, I do not have enough information to answer the question. (confidence score = 0)'."
)


def parse_answer_reply(text: str, valid_labels: Iterable[str]) -> AnswerCandidate:
    """Extract the option label and confidence from an answer reply.

    The last '(confidence score = <int>)' occurrence wins: replies often
    restate the rubric before committing. Labels after 'the answer is' are
    matched case-insensitively against the question's labels, last valid one
    wins. Out-of-range confidence is clamped into 0..5 with a warning.
    Raises AnswerParseError when no confidence marker exists at all.
    """
    matches = list(_CONF_SCORE.finditer(text))
    if not matches:
        raise AnswerParseError("no '(confidence score = ...)' marker in reply")
    confidence = int(matches[-1].group(1))
    if not CONFIDENCE_MIN <= confidence <= CONFIDENCE_MAX:
        clamped = min(CONFIDENCE_MAX, max(CONFIDENCE_MIN, confidence))
        logger.warning("confidence %d clamped to %d", confidence, clamped)
        confidence = clamped
    labels = {label.upper() for label in valid_labels}
    option: str | None = None
    for m in _ANSWER_LABEL.finditer(text):
        candidate = m.group(1).upper()
        if candidate in labels:
            option = candidate
    return AnswerCandidate(option_label=option, free_text=text, confidence=confidence)


def decide(candidate: AnswerCandidate, cf_thr: int) -> AssessmentDecision:
    """Accept the answer iff its confidence meets the threshold."""
    if not CONFIDENCE_MIN <= cf_thr <= CONFIDENCE_MAX:
        raise ValueError(f"cf_thr {cf_thr} outside 0..5")
    if candidate.confidence >= cf_thr:
        return AssessmentDecision.ACCEPT
    return AssessmentDecision.RETRIEVE


def assess(
    bank: MemoryBank,
    question: MCQItem,
    gateway: LlmGateway,
    conv: Conversation,
    *,
    include_tool_confidence: bool = True,
) -> AnswerCandidate:
    """One answer-assessment step on the session conversation.

    Sends the answer prompt with a fresh render of the bank, parses the
    reply, reprompts once on a malformed reply, and fails soft to an
    insufficient (confidence 0, no label) candidate after that.
    """
    prompt = answer_prompt(
        render_for_prompt(bank, include_tool_confidence), question.render_block()
    )
    reply = gateway.complete(conv, prompt)
    try:
        return parse_answer_reply(reply, question.labels())
    except AnswerParseError:
        logger.warning("unparseable answer reply, reprompting once")
    reply = gateway.complete(conv, REPROMPT_ANSWER)
    try:
        return parse_answer_reply(reply, question.labels())
    except AnswerParseError:
        logger.warning("answer reply unparseable after reprompt, treating as insufficient")
        return AnswerCandidate(option_label=None, free_text=reply, confidence=0)
