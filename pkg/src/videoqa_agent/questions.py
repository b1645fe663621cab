"""Multiple-choice question items shared by the session loop and the harness."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class QuestionError(ValueError):
    pass


class QuestionType(str, Enum):
    CAUSAL = "Causal"
    TEMPORAL = "Temporal"
    DESCRIPTIVE = "Descriptive"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class MCQItem:
    """One benchmark question: 2-5 lettered options, optional hidden gold."""

    item_id: str
    video_id: str
    question: str
    options: tuple[tuple[str, str], ...]  # ((label, text), ...)
    gold_label: str | None = None
    question_type: QuestionType = QuestionType.UNKNOWN

    def __post_init__(self) -> None:
        if not 2 <= len(self.options) <= 5:
            raise QuestionError(
                f"{self.item_id}: need 2-5 options, got {len(self.options)}"
            )
        labels = [label for label, _ in self.options]
        if len(set(labels)) != len(labels):
            raise QuestionError(f"{self.item_id}: duplicate option labels {labels}")
        for label in labels:
            if len(label) != 1 or not label.isupper():
                raise QuestionError(
                    f"{self.item_id}: labels must be single uppercase letters, got {label!r}"
                )
        if self.gold_label is not None and self.gold_label not in labels:
            raise QuestionError(
                f"{self.item_id}: gold label {self.gold_label!r} not among {labels}"
            )

    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.options)

    def render_block(self) -> str:
        """Question plus lettered options, as substituted into prompts."""
        lines = [self.question]
        for label, text in self.options:
            lines.append(f"{label}. {text}")
        return "\n".join(lines)
