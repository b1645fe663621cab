"""Per-question execution records: persistence and replay support.

A trace is the complete ordered event log of one session plus scoring
metadata. Traces serialize to line-delimited JSON, feed the analytics, and
can rebuild a scripted backend that replays the session's LLM replies
verbatim.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

from .gateway import ScriptedBackend
from .questions import QuestionType
from .session import SessionResult, Termination


class TraceError(ValueError):
    pass


@dataclass
class RunTrace:
    item_id: str
    video_id: str
    question_type: str = QuestionType.UNKNOWN.value
    final_label: str | None = None
    final_confidence: int = 0
    gold_label: str | None = None
    correct: bool | None = None  # None when the gold label is hidden
    assessments: int = 0
    tool_calls: int = 0
    per_tool_calls: dict[str, int] = field(default_factory=dict)
    terminated_by: str = Termination.BUDGET_EXHAUSTED.value
    error: str | None = None
    wall_time_ms: float = 0.0
    events: list[dict] = field(default_factory=list)


def trace_from_result(
    item_id: str,
    video_id: str,
    question_type: QuestionType,
    result: SessionResult,
    gold_label: str | None,
    wall_time_ms: float = 0.0,
) -> RunTrace:
    per_tool: dict[str, int] = {}
    for record in result.tool_records:
        key = record.command.kind.short_name
        per_tool[key] = per_tool.get(key, 0) + 1
    label = result.final_answer.option_label
    correct = None if gold_label is None else (label == gold_label)
    return RunTrace(
        item_id=item_id,
        video_id=video_id,
        question_type=question_type.value,
        final_label=label,
        final_confidence=result.final_answer.confidence,
        gold_label=gold_label,
        correct=correct,
        assessments=len(result.assessments),
        tool_calls=result.tool_calls,
        per_tool_calls=per_tool,
        terminated_by=result.terminated_by.value,
        wall_time_ms=wall_time_ms,
        events=result.events,
    )


def error_trace(item_id: str, video_id: str, question_type: QuestionType, gold_label: str | None, error: str) -> RunTrace:
    """Placeholder trace for a session that failed outright; scored incorrect
    when a gold label exists."""
    return RunTrace(
        item_id=item_id,
        video_id=video_id,
        question_type=question_type.value,
        gold_label=gold_label,
        correct=False if gold_label is not None else None,
        error=error,
    )


def event_log_text(events: Iterable[dict]) -> str:
    """Canonical line-delimited rendering of an event sequence."""
    return "\n".join(json.dumps(event, sort_keys=True) for event in events)


def write_traces(traces: Iterable[RunTrace], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for trace in traces:
            fh.write(json.dumps(asdict(trace), sort_keys=True))
            fh.write("\n")


def read_traces(path: str | Path) -> list[RunTrace]:
    traces = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            traces.append(RunTrace(**data))
        except (json.JSONDecodeError, TypeError) as e:
            raise TraceError(f"{path}:{lineno}: bad trace record: {e}") from e
    return traces


def replies_from_trace(trace: RunTrace) -> list[str]:
    """All LLM replies in call order, suitable for an ordered scripted backend."""
    return [event["reply"] for event in trace.events if event.get("kind") == "llm_call"]


def scripted_backend_from_trace(trace: RunTrace) -> ScriptedBackend:
    """Backend that replays the trace's recorded replies in order. Re-running
    the session against the same fixtures must reproduce the final answer."""
    return ScriptedBackend(replies=replies_from_trace(trace))
