"""The per-session information memory bank and its prompt rendering.

The bank accumulates everything one session knows about one video: segment
captions and the whole-video summary (fixed after the context phase) plus
tool records appended as retrieval proceeds. Merging is append-only and
never dedupes: a re-queried frame carries fresh confidence evidence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .protocol import (
    ToolCommand,
    ToolReturn,
    parse_wire_request,
    parse_wire_response,
    serialize_command,
    serialize_return,
    tool_kind_from_name,
    wire_request,
    wire_response,
)


class BankError(ValueError):
    pass


class MergeOrderError(BankError):
    """A record arrived with a step index behind the bank's newest record."""


@dataclass(frozen=True)
class SegmentCaption:
    """Caption for one video segment, with its time bounds in seconds."""

    segment_id: int
    start_s: float
    end_s: float
    text: str

    def __post_init__(self) -> None:
        if self.segment_id < 0:
            raise BankError(f"segment_id must be >= 0, got {self.segment_id}")
        if not self.start_s < self.end_s:
            raise BankError(
                f"segment {self.segment_id}: start_s {self.start_s} must be < end_s {self.end_s}"
            )


@dataclass(frozen=True)
class VideoSummary:
    text: str
    source_caption_count: int


@dataclass(frozen=True)
class ToolRecord:
    """One tool invocation and its return, stamped with the assessment step
    at which it was retrieved."""

    step_t: int
    command: ToolCommand
    returns: ToolReturn
    wall_time_ms: float = 0.0
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.step_t < 1:
            raise BankError(f"step_t must be >= 1, got {self.step_t}")


@dataclass(frozen=True)
class MemoryBank:
    captions: tuple[SegmentCaption, ...]
    summary: VideoSummary
    tool_records: tuple[ToolRecord, ...] = ()

    def __post_init__(self) -> None:
        for i, cap in enumerate(self.captions):
            if cap.segment_id != i:
                raise BankError(
                    f"caption ids must be contiguous from 0, found {cap.segment_id} at position {i}"
                )
        if self.summary.source_caption_count != len(self.captions):
            raise BankError(
                f"summary claims {self.summary.source_caption_count} captions, bank holds {len(self.captions)}"
            )
        last = 0
        for rec in self.tool_records:
            if rec.step_t < last:
                raise BankError("tool_records must be ordered by non-decreasing step_t")
            last = rec.step_t


def merge(bank: MemoryBank, new_info: ToolRecord) -> MemoryBank:
    """Append a tool record; captions and summary are untouched.

    Records must arrive in non-decreasing step order; anything else is an
    ordering violation, not a reorder request.
    """
    if bank.tool_records and new_info.step_t < bank.tool_records[-1].step_t:
        raise MergeOrderError(
            f"record for step {new_info.step_t} arrived after step "
            f"{bank.tool_records[-1].step_t}"
        )
    return replace(bank, tool_records=bank.tool_records + (new_info,))


def format_seconds(value: float) -> str:
    return f"{value:g}"


def format_captions(captions: Iterable[SegmentCaption]) -> str:
    """Numbered caption list with time bounds, so the model can map captions
    to frame ranges when planning retrieval."""
    return "\n".join(
        f"segment {c.segment_id} ({format_seconds(c.start_s)}-{format_seconds(c.end_s)} s): {c.text}"
        for c in captions
    )


def render_for_prompt(bank: MemoryBank, include_tool_confidence: bool = True) -> str:
    """Deterministic text form of the bank for prompt substitution.

    Three labeled blocks, matching the vocabulary the answer prompt explains:
    'Caption', 'Summary', 'Tools return value'. Tool returns keep their
    confidence annotations unless ``include_tool_confidence`` is off.
    """
    lines = ["Caption:", format_captions(bank.captions), "Summary:", bank.summary.text]
    lines.append("Tools return value:")
    if not bank.tool_records:
        lines.append("(none)")
    else:
        for rec in bank.tool_records:
            lines.append(f"[t={rec.step_t}] command: {serialize_command(rec.command)}")
            lines.append(
                f"[t={rec.step_t}] returns: "
                f"{serialize_return(rec.returns, include_tool_confidence)}"
            )
    return "\n".join(lines)


# --- snapshot persistence ---------------------------------------------------

def snapshot_lines(bank: MemoryBank) -> list[str]:
    """One JSON record per line, tagged caption|summary|tool."""
    lines = []
    for cap in bank.captions:
        lines.append(
            json.dumps(
                {
                    "tag": "caption",
                    "segment_id": cap.segment_id,
                    "start_s": cap.start_s,
                    "end_s": cap.end_s,
                    "text": cap.text,
                }
            )
        )
    lines.append(
        json.dumps(
            {
                "tag": "summary",
                "text": bank.summary.text,
                "source_caption_count": bank.summary.source_caption_count,
            }
        )
    )
    for rec in bank.tool_records:
        lines.append(
            json.dumps(
                {
                    "tag": "tool",
                    "step_t": rec.step_t,
                    "command": json.loads(wire_request(rec.command)),
                    "returns": json.loads(wire_response(rec.returns)),
                }
            )
        )
    return lines


def write_snapshot(bank: MemoryBank, path: str | Path) -> None:
    Path(path).write_text("\n".join(snapshot_lines(bank)) + "\n")


def read_snapshot(path: str | Path) -> MemoryBank:
    """Rebuild a bank from a snapshot file."""
    captions: list[SegmentCaption] = []
    summary: VideoSummary | None = None
    records: list[ToolRecord] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        rec = json.loads(line)
        tag = rec.get("tag")
        if tag == "caption":
            captions.append(
                SegmentCaption(
                    segment_id=rec["segment_id"],
                    start_s=rec["start_s"],
                    end_s=rec["end_s"],
                    text=rec["text"],
                )
            )
        elif tag == "summary":
            summary = VideoSummary(rec["text"], rec["source_caption_count"])
        elif tag == "tool":
            command = parse_wire_request(json.dumps(rec["command"]))
            returns = parse_wire_response(
                json.dumps(rec["returns"]), tool_kind_from_name(rec["command"]["tool_name"])
            )
            records.append(ToolRecord(step_t=rec["step_t"], command=command, returns=returns))
        else:
            raise BankError(f"{path}:{lineno}: unknown snapshot tag {tag!r}")
    if summary is None:
        raise BankError(f"{path}: snapshot has no summary record")
    return MemoryBank(tuple(captions), summary, tuple(records))
