"""Context phase: caption every segment, then summarize the whole video.

The clip captioner is abstract; a scripted table backs tests and a wire-
protocol client can front a remote captioning service. One bad clip must not
kill a long-video session, so captioner failures degrade to an explicit
placeholder the model can see.
"""

from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol

from .bank import SegmentCaption, VideoSummary, format_captions
from .gateway import Conversation, LlmGateway
from .prompts import summary_prompt
from .protocol import FrameRange, ToolCommand, ToolKind, parse_wire_response, wire_request
from .segments import SegmentPlan, segment_bounds_s

logger = logging.getLogger(__name__)

CAPTION_PLACEHOLDER = "[caption unavailable]"


class ContextError(Exception):
    """The session cannot proceed without a general context."""


class ClipCaptioner(Protocol):
    """Captions one segment of downsampled frames.

    ``egocentric_markers`` declares whether captions use the '#C'/'#O'
    camera-wearer convention; the summary prompt explains the markers only
    when they are actually present.
    """

    egocentric_markers: bool

    def caption(self, segment_id: int, start_frame: int, end_frame: int) -> str: ...


@dataclass
class ScriptedCaptioner:
    """Table-driven captioner; segments listed in ``fail_on`` raise."""

    texts: Mapping[int, str]
    egocentric_markers: bool = False
    fail_on: frozenset[int] = field(default_factory=frozenset)

    def caption(self, segment_id: int, start_frame: int, end_frame: int) -> str:
        if segment_id in self.fail_on:
            raise RuntimeError(f"scripted captioner failure on segment {segment_id}")
        try:
            return self.texts[segment_id]
        except KeyError:
            raise RuntimeError(f"no scripted caption for segment {segment_id}") from None

    @classmethod
    def from_file(cls, path: str | Path, egocentric_markers: bool = False) -> "ScriptedCaptioner":
        """Load 'segment_id<TAB>caption' lines."""
        texts: dict[int, str] = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            seg, sep, text = line.partition("\t")
            if not sep:
                raise ContextError(f"{path}:{lineno}: expected 'segment_id<TAB>caption'")
            texts[int(seg)] = text
        return cls(texts, egocentric_markers=egocentric_markers)


@dataclass
class WireCaptioner:
    """Captioner that fronts a remote Image Caption Tool endpoint.

    ``invoke`` posts one wire request body and returns the response body.
    Per-frame captions come back annotated; they are joined into one segment
    caption line per frame.
    """

    invoke: Callable[[str], str]
    egocentric_markers: bool = False

    def caption(self, segment_id: int, start_frame: int, end_frame: int) -> str:
        command = ToolCommand(ToolKind.CAPTION, FrameRange(start_frame, end_frame))
        body = self.invoke(wire_request(command))
        ret = parse_wire_response(body, ToolKind.CAPTION)
        if ret.error:
            raise RuntimeError(f"remote captioner error: {ret.error}")
        parts = []
        for cf in ret.caption_frames:
            text = " ".join(clause.text for clause in cf.clauses)
            parts.append(f"frame {cf.frame_id}: {text}")
        return " | ".join(parts)


def caption_all(plan: SegmentPlan, captioner: ClipCaptioner) -> list[SegmentCaption]:
    """One caption per segment, in segment order.

    A captioner failure on a segment yields the placeholder caption and a
    warning; the session continues with the gap visible to the model.
    """
    if not plan.segments:
        raise ContextError("segment plan is empty")
    captions: list[SegmentCaption] = []
    for seg in plan.segments:
        try:
            text = captioner.caption(seg.segment_id, seg.start_frame, seg.end_frame)
        except Exception as e:
            logger.warning("captioner failed on segment %d: %s", seg.segment_id, e)
            text = CAPTION_PLACEHOLDER
        start_s, end_s = segment_bounds_s(seg, plan.fps_d)
        captions.append(SegmentCaption(seg.segment_id, start_s, end_s, text))
    return captions


def summarize(
    captions: list[SegmentCaption],
    gateway: LlmGateway,
    *,
    segment_seconds: float,
    egocentric_markers: bool,
    session_id: str | None = None,
) -> tuple[VideoSummary, Conversation]:
    """One whole-video summary from all segment captions.

    Issues exactly one LLM call in its own one-shot conversation, so the long
    caption list never bloats the QA thread. Failure here is fatal: the loop
    cannot run without a summary.
    """
    if not captions:
        raise ContextError("cannot summarize an empty caption list")
    conv = Conversation(session_id or f"summary-{uuid.uuid4().hex[:8]}")
    prompt = summary_prompt(
        format_captions(captions),
        segment_seconds=segment_seconds,
        egocentric_markers=egocentric_markers,
    )
    try:
        text = gateway.complete(conv, prompt)
    except Exception as e:
        raise ContextError(f"summarization failed: {e}") from e
    return VideoSummary(text=text, source_caption_count=len(captions)), conv
