"""Downsample-rate and segment-boundary arithmetic over an abstract frame source.

All tool commands use 0-based indices in the downsampled stream; these
helpers are the single source of truth for that coordinate system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np


class SegmentError(ValueError):
    pass


class FrameSource(Protocol):
    """Abstract handle resolving a downsampled frame id to an image."""

    def get_frame(self, frame_id: int) -> np.ndarray: ...


@dataclass(frozen=True)
class VideoManifest:
    """Identity and geometry of one video. ``source`` is an opaque locator
    (e.g. a frame directory); the engine itself never decodes video."""

    video_id: str
    length_s: float
    native_fps: float
    source: str = ""

    def __post_init__(self) -> None:
        if self.length_s <= 0:
            raise SegmentError(f"length_s must be > 0, got {self.length_s}")
        if self.native_fps <= 0:
            raise SegmentError(f"native_fps must be > 0, got {self.native_fps}")


@dataclass(frozen=True)
class Segment:
    segment_id: int
    start_frame: int
    end_frame: int


@dataclass(frozen=True)
class SegmentPlan:
    fps_d: float
    segment_seconds: float
    total_frames: int
    segments: tuple[Segment, ...]


# absorbs float rounding when a product lands a hair under an integer
_SNAP = 1e-9


def plan_segments(length_s: float, fps_d: float, segment_seconds: float) -> SegmentPlan:
    """Split a video of ``length_s`` seconds into consecutive segments.

    The stream is downsampled to ``fps_d`` frames/second, giving
    floor(length_s * fps_d) frames, and cut into ceil(length_s /
    segment_seconds) segments; the last one may be shorter. Segments are
    disjoint, cover every downsampled frame, and each spans at least one
    frame (a fractional tail that holds no whole frame is folded away, so
    the segment count can drop below the ceiling in that corner case).
    """
    if length_s <= 0 or fps_d <= 0 or segment_seconds <= 0:
        raise SegmentError(
            f"length_s, fps_d and segment_seconds must be > 0, got "
            f"({length_s}, {fps_d}, {segment_seconds})"
        )
    total = math.floor(length_s * fps_d + _SNAP)
    if total < 1:
        raise SegmentError(
            f"video of {length_s}s at {fps_d} fps holds no whole frame"
        )
    k = math.ceil(length_s / segment_seconds - _SNAP)
    frames_per = segment_seconds * fps_d
    segments: list[Segment] = []
    for i in range(k):
        start = math.floor(i * frames_per + _SNAP)
        end = min(math.floor((i + 1) * frames_per + _SNAP), total) - 1
        if start > end:
            continue
        segments.append(Segment(len(segments), start, end))
    return SegmentPlan(
        fps_d=fps_d,
        segment_seconds=segment_seconds,
        total_frames=total,
        segments=tuple(segments),
    )


def frame_to_time(frame_id: int, fps_d: float) -> float:
    """Seconds at which a downsampled frame starts."""
    if frame_id < 0:
        raise SegmentError(f"frame_id must be >= 0, got {frame_id}")
    if fps_d <= 0:
        raise SegmentError(f"fps_d must be > 0, got {fps_d}")
    return frame_id / fps_d


def time_to_frame(t: float, fps_d: float) -> int:
    """Floor-inverse of :func:`frame_to_time`.

    A fuzz tolerance snaps values a hair below a frame boundary up, so the
    round trip through frame_to_time is exact despite float division.
    """
    if t < 0:
        raise SegmentError(f"t must be >= 0, got {t}")
    if fps_d <= 0:
        raise SegmentError(f"fps_d must be > 0, got {fps_d}")
    return math.floor(t * fps_d + 1e-6)


def segment_bounds_s(segment: Segment, fps_d: float) -> tuple[float, float]:
    """(start, end) of a segment in seconds; end is exclusive of the next
    segment's first frame."""
    return segment.start_frame / fps_d, (segment.end_frame + 1) / fps_d


# --- manifest files --------------------------------------------------------

_MANIFEST_KEYS = ("video_id", "length_s", "native_fps", "source")


def read_manifest(path: str | Path) -> VideoManifest:
    """Load a 'key: value' manifest file.

    Recognized keys: video_id, length_s, native_fps, source (optional frame
    directory or source locator). Blank lines and '#' comments are skipped.
    """
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if ":" not in body:
            raise SegmentError(f"{path}:{lineno}: expected 'key: value', got {line!r}")
        key, _, value = body.partition(":")
        key = key.strip()
        if key not in _MANIFEST_KEYS:
            raise SegmentError(f"{path}:{lineno}: unknown manifest key {key!r}")
        values[key] = value.strip()
    missing = [k for k in ("video_id", "length_s", "native_fps") if k not in values]
    if missing:
        raise SegmentError(f"{path}: missing manifest keys: {', '.join(missing)}")
    try:
        return VideoManifest(
            video_id=values["video_id"],
            length_s=float(values["length_s"]),
            native_fps=float(values["native_fps"]),
            source=values.get("source", ""),
        )
    except ValueError as e:
        raise SegmentError(f"{path}: {e}") from e


def write_manifest(manifest: VideoManifest, path: str | Path) -> None:
    lines = [
        f"video_id: {manifest.video_id}",
        f"length_s: {manifest.length_s:g}",
        f"native_fps: {manifest.native_fps:g}",
    ]
    if manifest.source:
        lines.append(f"source: {manifest.source}")
    Path(path).write_text("\n".join(lines) + "\n")
