"""Deterministic table-driven backends for all five tools.

The suite fronts a table detector/tracker pair with the fusion recipes (so
sessions exercise the same detection/tracking logic a model-backed service
runs) and serves captions from per-frame annotated strings. Everything is a
pure lookup: same tables, same returns, across runs and across concurrent
sessions.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

from .fusion import (
    Detector,
    FusionParams,
    TableDetector,
    TableTracker,
    Tracker,
    detect_multiround,
    track_by_name,
)
from .protocol import (
    CaptionFrame,
    DetectFrame,
    DetInfo,
    RangeBoundsError,
    ToolCommand,
    ToolKind,
    ToolReturn,
    parse_caption_confidences,
)
from .registry import ToolRegistry

DEFAULT_FRAME_CAPTION = "no caption available"


@dataclass
class _FnBackend:
    fn: Callable[[ToolCommand], ToolReturn]

    def run(self, command: ToolCommand) -> ToolReturn:
        return self.fn(command)


class SimulatedToolSuite:
    """All five tools over a detector table, a tracker table, and caption maps.

    ``frame_captions`` and ``zoom_captions`` map frame_id to an annotated
    caption string ('... (confidence=0.xx)' markers); zoom captions fall back
    to the plain frame caption when no zoomed variant is scripted.
    """

    def __init__(
        self,
        *,
        detector: Detector,
        tracker: Tracker,
        frame_captions: Mapping[int, str] | None = None,
        zoom_captions: Mapping[int, str] | None = None,
        fusion: FusionParams | None = None,
        total_frames: int,
    ):
        self._detector = detector
        self._tracker = tracker
        self._frame_captions = dict(frame_captions or {})
        self._zoom_captions = dict(zoom_captions or {})
        self._fusion = fusion or FusionParams()
        self._total_frames = total_frames

    def build_registry(self) -> ToolRegistry:
        registry = ToolRegistry()
        registry.register(ToolKind.CAPTION, _FnBackend(self._run_caption))
        registry.register(ToolKind.DETECT, _FnBackend(self._run_detect))
        registry.register(ToolKind.ZOOM_CAPTION, _FnBackend(self._run_zoom_caption))
        registry.register(ToolKind.ZOOM_DETECT, _FnBackend(self._run_zoom_detect))
        registry.register(ToolKind.TRACK, _FnBackend(self._run_track))
        return registry

    def _check_range(self, command: ToolCommand) -> None:
        if command.frame_range.end >= self._total_frames:
            raise RangeBoundsError(
                f"frame_range {command.frame_range.to_text()} exceeds "
                f"last frame {self._total_frames - 1}"
            )

    def _caption_for(self, frame_id: int, zoomed: bool) -> str:
        if zoomed and frame_id in self._zoom_captions:
            return self._zoom_captions[frame_id]
        return self._frame_captions.get(frame_id, DEFAULT_FRAME_CAPTION)

    def _run_caption(self, command: ToolCommand) -> ToolReturn:
        self._check_range(command)
        frames = tuple(
            CaptionFrame(f, parse_caption_confidences(self._caption_for(f, zoomed=False)))
            for f in command.frame_range.frames()
        )
        return ToolReturn(kind=ToolKind.CAPTION, caption_frames=frames)

    def _run_zoom_caption(self, command: ToolCommand) -> ToolReturn:
        self._check_range(command)
        f = command.frame_range.start
        frames = (CaptionFrame(f, parse_caption_confidences(self._caption_for(f, zoomed=True))),)
        return ToolReturn(
            kind=ToolKind.ZOOM_CAPTION, caption_frames=frames, zoom_bbox=command.bbox
        )

    def _run_detect(self, command: ToolCommand) -> ToolReturn:
        self._check_range(command)
        frames = tuple(
            DetectFrame(
                f,
                tuple(
                    detect_multiround(
                        f, self._fusion, self._detector, self._tracker, self._total_frames
                    )
                ),
            )
            for f in command.frame_range.frames()
        )
        return ToolReturn(kind=ToolKind.DETECT, detect_frames=frames)

    def _run_zoom_detect(self, command: ToolCommand) -> ToolReturn:
        self._check_range(command)
        f = command.frame_range.start
        assert command.bbox is not None  # guaranteed by ToolCommand validation
        hits = [
            det
            for det in self._detector.detect(f)
            if det.bbox.intersects(command.bbox)
        ]
        dets = tuple(
            DetInfo(id=i, name=d.name, bbox=d.bbox, confidence=d.confidence)
            for i, d in enumerate(hits)
        )
        return ToolReturn(
            kind=ToolKind.ZOOM_DETECT,
            detect_frames=(DetectFrame(f, dets),),
            zoom_bbox=command.bbox,
        )

    def _run_track(self, command: ToolCommand) -> ToolReturn:
        self._check_range(command)
        assert command.object_name is not None
        points = track_by_name(
            command.object_name,
            command.frame_range,
            self._detector,
            self._tracker,
            self._fusion,
        )
        return ToolReturn(kind=ToolKind.TRACK, track_points=tuple(points))


class FaultingBackend:
    """Backend that always raises; exercises the degraded-record path."""

    def __init__(self, message: str = "injected backend fault"):
        self.message = message

    def run(self, command: ToolCommand) -> ToolReturn:
        raise RuntimeError(self.message)


class CountingBackend:
    """Wrapper counting invocations, for exactly-one-call assertions."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def run(self, command: ToolCommand) -> ToolReturn:
        self.calls += 1
        return self.inner.run(command)


def load_suite(
    directory: str | Path,
    *,
    total_frames: int,
    fusion: FusionParams | None = None,
) -> SimulatedToolSuite:
    """Load a simulated tool bundle from a directory.

    Expected files (all optional except detector/tracker may be empty):
    ``detector.txt`` and ``tracker.txt`` in the table formats documented on
    TableDetector/TableTracker, plus ``captions.txt`` and ``zoom_captions.txt``
    with 'frame_id<TAB>annotated caption' lines.
    """
    directory = Path(directory)

    def read(name: str) -> str:
        path = directory / name
        return path.read_text() if path.exists() else ""

    def caption_map(name: str) -> dict[int, str]:
        table: dict[int, str] = {}
        for line in read(name).splitlines():
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            frame, _, text = line.partition("\t")
            table[int(frame)] = text
        return table

    return SimulatedToolSuite(
        detector=TableDetector.from_text(read("detector.txt")),
        tracker=TableTracker.from_text(read("tracker.txt")),
        frame_captions=caption_map("captions.txt"),
        zoom_captions=caption_map("zoom_captions.txt"),
        fusion=fusion,
        total_frames=total_frames,
    )
