"""Detector-initialized tracking fusion.

Two recipes over abstract detector/tracker backends:

* multi-round detection: pad the query frame's neighborhood, detect
  everywhere in the padded range, pick the most confident sighting per class,
  then track that sighting back to the query frame so objects the detector
  misses on the exact frame are still recovered;
* name-initialized tracking: scan a range for the first confident sighting
  of a named class, then track bidirectionally to fill the whole range.

Both are pure orchestration: all model behavior is injected, so the logic is
testable against table-driven synthetic backends.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import numpy as np

from .protocol import BBox, DetInfo, FrameRange, TrackPoint

logger = logging.getLogger(__name__)


class FusionError(ValueError):
    pass


class EmptyMaskError(FusionError):
    """A segmentation mask with no set cells cannot yield a box."""


@dataclass(frozen=True)
class FusionParams:
    """Knobs shared by both recipes.

    ``alpha`` is the number of frames the detection neighborhood is padded on
    each side; ``init_conf_thr`` is the detector confidence a sighting must
    exceed (strictly) to initialize tracking.
    """

    alpha: int = 5
    init_conf_thr: float = 0.5

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise FusionError(f"alpha must be >= 0, got {self.alpha}")
        if not 0.0 <= self.init_conf_thr <= 1.0:
            raise FusionError(f"init_conf_thr must be in [0, 1], got {self.init_conf_thr}")


@dataclass(frozen=True)
class RawDetection:
    """One detector hit before ids are assigned."""

    name: str
    bbox: BBox
    confidence: float


@dataclass(frozen=True)
class TrackObservation:
    """Tracker output for one frame: a box or a mask, or an explicit loss."""

    confidence: float = 0.0
    bbox: BBox | None = None
    mask: np.ndarray | None = None
    lost: bool = False


LOST = TrackObservation(lost=True)


class Detector(Protocol):
    def detect(self, frame_id: int) -> Sequence[RawDetection]: ...


class Tracker(Protocol):
    def track(
        self, init_frame: int, init_bbox: BBox, span: FrameRange
    ) -> Mapping[int, TrackObservation]:
        """Track the object boxed at ``init_frame`` across ``span``, both
        directions. Frames the tracker cannot follow are marked lost."""
        ...


def bbox_from_mask(mask: np.ndarray) -> BBox:
    """Tight inclusive box over the set cells of a binary grid.

    ``mask[y, x]`` indexing; a single set cell at (x=3, y=4) yields
    [3, 4, 3, 4].
    """
    arr = np.asarray(mask)
    ys, xs = np.nonzero(arr)
    if len(xs) == 0:
        raise EmptyMaskError("mask has no set cells")
    return BBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))


def observation_bbox(obs: TrackObservation) -> BBox:
    """Resolve a track observation to a box, via the mask when present."""
    if obs.mask is not None:
        return bbox_from_mask(obs.mask)
    if obs.bbox is None:
        raise EmptyMaskError("observation carries neither mask nor bbox")
    return obs.bbox


def detect_multiround(
    m: int,
    params: FusionParams,
    detector: Detector,
    tracker: Tracker,
    total_frames: int,
) -> list[DetInfo]:
    """Fused detections for frame ``m``.

    Detects on every frame in [m-alpha, m+alpha] clipped to the video, keeps
    per class the single most confident sighting strictly above the
    threshold (ties resolved to the earliest frame, then to detector output
    order), tracks that sighting to frame ``m``, and reports the tracked box
    with the tracker's confidence at ``m``. Classes whose track is lost at
    ``m`` are omitted. Result ids follow sorted class-name order.
    """
    if not 0 <= m < total_frames:
        raise FusionError(f"frame {m} outside [0, {total_frames - 1}]")
    lo = max(0, m - params.alpha)
    hi = min(total_frames - 1, m + params.alpha)
    best: dict[str, tuple[float, int, BBox]] = {}
    for f in range(lo, hi + 1):
        for det in detector.detect(f):
            if det.confidence <= params.init_conf_thr:
                continue
            seen = best.get(det.name)
            if seen is None or det.confidence > seen[0]:
                best[det.name] = (det.confidence, f, det.bbox)
    results: list[DetInfo] = []
    for name in sorted(best):
        _, init_frame, init_bbox = best[name]
        span = FrameRange(min(init_frame, m), max(init_frame, m))
        obs = tracker.track(init_frame, init_bbox, span).get(m)
        if obs is None or obs.lost:
            logger.info("lost track of %r between frame %d and %d", name, init_frame, m)
            continue
        try:
            box = observation_bbox(obs)
        except EmptyMaskError:
            logger.info("empty mask for %r at frame %d, treating as lost", name, m)
            continue
        results.append(
            DetInfo(id=len(results), name=name, bbox=box, confidence=obs.confidence)
        )
    return results


def track_by_name(
    name: str,
    span: FrameRange,
    detector: Detector,
    tracker: Tracker,
    params: FusionParams,
) -> list[TrackPoint]:
    """Trajectory of the named class across ``span``.

    Scans forward from the range start; the first frame whose best detection
    of the class strictly exceeds the threshold initializes the tracker,
    which then fills the full range bidirectionally. Lost frames are omitted
    from the trajectory. Class names match exactly. An empty list means the
    object was never sighted confidently enough.
    """
    init: tuple[int, BBox] | None = None
    for f in span.frames():
        best: RawDetection | None = None
        for det in detector.detect(f):
            if det.name != name or det.confidence <= params.init_conf_thr:
                continue
            if best is None or det.confidence > best.confidence:
                best = det
        if best is not None:
            init = (f, best.bbox)
            break
    if init is None:
        logger.info("%r never detected above %.2f in %s", name, params.init_conf_thr, span.to_text())
        return []
    observations = tracker.track(init[0], init[1], span)
    points: list[TrackPoint] = []
    for f in span.frames():
        obs = observations.get(f)
        if obs is None or obs.lost:
            logger.info("track of %r lost at frame %d", name, f)
            continue
        try:
            box = observation_bbox(obs)
        except EmptyMaskError:
            logger.info("empty mask for %r at frame %d", name, f)
            continue
        points.append(TrackPoint(frame_id=f, object_name=name, bbox=box, confidence=obs.confidence))
    return points


# --- table-driven synthetic backends --------------------------------------

class TableDetector:
    """Detector backed by a (frame_id -> detections) table.

    Text fixture format, whitespace-delimited, '#' comments::

        frame_id class xmin ymin xmax ymax confidence
    """

    def __init__(self, rows: Mapping[int, Sequence[RawDetection]]):
        self._rows = {f: tuple(dets) for f, dets in rows.items()}

    @classmethod
    def from_text(cls, text: str) -> "TableDetector":
        rows: dict[int, list[RawDetection]] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 7:
                raise FusionError(f"detector table line {lineno}: expected 7 fields, got {len(parts)}")
            frame = int(parts[0])
            bbox = BBox(int(parts[2]), int(parts[3]), int(parts[4]), int(parts[5]))
            rows.setdefault(frame, []).append(
                RawDetection(name=parts[1], bbox=bbox, confidence=float(parts[6]))
            )
        return cls(rows)

    def detect(self, frame_id: int) -> Sequence[RawDetection]:
        return self._rows.get(frame_id, ())


class TableTracker:
    """Tracker backed by a ((init_frame, frame_id) -> observation) table.

    Text fixture format, whitespace-delimited, '#' comments::

        init_frame frame_id xmin ymin xmax ymax confidence
        init_frame frame_id LOST

    Frames without a row for the requested init frame are reported lost.
    The init box is ignored: behavior is scripted purely by frame pair.
    """

    def __init__(self, rows: Mapping[tuple[int, int], TrackObservation]):
        self._rows = dict(rows)

    @classmethod
    def from_text(cls, text: str) -> "TableTracker":
        rows: dict[tuple[int, int], TrackObservation] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) == 3 and parts[2].upper() == "LOST":
                rows[(int(parts[0]), int(parts[1]))] = LOST
                continue
            if len(parts) != 7:
                raise FusionError(f"tracker table line {lineno}: expected 7 fields, got {len(parts)}")
            bbox = BBox(int(parts[2]), int(parts[3]), int(parts[4]), int(parts[5]))
            rows[(int(parts[0]), int(parts[1]))] = TrackObservation(
                confidence=float(parts[6]), bbox=bbox
            )
        return cls(rows)

    def track(
        self, init_frame: int, init_bbox: BBox, span: FrameRange
    ) -> Mapping[int, TrackObservation]:
        return {f: self._rows.get((init_frame, f), LOST) for f in span.frames()}
