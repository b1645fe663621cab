"""Tool command/return schemas, confidence parsing, and the wire codec.

Five tools share one command shape and three return payload shapes (annotated
captions, detections, track points). Every command and return has two textual
renderings: the single-quoted record style shown to the language model, and a
JSON wire form used to talk to remote tool backends. Both renderings use the
same field names.
"""

from __future__ import annotations

import ast
import json
import logging
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Sequence

import jsonschema

logger = logging.getLogger(__name__)


class ProtocolError(ValueError):
    """Base class for command/return format violations."""


class MalformedRangeError(ProtocolError):
    """Frame range string does not match 'frame_id' or 'start-end'."""


class RangeOrderError(ProtocolError):
    """Frame range start exceeds its end."""


class RangeBoundsError(ProtocolError):
    """Frame range leaves [0, total_frames)."""


class BBoxFormatError(ProtocolError):
    """Bounding box string or coordinates are invalid."""


class UnknownToolError(ProtocolError):
    """tool_name is not one of the five known tools."""


class MissingParameterError(ProtocolError):
    """A required command parameter is absent."""


class InvalidParameterError(ProtocolError):
    """A command parameter is present but unusable (e.g. a multi-frame
    range on a zoom tool, which accepts a single frame only)."""


class ToolKind(str, Enum):
    """The five tools, keyed by their exact wire names."""

    CAPTION = "Image Caption Tool"
    DETECT = "Object Detection Tool"
    ZOOM_CAPTION = "Image Zoom in and Caption Tool"
    ZOOM_DETECT = "Image Zoom in and Object Detection Tool"
    TRACK = "Object Tracking Tool"

    @property
    def short_name(self) -> str:
        return _SHORT_NAMES[self]


_SHORT_NAMES = {
    ToolKind.CAPTION: "caption",
    ToolKind.DETECT: "detect",
    ToolKind.ZOOM_CAPTION: "zoom_caption",
    ToolKind.ZOOM_DETECT: "zoom_detect",
    ToolKind.TRACK: "track",
}

ZOOM_KINDS = frozenset({ToolKind.ZOOM_CAPTION, ToolKind.ZOOM_DETECT})
CAPTION_KINDS = frozenset({ToolKind.CAPTION, ToolKind.ZOOM_CAPTION})
DETECT_KINDS = frozenset({ToolKind.DETECT, ToolKind.ZOOM_DETECT})

TOOL_NAMES = tuple(kind.value for kind in ToolKind)


def tool_kind_from_name(name: str) -> ToolKind:
    for kind in ToolKind:
        if kind.value == name:
            return kind
    raise UnknownToolError(f"unknown tool_name: {name!r}")


@dataclass(frozen=True, order=True)
class FrameRange:
    """Inclusive range of 0-based downsampled frame indices."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0:
            raise MalformedRangeError(f"negative start frame: {self.start}")
        if self.end < self.start:
            raise RangeOrderError(f"start {self.start} > end {self.end}")

    @classmethod
    def single(cls, frame_id: int) -> "FrameRange":
        return cls(frame_id, frame_id)

    @property
    def is_single(self) -> bool:
        return self.start == self.end

    def frames(self) -> range:
        return range(self.start, self.end + 1)

    def __len__(self) -> int:
        return self.end - self.start + 1

    def __contains__(self, frame_id: object) -> bool:
        return isinstance(frame_id, int) and self.start <= frame_id <= self.end

    def to_text(self) -> str:
        if self.is_single:
            return str(self.start)
        return f"{self.start}-{self.end}"


_RANGE_PAIR = re.compile(r"^(\d+)\s*-\s*(\d+)$")
_RANGE_SINGLE = re.compile(r"^(\d+)$")


def parse_frame_range(s: str, total_frames: int | None = None) -> FrameRange:
    """Parse 'frame_id' or 'start frame-end frame' notation.

    Whitespace around the string and the dash is tolerated. When
    ``total_frames`` is given the range is bounds-checked against it.
    """
    if not isinstance(s, str):
        raise MalformedRangeError(f"frame_range must be a string, got {type(s).__name__}")
    text = s.strip()
    m = _RANGE_SINGLE.match(text)
    if m:
        rng = FrameRange.single(int(m.group(1)))
    else:
        m = _RANGE_PAIR.match(text)
        if not m:
            raise MalformedRangeError(f"malformed frame_range: {s!r}")
        start, end = int(m.group(1)), int(m.group(2))
        if start > end:
            raise RangeOrderError(f"frame_range start {start} > end {end}")
        rng = FrameRange(start, end)
    if total_frames is not None and rng.end >= total_frames:
        raise RangeBoundsError(
            f"frame_range {rng.to_text()} exceeds last frame {total_frames - 1}"
        )
    return rng


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box. Inclusive when derived from masks, so a
    single-pixel box has xmin == xmax."""

    xmin: int
    ymin: int
    xmax: int
    ymax: int

    def __post_init__(self) -> None:
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise BBoxFormatError(
                f"inverted bbox [{self.xmin}, {self.ymin}, {self.xmax}, {self.ymax}]"
            )

    def to_text(self) -> str:
        return f"[{self.xmin}, {self.ymin}, {self.xmax}, {self.ymax}]"

    def intersects(self, other: "BBox") -> bool:
        return (
            self.xmin <= other.xmax
            and other.xmin <= self.xmax
            and self.ymin <= other.ymax
            and other.ymin <= self.ymax
        )


def parse_bbox(s: str) -> BBox:
    """Parse '[xmin, ymin, xmax, ymax]'. Float coordinates are rounded."""
    if not isinstance(s, str):
        raise BBoxFormatError(f"bbox must be a string, got {type(s).__name__}")
    text = s.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise BBoxFormatError(f"bbox must look like '[xmin, ymin, xmax, ymax]': {s!r}")
    parts = [p.strip() for p in text[1:-1].split(",")]
    if len(parts) != 4:
        raise BBoxFormatError(f"bbox needs 4 coordinates, got {len(parts)}: {s!r}")
    try:
        coords = [int(round(float(p))) for p in parts]
    except ValueError as e:
        raise BBoxFormatError(f"non-numeric bbox coordinate in {s!r}") from e
    return BBox(*coords)


@dataclass(frozen=True)
class ToolCommand:
    """One validated call of one of the five tools."""

    kind: ToolKind
    frame_range: FrameRange
    bbox: BBox | None = None
    object_name: str | None = None

    def __post_init__(self) -> None:
        if self.kind in ZOOM_KINDS:
            if self.bbox is None:
                raise MissingParameterError(f"{self.kind.value} requires 'bbox'")
            if not self.frame_range.is_single:
                raise InvalidParameterError(
                    f"{self.kind.value} accepts a single frame index, "
                    f"got range {self.frame_range.to_text()}"
                )
            if self.bbox.xmin >= self.bbox.xmax or self.bbox.ymin >= self.bbox.ymax:
                raise InvalidParameterError(
                    f"zoom bbox must have positive extent: {self.bbox.to_text()}"
                )
        if self.kind is ToolKind.TRACK and not self.object_name:
            raise MissingParameterError("Object Tracking Tool requires 'object_name'")


def serialize_command(cmd: ToolCommand) -> str:
    """Render a command in the single-quoted record style the LLM sees."""
    rec: dict[str, str] = {"tool_name": cmd.kind.value}
    if cmd.kind is ToolKind.TRACK:
        rec["object_name"] = cmd.object_name or ""
        rec["frame_range"] = cmd.frame_range.to_text()
    else:
        rec["frame_range"] = cmd.frame_range.to_text()
        if cmd.kind in ZOOM_KINDS and cmd.bbox is not None:
            rec["bbox"] = cmd.bbox.to_text()
    return repr(rec)


def command_from_payload(payload: dict, total_frames: int | None = None) -> ToolCommand:
    """Build a validated ToolCommand from a parsed command mapping."""
    if not isinstance(payload, dict):
        raise MalformedRangeError(f"command payload must be a mapping, got {type(payload).__name__}")
    name = payload.get("tool_name")
    if name is None:
        raise MissingParameterError("command is missing 'tool_name'")
    kind = tool_kind_from_name(str(name))
    raw_range = payload.get("frame_range")
    if raw_range is None:
        raise MissingParameterError(f"{kind.value} is missing 'frame_range'")
    rng = parse_frame_range(str(raw_range), total_frames)
    bbox = None
    if kind in ZOOM_KINDS:
        raw_bbox = payload.get("bbox")
        if raw_bbox is None:
            raise MissingParameterError(f"{kind.value} is missing 'bbox'")
        bbox = parse_bbox(str(raw_bbox))
    object_name = None
    if kind is ToolKind.TRACK:
        raw_obj = payload.get("object_name")
        if raw_obj is None or not str(raw_obj).strip():
            raise MissingParameterError("Object Tracking Tool is missing 'object_name'")
        object_name = str(raw_obj).strip()
    return ToolCommand(kind=kind, frame_range=rng, bbox=bbox, object_name=object_name)


def parse_command(text: str, total_frames: int | None = None) -> ToolCommand:
    """Parse one command record in either quoting style."""
    payload = literal_mapping(text)
    if payload is None:
        raise MalformedRangeError(f"not a command mapping: {text!r}")
    return command_from_payload(payload, total_frames)


def literal_mapping(text: str) -> dict | None:
    """Parse a dict literal in single-quoted or JSON style; None on failure."""
    candidate = text.strip()
    for parser in (ast.literal_eval, json.loads):
        try:
            value = parser(candidate)
        except (ValueError, SyntaxError, MemoryError, RecursionError, TypeError):
            continue
        if isinstance(value, dict):
            return value
        return None
    return None


# --- caption confidence annotations -------------------------------------

@dataclass(frozen=True)
class CaptionClause:
    """One caption clause with the confidence the captioner attached to it.

    ``annotated`` is False for trailing text that carried no marker; such
    clauses are kept with confidence 1.0 rather than dropped.
    """

    text: str
    confidence: float
    annotated: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ProtocolError(f"clause confidence {self.confidence} outside [0, 1]")


_CONF_MARKER = re.compile(r"\(\s*confidence\s*=\s*([0-9]*\.?[0-9]+)\s*\)")
_CLAUSE_LEAD = ",.;: \t\n"


def _trim_clause(raw: str) -> str:
    return raw.strip().lstrip(_CLAUSE_LEAD).strip()


def parse_caption_confidences(text: str) -> tuple[CaptionClause, ...]:
    """Split caption text at every '(confidence=0.xx)' marker.

    Each clause is the text since the previous marker, trimmed. A trailing
    clause without a marker is recorded with confidence 1.0 and flagged
    unannotated. Total function: any input yields a (possibly empty) tuple.
    """
    clauses: list[CaptionClause] = []
    pos = 0
    for m in _CONF_MARKER.finditer(text):
        clause_text = _trim_clause(text[pos : m.start()])
        confidence = float(m.group(1))
        if confidence > 1.0:
            logger.warning("caption confidence %s clamped to 1.0", confidence)
            confidence = 1.0
        if clause_text:
            clauses.append(CaptionClause(clause_text, confidence))
        pos = m.end()
    tail = _trim_clause(text[pos:])
    if tail:
        clauses.append(CaptionClause(tail, 1.0, annotated=False))
    return tuple(clauses)


def format_caption_clauses(
    clauses: Sequence[CaptionClause], include_confidence: bool = True
) -> str:
    """Inverse of :func:`parse_caption_confidences` up to 2-decimal formatting."""
    parts: list[str] = []
    for clause in clauses:
        if clause.annotated and include_confidence:
            parts.append(f"{clause.text} (confidence={clause.confidence:.2f})")
        else:
            parts.append(clause.text)
    return ", ".join(parts)


# --- tool returns --------------------------------------------------------

@dataclass(frozen=True)
class CaptionFrame:
    frame_id: int
    clauses: tuple[CaptionClause, ...]


@dataclass(frozen=True)
class DetInfo:
    """One detected object on one frame."""

    id: int
    name: str
    bbox: BBox
    confidence: float


@dataclass(frozen=True)
class DetectFrame:
    frame_id: int
    detections: tuple[DetInfo, ...]


@dataclass(frozen=True)
class TrackPoint:
    frame_id: int
    object_name: str
    bbox: BBox
    confidence: float


@dataclass(frozen=True)
class ToolReturn:
    """Variant-matched tool output. Exactly one payload family is populated
    unless ``error`` is set, in which case all payloads are empty."""

    kind: ToolKind
    caption_frames: tuple[CaptionFrame, ...] = ()
    detect_frames: tuple[DetectFrame, ...] = ()
    track_points: tuple[TrackPoint, ...] = ()
    zoom_bbox: BBox | None = None
    error: str | None = None

    def payload_frame_ids(self) -> tuple[int, ...]:
        if self.kind in CAPTION_KINDS:
            return tuple(cf.frame_id for cf in self.caption_frames)
        if self.kind in DETECT_KINDS:
            return tuple(df.frame_id for df in self.detect_frames)
        return tuple(tp.frame_id for tp in self.track_points)

    def confidences(self) -> tuple[float, ...]:
        if self.kind in CAPTION_KINDS:
            return tuple(c.confidence for cf in self.caption_frames for c in cf.clauses)
        if self.kind in DETECT_KINDS:
            return tuple(d.confidence for df in self.detect_frames for d in df.detections)
        return tuple(tp.confidence for tp in self.track_points)


def _det_info_record(det: DetInfo, include_confidence: bool) -> dict[str, str]:
    rec = {"id": str(det.id), "name": det.name, "bbox": det.bbox.to_text()}
    if include_confidence:
        rec["confidence"] = f"{det.confidence:.2f}"
    return rec


def _return_records(ret: ToolReturn, include_confidence: bool) -> list[dict]:
    if ret.error is not None:
        rec: dict[str, str] = {"error": ret.error}
        if include_confidence:
            rec["confidence"] = "0.00"
        return [rec]
    records: list[dict] = []
    if ret.kind in CAPTION_KINDS:
        for cf in ret.caption_frames:
            rec = {"frame_id": str(cf.frame_id)}
            if ret.kind is ToolKind.ZOOM_CAPTION and ret.zoom_bbox is not None:
                rec["bbox"] = ret.zoom_bbox.to_text()
            rec["caption"] = format_caption_clauses(cf.clauses, include_confidence)
            records.append(rec)
    elif ret.kind in DETECT_KINDS:
        for df in ret.detect_frames:
            rec = {"frame_id": str(df.frame_id)}
            if ret.kind is ToolKind.ZOOM_DETECT and ret.zoom_bbox is not None:
                rec["bbox"] = ret.zoom_bbox.to_text()
            rec["det_info"] = [
                _det_info_record(d, include_confidence) for d in df.detections
            ]
            records.append(rec)
    else:
        for tp in ret.track_points:
            rec = {
                "frame_id": str(tp.frame_id),
                "object_name": tp.object_name,
                "bbox": tp.bbox.to_text(),
            }
            if include_confidence:
                rec["confidence"] = f"{tp.confidence:.2f}"
            records.append(rec)
    return records


def serialize_return(ret: ToolReturn, include_confidence: bool = True) -> str:
    """Render a tool return in the single-quoted record style the LLM sees.

    Confidences are fixed at two decimals for determinism. With
    ``include_confidence`` False every confidence annotation and field is
    dropped (the tool-confidence ablation).
    """
    return repr(_return_records(ret, include_confidence))


# --- wire protocol --------------------------------------------------------

WIRE_REQUEST_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "tool_name": {"enum": list(TOOL_NAMES)},
        "frame_range": {"type": "string", "pattern": r"^\s*\d+\s*(-\s*\d+\s*)?$"},
        "bbox": {
            "type": "string",
            "pattern": r"^\s*\[\s*\d+(\.\d+)?\s*(,\s*\d+(\.\d+)?\s*){3}\]\s*$",
        },
        "object_name": {"type": "string", "minLength": 1},
    },
    "required": ["tool_name", "frame_range"],
    "additionalProperties": False,
    "allOf": [
        {
            "if": {
                "properties": {
                    "tool_name": {
                        "enum": [
                            ToolKind.ZOOM_CAPTION.value,
                            ToolKind.ZOOM_DETECT.value,
                        ]
                    }
                }
            },
            "then": {"required": ["bbox"]},
        },
        {
            "if": {"properties": {"tool_name": {"const": ToolKind.TRACK.value}}},
            "then": {"required": ["object_name"]},
        },
    ],
}

_BBOX_TEXT = {"type": "string", "pattern": r"^\[-?\d+, -?\d+, -?\d+, -?\d+\]$"}
_CONF_TEXT = {"type": "string", "pattern": r"^\d\.\d{2}$"}

WIRE_RESPONSE_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "results": {
            "type": "array",
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "properties": {
                            "frame_id": {"type": "string"},
                            "bbox": _BBOX_TEXT,
                            "caption": {"type": "string"},
                        },
                        "required": ["frame_id", "caption"],
                        "additionalProperties": False,
                    },
                    {
                        "type": "object",
                        "properties": {
                            "frame_id": {"type": "string"},
                            "bbox": _BBOX_TEXT,
                            "det_info": {
                                "type": "array",
                                "items": {
                                    "type": "object",
                                    "properties": {
                                        "id": {"type": "string"},
                                        "name": {"type": "string"},
                                        "bbox": _BBOX_TEXT,
                                        "confidence": _CONF_TEXT,
                                    },
                                    "required": ["id", "name", "bbox", "confidence"],
                                    "additionalProperties": False,
                                },
                            },
                        },
                        "required": ["frame_id", "det_info"],
                        "additionalProperties": False,
                    },
                    {
                        "type": "object",
                        "properties": {
                            "frame_id": {"type": "string"},
                            "object_name": {"type": "string"},
                            "bbox": _BBOX_TEXT,
                            "confidence": _CONF_TEXT,
                        },
                        "required": ["frame_id", "object_name", "bbox", "confidence"],
                        "additionalProperties": False,
                    },
                ]
            },
        },
        "error": {"type": "string"},
    },
    "required": ["results"],
    "additionalProperties": False,
}


def validate_wire_request(payload: dict) -> None:
    jsonschema.validate(payload, WIRE_REQUEST_SCHEMA)


def validate_wire_response(payload: dict) -> None:
    jsonschema.validate(payload, WIRE_RESPONSE_SCHEMA)


def _wire_dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(", ", ": "))


def wire_request(cmd: ToolCommand) -> str:
    """Encode a command as a wire request body (JSON)."""
    payload: dict[str, str] = {"tool_name": cmd.kind.value}
    if cmd.kind is ToolKind.TRACK:
        payload["object_name"] = cmd.object_name or ""
        payload["frame_range"] = cmd.frame_range.to_text()
    else:
        payload["frame_range"] = cmd.frame_range.to_text()
        if cmd.bbox is not None:
            payload["bbox"] = cmd.bbox.to_text()
    return _wire_dumps(payload)


def parse_wire_request(body: str | bytes, total_frames: int | None = None) -> ToolCommand:
    """Decode and validate a wire request body."""
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as e:
        raise MalformedRangeError(f"wire request is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise MalformedRangeError("wire request must be a JSON object")
    try:
        validate_wire_request(payload)
    except jsonschema.ValidationError as e:
        raise MissingParameterError(f"wire request schema violation: {e.message}") from e
    return command_from_payload(payload, total_frames)


def wire_response(ret: ToolReturn, include_confidence: bool = True) -> str:
    """Encode a tool return as a wire response body (JSON)."""
    if ret.error is not None:
        return _wire_dumps({"results": [], "error": ret.error})
    return _wire_dumps({"results": _return_records(ret, include_confidence)})


def parse_wire_response(body: str | bytes, kind: ToolKind) -> ToolReturn:
    """Decode a wire response body back into a typed return.

    Confidence fields are accepted both as numbers and as strings; values
    outside [0, 1] are clamped.
    """
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"wire response is not valid JSON: {e}") from e
    if not isinstance(payload, dict) or "results" not in payload:
        raise ProtocolError("wire response must be an object with 'results'")
    error = payload.get("error")
    if error is not None:
        return ToolReturn(kind=kind, error=str(error))
    records = payload["results"]
    if not isinstance(records, list):
        raise ProtocolError("'results' must be an array")
    zoom_bbox: BBox | None = None
    caption_frames: list[CaptionFrame] = []
    detect_frames: list[DetectFrame] = []
    track_points: list[TrackPoint] = []
    for rec in records:
        if not isinstance(rec, dict) or "frame_id" not in rec:
            raise ProtocolError(f"malformed result record: {rec!r}")
        frame_id = int(str(rec["frame_id"]))
        if kind in ZOOM_KINDS and "bbox" in rec and zoom_bbox is None:
            zoom_bbox = parse_bbox(str(rec["bbox"]))
        if kind in CAPTION_KINDS:
            caption_frames.append(
                CaptionFrame(frame_id, parse_caption_confidences(str(rec.get("caption", ""))))
            )
        elif kind in DETECT_KINDS:
            dets = []
            for d in rec.get("det_info", []):
                dets.append(
                    DetInfo(
                        id=int(str(d["id"])),
                        name=str(d["name"]),
                        bbox=parse_bbox(str(d["bbox"])),
                        confidence=clamp_confidence(d.get("confidence", 0.0)),
                    )
                )
            detect_frames.append(DetectFrame(frame_id, tuple(dets)))
        else:
            track_points.append(
                TrackPoint(
                    frame_id=frame_id,
                    object_name=str(rec.get("object_name", "")),
                    bbox=parse_bbox(str(rec["bbox"])),
                    confidence=clamp_confidence(rec.get("confidence", 0.0)),
                )
            )
    return ToolReturn(
        kind=kind,
        caption_frames=tuple(caption_frames),
        detect_frames=tuple(detect_frames),
        track_points=tuple(track_points),
        zoom_bbox=zoom_bbox,
    )


def clamp_confidence(value: Any) -> float:
    """Coerce a numeric-or-string confidence into [0, 1]."""
    try:
        conf = float(value)
    except (TypeError, ValueError):
        logger.warning("unparseable confidence %r treated as 0.0", value)
        return 0.0
    if conf < 0.0 or conf > 1.0:
        logger.warning("confidence %s clamped into [0, 1]", conf)
        return min(1.0, max(0.0, conf))
    return conf


def sanitize_return(ret: ToolReturn, cmd: ToolCommand) -> tuple[ToolReturn, tuple[str, ...]]:
    """Enforce return invariants against the issuing command.

    Out-of-range confidences are clamped and flagged; payload elements with
    frame ids outside the command's range are dropped and flagged. The notes
    travel with the resulting tool record so misbehaving backends stay
    visible.
    """
    notes: list[str] = []
    if ret.error is not None:
        return ret, ()

    def fix_conf(conf: float, where: str) -> float:
        if 0.0 <= conf <= 1.0:
            return conf
        notes.append(f"confidence {conf} clamped at {where}")
        return min(1.0, max(0.0, conf))

    rng = cmd.frame_range
    if ret.kind in CAPTION_KINDS:
        # clause confidences are clamped at parse time and validated at
        # construction, so only frame ids need checking here
        frames = []
        for cf in ret.caption_frames:
            if cf.frame_id not in rng:
                notes.append(f"dropped caption for out-of-range frame {cf.frame_id}")
                continue
            frames.append(cf)
        ret = replace(ret, caption_frames=tuple(frames))
    elif ret.kind in DETECT_KINDS:
        frames = []
        for df in ret.detect_frames:
            if df.frame_id not in rng:
                notes.append(f"dropped detections for out-of-range frame {df.frame_id}")
                continue
            dets = tuple(
                replace(d, confidence=fix_conf(d.confidence, f"frame {df.frame_id}"))
                if not 0.0 <= d.confidence <= 1.0
                else d
                for d in df.detections
            )
            frames.append(DetectFrame(df.frame_id, dets))
        ret = replace(ret, detect_frames=tuple(frames))
    else:
        points = []
        for tp in ret.track_points:
            if tp.frame_id not in rng:
                notes.append(f"dropped track point for out-of-range frame {tp.frame_id}")
                continue
            if not 0.0 <= tp.confidence <= 1.0:
                tp = replace(tp, confidence=fix_conf(tp.confidence, f"frame {tp.frame_id}"))
            points.append(tp)
        ret = replace(ret, track_points=tuple(points))
    for note in notes:
        logger.warning("tool return sanitized: %s", note)
    return ret, tuple(notes)
