"""Shared scripted fixtures for session- and harness-level tests."""

from __future__ import annotations

from videoqa_agent import (
    BenchEnvironment,
    LlmGateway,
    MCQItem,
    ScriptedCaptioner,
    SimulatedToolSuite,
    VideoManifest,
)
from videoqa_agent.fusion import RawDetection, TableDetector, TableTracker, TrackObservation
from videoqa_agent.gateway import ScriptedBackend
from videoqa_agent.protocol import BBox
from videoqa_agent.questions import QuestionType

NO_INFO_REPLY = (
    "No, I do not have enough information to answer the question. (confidence score = 0)"
)

TRACK_ACTION_REPLY = (
    "I will locate the phone first.\n"
    "{'Action': {'tool_name': 'Object Tracking Tool', 'object_name': 'phone', "
    "'frame_range': '10-20'}}"
)

CAPTION_ACTION_REPLY = (
    "Let me look at that frame.\n"
    "{'Action': {'tool_name': 'Image Caption Tool', 'frame_range': '19'}}"
)


def yes_reply(label: str = "B", confidence: int = 5) -> str:
    return f"Yes, the answer is {label}, (confidence score = {confidence})"


def make_item(
    item_id: str = "q1",
    video_id: str = "vid1",
    gold: str | None = "B",
    question_type: QuestionType = QuestionType.UNKNOWN,
) -> MCQItem:
    return MCQItem(
        item_id=item_id,
        video_id=video_id,
        question="What did the man place on the bed?",
        options=(("A", "a laptop"), ("B", "a phone"), ("C", "a book")),
        gold_label=gold,
        question_type=question_type,
    )


def make_manifest(video_id: str = "vid1", length_s: float = 40.0) -> VideoManifest:
    return VideoManifest(video_id=video_id, length_s=length_s, native_fps=30.0)


def make_captioner(segments: int = 10, **kwargs) -> ScriptedCaptioner:
    return ScriptedCaptioner({i: f"clip action {i}" for i in range(segments)}, **kwargs)


def make_suite(total_frames: int = 40, **kwargs) -> SimulatedToolSuite:
    detector = TableDetector(
        {
            12: [RawDetection("phone", BBox(5, 5, 20, 20), 0.8)],
            18: [RawDetection("cup", BBox(30, 30, 40, 40), 0.7)],
        }
    )
    tracker = TableTracker(
        {
            (12, f): TrackObservation(confidence=0.9, bbox=BBox(5 + f, 5, 20 + f, 20))
            for f in range(8, 25)
        }
        | {
            (18, f): TrackObservation(confidence=0.7, bbox=BBox(30, 30, 40, 40))
            for f in range(13, 24)
        }
    )
    captions = {19: "a phone on the bed (confidence=0.91)"}
    return SimulatedToolSuite(
        detector=detector,
        tracker=tracker,
        frame_captions=captions,
        total_frames=total_frames,
        **kwargs,
    )


def scripted_gateway(replies: list[str], rules: list[tuple[str, str]] | None = None) -> LlmGateway:
    return LlmGateway(ScriptedBackend(replies, rules or ()))


def build_env(
    replies_map: dict[str, list[str]],
    rules_map: dict[str, list[tuple[str, str]]] | None = None,
    length_s: float = 40.0,
    total_frames: int = 40,
) -> BenchEnvironment:
    """Environment whose per-item scripted gateways are rebuilt on every call,
    so concurrent sessions never share ordered-script state."""
    rules_map = rules_map or {}
    suite = make_suite(total_frames)
    registry = suite.build_registry()

    def gateway_for(item: MCQItem) -> LlmGateway:
        return scripted_gateway(
            list(replies_map[item.item_id]), list(rules_map.get(item.item_id, []))
        )

    return BenchEnvironment(
        manifest_for=lambda item: make_manifest(item.video_id, length_s),
        captioner_for=lambda item: make_captioner(),
        registry_for=lambda item: registry,
        gateway_for=gateway_for,
    )
