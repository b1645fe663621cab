"""The main loop: context, assessment, planning, retrieval, with ablations.

One session is a strictly sequential state machine over one question. The
loop runs at most ``max_assessments`` answer assessments; an accepted answer
breaks out early, otherwise each round plans one retrieval, dispatches one
tool, and merges the result, so tool dispatches never exceed
``max_assessments - 1``. The final answer is returned unconditionally:
running out of budget yields the last (low-confidence) answer rather than a
dead end.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .assess import AnswerCandidate, AssessmentDecision, assess, decide
from .bank import MemoryBank, ToolRecord, merge
from .captioning import ClipCaptioner, caption_all, summarize
from .fusion import FusionParams
from .gateway import Conversation, GatewayConfig, LlmGateway, build_gateway
from .plan import (
    Plan,
    PlanningError,
    adjust_plan,
    create_plan,
    elicit_direct_command,
    replay_plan_action,
)
from .questions import MCQItem
from .registry import ToolRegistry, dispatch
from .segments import VideoManifest, plan_segments
from .protocol import serialize_return, wire_request, wire_response

logger = logging.getLogger(__name__)


class SessionError(Exception):
    """Context phase failed; there is no bank to answer from."""


class Termination(str, Enum):
    CONFIDENCE_MET = "confidence_met"
    BUDGET_EXHAUSTED = "budget_exhausted"
    PLANNER_FALLBACK = "planner_fallback"


@dataclass(frozen=True)
class AblationFlags:
    """Mechanism switches for the ablation study.

    ``no_tool_confidence`` strips confidence annotations from tool evidence
    before the model sees it; ``no_plan_adjust`` freezes the plan after the
    first round and replays its remaining actions; ``no_cot`` skips plan
    prompts and elicits bare tool commands; ``no_tools`` answers from the
    general context only.
    """

    no_tool_confidence: bool = False
    no_plan_adjust: bool = False
    no_cot: bool = False
    no_tools: bool = False


@dataclass(frozen=True)
class SessionConfig:
    fps_d: float = 1.0
    segment_seconds: float = 4.0
    cf_thr: int = 5
    max_assessments: int = 5
    fusion: FusionParams = field(default_factory=FusionParams)
    ablation: AblationFlags = field(default_factory=AblationFlags)
    gateway: GatewayConfig = field(default_factory=GatewayConfig)

    def __post_init__(self) -> None:
        if self.max_assessments < 1:
            raise ValueError(f"max_assessments must be >= 1, got {self.max_assessments}")
        if not 0 <= self.cf_thr <= 5:
            raise ValueError(f"cf_thr must be in 0..5, got {self.cf_thr}")


@dataclass
class SessionState:
    """The loop state after assessment ``t``: the bank, the current plan (if
    any retrieval has been planned), the latest answer and its confidence."""

    t: int
    bank: MemoryBank
    plan: Plan | None = None
    answer: AnswerCandidate | None = None
    confidence: int = 0


@dataclass(frozen=True)
class AssessmentStep:
    t: int
    candidate: AnswerCandidate
    decision: AssessmentDecision


@dataclass
class SessionResult:
    final_answer: AnswerCandidate
    assessments: list[AssessmentStep]
    tool_records: list[ToolRecord]
    terminated_by: Termination
    events: list[dict]
    conversation: Conversation
    summary_conversation: Conversation
    bank: MemoryBank

    @property
    def tool_calls(self) -> int:
        return len(self.tool_records)


class _RecordingGateway:
    """Per-session wrapper logging every exchange into the event stream."""

    def __init__(self, inner: LlmGateway, sink: Callable[[dict], None]):
        self._inner = inner
        self._sink = sink

    def complete(self, conv: Conversation, new_user_turn: str) -> str:
        reply = self._inner.complete(conv, new_user_turn)
        self._sink(
            {
                "kind": "llm_call",
                "conversation": conv.session_id,
                "prompt_sha256": hashlib.sha256(new_user_turn.encode()).hexdigest(),
                "reply": reply,
            }
        )
        return reply


def run_session(
    manifest: VideoManifest,
    question: MCQItem,
    cfg: SessionConfig,
    registry: ToolRegistry,
    captioner: ClipCaptioner,
    *,
    gateway: LlmGateway | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> SessionResult:
    """Run one question session end to end.

    The gateway defaults to one built from ``cfg.gateway``; passing one in
    lets tests inject scripted backends directly. All nondeterminism lives in
    the injected backends and the clock, so a scripted session is replayable
    byte for byte.
    """
    if gateway is None:
        gateway = build_gateway(cfg.gateway)
    events: list[dict] = []
    recorder = _RecordingGateway(gateway, events.append)
    flags = cfg.ablation
    include_conf = not flags.no_tool_confidence

    # context phase: segment, caption, summarize
    try:
        seg_plan = plan_segments(manifest.length_s, cfg.fps_d, cfg.segment_seconds)
        events.append(
            {
                "kind": "phase1",
                "video_id": manifest.video_id,
                "segments": len(seg_plan.segments),
                "total_frames": seg_plan.total_frames,
            }
        )
        captions = caption_all(seg_plan, captioner)
        for cap in captions:
            events.append(
                {"kind": "caption", "segment_id": cap.segment_id, "text": cap.text}
            )
        summary, summary_conv = summarize(
            captions,
            recorder,
            segment_seconds=cfg.segment_seconds,
            egocentric_markers=captioner.egocentric_markers,
            session_id=f"{question.item_id}/summary",
        )
        events.append({"kind": "summary", "text": summary.text})
    except Exception as e:
        raise SessionError(f"context phase failed for {manifest.video_id}: {e}") from e

    bank = MemoryBank(tuple(captions), summary)
    state = SessionState(t=0, bank=bank)
    conv = Conversation(f"{question.item_id}/qa")
    assessments: list[AssessmentStep] = []
    tool_records: list[ToolRecord] = []
    terminated: Termination | None = None
    planner_failed_last = False
    total_frames = seg_plan.total_frames
    T = cfg.max_assessments

    for t in range(1, T + 1):
        candidate = assess(
            state.bank, question, recorder, conv, include_tool_confidence=include_conf
        )
        decision = decide(candidate, cfg.cf_thr)
        state.t = t
        state.answer = candidate
        state.confidence = candidate.confidence
        assessments.append(AssessmentStep(t, candidate, decision))
        events.append(
            {
                "kind": "assessment",
                "t": t,
                "label": candidate.option_label,
                "confidence": candidate.confidence,
                "decision": decision.value,
            }
        )
        if decision is AssessmentDecision.ACCEPT:
            terminated = Termination.CONFIDENCE_MET
            break
        if flags.no_tools:
            # answer rests on the general context alone; no retrieval rounds
            terminated = Termination.BUDGET_EXHAUSTED
            break
        if t == T:
            terminated = Termination.BUDGET_EXHAUSTED
            break

        try:
            if flags.no_cot:
                state.plan = elicit_direct_command(
                    recorder, conv, step_t=t, total_frames=total_frames
                )
                action = state.plan.next_action
            elif state.plan is None:
                state.plan = create_plan(recorder, conv, step_t=t, total_frames=total_frames)
                action = state.plan.next_action
            elif flags.no_plan_adjust:
                # the original plan object stays frozen; only the action for
                # this round is derived from it
                action = replay_plan_action(state.plan, step_t=t, total_frames=total_frames)
            else:
                state.plan = adjust_plan(
                    recorder, conv, state.plan, step_t=t, total_frames=total_frames
                )
                action = state.plan.next_action
            planner_failed_last = False
        except PlanningError as e:
            logger.warning("planning failed at t=%d: %s", t, e)
            events.append({"kind": "planner_error", "t": t, "error": str(e)})
            planner_failed_last = True
            continue

        events.append(
            {
                "kind": "plan",
                "t": t,
                "revision": state.plan.revision,
                "command": json.loads(wire_request(action)),
            }
        )
        record = dispatch(action, registry, step_t=t, clock=clock)
        tool_records.append(record)
        events.append(
            {
                "kind": "dispatch",
                "t": t,
                "command": json.loads(wire_request(record.command)),
                "returns": json.loads(wire_response(record.returns)),
                "notes": list(record.notes),
            }
        )
        state.bank = merge(state.bank, record)
        events.append({"kind": "merge", "t": t, "records": len(state.bank.tool_records)})
        conv.append(
            "user",
            f"NewInfo from {record.command.kind.value}:\n"
            f"{serialize_return(record.returns, include_conf)}",
        )

    assert terminated is not None and assessments
    if terminated is Termination.BUDGET_EXHAUSTED and planner_failed_last:
        # the last retrieval opportunity was lost to a planning failure, not
        # to an exhausted budget of executed retrievals
        terminated = Termination.PLANNER_FALLBACK
    final = assessments[-1].candidate
    events.append(
        {
            "kind": "terminate",
            "reason": terminated.value,
            "label": final.option_label,
            "confidence": final.confidence,
        }
    )
    return SessionResult(
        final_answer=final,
        assessments=assessments,
        tool_records=tool_records,
        terminated_by=terminated,
        events=events,
        conversation=conv,
        summary_conversation=summary_conv,
        bank=state.bank,
    )
