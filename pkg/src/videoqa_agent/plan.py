"""Retrieval planning: create the plan, adjust it, extract the next action.

The model replies with plan prose plus one or more {'Action': ...} objects.
The final Action object is the chosen first action (plan prose may list
example commands for future steps); earlier objects are kept around for the
fixed-plan ablation, which replays them instead of asking for adjustments.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .gateway import Conversation, LlmGateway
from .prompts import load_prompt
from .protocol import (
    ProtocolError,
    ToolCommand,
    command_from_payload,
    literal_mapping,
)

logger = logging.getLogger(__name__)


class NoActionError(ProtocolError):
    """The reply contains no well-formed Action object."""


class PlanningError(Exception):
    """Planning failed after the reprompt; the session answers from the
    current bank at the next assessment instead of retrieving."""


@dataclass(frozen=True)
class Plan:
    """One revision of the retrieval plan and its chosen next action."""

    rationale_text: str
    next_action: ToolCommand
    created_at_t: int
    revision: int


REPROMPT_ACTION = (
    "Your reply did not contain a valid tool action. Please output exactly one action "
    "in the following JSON format: {'Action': 'tool call command'}, using one of the "
    "five documented tools."
)

_ACTION_START = re.compile(r"\{\s*['\"]Action['\"]")


def _action_blocks(text: str) -> list[str]:
    """Balanced-brace blocks starting at an 'Action' key, document order.

    Brace counting ignores quoting, which is fine for tool commands (their
    values never contain braces); anything pathological simply fails to parse
    downstream and is skipped.
    """
    blocks: list[str] = []
    for m in _ACTION_START.finditer(text):
        depth = 0
        for i in range(m.start(), len(text)):
            ch = text[i]
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    blocks.append(text[m.start() : i + 1])
                    break
    return blocks


def _action_payload(block: str) -> dict | None:
    mapping = literal_mapping(block)
    if mapping is None or "Action" not in mapping:
        return None
    value = mapping["Action"]
    if isinstance(value, str):
        value = literal_mapping(value)
    if not isinstance(value, dict):
        return None
    return value


def extract_action_payloads(text: str) -> list[dict]:
    """All structurally well-formed Action payloads in the reply, in order."""
    payloads = []
    for block in _action_blocks(text):
        payload = _action_payload(block)
        if payload is not None:
            payloads.append(payload)
    return payloads


def parse_action(text: str, total_frames: int | None = None) -> ToolCommand:
    """Typed command from the last well-formed Action object in the reply.

    Validation errors on that object (unknown tool, missing parameter,
    malformed range, multi-frame zoom) surface as their distinct kinds; they
    never fall back to an earlier Action object. Total over arbitrary text:
    every input yields a command or a classified ProtocolError.
    """
    payloads = extract_action_payloads(text)
    if not payloads:
        raise NoActionError("no well-formed {'Action': ...} object in reply")
    return command_from_payload(payloads[-1], total_frames)


def _plan_call(
    gateway: LlmGateway,
    conv: Conversation,
    prompt: str,
    total_frames: int | None,
) -> tuple[str, ToolCommand]:
    reply = gateway.complete(conv, prompt)
    try:
        return reply, parse_action(reply, total_frames)
    except ProtocolError as e:
        logger.warning("action parse failed (%s), reprompting once", e)
    reply = gateway.complete(conv, REPROMPT_ACTION)
    try:
        return reply, parse_action(reply, total_frames)
    except ProtocolError as e:
        raise PlanningError(f"no valid action after reprompt: {e}") from e


def create_plan(
    gateway: LlmGateway,
    conv: Conversation,
    *,
    step_t: int,
    total_frames: int | None = None,
) -> Plan:
    """Initial retrieval plan; the bank and question are already in the
    conversation from the preceding assessment."""
    reply, action = _plan_call(gateway, conv, load_prompt("create_plan"), total_frames)
    return Plan(rationale_text=reply, next_action=action, created_at_t=step_t, revision=0)


def adjust_plan(
    gateway: LlmGateway,
    conv: Conversation,
    prev: Plan,
    *,
    step_t: int,
    total_frames: int | None = None,
) -> Plan:
    """Plan revision after new information arrived.

    The adjustment prompt leans on the conversation, which already holds the
    latest tool returns with their confidences. Repeating the previous action
    verbatim is allowed (the model may legitimately retry) but logged."""
    reply, action = _plan_call(gateway, conv, load_prompt("adjust_plan"), total_frames)
    if action == prev.next_action:
        logger.warning("plan revision %d repeats the previous action", prev.revision + 1)
    return Plan(
        rationale_text=reply,
        next_action=action,
        created_at_t=step_t,
        revision=prev.revision + 1,
    )


def elicit_direct_command(
    gateway: LlmGateway,
    conv: Conversation,
    *,
    step_t: int,
    total_frames: int | None = None,
) -> Plan:
    """Tool command without any plan prose (the no-CoT ablation): same tool
    documentation, no step-by-step or plan-making instructions."""
    reply, action = _plan_call(gateway, conv, load_prompt("direct_command"), total_frames)
    return Plan(rationale_text=reply, next_action=action, created_at_t=step_t, revision=0)


def replay_plan_action(plan: Plan, step_t: int, total_frames: int | None = None) -> ToolCommand:
    """Action for round ``step_t`` when plan adjustment is disabled.

    The original plan prose is re-parsed for Action objects; the last one was
    executed at round 1, the earlier ones (the plan's future steps, in
    document order) are replayed next. When they run out, or none exist, the
    first action is reused.
    """
    commands: list[ToolCommand] = []
    for payload in extract_action_payloads(plan.rationale_text):
        try:
            commands.append(command_from_payload(payload, total_frames))
        except ProtocolError as e:
            logger.warning("skipping invalid plan step while replaying: %s", e)
    remaining = commands[:-1] if commands else []
    index = step_t - plan.created_at_t - 1
    if 0 <= index < len(remaining):
        return remaining[index]
    return plan.next_action
