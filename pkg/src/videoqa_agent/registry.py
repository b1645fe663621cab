"""Tool backend registry and synchronous dispatch.

One backend per tool kind; dispatch makes exactly one backend call per
command, times it, and always comes back with a record: backend faults become
low-confidence error records the model can see and replan around, never
session errors.
"""

from __future__ import annotations

import logging
import time
from typing import Callable, Protocol

from .bank import ToolRecord
from .protocol import ToolCommand, ToolKind, ToolReturn, sanitize_return

logger = logging.getLogger(__name__)


class RegistryError(Exception):
    """Configuration problem: a command arrived for an unregistered tool."""


class ToolBackend(Protocol):
    def run(self, command: ToolCommand) -> ToolReturn: ...


class ToolRegistry:
    """Mapping of tool kind to backend, shareable across sessions. Backends
    must tolerate concurrent invocations from distinct sessions."""

    def __init__(self) -> None:
        self._backends: dict[ToolKind, ToolBackend] = {}

    def register(self, kind: ToolKind, backend: ToolBackend) -> None:
        self._backends[kind] = backend

    def backend(self, kind: ToolKind) -> ToolBackend:
        try:
            return self._backends[kind]
        except KeyError:
            raise RegistryError(f"no backend registered for {kind.value!r}") from None

    def kinds(self) -> frozenset[ToolKind]:
        return frozenset(self._backends)


def dispatch(
    command: ToolCommand,
    registry: ToolRegistry,
    step_t: int,
    clock: Callable[[], float] = time.perf_counter,
) -> ToolRecord:
    """Invoke the one registered backend for a command and wrap the result.

    The command must already be validated against the video's frame count.
    A backend exception or a mismatched return kind degrades to an error
    payload with confidence 0; out-of-range confidences and frame ids in the
    payload are clamped/dropped and noted on the record.
    """
    backend = registry.backend(command.kind)
    started = clock()
    try:
        ret = backend.run(command)
    except Exception as e:
        logger.warning("backend for %s failed: %s", command.kind.value, e)
        ret = ToolReturn(kind=command.kind, error=f"tool backend failure: {e}")
    if ret.kind is not command.kind:
        logger.warning(
            "backend returned %s payload for %s command", ret.kind.value, command.kind.value
        )
        ret = ToolReturn(
            kind=command.kind,
            error=f"tool backend returned mismatched payload kind {ret.kind.value!r}",
        )
    wall_time_ms = (clock() - started) * 1000.0
    ret, notes = sanitize_return(ret, command)
    return ToolRecord(
        step_t=step_t,
        command=command,
        returns=ret,
        wall_time_ms=wall_time_ms,
        notes=notes,
    )
