"""Dataset loading, batch evaluation, accuracy, and trace analytics.

Adapters normalize the three public dataset layouts (plus a generic JSONL
shape) into MCQItem. The batch runner fans sessions out up to a concurrency
bound and aggregates with a deterministic fold over results sorted by
item_id, so reports are identical at any concurrency given scripted
backends. Items with hidden gold labels are excluded from the accuracy
denominator and reported separately.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .captioning import ClipCaptioner
from .gateway import LlmGateway, build_gateway
from .questions import MCQItem, QuestionType
from .registry import ToolRegistry
from .segments import VideoManifest
from .session import AblationFlags, SessionConfig, run_session
from .traces import RunTrace, error_trace, trace_from_result

logger = logging.getLogger(__name__)

DATASET_FORMATS = ("generic", "egoschema-like", "nextqa-like", "intentqa-like")
OPTION_LABELS = "ABCDE"


class DatasetError(ValueError):
    pass


class AnalyticsError(ValueError):
    pass


# --- dataset adapters -------------------------------------------------------

_TYPE_BY_PREFIX = {
    "C": QuestionType.CAUSAL,
    "T": QuestionType.TEMPORAL,
    "D": QuestionType.DESCRIPTIVE,
}


def _type_from_tag(tag: str) -> QuestionType:
    if not tag:
        return QuestionType.UNKNOWN
    return _TYPE_BY_PREFIX.get(tag.strip().upper()[0], QuestionType.UNKNOWN)


def _options_from_mapping(item_id: str, raw: dict, where: str) -> tuple[tuple[str, str], ...]:
    options = []
    for label in sorted(raw):
        norm = label.strip().upper()
        if len(norm) != 1 or norm not in OPTION_LABELS:
            raise DatasetError(f"{where}: {item_id}: bad option label {label!r}")
        options.append((norm, str(raw[label])))
    if len(options) != len({label for label, _ in options}):
        raise DatasetError(f"{where}: {item_id}: duplicate option labels")
    return tuple(options)


def _load_generic(path: Path) -> list[MCQItem]:
    """JSONL: item_id, video_id, question, options (label->text mapping or
    list), optional gold_label and question_type."""
    items = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        where = f"{path}:{lineno}"
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DatasetError(f"{where}: invalid JSON: {e}") from e
        try:
            raw_options = rec["options"]
            if isinstance(raw_options, list):
                options = tuple(
                    (OPTION_LABELS[i], str(text)) for i, text in enumerate(raw_options)
                )
            else:
                options = _options_from_mapping(rec.get("item_id", "?"), raw_options, where)
            qtype = QuestionType(rec.get("question_type", "Unknown"))
            item = MCQItem(
                item_id=str(rec["item_id"]),
                video_id=str(rec["video_id"]),
                question=str(rec["question"]),
                options=options,
                gold_label=rec.get("gold_label"),
                question_type=qtype,
            )
        except (KeyError, ValueError, IndexError) as e:
            raise DatasetError(f"{where}: {e}") from e
        items.append(item)
    return items


def _load_egoschema_like(path: Path) -> list[MCQItem]:
    """JSON array of records with q_uid, question, 'option 0'..'option 4'
    and, on the labeled subset, an integer 'answer'."""
    try:
        records = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise DatasetError(f"{path}: invalid JSON: {e}") from e
    if not isinstance(records, list):
        raise DatasetError(f"{path}: expected a JSON array of question records")
    items = []
    for pos, rec in enumerate(records):
        where = f"{path}[{pos}]"
        try:
            uid = str(rec["q_uid"])
            option_keys = sorted(k for k in rec if k.startswith("option"))
            options = tuple(
                (OPTION_LABELS[i], str(rec[k])) for i, k in enumerate(option_keys)
            )
            gold = None
            if "answer" in rec:
                gold = OPTION_LABELS[int(rec["answer"])]
            item = MCQItem(
                item_id=uid,
                video_id=str(rec.get("google_drive_id", uid)),
                question=str(rec["question"]),
                options=options,
                gold_label=gold,
            )
        except (KeyError, ValueError, IndexError) as e:
            raise DatasetError(f"{where}: {e}") from e
        items.append(item)
    return items


def _load_nextqa_like(path: Path, with_types: bool) -> list[MCQItem]:
    """CSV with video, qid, question, a0..a4, answer (index), and a type tag
    (C*/T*/D*) mapped to the three question types."""
    items = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, 2):
            where = f"{path}:{lineno}"
            try:
                answer_keys = sorted(k for k in row if k and k.startswith("a") and k[1:].isdigit())
                options = tuple(
                    (OPTION_LABELS[i], str(row[k])) for i, k in enumerate(answer_keys)
                )
                gold = None
                raw_answer = (row.get("answer") or "").strip()
                if raw_answer:
                    gold = OPTION_LABELS[int(raw_answer)]
                qtype = _type_from_tag(row.get("type", "")) if with_types else QuestionType.UNKNOWN
                item = MCQItem(
                    item_id=f"{row['video']}_{row['qid']}",
                    video_id=str(row["video"]),
                    question=str(row["question"]),
                    options=options,
                    gold_label=gold,
                    question_type=qtype,
                )
            except (KeyError, ValueError, IndexError) as e:
                raise DatasetError(f"{where}: {e}") from e
            items.append(item)
    return items


def load_dataset(path: str | Path, format: str = "generic") -> list[MCQItem]:
    """Load a dataset file into normalized items.

    ``format`` is one of generic | egoschema-like | nextqa-like |
    intentqa-like. Question types are populated for the nextqa-like layout
    (and intentqa-like, which shares it).
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    if format == "generic":
        return _load_generic(path)
    if format == "egoschema-like":
        return _load_egoschema_like(path)
    if format == "nextqa-like":
        return _load_nextqa_like(path, with_types=True)
    if format == "intentqa-like":
        return _load_nextqa_like(path, with_types=True)
    raise DatasetError(f"unknown dataset format {format!r}; expected one of {DATASET_FORMATS}")


# --- batch evaluation --------------------------------------------------------

@dataclass
class BenchEnvironment:
    """Per-item factories for everything a session needs.

    Gateways must be built fresh per item (an ordered script shared across
    concurrent sessions would interleave); registries may be shared when
    their backends are stateless.
    """

    manifest_for: Callable[[MCQItem], VideoManifest]
    captioner_for: Callable[[MCQItem], ClipCaptioner]
    registry_for: Callable[[MCQItem], ToolRegistry]
    gateway_for: Callable[[MCQItem], LlmGateway] | None = None


@dataclass(frozen=True)
class RuntimeStats:
    total_s: float = 0.0
    mean_item_s: float = 0.0


@dataclass(frozen=True)
class EvalReport:
    total: int
    scored: int
    correct: int
    unscored: int
    errors: int
    accuracy: float
    per_type_accuracy: dict[str, float]
    histogram: dict[int, float]
    per_type_mean_calls: dict[str, float]
    per_tool_mean_calls: dict[str, float]
    per_type_per_tool_mean_calls: dict[str, dict[str, float]]
    runtime: RuntimeStats = field(compare=False, default_factory=RuntimeStats)


def _run_one(
    item: MCQItem,
    cfg: SessionConfig,
    env: BenchEnvironment,
    clock: Callable[[], float],
) -> RunTrace:
    started = clock()
    try:
        gateway = env.gateway_for(item) if env.gateway_for else build_gateway(cfg.gateway)
        result = run_session(
            env.manifest_for(item),
            item,
            cfg,
            env.registry_for(item),
            env.captioner_for(item),
            gateway=gateway,
        )
    except Exception as e:
        logger.warning("session for %s failed: %s", item.item_id, e)
        return error_trace(item.item_id, item.video_id, item.question_type, item.gold_label, str(e))
    wall = (clock() - started) * 1000.0
    return trace_from_result(
        item.item_id, item.video_id, item.question_type, result, item.gold_label, wall
    )


def evaluate(
    items: Sequence[MCQItem],
    cfg: SessionConfig,
    concurrency: int = 1,
    *,
    env: BenchEnvironment,
    item_timeout_s: float | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> tuple[EvalReport, list[RunTrace]]:
    """Run every item through a session and aggregate.

    Individual session errors become incorrect-with-error traces and never
    abort the batch; ``item_timeout_s`` bounds each item the same way.
    """
    if not items:
        raise DatasetError("no items to evaluate")
    if concurrency < 1:
        raise ValueError(f"concurrency must be >= 1, got {concurrency}")
    ids = [item.item_id for item in items]
    if len(set(ids)) != len(ids):
        raise DatasetError("duplicate item_ids in evaluation batch")
    started = clock()
    traces: dict[str, RunTrace] = {}
    if concurrency == 1:
        for item in items:
            traces[item.item_id] = _run_one(item, cfg, env, clock)
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            futures = {
                item.item_id: pool.submit(_run_one, item, cfg, env, clock)
                for item in items
            }
            for item in items:
                future = futures[item.item_id]
                try:
                    traces[item.item_id] = future.result(timeout=item_timeout_s)
                except Exception as e:  # timeout or unexpected failure
                    traces[item.item_id] = error_trace(
                        item.item_id, item.video_id, item.question_type, item.gold_label, str(e)
                    )
    total_s = clock() - started
    ordered = [traces[item_id] for item_id in sorted(traces)]
    report = _aggregate(ordered, cfg.max_assessments, total_s)
    return report, ordered


def _aggregate(traces: Sequence[RunTrace], max_assessments: int, total_s: float) -> EvalReport:
    scored = [t for t in traces if t.gold_label is not None]
    correct = sum(1 for t in scored if t.correct)
    errors = sum(1 for t in traces if t.error is not None)
    stats = tool_call_stats(
        [t for t in traces if t.error is None], max_assessments=max_assessments
    )
    per_type_acc: dict[str, float] = {}
    for qtype in sorted({t.question_type for t in scored}):
        of_type = [t for t in scored if t.question_type == qtype]
        per_type_acc[qtype] = sum(1 for t in of_type if t.correct) / len(of_type)
    return EvalReport(
        total=len(traces),
        scored=len(scored),
        correct=correct,
        unscored=len(traces) - len(scored),
        errors=errors,
        accuracy=correct / len(scored) if scored else 0.0,
        per_type_accuracy=per_type_acc,
        histogram=stats.histogram,
        per_type_mean_calls=stats.per_type_mean_calls,
        per_tool_mean_calls=stats.per_tool_mean_calls,
        per_type_per_tool_mean_calls=stats.per_type_per_tool_mean_calls,
        runtime=RuntimeStats(
            total_s=total_s, mean_item_s=total_s / len(traces) if traces else 0.0
        ),
    )


# --- trace analytics ---------------------------------------------------------

@dataclass(frozen=True)
class ToolCallStats:
    empty: bool
    histogram: dict[int, float]
    per_type_mean_calls: dict[str, float]
    per_tool_mean_calls: dict[str, float]
    per_type_per_tool_mean_calls: dict[str, dict[str, float]]


def tool_call_stats(traces: Sequence[RunTrace], max_assessments: int = 5) -> ToolCallStats:
    """Histogram of tool-call counts plus per-question-type and per-tool means.

    The histogram maps each observed call count to its proportion of traces
    (proportions sum to 1); counts can never exceed the assessment budget
    minus one, and a violation means corrupt traces, not a statistic.
    """
    if not traces:
        return ToolCallStats(True, {}, {}, {}, {})
    max_calls = max_assessments - 1
    counts: dict[int, int] = {}
    for trace in traces:
        if trace.tool_calls > max_calls:
            raise AnalyticsError(
                f"trace {trace.item_id} has {trace.tool_calls} tool calls, "
                f"budget allows at most {max_calls}"
            )
        counts[trace.tool_calls] = counts.get(trace.tool_calls, 0) + 1
    n = len(traces)
    histogram = {calls: counts[calls] / n for calls in sorted(counts)}
    tool_names = sorted({name for t in traces for name in t.per_tool_calls})
    per_tool = {
        name: sum(t.per_tool_calls.get(name, 0) for t in traces) / n for name in tool_names
    }
    per_type_mean: dict[str, float] = {}
    per_type_per_tool: dict[str, dict[str, float]] = {}
    for qtype in sorted({t.question_type for t in traces}):
        of_type = [t for t in traces if t.question_type == qtype]
        per_type_mean[qtype] = sum(t.tool_calls for t in of_type) / len(of_type)
        type_tools = sorted({name for t in of_type for name in t.per_tool_calls})
        per_type_per_tool[qtype] = {
            name: sum(t.per_tool_calls.get(name, 0) for t in of_type) / len(of_type)
            for name in type_tools
        }
    return ToolCallStats(False, histogram, per_type_mean, per_tool, per_type_per_tool)


# --- ablation sweep ------------------------------------------------------------

ABLATION_SETTING_NAMES = ("baseline", "setting1", "setting2", "setting3", "setting4")


def ablation_flags(mode: str) -> dict[str, AblationFlags]:
    """Flag sets for the four settings, 'stacked' (each built on the previous
    one) or 'isolated' (one mechanism at a time)."""
    if mode == "stacked":
        return {
            "baseline": AblationFlags(),
            "setting1": AblationFlags(no_tool_confidence=True),
            "setting2": AblationFlags(no_tool_confidence=True, no_plan_adjust=True),
            "setting3": AblationFlags(no_tool_confidence=True, no_plan_adjust=True, no_cot=True),
            "setting4": AblationFlags(
                no_tool_confidence=True, no_plan_adjust=True, no_cot=True, no_tools=True
            ),
        }
    if mode == "isolated":
        return {
            "baseline": AblationFlags(),
            "setting1": AblationFlags(no_tool_confidence=True),
            "setting2": AblationFlags(no_plan_adjust=True),
            "setting3": AblationFlags(no_cot=True),
            "setting4": AblationFlags(no_tools=True),
        }
    raise ValueError(f"unknown ablation mode {mode!r}; expected 'stacked' or 'isolated'")


@dataclass
class AblationReport:
    mode: str
    reports: dict[str, EvalReport]  # keyed by setting name, insertion-ordered

    def render_table(self) -> str:
        rows = [f"{'setting':<10} {'accuracy':>8} {'scored':>6} {'errors':>6} {'mean calls':>10}"]
        for name in ABLATION_SETTING_NAMES:
            report = self.reports[name]
            mean_calls = sum(c * p for c, p in report.histogram.items())
            rows.append(
                f"{name:<10} {report.accuracy:>8.3f} {report.scored:>6d} "
                f"{report.errors:>6d} {mean_calls:>10.2f}"
            )
        return "\n".join(rows)


def ablation_run(
    items: Sequence[MCQItem],
    cfg: SessionConfig,
    concurrency: int = 1,
    *,
    env: BenchEnvironment,
    mode: str = "stacked",
) -> AblationReport:
    """One evaluation per ablation setting plus the baseline."""
    reports: dict[str, EvalReport] = {}
    for name, flags in ablation_flags(mode).items():
        setting_cfg = replace(cfg, ablation=flags)
        report, _ = evaluate(items, setting_cfg, concurrency, env=env)
        reports[name] = report
    return AblationReport(mode=mode, reports=reports)
