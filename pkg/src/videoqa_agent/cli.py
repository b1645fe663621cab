"""Command line: run one session, evaluate a dataset, recompute analytics,
or sweep the ablation settings.

File layout conventions: manifests are 'key: value' files named
<video_id>.manifest; scripted captions are '<video_id>.captions' tab tables;
simulated tool bundles live in a directory (optionally one subdirectory per
video_id). See the README for the formats.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .bench import (
    BenchEnvironment,
    ablation_run,
    evaluate,
    load_dataset,
    tool_call_stats,
)
from .captioning import ScriptedCaptioner
from .fusion import FusionParams
from .gateway import GatewayConfig
from .questions import MCQItem
from .segments import read_manifest
from .session import AblationFlags, SessionConfig, run_session
from .simulated import load_suite
from .traces import read_traces, trace_from_result, write_traces


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("session configuration")
    group.add_argument("--fps-d", type=float, default=1.0, help="downsampled frame rate")
    group.add_argument("--segment-seconds", type=float, default=4.0, help="segment length in seconds")
    group.add_argument("--cf-thr", type=int, default=5, help="answer confidence threshold (0-5)")
    group.add_argument("--max-assessments", type=int, default=5, help="assessment budget per question")
    group.add_argument("--alpha", type=int, default=5, help="detection neighborhood padding in frames")
    group.add_argument("--init-conf-thr", type=float, default=0.5, help="tracking init confidence threshold")
    group.add_argument("--no-tool-confidence", action="store_true", help="strip confidence from tool evidence")
    group.add_argument("--no-plan-adjust", action="store_true", help="freeze the plan after the first round")
    group.add_argument("--no-cot", action="store_true", help="elicit bare tool commands, no plan prose")
    group.add_argument("--no-tools", action="store_true", help="answer from the general context only")
    gw = parser.add_argument_group("gateway")
    gw.add_argument("--backend", choices=["scripted", "remote"], default="scripted")
    gw.add_argument("--endpoint", default="", help="fixture path (scripted) or chat URL (remote)")
    gw.add_argument("--model", default="gpt-4o")
    gw.add_argument("--temperature", type=float, default=0.0)
    gw.add_argument("--retries", type=int, default=3)
    gw.add_argument("--timeout", type=float, default=60.0)


def _config_from_args(args: argparse.Namespace) -> SessionConfig:
    return SessionConfig(
        fps_d=args.fps_d,
        segment_seconds=args.segment_seconds,
        cf_thr=args.cf_thr,
        max_assessments=args.max_assessments,
        fusion=FusionParams(alpha=args.alpha, init_conf_thr=args.init_conf_thr),
        ablation=AblationFlags(
            no_tool_confidence=args.no_tool_confidence,
            no_plan_adjust=args.no_plan_adjust,
            no_cot=args.no_cot,
            no_tools=args.no_tools,
        ),
        gateway=GatewayConfig(
            backend=args.backend,
            endpoint=args.endpoint,
            model=args.model,
            temperature=args.temperature,
            max_retries=args.retries,
            timeout_s=args.timeout,
        ),
    )


def _environment_from_args(args: argparse.Namespace, cfg: SessionConfig) -> BenchEnvironment:
    manifest_dir = Path(args.manifests)
    captions_dir = Path(args.captions)
    tools_dir = Path(args.tools)

    def manifest_for(item: MCQItem):
        return read_manifest(manifest_dir / f"{item.video_id}.manifest")

    def captioner_for(item: MCQItem):
        return ScriptedCaptioner.from_file(
            captions_dir / f"{item.video_id}.captions",
            egocentric_markers=args.egocentric_markers,
        )

    def registry_for(item: MCQItem):
        manifest = manifest_for(item)
        total = int(manifest.length_s * cfg.fps_d)
        bundle = tools_dir / item.video_id
        if not bundle.is_dir():
            bundle = tools_dir
        return load_suite(bundle, total_frames=total, fusion=cfg.fusion).build_registry()

    return BenchEnvironment(
        manifest_for=manifest_for,
        captioner_for=captioner_for,
        registry_for=registry_for,
    )


def _add_environment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifests", required=True, help="directory of <video_id>.manifest files")
    parser.add_argument("--captions", required=True, help="directory of <video_id>.captions tables")
    parser.add_argument("--tools", required=True, help="simulated tool bundle directory")
    parser.add_argument(
        "--egocentric-markers",
        action="store_true",
        help="captions use '#C'/'#O' camera-wearer prefixes",
    )


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    items = load_dataset(args.dataset, args.format)
    by_id = {item.item_id: item for item in items}
    if args.item_id:
        if args.item_id not in by_id:
            print(f"item {args.item_id!r} not in dataset", file=sys.stderr)
            return 2
        item = by_id[args.item_id]
    else:
        item = items[0]
    env = _environment_from_args(args, cfg)
    result = run_session(
        env.manifest_for(item), item, cfg, env.registry_for(item), env.captioner_for(item)
    )
    trace = trace_from_result(
        item.item_id, item.video_id, item.question_type, result, item.gold_label
    )
    print(f"item:        {item.item_id}")
    print(f"answer:      {result.final_answer.option_label or '(none)'}")
    print(f"confidence:  {result.final_answer.confidence}")
    print(f"assessments: {len(result.assessments)}")
    print(f"tool calls:  {result.tool_calls}")
    print(f"terminated:  {result.terminated_by.value}")
    if item.gold_label is not None:
        print(f"gold:        {item.gold_label} ({'correct' if trace.correct else 'incorrect'})")
    if args.trace_out:
        write_traces([trace], args.trace_out)
        print(f"trace written to {args.trace_out}")
    return 0


def _print_report(report) -> None:
    print(f"items:    {report.total} (scored {report.scored}, unscored {report.unscored}, errors {report.errors})")
    print(f"accuracy: {report.accuracy:.3f}")
    if report.per_type_accuracy:
        for qtype, acc in report.per_type_accuracy.items():
            print(f"  {qtype:<12} {acc:.3f}")
    print("tool-call histogram:")
    for calls, proportion in report.histogram.items():
        print(f"  {calls} calls: {proportion:.3f}")
    if report.per_tool_mean_calls:
        print("mean calls per tool:")
        for name, mean in report.per_tool_mean_calls.items():
            print(f"  {name:<14} {mean:.3f}")
    print(f"runtime: {report.runtime.total_s:.2f}s total, {report.runtime.mean_item_s:.3f}s/item")


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    items = load_dataset(args.dataset, args.format)
    env = _environment_from_args(args, cfg)
    report, traces = evaluate(items, cfg, args.concurrency, env=env)
    _print_report(report)
    if args.traces_out:
        write_traces(traces, args.traces_out)
        print(f"traces written to {args.traces_out}")
    if args.report_out:
        Path(args.report_out).write_text(json.dumps(asdict(report), indent=2) + "\n")
        print(f"report written to {args.report_out}")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    traces = read_traces(args.traces)
    stats = tool_call_stats(
        [t for t in traces if t.error is None], max_assessments=args.max_assessments
    )
    if stats.empty:
        print("no traces")
        return 0
    print("tool-call histogram:")
    for calls, proportion in stats.histogram.items():
        print(f"  {calls} calls: {proportion:.3f}")
    print("mean calls per question type:")
    for qtype, mean in stats.per_type_mean_calls.items():
        print(f"  {qtype:<12} {mean:.3f}")
    print("mean calls per tool:")
    for name, mean in stats.per_tool_mean_calls.items():
        print(f"  {name:<14} {mean:.3f}")
    for qtype, tools in stats.per_type_per_tool_mean_calls.items():
        print(f"per-tool means for {qtype}:")
        for name, mean in tools.items():
            print(f"  {name:<14} {mean:.3f}")
    if args.report_out:
        Path(args.report_out).write_text(json.dumps(asdict(stats), indent=2) + "\n")
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    items = load_dataset(args.dataset, args.format)
    env = _environment_from_args(args, cfg)
    modes = ["stacked", "isolated"] if args.mode == "both" else [args.mode]
    payload = {}
    for mode in modes:
        report = ablation_run(items, cfg, args.concurrency, env=env, mode=mode)
        print(f"--- ablation ({mode}) ---")
        print(report.render_table())
        payload[mode] = {name: asdict(rep) for name, rep in report.reports.items()}
    if args.report_out:
        Path(args.report_out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"report written to {args.report_out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="videoqa",
        description="Confidence-guided tool-calling agent for video multiple-choice QA",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a single question session")
    run_p.add_argument("--dataset", required=True)
    run_p.add_argument("--format", choices=["generic", "egoschema-like", "nextqa-like", "intentqa-like"], default="generic")
    run_p.add_argument("--item-id", default=None, help="defaults to the first item")
    run_p.add_argument("--trace-out", default=None)
    _add_environment_flags(run_p)
    _add_config_flags(run_p)
    run_p.set_defaults(fn=_cmd_run)

    eval_p = sub.add_parser("eval", help="evaluate a dataset")
    eval_p.add_argument("--dataset", required=True)
    eval_p.add_argument("--format", choices=["generic", "egoschema-like", "nextqa-like", "intentqa-like"], default="generic")
    eval_p.add_argument("--concurrency", type=int, default=1)
    eval_p.add_argument("--traces-out", default=None)
    eval_p.add_argument("--report-out", default=None)
    _add_environment_flags(eval_p)
    _add_config_flags(eval_p)
    eval_p.set_defaults(fn=_cmd_eval)

    stats_p = sub.add_parser("stats", help="recompute analytics from stored traces")
    stats_p.add_argument("--traces", required=True)
    stats_p.add_argument("--max-assessments", type=int, default=5)
    stats_p.add_argument("--report-out", default=None)
    stats_p.set_defaults(fn=_cmd_stats)

    ablate_p = sub.add_parser("ablate", help="sweep the ablation settings")
    ablate_p.add_argument("--dataset", required=True)
    ablate_p.add_argument("--format", choices=["generic", "egoschema-like", "nextqa-like", "intentqa-like"], default="generic")
    ablate_p.add_argument("--concurrency", type=int, default=1)
    ablate_p.add_argument("--mode", choices=["stacked", "isolated", "both"], default="stacked")
    ablate_p.add_argument("--report-out", default=None)
    _add_environment_flags(ablate_p)
    _add_config_flags(ablate_p)
    ablate_p.set_defaults(fn=_cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
