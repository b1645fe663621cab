"""Dataset adapters, batch evaluation, analytics, ablation sweep."""

from __future__ import annotations

import json

import pytest

from videoqa_agent.bench import (
    AnalyticsError,
    BenchEnvironment,
    DatasetError,
    ablation_flags,
    ablation_run,
    evaluate,
    load_dataset,
    tool_call_stats,
)
from videoqa_agent.questions import QuestionType
from videoqa_agent.session import SessionConfig
from videoqa_agent.traces import RunTrace, read_traces, write_traces

from helpers import (
    NO_INFO_REPLY,
    TRACK_ACTION_REPLY,
    build_env,
    make_item,
    yes_reply,
)

SUMMARY = "the summary"


def quick_accept(label="B"):
    return [SUMMARY, yes_reply(label, 5)]


class TestLoadDatasetGeneric:
    def test_two_items(self, tmp_path):
        path = tmp_path / "items.jsonl"
        rows = [
            {
                "item_id": "q1",
                "video_id": "v1",
                "question": "what?",
                "options": {"A": "x", "B": "y"},
                "gold_label": "A",
            },
            {
                "item_id": "q2",
                "video_id": "v2",
                "question": "why?",
                "options": ["x", "y", "z"],
            },
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        items = load_dataset(path, "generic")
        assert len(items) == 2
        assert items[0].gold_label == "A"
        assert items[1].gold_label is None
        assert items[1].labels() == ("A", "B", "C")

    def test_schema_error_carries_location(self, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text('{"item_id": "q1"}\n')
        with pytest.raises(DatasetError, match="items.jsonl:1"):
            load_dataset(path, "generic")

    def test_duplicate_labels_rejected(self, tmp_path):
        path = tmp_path / "items.jsonl"
        row = {
            "item_id": "q1",
            "video_id": "v1",
            "question": "what?",
            "options": {"A": "x", "a": "y"},
        }
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(DatasetError):
            load_dataset(path, "generic")

    def test_unknown_format(self, tmp_path):
        path = tmp_path / "items.jsonl"
        path.write_text("{}\n")
        with pytest.raises(DatasetError, match="unknown dataset format"):
            load_dataset(path, "mystery")


class TestLoadDatasetEgoschemaLike:
    def test_options_and_gold_mapping(self, tmp_path):
        path = tmp_path / "items.json"
        records = [
            {
                "q_uid": "u1",
                "google_drive_id": "g1",
                "question": "what happened?",
                "option 0": "a",
                "option 1": "b",
                "option 2": "c",
                "option 3": "d",
                "option 4": "e",
                "answer": 2,
            },
            {
                "q_uid": "u2",
                "question": "hidden gold?",
                "option 0": "a",
                "option 1": "b",
            },
        ]
        path.write_text(json.dumps(records))
        items = load_dataset(path, "egoschema-like")
        assert items[0].gold_label == "C"
        assert items[0].video_id == "g1"
        assert items[1].gold_label is None


class TestLoadDatasetNextqaLike:
    def test_type_tags_mapped(self, tmp_path):
        path = tmp_path / "items.csv"
        path.write_text(
            "video,qid,type,answer,question,a0,a1,a2,a3,a4\n"
            "v1,1,CW,0,why?,a,b,c,d,e\n"
            "v1,2,TN,3,when?,a,b,c,d,e\n"
            "v2,1,DC,1,where?,a,b,c,d,e\n"
        )
        items = load_dataset(path, "nextqa-like")
        assert [i.question_type for i in items] == [
            QuestionType.CAUSAL,
            QuestionType.TEMPORAL,
            QuestionType.DESCRIPTIVE,
        ]
        assert items[1].gold_label == "D"
        assert items[0].item_id == "v1_1"

    def test_intentqa_like_shares_layout(self, tmp_path):
        path = tmp_path / "items.csv"
        path.write_text(
            "video,qid,type,answer,question,a0,a1,a2,a3,a4\n"
            "v9,4,CH,2,how?,a,b,c,d,e\n"
        )
        items = load_dataset(path, "intentqa-like")
        assert items[0].question_type is QuestionType.CAUSAL
        assert items[0].gold_label == "C"

    def test_bad_answer_index_diagnosed(self, tmp_path):
        path = tmp_path / "items.csv"
        path.write_text(
            "video,qid,type,answer,question,a0,a1\nv1,1,CW,9,why?,a,b\n"
        )
        with pytest.raises(DatasetError, match="items.csv:2"):
            load_dataset(path, "nextqa-like")


class TestEvaluate:
    def test_counting_three_of_four_correct(self):
        items = [make_item(f"q{i}", gold="B") for i in range(4)]
        replies = {f"q{i}": quick_accept("B") for i in range(3)}
        replies["q3"] = quick_accept("A")
        report, traces = evaluate(
            items, SessionConfig(), env=build_env(replies)
        )
        assert report.accuracy == 0.75
        assert report.total == 4
        assert report.scored == 4
        assert len(traces) == 4

    def test_all_zero_call_histogram(self):
        items = [make_item(f"q{i}") for i in range(3)]
        replies = {f"q{i}": quick_accept() for i in range(3)}
        report, _ = evaluate(items, SessionConfig(), env=build_env(replies))
        assert report.histogram == {0: 1.0}

    def test_unscored_items_excluded_from_denominator(self):
        items = [make_item("q0", gold="B"), make_item("q1", gold=None)]
        replies = {"q0": quick_accept("B"), "q1": quick_accept("A")}
        report, traces = evaluate(items, SessionConfig(), env=build_env(replies))
        assert report.accuracy == 1.0
        assert report.scored == 1
        assert report.unscored == 1
        assert traces[1].correct is None

    def test_session_error_scored_incorrect_without_aborting(self):
        items = [make_item("q0", gold="B"), make_item("q1", gold="B")]
        replies = {"q0": quick_accept("B"), "q1": []}  # q1 has no script at all
        report, traces = evaluate(items, SessionConfig(), env=build_env(replies))
        assert report.errors == 1
        assert report.accuracy == 0.5
        assert traces[1].error is not None

    def test_empty_batch_rejected(self):
        with pytest.raises(DatasetError):
            evaluate([], SessionConfig(), env=build_env({}))

    def test_concurrency_one_and_eight_identical(self):
        items = [make_item(f"q{i:02d}", gold="B") for i in range(20)]
        replies = {}
        for i in range(20):
            if i % 3 == 0:
                replies[f"q{i:02d}"] = quick_accept("B")
            else:
                replies[f"q{i:02d}"] = [
                    SUMMARY,
                    NO_INFO_REPLY,
                    TRACK_ACTION_REPLY,
                    yes_reply("B" if i % 3 == 1 else "A", 5),
                ]
        env = build_env(replies)
        sequential, _ = evaluate(items, SessionConfig(), 1, env=env)
        concurrent, _ = evaluate(items, SessionConfig(), 8, env=env)
        assert sequential == concurrent


def trace_with(calls: int, qtype=QuestionType.UNKNOWN, per_tool=None, correct=True):
    return RunTrace(
        item_id=f"t{calls}-{qtype.value}",
        video_id="v",
        question_type=qtype.value,
        final_label="A",
        gold_label="A" if correct else "B",
        correct=correct,
        assessments=calls + 1,
        tool_calls=calls,
        per_tool_calls=per_tool or {},
        terminated_by="confidence_met",
    )


class TestToolCallStats:
    def test_empty_flagged_not_divided(self):
        stats = tool_call_stats([])
        assert stats.empty
        assert stats.histogram == {}

    def test_hand_built_histogram(self):
        traces = [trace_with(0), trace_with(0), trace_with(2), trace_with(4)]
        for i, t in enumerate(traces):
            t.item_id = f"t{i}"
        stats = tool_call_stats(traces, max_assessments=5)
        assert stats.histogram == {0: 0.5, 2: 0.25, 4: 0.25}
        mean = sum(c * p for c, p in stats.histogram.items())
        assert mean == pytest.approx(1.5)

    def test_causal_per_tool_means(self):
        traces = [
            trace_with(1, QuestionType.CAUSAL, {"caption": 1}),
            trace_with(3, QuestionType.CAUSAL, {"caption": 1, "detect": 2}),
        ]
        traces[0].item_id, traces[1].item_id = "a", "b"
        stats = tool_call_stats(traces, max_assessments=5)
        assert stats.per_type_mean_calls["Causal"] == pytest.approx(2.0)
        assert stats.per_type_per_tool_mean_calls["Causal"] == {
            "caption": 1.0,
            "detect": 1.0,
        }

    def test_histogram_proportions_sum_to_one(self):
        traces = [trace_with(i % 5) for i in range(37)]
        for i, t in enumerate(traces):
            t.item_id = f"t{i}"
        stats = tool_call_stats(traces, max_assessments=6)
        assert sum(stats.histogram.values()) == pytest.approx(1.0, abs=1e-9)

    def test_over_budget_count_is_an_error(self):
        trace = trace_with(4)
        with pytest.raises(AnalyticsError):
            tool_call_stats([trace], max_assessments=3)


class TestTracePersistence:
    def test_round_trip(self, tmp_path):
        traces = [trace_with(0), trace_with(2)]
        traces[0].item_id, traces[1].item_id = "a", "b"
        path = tmp_path / "traces.jsonl"
        write_traces(traces, path)
        loaded = read_traces(path)
        assert [t.item_id for t in loaded] == ["a", "b"]
        assert loaded[1].tool_calls == 2


class TestAblationRun:
    def evidence_env(self, items):
        """Correct answer requires tool evidence: a matcher rule fires only
        once the tracked-phone observation is in the prompt."""
        replies, rules = {}, {}
        for item in items:
            replies[item.item_id] = [
                SUMMARY,
                NO_INFO_REPLY,
                TRACK_ACTION_REPLY,
                NO_INFO_REPLY,  # consumed only in ablated runs that skip tools
            ]
            rules[item.item_id] = [("Object Tracking Tool", yes_reply("B", 5))]
        return build_env(replies, rules)

    def test_no_tools_setting_scores_below_baseline(self):
        items = [make_item(f"q{i}", gold="B") for i in range(4)]
        report = ablation_run(
            items, SessionConfig(), env=self.evidence_env(items), mode="stacked"
        )
        assert report.reports["baseline"].accuracy == 1.0
        assert report.reports["setting4"].accuracy == 0.0
        assert report.reports["setting4"].accuracy < report.reports["baseline"].accuracy

    def test_identical_behavior_identical_accuracy(self):
        items = [make_item(f"q{i}", gold="B") for i in range(3)]
        replies = {item.item_id: quick_accept("B") for item in items}
        report = ablation_run(items, SessionConfig(), env=build_env(replies), mode="stacked")
        accuracies = {name: r.accuracy for name, r in report.reports.items()}
        assert set(accuracies.values()) == {1.0}

    def test_rows_ordered_baseline_then_settings(self):
        items = [make_item("q0", gold="B")]
        replies = {"q0": quick_accept("B")}
        report = ablation_run(items, SessionConfig(), env=build_env(replies))
        assert list(report.reports) == [
            "baseline",
            "setting1",
            "setting2",
            "setting3",
            "setting4",
        ]
        table = report.render_table()
        lines = table.splitlines()
        assert lines[1].startswith("baseline")
        assert lines[-1].startswith("setting4")

    def test_stacked_flags_accumulate(self):
        flags = ablation_flags("stacked")
        assert flags["setting2"].no_tool_confidence and flags["setting2"].no_plan_adjust
        assert flags["setting4"].no_tools and flags["setting4"].no_cot

    def test_isolated_flags_are_single(self):
        flags = ablation_flags("isolated")
        assert flags["setting2"].no_plan_adjust
        assert not flags["setting2"].no_tool_confidence

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            ablation_flags("sideways")
