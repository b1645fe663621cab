"""Memory bank: merge semantics, prompt rendering, snapshots."""

from __future__ import annotations

import pytest

from videoqa_agent.bank import (
    BankError,
    MemoryBank,
    MergeOrderError,
    SegmentCaption,
    ToolRecord,
    VideoSummary,
    merge,
    read_snapshot,
    render_for_prompt,
    snapshot_lines,
    write_snapshot,
)
from videoqa_agent.protocol import (
    BBox,
    FrameRange,
    ToolCommand,
    ToolKind,
    ToolReturn,
    TrackPoint,
)


def make_bank(records=()) -> MemoryBank:
    captions = (
        SegmentCaption(0, 0.0, 4.0, "a man enters the room"),
        SegmentCaption(1, 4.0, 8.0, "he sits at the desk"),
    )
    return MemoryBank(captions, VideoSummary("a man works at a desk", 2), tuple(records))


def track_record(step_t: int, confidence: float = 0.85) -> ToolRecord:
    command = ToolCommand(ToolKind.TRACK, FrameRange(10, 12), object_name="phone")
    returns = ToolReturn(
        kind=ToolKind.TRACK,
        track_points=tuple(
            TrackPoint(f, "phone", BBox(1, 1, 5, 5), confidence) for f in range(10, 13)
        ),
    )
    return ToolRecord(step_t=step_t, command=command, returns=returns)


class TestMerge:
    def test_append_to_empty(self):
        bank = merge(make_bank(), track_record(1))
        assert len(bank.tool_records) == 1

    def test_equal_step_appends_after_existing(self):
        bank = make_bank([track_record(1), track_record(2)])
        merged = merge(bank, track_record(2))
        assert len(merged.tool_records) == 3
        assert merged.tool_records[:2] == bank.tool_records

    def test_ordering_violation_rejected(self):
        bank = make_bank([track_record(3)])
        with pytest.raises(MergeOrderError):
            merge(bank, track_record(2))
        # the opposite order is fine
        merge(make_bank([track_record(2)]), track_record(3))

    def test_merge_never_touches_captions_or_summary(self):
        bank = make_bank()
        merged = merge(bank, track_record(1))
        assert merged.captions == bank.captions
        assert merged.summary == bank.summary

    def test_record_count_after_k_merges(self):
        bank = make_bank()
        for k in range(1, 5):
            bank = merge(bank, track_record(k))
            assert len(bank.tool_records) == k


class TestInvariants:
    def test_caption_ids_must_be_contiguous(self):
        with pytest.raises(BankError):
            MemoryBank(
                (SegmentCaption(1, 0.0, 4.0, "x"),),
                VideoSummary("s", 1),
            )

    def test_summary_count_must_match(self):
        with pytest.raises(BankError):
            MemoryBank(
                (SegmentCaption(0, 0.0, 4.0, "x"),),
                VideoSummary("s", 3),
            )

    def test_segment_caption_time_order(self):
        with pytest.raises(BankError):
            SegmentCaption(0, 4.0, 4.0, "x")

    def test_record_step_must_be_positive(self):
        with pytest.raises(BankError):
            track_record(0)


class TestRenderForPrompt:
    def test_empty_tools_block(self):
        text = render_for_prompt(make_bank())
        assert "Caption:" in text
        assert "Summary:" in text
        assert "Tools return value:" in text
        assert "(none)" in text
        assert "a man enters the room" in text
        assert "he sits at the desk" in text

    def test_confidence_passthrough(self):
        text = render_for_prompt(make_bank([track_record(1, confidence=0.85)]))
        assert "0.85" in text

    def test_deterministic(self):
        bank = make_bank([track_record(1)])
        assert render_for_prompt(bank) == render_for_prompt(bank)

    def test_caption_lines_numbered_with_bounds(self):
        text = render_for_prompt(make_bank())
        assert "segment 0 (0-4 s): a man enters the room" in text

    def test_confidence_stripping(self):
        text = render_for_prompt(make_bank([track_record(1)]), include_tool_confidence=False)
        assert "confidence" not in text


class TestSnapshot:
    def test_line_tags_and_field_names(self):
        lines = snapshot_lines(make_bank([track_record(1)]))
        assert '"tag": "caption"' in lines[0]
        assert '"segment_id": 0' in lines[0]
        assert '"start_s": 0.0' in lines[0] and '"end_s": 4.0' in lines[0]
        assert '"tag": "summary"' in lines[2]
        assert '"tag": "tool"' in lines[3]
        assert '"step_t": 1' in lines[3]
        assert '"command"' in lines[3] and '"returns"' in lines[3]

    def test_round_trip(self, tmp_path):
        bank = make_bank([track_record(1), track_record(2)])
        path = tmp_path / "bank.jsonl"
        write_snapshot(bank, path)
        loaded = read_snapshot(path)
        assert loaded.captions == bank.captions
        assert loaded.summary == bank.summary
        assert len(loaded.tool_records) == 2
        assert loaded.tool_records[0].command == bank.tool_records[0].command
        assert (
            loaded.tool_records[0].returns.track_points
            == bank.tool_records[0].returns.track_points
        )
