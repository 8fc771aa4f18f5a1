from __future__ import annotations

import json
import math
import random

import pytest

from tourforge.annotations import (
    FrameRecord,
    VideoAnnotation,
    apply_filter,
    filter_frames,
    parse_annotations,
    room_entropy,
    sparse_sample,
    wrap_half_open,
)
from tourforge.errors import AnnotationParseError, DuplicateFrameError, SchemaError
from tourforge.registry import ROOM_TYPE_COUNT, RoomTypeRegistry


def make_line(**overrides) -> str:
    record = {
        "video_id": "v0",
        "frame_index": 0,
        "timestamp_s": 0.0,
        "room_probs": [1.0] + [0.0] * 11,
        "person": False,
        "outdoor": False,
        "objects": [],
        "region_count": 3,
    }
    record.update(overrides)
    return json.dumps(record)


def make_frame(
    frame_index: int = 0,
    timestamp_s: float | None = None,
    room: int = 0,
    person: bool = False,
    outdoor: bool = False,
    region_count: int = 3,
    video_id: str = "v0",
) -> FrameRecord:
    probs = [0.0] * ROOM_TYPE_COUNT
    probs[room] = 1.0
    return FrameRecord(
        video_id=video_id,
        frame_index=frame_index,
        timestamp_s=float(frame_index) if timestamp_s is None else timestamp_s,
        room_probs=tuple(probs),
        person=person,
        outdoor=outdoor,
        objects=(),
        region_count=region_count,
    )


def test_parse_groups_and_sorts(registry):
    lines = [
        make_line(video_id="b", frame_index=1, timestamp_s=1.0),
        make_line(video_id="a", frame_index=0, timestamp_s=0.0),
        make_line(video_id="b", frame_index=0, timestamp_s=0.0),
    ]
    videos = parse_annotations(lines, registry)
    assert [v.video_id for v in videos] == ["a", "b"]
    assert [f.frame_index for f in videos[1].frames] == [0, 1]


def test_parse_renormalizes_probs(registry):
    videos = parse_annotations([make_line(room_probs=[2.0] * 12)], registry)
    probs = videos[0].frames[0].room_probs
    assert all(abs(p - 1 / 12) < 1e-12 for p in probs)


def test_parse_rejects_malformed_json(registry):
    with pytest.raises(AnnotationParseError) as err:
        parse_annotations([make_line(), "{not json"], registry)
    # line number points at the bad line
    assert "line 2" in str(err.value)


def test_parse_rejects_missing_field(registry):
    raw = json.loads(make_line())
    del raw["room_probs"]
    with pytest.raises(SchemaError):
        parse_annotations([json.dumps(raw)], registry)


def test_parse_rejects_all_zero_probs(registry):
    with pytest.raises(SchemaError):
        parse_annotations([make_line(room_probs=[0.0] * 12)], registry)


def test_parse_rejects_negative_probs(registry):
    with pytest.raises(SchemaError):
        parse_annotations([make_line(room_probs=[-0.1] + [0.1] * 11)], registry)


def test_parse_rejects_wrong_prob_arity(registry):
    with pytest.raises(SchemaError):
        parse_annotations([make_line(room_probs=[0.5, 0.5])], registry)


def test_parse_duplicate_frame(registry):
    with pytest.raises(DuplicateFrameError):
        parse_annotations([make_line(), make_line()], registry)


def test_parse_unknown_field_strict_vs_lax(registry):
    line = make_line(extra_field=1)
    with pytest.raises(SchemaError):
        parse_annotations([line], registry, strict=True)
    videos = parse_annotations([line], registry, strict=False)
    assert len(videos[0].frames) == 1


def test_parse_requires_increasing_timestamps(registry):
    lines = [
        make_line(frame_index=0, timestamp_s=1.0),
        make_line(frame_index=1, timestamp_s=1.0),
    ]
    with pytest.raises(SchemaError):
        parse_annotations(lines, registry)


def test_parse_wraps_yaw(registry):
    videos = parse_annotations([make_line(yaw_deg=270.0)], registry)
    assert videos[0].frames[0].yaw_deg == -90.0


def test_parse_rejects_bad_action(registry):
    with pytest.raises(SchemaError):
        parse_annotations([make_line(action_to_next="sprint")], registry)


def test_wrap_half_open_bounds():
    assert wrap_half_open(180.0) == -180.0
    assert wrap_half_open(-180.0) == -180.0
    assert wrap_half_open(30.0) == 30.0


def test_argmax_room_tie_breaks_low():
    probs = [0.0] * 12
    probs[2] = 0.5
    probs[5] = 0.5
    frame = make_frame()
    frame = FrameRecord(**{**frame.__dict__, "room_probs": tuple(probs)})
    assert frame.argmax_room() == 2


def test_sparse_sample_half_hz():
    # one minute of 30 fps video sampled at 0.5 fps keeps 30 frames
    frames = [make_frame(i, timestamp_s=i / 30.0) for i in range(1800)]
    kept = sparse_sample(VideoAnnotation("v0", frames), 0.5)
    assert len(kept) == 30
    assert [f.timestamp_s for f in kept[:3]] == [0.0, 2.0, 4.0]


def test_sparse_sample_idempotent():
    rng = random.Random(11)
    for _ in range(50):
        n = rng.randint(1, 200)
        fps = rng.choice([1.0, 5.0, 30.0])
        frames = [make_frame(i, timestamp_s=i / fps) for i in range(n)]
        once = sparse_sample(VideoAnnotation("v0", frames), 0.5)
        twice = sparse_sample(VideoAnnotation("v0", once), 0.5)
        assert [f.frame_index for f in once] == [f.frame_index for f in twice]


def test_sparse_sample_empty_and_bad_rate():
    assert sparse_sample(VideoAnnotation("v0", []), 0.5) == []
    with pytest.raises(ValueError):
        sparse_sample(VideoAnnotation("v0", []), 0.0)


def test_filter_priority():
    # all three causes apply; person wins, then outdoor, then regions
    frame = make_frame(0, person=True, outdoor=True, region_count=0)
    report = filter_frames([frame])
    assert report.rejected == [(0, "person")]
    report = filter_frames([make_frame(1, outdoor=True, region_count=0)])
    assert report.rejected == [(1, "outdoor")]
    report = filter_frames([make_frame(2, region_count=0)])
    assert report.rejected == [(2, "no_regions")]


def test_filter_partitions_input():
    rng = random.Random(3)
    frames = [
        make_frame(
            i,
            person=rng.random() < 0.2,
            outdoor=rng.random() < 0.2,
            region_count=rng.choice([0, 1, 2]),
        )
        for i in range(100)
    ]
    kept, report = apply_filter(frames)
    assert len(kept) + len(report.rejected) == 100
    assert {f.frame_index for f in kept} == set(report.kept)
    assert set(report.kept).isdisjoint(i for i, _ in report.rejected)


def test_room_entropy_bounds():
    assert room_entropy([1.0] + [0.0] * 11) == 0.0
    uniform = [1 / 12] * 12
    assert abs(room_entropy(uniform) - math.log(12)) < 1e-12


def test_room_entropy_rejects_bad_input():
    with pytest.raises(ValueError):
        room_entropy([-0.1] + [1.1 / 11] * 11)
    with pytest.raises(ValueError):
        room_entropy([0.5] * 12)


def test_room_entropy_matches_direct_sum():
    rng = random.Random(5)
    for _ in range(200):
        raw = [rng.random() + 1e-9 for _ in range(12)]
        total = sum(raw)
        probs = [p / total for p in raw]
        expected = -sum(p * math.log(p) for p in probs)
        assert abs(room_entropy(probs) - expected) < 1e-12
