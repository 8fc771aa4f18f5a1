"""Ingest per-frame video annotations: parse, validate, sparse-sample,
and noise-filter them into clean indoor frame sequences.

The annotations file is line-delimited JSON, one frame per line, fields
exactly: video_id, frame_index, timestamp_s, room_probs (12 floats),
person, outdoor, objects ([{label, score}]), region_count, and the
optional yaw_deg / action_to_next. Strict mode rejects unknown fields;
otherwise they are dropped with a warning.
"""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DuplicateFrameError, AnnotationParseError, SchemaError
from .registry import RoomTypeRegistry

log = logging.getLogger(__name__)

ACTIONS = ("forward", "left", "right")

REQUIRED_FIELDS = (
    "video_id",
    "frame_index",
    "timestamp_s",
    "room_probs",
    "person",
    "outdoor",
    "objects",
    "region_count",
)
OPTIONAL_FIELDS = ("yaw_deg", "action_to_next")

REJECT_PERSON = "person"
REJECT_OUTDOOR = "outdoor"
REJECT_NO_REGIONS = "no_regions"


@dataclass(frozen=True)
class ObjectDetection:
    label: str
    score: float


@dataclass(frozen=True)
class FrameRecord:
    """One annotated video frame."""

    video_id: str
    frame_index: int
    timestamp_s: float
    room_probs: tuple[float, ...]
    person: bool
    outdoor: bool
    objects: tuple[ObjectDetection, ...]
    region_count: int
    yaw_deg: float | None = None
    action_to_next: str | None = None

    def argmax_room(self) -> int:
        """Ordinal of the most probable room type; ties break to the
        lowest registry ordinal (first maximum wins)."""
        best = 0
        for i in range(1, len(self.room_probs)):
            if self.room_probs[i] > self.room_probs[best]:
                best = i
        return best


@dataclass
class VideoAnnotation:
    """All frames of one video, sorted by timestamp."""

    video_id: str
    frames: list[FrameRecord]
    source_fps_hint: float | None = None


@dataclass
class FilterReport:
    """Outcome of noise filtering over one frame sequence.

    kept + rejected ids partition the input; each rejected frame carries
    exactly one reason, priority person > outdoor > no_regions.
    """

    kept: list[int] = field(default_factory=list)
    rejected: list[tuple[int, str]] = field(default_factory=list)


def wrap_half_open(deg: float) -> float:
    """Wrap an angle into [-180, 180)."""
    return (deg + 180.0) % 360.0 - 180.0


def _coerce_line(line_no: int, raw: dict, registry: RoomTypeRegistry, strict: bool) -> FrameRecord:
    unknown = set(raw) - set(REQUIRED_FIELDS) - set(OPTIONAL_FIELDS)
    if unknown:
        if strict:
            raise SchemaError(line_no, f"unknown fields {sorted(unknown)}")
        log.warning("line %d: ignoring unknown fields %s", line_no, sorted(unknown))
    missing = [f for f in REQUIRED_FIELDS if f not in raw]
    if missing:
        raise SchemaError(line_no, f"missing required fields {missing}")

    video_id = raw["video_id"]
    if not isinstance(video_id, str) or not video_id:
        raise SchemaError(line_no, "video_id must be a non-empty string")
    frame_index = raw["frame_index"]
    if not isinstance(frame_index, int) or isinstance(frame_index, bool) or frame_index < 0:
        raise SchemaError(line_no, "frame_index must be a non-negative integer")
    timestamp_s = raw["timestamp_s"]
    if not isinstance(timestamp_s, (int, float)) or isinstance(timestamp_s, bool) or timestamp_s < 0:
        raise SchemaError(line_no, "timestamp_s must be a non-negative number")

    probs = raw["room_probs"]
    if not isinstance(probs, list) or len(probs) != len(registry):
        raise SchemaError(line_no, f"room_probs must be an array of {len(registry)} floats")
    vals: list[float] = []
    for p in probs:
        if not isinstance(p, (int, float)) or isinstance(p, bool) or not math.isfinite(p):
            raise SchemaError(line_no, "room_probs entries must be finite numbers")
        if p < 0:
            raise SchemaError(line_no, "room_probs entries must be non-negative")
        vals.append(float(p))
    total = sum(vals)
    if total <= 0.0:
        raise SchemaError(line_no, "room_probs must not be all zero")
    vals = [p / total for p in vals]

    for flag in ("person", "outdoor"):
        if not isinstance(raw[flag], bool):
            raise SchemaError(line_no, f"{flag} must be a boolean")

    objs_raw = raw["objects"]
    if not isinstance(objs_raw, list):
        raise SchemaError(line_no, "objects must be an array")
    objects: list[ObjectDetection] = []
    for obj in objs_raw:
        if not isinstance(obj, dict) or set(obj) != {"label", "score"}:
            raise SchemaError(line_no, "objects entries must be {label, score}")
        score = obj["score"]
        if not isinstance(obj["label"], str) or not isinstance(score, (int, float)) or isinstance(score, bool):
            raise SchemaError(line_no, "object label must be a string and score a number")
        if not 0.0 <= score <= 1.0:
            raise SchemaError(line_no, "object score must lie in [0, 1]")
        objects.append(ObjectDetection(obj["label"], float(score)))

    region_count = raw["region_count"]
    if not isinstance(region_count, int) or isinstance(region_count, bool) or region_count < 0:
        raise SchemaError(line_no, "region_count must be a non-negative integer")

    yaw = raw.get("yaw_deg")
    if yaw is not None:
        if not isinstance(yaw, (int, float)) or isinstance(yaw, bool) or not math.isfinite(yaw):
            raise SchemaError(line_no, "yaw_deg must be a finite number")
        yaw = wrap_half_open(float(yaw))

    action = raw.get("action_to_next")
    if action is not None and action not in ACTIONS:
        raise SchemaError(line_no, f"action_to_next must be one of {ACTIONS}")

    return FrameRecord(
        video_id=video_id,
        frame_index=frame_index,
        timestamp_s=float(timestamp_s),
        room_probs=tuple(vals),
        person=raw["person"],
        outdoor=raw["outdoor"],
        objects=tuple(objects),
        region_count=region_count,
        yaw_deg=yaw,
        action_to_next=action,
    )


def _iter_lines(stream: IO[bytes] | IO[str] | Iterable[str]) -> Iterator[str]:
    if isinstance(stream, io.TextIOBase):
        yield from stream
        return
    for line in stream:
        yield line.decode("utf-8") if isinstance(line, bytes) else line


def parse_annotations(
    stream: IO[bytes] | IO[str] | Iterable[str],
    registry: RoomTypeRegistry,
    strict: bool = False,
) -> list[VideoAnnotation]:
    """Parse an annotations stream into per-video frame sequences.

    Records are grouped by video_id and sorted by timestamp; room_probs
    are renormalized to sum to 1. Duplicate (video_id, frame_index)
    pairs, malformed lines, and schema violations raise with the
    offending line number. Videos come back sorted by video_id.
    """
    by_video: dict[str, list[FrameRecord]] = {}
    seen: dict[tuple[str, int], int] = {}
    for line_no, line in enumerate(_iter_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AnnotationParseError(line_no, f"malformed JSON ({exc.msg})") from exc
        if not isinstance(raw, dict):
            raise AnnotationParseError(line_no, "record must be a JSON object")
        rec = _coerce_line(line_no, raw, registry, strict)
        key = (rec.video_id, rec.frame_index)
        if key in seen:
            raise DuplicateFrameError(
                line_no, f"duplicate frame {key} (first seen at line {seen[key]})"
            )
        seen[key] = line_no
        by_video.setdefault(rec.video_id, []).append(rec)

    videos: list[VideoAnnotation] = []
    for video_id in sorted(by_video):
        frames = sorted(by_video[video_id], key=lambda r: (r.timestamp_s, r.frame_index))
        for earlier, later in zip(frames, frames[1:]):
            if later.timestamp_s <= earlier.timestamp_s:
                raise SchemaError(
                    seen[(video_id, later.frame_index)],
                    f"timestamps must strictly increase within video {video_id!r}",
                )
            if later.frame_index <= earlier.frame_index:
                raise SchemaError(
                    seen[(video_id, later.frame_index)],
                    f"frame_index order disagrees with timestamps in video {video_id!r}",
                )
        videos.append(VideoAnnotation(video_id=video_id, frames=frames))
    return videos


def load_annotations(path: str | Path, registry: RoomTypeRegistry, strict: bool = False) -> list[VideoAnnotation]:
    with open(path, "rb") as fh:
        return parse_annotations(fh, registry, strict=strict)


def sparse_sample(video: VideoAnnotation, rate_hz: float) -> list[FrameRecord]:
    """Greedy left-to-right sampling at rate_hz frames per second.

    Frame i is kept iff it is the first frame with timestamp_s >=
    (number already kept) / rate_hz. Idempotent on already-sampled
    sequences; empty videos yield empty output.
    """
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    kept: list[FrameRecord] = []
    for frame in video.frames:
        if frame.timestamp_s >= len(kept) / rate_hz:
            kept.append(frame)
    return kept


def filter_frames(frames: Iterable[FrameRecord]) -> FilterReport:
    """Reject frames with persons, outdoor scenes, or no regions.

    Reason priority when several apply: person > outdoor > no_regions.
    """
    report = FilterReport()
    for frame in frames:
        if frame.person:
            report.rejected.append((frame.frame_index, REJECT_PERSON))
        elif frame.outdoor:
            report.rejected.append((frame.frame_index, REJECT_OUTDOOR))
        elif frame.region_count == 0:
            report.rejected.append((frame.frame_index, REJECT_NO_REGIONS))
        else:
            report.kept.append(frame.frame_index)
    return report


def apply_filter(frames: list[FrameRecord]) -> tuple[list[FrameRecord], FilterReport]:
    """filter_frames plus the surviving records, in input order."""
    report = filter_frames(frames)
    kept_ids = set(report.kept)
    return [f for f in frames if f.frame_index in kept_ids], report


def room_entropy(room_probs: Iterable[float]) -> float:
    """Shannon entropy of a room-type distribution, in nats.

    0 * ln 0 is taken as 0; the result lies in [0, ln 12].
    """
    probs = list(room_probs)
    total = 0.0
    for p in probs:
        if p < 0:
            raise ValueError("room probabilities must be non-negative")
        total += p
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"room probabilities must sum to 1 within 1e-6, got {total}")
    h = 0.0
    for p in probs:
        if p > 0.0:
            h -= p * math.log(p)
    return h
