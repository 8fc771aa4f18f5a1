"""Build trajectories from filtered frames.

Frames are grouped into maximal runs of equal most-probable room type.
Each group is represented by its lowest-entropy keyframe, widened to a
window of adjacent group members. A trajectory samples R room nodes in
temporal order and fills the remaining slots with transition nodes
taken from the frames that lie strictly between consecutive selected
groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Sequence

from .annotations import FrameRecord, room_entropy
from .errors import TrajectorySkip
from .registry import RoomTypeRegistry
from .seeding import derive_seed

KIND_ROOM = "room"
KIND_TRANSITION = "transition"


@dataclass(frozen=True)
class NodeGroup:
    """Maximal run of temporally adjacent frames sharing a room type."""

    video_id: str
    room_type: str
    frames: tuple[FrameRecord, ...]
    start_index: int
    end_index: int

    def frame_ids(self) -> list[int]:
        return [f.frame_index for f in self.frames]


@dataclass(frozen=True)
class MergedView:
    keyframe_id: int
    merged_frame_ids: tuple[int, ...]
    object_union: tuple[tuple[str, float], ...]
    room_type: str


@dataclass(frozen=True)
class TrajectoryNode:
    kind: str
    view: MergedView
    keyframe: FrameRecord
    entropy_at_keyframe: float
    group_ref: int | None = None


@dataclass(frozen=True)
class Trajectory:
    trajectory_id: str
    video_id: str
    nodes: tuple[TrajectoryNode, ...]
    room_node_count: int
    rng_seed_used: int
    k_reduced: bool = False

    @property
    def length(self) -> int:
        return len(self.nodes)

    def room_nodes(self) -> list[TrajectoryNode]:
        return [n for n in self.nodes if n.kind == KIND_ROOM]


@dataclass(frozen=True)
class TrajectoryParams:
    """Knobs for trajectory construction.

    k bounds cap the node count, r bounds the room-node count; both
    stay inside [4,7] and [2,7]. merge_window is the max number of
    adjacent frames folded into one view. max_attempts bounds the
    redraws used when a draw cannot reach k_min nodes.
    """

    merge_window: int = 4
    k_min: int = 4
    k_max: int = 7
    r_min: int = 2
    r_max: int = 7
    per_video: int = 4
    max_attempts: int = 8


@dataclass
class VideoBuildResult:
    video_id: str
    trajectories: list[Trajectory] = field(default_factory=list)
    skips: list[dict] = field(default_factory=list)
    reduced_count: int = 0


def group_frames(frames: Sequence[FrameRecord], registry: RoomTypeRegistry) -> list[NodeGroup]:
    """Run-length group frames by argmax room type (ties to the lowest
    registry ordinal). Every frame lands in exactly one group."""
    groups: list[NodeGroup] = []
    run: list[FrameRecord] = []
    run_type = -1
    for frame in frames:
        room = frame.argmax_room()
        if run and room != run_type:
            groups.append(_finish_group(run, run_type, registry))
            run = []
        run.append(frame)
        run_type = room
    if run:
        groups.append(_finish_group(run, run_type, registry))
    return groups


def _finish_group(run: list[FrameRecord], room: int, registry: RoomTypeRegistry) -> NodeGroup:
    return NodeGroup(
        video_id=run[0].video_id,
        room_type=registry.label(room),
        frames=tuple(run),
        start_index=run[0].frame_index,
        end_index=run[-1].frame_index,
    )


def select_keyframe(frames: Sequence[FrameRecord]) -> int:
    """Position of the minimum-entropy frame; ties go to the earliest."""
    if not frames:
        raise ValueError("cannot select a keyframe from an empty sequence")
    best = 0
    best_h = room_entropy(frames[0].room_probs)
    for i in range(1, len(frames)):
        h = room_entropy(frames[i].room_probs)
        if h < best_h:
            best, best_h = i, h
    return best


def merge_views(group: NodeGroup, keyframe_pos: int, merge_window: int) -> MergedView:
    """Window of up to merge_window consecutive group members around
    the keyframe; shrinks at group edges, preferring later frames when
    off-center. Objects deduplicate per label at their max score."""
    if merge_window < 1:
        raise ValueError("merge_window must be >= 1")
    if not 0 <= keyframe_pos < len(group.frames):
        raise ValueError("keyframe position outside group")
    width = min(merge_window, len(group.frames))
    ideal_before = (width - 1) // 2
    start = min(max(keyframe_pos - ideal_before, 0), len(group.frames) - width)
    window = group.frames[start : start + width]

    best_scores: dict[str, float] = {}
    for frame in window:
        for obj in frame.objects:
            if obj.score > best_scores.get(obj.label, -1.0):
                best_scores[obj.label] = obj.score
    union = tuple(sorted(best_scores.items(), key=lambda kv: (-kv[1], kv[0])))
    return MergedView(
        keyframe_id=group.frames[keyframe_pos].frame_index,
        merged_frame_ids=tuple(f.frame_index for f in window),
        object_union=union,
        room_type=group.room_type,
    )


def sample_room_nodes(groups: Sequence[NodeGroup], rng: Random, r: int) -> list[int]:
    """Uniformly pick r distinct group indices, returned in temporal
    (index) order."""
    if len(groups) < 2:
        raise TrajectorySkip("fewer than 2 room groups")
    if not 2 <= r <= len(groups):
        raise ValueError(f"r={r} outside [2, {len(groups)}]")
    return sorted(rng.sample(range(len(groups)), r))


def _room_node(group: NodeGroup, group_idx: int, merge_window: int) -> TrajectoryNode:
    pos = select_keyframe(group.frames)
    view = merge_views(group, pos, merge_window)
    return TrajectoryNode(
        kind=KIND_ROOM,
        view=view,
        keyframe=group.frames[pos],
        entropy_at_keyframe=room_entropy(group.frames[pos].room_probs),
        group_ref=group_idx,
    )


def _transition_node(groups: Sequence[NodeGroup], lo: int, hi: int, merge_window: int) -> TrajectoryNode:
    """Node for the gap between selected groups lo and hi: entropy-min
    frame among all frames of the groups strictly between them, merged
    within that frame's own group."""
    gap_frames: list[tuple[int, int, FrameRecord]] = []
    for gi in range(lo + 1, hi):
        for pos, frame in enumerate(groups[gi].frames):
            gap_frames.append((gi, pos, frame))
    if not gap_frames:
        raise ValueError("empty gap")
    best = 0
    best_h = room_entropy(gap_frames[0][2].room_probs)
    for i in range(1, len(gap_frames)):
        h = room_entropy(gap_frames[i][2].room_probs)
        if h < best_h:
            best, best_h = i, h
    gi, pos, frame = gap_frames[best]
    view = merge_views(groups[gi], pos, merge_window)
    return TrajectoryNode(
        kind=KIND_TRANSITION,
        view=view,
        keyframe=frame,
        entropy_at_keyframe=best_h,
        group_ref=None,
    )


def build_trajectory(
    trajectory_id: str,
    video_id: str,
    groups: Sequence[NodeGroup],
    params: TrajectoryParams,
    rng: Random,
    seed_used: int,
) -> Trajectory:
    """Draw node count and room count, sample room nodes, and fill the
    remaining slots with transition nodes from distinct gaps.

    When fewer gaps are eligible than needed, the node count shrinks to
    (rooms + eligible gaps); a draw that would shrink below k_min is
    redrawn, up to max_attempts, before the video's slot is skipped.
    """
    if len(groups) < 2:
        raise TrajectorySkip("fewer than 2 room groups")
    last_reason = "no attempts made"
    for _ in range(params.max_attempts):
        k = rng.randint(params.k_min, params.k_max)
        r_hi = min(k, params.r_max, len(groups))
        r = rng.randint(params.r_min, r_hi)
        chosen = sample_room_nodes(groups, rng, r)

        eligible = [
            i
            for i in range(r - 1)
            if any(groups[g].frames for g in range(chosen[i] + 1, chosen[i + 1]))
        ]
        need = k - r
        reduced = False
        if len(eligible) < need:
            if r + len(eligible) < params.k_min:
                last_reason = (
                    f"draw k={k} r={r} has only {len(eligible)} eligible gaps; "
                    f"reduced length {r + len(eligible)} < {params.k_min}"
                )
                continue
            gap_slots = eligible
            reduced = True
        else:
            gap_slots = sorted(rng.sample(eligible, need))

        nodes: list[TrajectoryNode] = []
        for i, group_idx in enumerate(chosen):
            nodes.append(_room_node(groups[group_idx], group_idx, params.merge_window))
            if i in gap_slots:
                nodes.append(
                    _transition_node(groups, chosen[i], chosen[i + 1], params.merge_window)
                )
        return Trajectory(
            trajectory_id=trajectory_id,
            video_id=video_id,
            nodes=tuple(nodes),
            room_node_count=r,
            rng_seed_used=seed_used,
            k_reduced=reduced,
        )
    raise TrajectorySkip(f"exhausted {params.max_attempts} draws: {last_reason}")


def build_for_video(
    video_id: str,
    frames: Sequence[FrameRecord],
    registry: RoomTypeRegistry,
    params: TrajectoryParams,
    root_seed: int,
) -> VideoBuildResult:
    """Construct up to params.per_video trajectories for one video.

    Each slot is seeded independently from (root_seed, video_id, slot)
    so scheduling order cannot change the output. Skips are recorded,
    not raised.
    """
    result = VideoBuildResult(video_id=video_id)
    groups = group_frames(frames, registry)
    for slot in range(params.per_video):
        trajectory_id = f"{video_id}/{slot:03d}"
        seed_int = derive_seed(root_seed, "trajectory", video_id, slot)
        rng = Random(seed_int)
        try:
            traj = build_trajectory(trajectory_id, video_id, groups, params, rng, seed_int)
        except TrajectorySkip as skip:
            result.skips.append(
                {"trajectory_id": trajectory_id, "video_id": video_id, "reason": skip.reason}
            )
            continue
        result.trajectories.append(traj)
        if traj.k_reduced:
            result.reduced_count += 1
    return result


def trajectory_record(traj: Trajectory) -> dict:
    """JSON-ready record matching the trajectories file schema."""
    return {
        "trajectory_id": traj.trajectory_id,
        "video_id": traj.video_id,
        "K": traj.length,
        "R": traj.room_node_count,
        "nodes": [
            {
                "kind": n.kind,
                "room_type": n.view.room_type,
                "keyframe": n.view.keyframe_id,
                "merged_frames": list(n.view.merged_frame_ids),
                "entropy": round(n.entropy_at_keyframe, 12),
                "objects": [
                    {"label": label, "score": score} for label, score in n.view.object_union
                ],
            }
            for n in traj.nodes
        ],
    }
