"""Labeled samples for the pretext tasks.

Positives keep a trajectory's node order; negatives disturb it three
ways: permute only the transition slots, permute everything, or keep
room order and swap transition contents for nodes borrowed from other
videos. Also houses the ranking sets, masked-token samples, and the
video-level train/test split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Sequence

from .errors import InputError, StrategyInapplicable
from .trajectories import KIND_TRANSITION, Trajectory

POSITIVE = "positive"
SHUFFLE_TRANSITIONS = "shuffle_transitions"
SHUFFLE_ALL = "shuffle_all"
INSERT_FOREIGN = "insert_foreign"
NEGATIVE_STRATEGIES = (SHUFFLE_TRANSITIONS, SHUFFLE_ALL, INSERT_FOREIGN)


@dataclass(frozen=True)
class ForeignNode:
    """Provenance of one borrowed node."""

    slot: int
    donor_video_id: str
    donor_trajectory_id: str
    donor_node_index: int
    kind: str
    room_type: str
    keyframe: int


@dataclass(frozen=True)
class JudgmentSample:
    sample_id: str
    pair_id: str
    label: int
    strategy: str
    node_order: tuple[int, ...]
    foreign_nodes: tuple[ForeignNode, ...] = ()


@dataclass(frozen=True)
class RankingSample:
    sample_id: str
    instruction_ref: str
    candidates: tuple[str, ...]
    gold_index: int


@dataclass(frozen=True)
class MlmSample:
    sample_id: str
    pair_id: str
    masked_positions: tuple[int, ...]
    original_tokens: tuple[str, ...]


@dataclass(frozen=True)
class DatasetSplit:
    train_videos: tuple[str, ...]
    test_videos: tuple[str, ...]
    fraction: float
    seed: int


@dataclass(frozen=True)
class DonorNode:
    """Pool entry insert_foreign can draw from."""

    video_id: str
    trajectory_id: str
    node_index: int
    kind: str
    room_type: str
    keyframe: int


def donor_pool_from(trajectories: Sequence[Trajectory]) -> list[DonorNode]:
    pool: list[DonorNode] = []
    for traj in trajectories:
        for idx, node in enumerate(traj.nodes):
            pool.append(
                DonorNode(
                    video_id=traj.video_id,
                    trajectory_id=traj.trajectory_id,
                    node_index=idx,
                    kind=node.kind,
                    room_type=node.view.room_type,
                    keyframe=node.view.keyframe_id,
                )
            )
    return pool


def _transition_slots(trajectory: Trajectory) -> list[int]:
    return [i for i, n in enumerate(trajectory.nodes) if n.kind == KIND_TRANSITION]


def make_positive(sample_id: str, pair_id: str, trajectory: Trajectory) -> JudgmentSample:
    return JudgmentSample(
        sample_id=sample_id,
        pair_id=pair_id,
        label=1,
        strategy=POSITIVE,
        node_order=tuple(range(trajectory.length)),
    )


def _non_identity_permutation(items: list[int], rng: Random) -> list[int]:
    # |items| >= 2 so a non-identity permutation exists; expected < 2 draws
    while True:
        perm = items[:]
        rng.shuffle(perm)
        if perm != items:
            return perm


def shuffle_transitions(
    sample_id: str, pair_id: str, trajectory: Trajectory, rng: Random
) -> JudgmentSample:
    """Permute only the transition slots (non-identity); room slots stay
    fixed pointwise."""
    slots = _transition_slots(trajectory)
    if len(slots) < 2:
        raise StrategyInapplicable(
            SHUFFLE_TRANSITIONS, f"{len(slots)} transition node(s), need at least 2"
        )
    permuted = _non_identity_permutation(slots, rng)
    order = list(range(trajectory.length))
    for slot, source in zip(slots, permuted):
        order[slot] = source
    return JudgmentSample(
        sample_id=sample_id,
        pair_id=pair_id,
        label=0,
        strategy=SHUFFLE_TRANSITIONS,
        node_order=tuple(order),
    )


def shuffle_all(sample_id: str, pair_id: str, trajectory: Trajectory, rng: Random) -> JudgmentSample:
    order = _non_identity_permutation(list(range(trajectory.length)), rng)
    return JudgmentSample(
        sample_id=sample_id,
        pair_id=pair_id,
        label=0,
        strategy=SHUFFLE_ALL,
        node_order=tuple(order),
    )


def insert_foreign(
    sample_id: str,
    pair_id: str,
    trajectory: Trajectory,
    donor_pool: Sequence[DonorNode],
    rng: Random,
) -> JudgmentSample:
    """Keep room nodes in place; refill every transition slot with a
    node drawn from another video. Slot j's content is addressed as
    K + j in node_order and described in foreign_nodes[j]."""
    slots = _transition_slots(trajectory)
    if not slots:
        raise StrategyInapplicable(INSERT_FOREIGN, "no transition slots to replace")
    eligible = [d for d in donor_pool if d.video_id != trajectory.video_id]
    if not eligible:
        raise StrategyInapplicable(INSERT_FOREIGN, "no donor node from another video")
    order = list(range(trajectory.length))
    foreign: list[ForeignNode] = []
    for j, slot in enumerate(slots):
        donor = eligible[rng.randrange(len(eligible))]
        order[slot] = trajectory.length + j
        foreign.append(
            ForeignNode(
                slot=slot,
                donor_video_id=donor.video_id,
                donor_trajectory_id=donor.trajectory_id,
                donor_node_index=donor.node_index,
                kind=donor.kind,
                room_type=donor.room_type,
                keyframe=donor.keyframe,
            )
        )
    return JudgmentSample(
        sample_id=sample_id,
        pair_id=pair_id,
        label=0,
        strategy=INSERT_FOREIGN,
        node_order=tuple(order),
        foreign_nodes=tuple(foreign),
    )


@dataclass
class NegativeBatch:
    samples: list[JudgmentSample] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)


def make_negatives(
    pair_id: str,
    trajectory: Trajectory,
    donor_pool: Sequence[DonorNode],
    rng: Random,
    per_strategy: dict[str, int] | None = None,
) -> NegativeBatch:
    """Run each negative strategy its requested number of times
    (default once each); inapplicable strategies are noted, not fatal."""
    counts = {s: 1 for s in NEGATIVE_STRATEGIES}
    if per_strategy:
        for name, count in per_strategy.items():
            if name not in counts:
                raise InputError(f"unknown negative strategy {name!r}")
            if count < 0:
                raise InputError(f"negative count for {name}")
            counts[name] = count
    batch = NegativeBatch()
    makers = {
        SHUFFLE_TRANSITIONS: lambda sid: shuffle_transitions(sid, pair_id, trajectory, rng),
        SHUFFLE_ALL: lambda sid: shuffle_all(sid, pair_id, trajectory, rng),
        INSERT_FOREIGN: lambda sid: insert_foreign(sid, pair_id, trajectory, donor_pool, rng),
    }
    for strategy in NEGATIVE_STRATEGIES:
        for i in range(counts[strategy]):
            sample_id = f"{pair_id}/{strategy}{i}"
            try:
                batch.samples.append(makers[strategy](sample_id))
            except StrategyInapplicable as exc:
                batch.skipped.append(
                    {"pair_id": pair_id, "strategy": strategy, "reason": exc.reason}
                )
                break  # repeats of an inapplicable strategy stay inapplicable
    return batch


def split_videos(video_ids: Sequence[str], fraction: float, rng: Random, seed: int) -> DatasetSplit:
    """Shuffle the (sorted) ids and send the first round(fraction * n)
    to train. Warns via the returned split's empty side rather than
    raising when rounding leaves a side empty."""
    if not video_ids:
        raise InputError("no videos to split")
    if not 0.0 < fraction < 1.0:
        raise InputError(f"split fraction must be in (0, 1), got {fraction}")
    ids = sorted(video_ids)
    if len(set(ids)) != len(ids):
        raise InputError("duplicate video ids in split input")
    rng.shuffle(ids)
    n_train = round(fraction * len(ids))
    return DatasetSplit(
        train_videos=tuple(sorted(ids[:n_train])),
        test_videos=tuple(sorted(ids[n_train:])),
        fraction=fraction,
        seed=seed,
    )


def make_ranking_set(
    sample_id: str,
    pair_id: str,
    gold_trajectory_id: str,
    distractor_pool: Sequence[str],
    candidates: int,
    rng: Random,
) -> RankingSample:
    """Gold trajectory plus `candidates` distinct distractors, gold
    position uniform."""
    pool = [t for t in distractor_pool if t != gold_trajectory_id]
    if len(pool) < candidates:
        raise InputError(
            f"ranking pool has {len(pool)} eligible distractors, need {candidates}"
        )
    drawn = rng.sample(pool, candidates)
    gold_index = rng.randrange(candidates + 1)
    ordered = drawn[:gold_index] + [gold_trajectory_id] + drawn[gold_index:]
    return RankingSample(
        sample_id=sample_id,
        instruction_ref=pair_id,
        candidates=tuple(ordered),
        gold_index=gold_index,
    )


def make_mlm_sample(
    sample_id: str,
    pair_id: str,
    tokens: Sequence[str],
    p_mask: float,
    rng: Random,
) -> MlmSample:
    """Mask each token independently with probability p_mask; if the
    coin never lands, force one uniform position."""
    if not tokens:
        raise InputError("cannot mask an empty token list")
    if not 0.0 < p_mask < 1.0:
        raise InputError(f"p_mask must be in (0, 1), got {p_mask}")
    positions = [i for i in range(len(tokens)) if rng.random() < p_mask]
    if not positions:
        positions = [rng.randrange(len(tokens))]
    return MlmSample(
        sample_id=sample_id,
        pair_id=pair_id,
        masked_positions=tuple(positions),
        original_tokens=tuple(tokens[i] for i in positions),
    )


def judgment_record(sample: JudgmentSample) -> dict:
    """JSON-ready record matching the samples file schema."""
    record = {
        "sample_id": sample.sample_id,
        "pair_id": sample.pair_id,
        "label": sample.label,
        "strategy": sample.strategy,
        "node_order": list(sample.node_order),
    }
    if sample.foreign_nodes:
        record["foreign_nodes"] = [
            {
                "slot": f.slot,
                "donor_video_id": f.donor_video_id,
                "donor_trajectory_id": f.donor_trajectory_id,
                "donor_node_index": f.donor_node_index,
                "kind": f.kind,
                "room_type": f.room_type,
                "keyframe": f.keyframe,
            }
            for f in sample.foreign_nodes
        ]
    return record


def split_record(split: DatasetSplit) -> dict:
    return {
        "train_videos": list(split.train_videos),
        "test_videos": list(split.test_videos),
        "seed": split.seed,
        "fraction": split.fraction,
    }
