"""Acceptance gate.

One test per acceptance criterion. Each runs the full check at its
stated tolerance, prints a single [PASS]/[FAIL] line with the measured
numbers (run with -s to see them on success), and enforces its runtime
budget.
"""

from __future__ import annotations

import json
import math
import random
import time
from pathlib import Path

import numpy as np

from tourforge.annotations import FrameRecord
from tourforge.config import PipelineConfig
from tourforge.judgment import (
    FEATURE_DIM,
    LinearModel,
    build_batch,
    tj_loss,
)
from tourforge.layout import run_probe
from tourforge.pipeline import (
    PipelineState,
    run_ingest,
    run_pipeline,
    run_tj_training,
    run_trajectories,
)
from tourforge.registry import ROOM_TYPE_COUNT, RoomTypeRegistry
from tourforge.samples import (
    donor_pool_from,
    insert_foreign,
    shuffle_all,
    shuffle_transitions,
    split_videos,
)
from tourforge.synthcorpus import SynthCorpusParams, write_corpus
from tourforge.trajectories import (
    KIND_ROOM,
    KIND_TRANSITION,
    MergedView,
    Trajectory,
    TrajectoryNode,
    select_keyframe,
)

from conftest import MINI_CORPUS

REG = RoomTypeRegistry.default()


def _report(name: str, ok: bool, detail: str, elapsed: float, budget: float | None = None):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail} ({elapsed:.2f}s"
    if budget is not None:
        line += f", budget {budget:.0f}s"
    line += ")"
    print(line)
    assert ok, line
    if budget is not None:
        assert elapsed < budget, f"{name} exceeded its {budget:.0f}s budget: {elapsed:.2f}s"


def mini_config(tmp_path: Path, seed: int = 42) -> PipelineConfig:
    return PipelineConfig(
        annotations=MINI_CORPUS / "annotations.jsonl",
        templates=MINI_CORPUS / "templates.txt",
        registry=MINI_CORPUS / "registry.txt",
        out_dir=tmp_path,
        seed=seed,
    )


def test_construction_conformance(tmp_path):
    # every emitted trajectory: K in [4,7], R in [2,7], room nodes in
    # temporal order, exactly K - R transition nodes
    start = time.perf_counter()
    state = PipelineState(config=mini_config(tmp_path / "out"))
    run_ingest(state)
    run_trajectories(state)
    n_videos = state.ingest_info["videos"]
    violations = 0
    for traj in state.trajectories:
        k, r = traj.length, traj.room_node_count
        kinds = [n.kind for n in traj.nodes]
        stamps = [n.keyframe.timestamp_s for n in traj.nodes]
        good = (
            4 <= k <= 7
            and 2 <= r <= 7
            and kinds.count(KIND_ROOM) == r
            and kinds.count(KIND_TRANSITION) == k - r
            and stamps == sorted(stamps)
            and len(set(stamps)) == len(stamps)
        )
        violations += 0 if good else 1
    elapsed = time.perf_counter() - start
    ok = n_videos >= 10 and len(state.trajectories) > 0 and violations == 0
    _report(
        "construction-conformance",
        ok,
        f"{len(state.trajectories)} trajectories over {n_videos} videos, "
        f"{violations} violations",
        elapsed,
        budget=10.0,
    )


def test_keyframe_entropy_oracle():
    # 1,000 random groups against an independent brute-force argmin of
    # the entropy with ties to the earliest frame; 100% agreement
    start = time.perf_counter()
    rng = random.Random(2024)
    mismatches = 0
    for _ in range(1000):
        n = rng.randint(1, 20)
        frames: list[FrameRecord] = []
        for i in range(n):
            if frames and rng.random() < 0.25:
                probs = frames[rng.randrange(len(frames))].room_probs
            else:
                raw = [rng.random() + 1e-9 for _ in range(ROOM_TYPE_COUNT)]
                total = sum(raw)
                probs = tuple(v / total for v in raw)
            frames.append(
                FrameRecord(
                    video_id="v",
                    frame_index=i,
                    timestamp_s=float(i),
                    room_probs=probs,
                    person=False,
                    outdoor=False,
                    objects=(),
                    region_count=1,
                )
            )
        entropy = [-sum(p * math.log(p) for p in f.room_probs if p > 0) for f in frames]
        best = min(range(n), key=lambda i: entropy[i])
        if select_keyframe(frames) != best:
            mismatches += 1
    elapsed = time.perf_counter() - start
    _report(
        "keyframe-entropy-oracle",
        mismatches == 0,
        f"1000 groups, {mismatches} disagreements with brute force",
        elapsed,
        budget=5.0,
    )


def _random_loss_case(rng: random.Random):
    n = rng.randint(1, 8)
    x = np.array([[float(rng.randint(0, 2)) for _ in range(FEATURE_DIM)] for _ in range(n)])
    y = np.array([float(rng.randint(0, 1)) for _ in range(n)])
    model = LinearModel(
        weights=np.array([rng.uniform(-0.2, 0.2) for _ in range(FEATURE_DIM)]),
        bias=rng.uniform(-0.5, 0.5),
    )
    w = rng.choice([1.0, 2.0, 3.0, 0.5])
    return model, build_batch(x, y, w_mode=w)


def test_judgment_loss_exactness():
    # loss against an independently coded direct evaluation on 1,000
    # random batches (<= 1e-12 absolute); analytic gradient against
    # central finite differences on 100 draws (<= 1e-5 relative)
    start = time.perf_counter()
    rng = random.Random(77)
    max_loss_err = 0.0
    for _ in range(1000):
        model, batch = _random_loss_case(rng)
        report = tj_loss(model, batch)
        total = 0.0
        for i in range(len(batch)):
            z = model.bias
            for j in range(FEATURE_DIM):
                z += float(batch.features[i, j]) * float(model.weights[j])
            p = 1.0 / (1.0 + math.exp(-z))
            p = min(max(p, 1e-12), 1.0 - 1e-12)
            y = float(batch.labels[i])
            total += batch.w * y * math.log(p) + (1.0 - y) * math.log(1.0 - p)
        direct = -total / len(batch)
        max_loss_err = max(max_loss_err, abs(report.loss - direct))

    max_grad_err = 0.0
    h = 1e-6
    for _ in range(100):
        model, batch = _random_loss_case(rng)
        grad = tj_loss(model, batch).gradient
        fd = np.zeros(FEATURE_DIM + 1)
        for k in range(FEATURE_DIM + 1):
            vals = []
            for sign in (1.0, -1.0):
                shifted = LinearModel(weights=model.weights.copy(), bias=model.bias)
                if k < FEATURE_DIM:
                    shifted.weights[k] += sign * h
                else:
                    shifted.bias += sign * h
                vals.append(tj_loss(shifted, batch).loss)
            fd[k] = (vals[0] - vals[1]) / (2 * h)
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(grad), np.linalg.norm(fd), 1e-30)
        max_grad_err = max(max_grad_err, rel)

    elapsed = time.perf_counter() - start
    ok = max_loss_err <= 1e-12 and max_grad_err <= 1e-5
    _report(
        "judgment-loss-exactness",
        ok,
        f"max |loss - direct| = {max_loss_err:.2e} (<= 1e-12), "
        f"max grad rel err = {max_grad_err:.2e} (<= 1e-5)",
        elapsed,
        budget=30.0,
    )


def test_judgment_separability(tmp_path):
    # positives walk a fixed room-adjacency ring; negatives come from
    # the three strategies; held-out accuracy must reach 0.90
    start = time.perf_counter()
    corpus = tmp_path / "corpus"
    write_corpus(corpus, REG, SynthCorpusParams(n_videos=40), seed=11)
    config = PipelineConfig(
        annotations=corpus / "annotations.jsonl",
        templates=corpus / "templates.txt",
        out_dir=tmp_path / "out",
        seed=42,
        split_fraction=0.8,  # 8 held-out videos keep the test side stable
    )
    metrics = run_tj_training(config)
    elapsed = time.perf_counter() - start
    accuracy = metrics["accuracy"]
    _report(
        "judgment-separability",
        accuracy >= 0.90,
        f"held-out accuracy {accuracy:.4f} on {metrics['n']} samples (>= 0.90)",
        elapsed,
        budget=60.0,
    )


def test_layout_probe_directionality():
    start = time.perf_counter()
    report, _houses, _model = run_probe(REG, seed=42)
    elapsed = time.perf_counter() - start
    chance = 1.0 / 12.0
    ok = (
        report.n_test >= 2000
        and abs(report.untrained_acc - chance) <= 0.03
        and report.trained_acc >= 0.80
        and report.p_value < 0.01
    )
    _report(
        "layout-probe-directionality",
        ok,
        f"untrained {report.untrained_acc:.4f} (1/12 ± 0.03), trained "
        f"{report.trained_acc:.4f} (>= 0.80), p = {report.p_value:.3g} (< 0.01), "
        f"n_test = {report.n_test}",
        elapsed,
        budget=60.0,
    )


def _fixture_trajectory(kinds: str, video_id: str, trajectory_id: str) -> Trajectory:
    probs = [0.0] * ROOM_TYPE_COUNT
    probs[0] = 1.0
    nodes = []
    for i, ch in enumerate(kinds):
        keyframe = FrameRecord(
            video_id=video_id,
            frame_index=i,
            timestamp_s=float(i),
            room_probs=tuple(probs),
            person=False,
            outdoor=False,
            objects=(),
            region_count=1,
        )
        nodes.append(
            TrajectoryNode(
                kind=KIND_ROOM if ch == "R" else KIND_TRANSITION,
                view=MergedView(
                    keyframe_id=i, merged_frame_ids=(i,), object_union=(), room_type="kitchen"
                ),
                keyframe=keyframe,
                entropy_at_keyframe=0.0,
                group_ref=i,
            )
        )
    return Trajectory(
        trajectory_id=trajectory_id,
        video_id=video_id,
        nodes=tuple(nodes),
        room_node_count=kinds.count("R"),
        rng_seed_used=0,
        k_reduced=False,
    )


def test_negative_strategy_contracts():
    # >= 10,000 seeded generations: no identity orders, transition
    # shuffles fix room slots pointwise, foreign donors are cross-video
    start = time.perf_counter()
    shapes = ["RTRTR", "RTRTRTR", "RRTTR"]
    trajectories = [
        _fixture_trajectory(kinds, "v0", f"v0/{i:03d}") for i, kinds in enumerate(shapes)
    ]
    pool = donor_pool_from(
        [
            _fixture_trajectory("RTR", "v1", "v1/000"),
            _fixture_trajectory("RRTR", "v2", "v2/000"),
        ]
    )
    generations = 0
    identity_orders = 0
    room_slot_moves = 0
    same_video_donors = 0
    for seed in range(1200):
        rng = random.Random(seed)
        for traj, kinds in zip(trajectories, shapes):
            identity = tuple(range(len(kinds)))
            rooms = [i for i, ch in enumerate(kinds) if ch == "R"]

            s1 = shuffle_transitions("a", "p", traj, rng)
            generations += 1
            identity_orders += s1.node_order == identity
            room_slot_moves += any(s1.node_order[i] != i for i in rooms)

            s2 = shuffle_all("b", "p", traj, rng)
            generations += 1
            identity_orders += s2.node_order == identity

            s3 = insert_foreign("c", "p", traj, pool, rng)
            generations += 1
            identity_orders += s3.node_order == identity
            room_slot_moves += any(s3.node_order[i] != i for i in rooms)
            same_video_donors += any(f.donor_video_id == "v0" for f in s3.foreign_nodes)
    elapsed = time.perf_counter() - start
    ok = (
        generations >= 10_000
        and identity_orders == 0
        and room_slot_moves == 0
        and same_video_donors == 0
    )
    _report(
        "negative-strategy-contracts",
        ok,
        f"{generations} generations: {identity_orders} identity orders, "
        f"{room_slot_moves} room-slot moves, {same_video_donors} same-video donors",
        elapsed,
        budget=10.0,
    )


def test_pipeline_determinism(tmp_path):
    start = time.perf_counter()
    manifest_a = run_pipeline(mini_config(tmp_path / "a", seed=42))
    manifest_b = run_pipeline(mini_config(tmp_path / "b", seed=42))
    manifest_c = run_pipeline(mini_config(tmp_path / "c", seed=43))
    same = manifest_a.read_bytes() == manifest_b.read_bytes()
    files_a = json.loads(manifest_a.read_text())["files"]
    files_c = json.loads(manifest_c.read_text())["files"]
    different = files_a != files_c
    elapsed = time.perf_counter() - start
    _report(
        "pipeline-determinism",
        same and different,
        f"same seed byte-identical: {same}; different seed differs: {different}",
        elapsed,
        budget=30.0,
    )


def test_split_conformance():
    # 1,000 seeded splits of 40 videos at 0.95: every one is exactly
    # 38/2, disjoint, and covering
    start = time.perf_counter()
    ids = [f"v{i:02d}" for i in range(40)]
    bad = 0
    for seed in range(1000):
        split = split_videos(ids, 0.95, random.Random(seed), seed)
        train, test = set(split.train_videos), set(split.test_videos)
        good = (
            len(split.train_videos) == 38
            and len(split.test_videos) == 2
            and train.isdisjoint(test)
            and train | test == set(ids)
        )
        bad += 0 if good else 1
    elapsed = time.perf_counter() - start
    _report(
        "split-conformance",
        bad == 0,
        f"1000 seeded splits, {bad} not exactly 38/2 disjoint covering",
        elapsed,
    )
