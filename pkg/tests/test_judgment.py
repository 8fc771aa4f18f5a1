from __future__ import annotations

import math
import random

import numpy as np
import pytest

from tourforge.annotations import FrameRecord
from tourforge.errors import InputError
from tourforge.judgment import (
    BIGRAM_BLOCK,
    FEATURE_DIM,
    FEATURE_VERSION,
    LinearModel,
    TrainConfig,
    build_batch,
    evaluate,
    featurize,
    load_model,
    node_room_ordinals,
    resolve_weight,
    save_model,
    tj_loss,
    train,
)
from tourforge.registry import ROOM_TYPE_COUNT, RoomTypeRegistry
from tourforge.samples import (
    insert_foreign,
    donor_pool_from,
    make_positive,
    shuffle_all,
)
from tourforge.trajectories import (
    KIND_ROOM,
    MergedView,
    Trajectory,
    TrajectoryNode,
)

REG = RoomTypeRegistry.default()


def make_traj(rooms: list[str], video_id: str = "v0", trajectory_id: str = "v0/000") -> Trajectory:
    probs = [0.0] * ROOM_TYPE_COUNT
    probs[0] = 1.0
    nodes = []
    for i, room in enumerate(rooms):
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
                kind=KIND_ROOM,
                view=MergedView(
                    keyframe_id=i, merged_frame_ids=(i,), object_union=(), room_type=room
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
        room_node_count=len(rooms),
        rng_seed_used=0,
        k_reduced=False,
    )


def bigram_index(a: str, b: str) -> int:
    return REG.ordinal(a) * ROOM_TYPE_COUNT + REG.ordinal(b)


# -- featurize -----------------------------------------------------------


def test_featurize_single_bigram():
    traj = make_traj(["kitchen", "hallway"])
    x = featurize(make_positive("s0", "p0", traj), traj, REG)
    bigrams = x[:BIGRAM_BLOCK]
    assert bigrams[bigram_index("kitchen", "hallway")] == 1.0
    assert bigrams.sum() == 1.0


def test_featurize_order_sensitivity():
    traj = make_traj(["kitchen", "hallway"])
    swapped = shuffle_all("s0", "p0", traj, random.Random(0))
    x = featurize(swapped, traj, REG)
    assert x[bigram_index("hallway", "kitchen")] == 1.0
    assert x[bigram_index("kitchen", "hallway")] == 0.0


def test_featurize_histogram_and_tail():
    traj = make_traj(["kitchen", "hallway", "kitchen", "office"])
    x = featurize(make_positive("s0", "p0", traj), traj, REG)
    hist = x[BIGRAM_BLOCK : BIGRAM_BLOCK + ROOM_TYPE_COUNT]
    assert hist.sum() == 4.0
    assert hist[REG.ordinal("kitchen")] == 2.0
    assert x[-2] == 4.0  # node count
    assert x[-1] == 4.0  # room-node count
    assert x.shape == (FEATURE_DIM,)


def test_featurize_resolves_foreign_nodes():
    traj = make_traj(["kitchen", "hallway", "office"])
    pool = donor_pool_from([make_traj(["garage"], video_id="v1", trajectory_id="v1/000")])
    # no transition slots in an all-room trajectory: borrow slots by
    # relabeling node 1 as a transition
    nodes = list(traj.nodes)
    nodes[1] = TrajectoryNode(
        kind="transition",
        view=nodes[1].view,
        keyframe=nodes[1].keyframe,
        entropy_at_keyframe=0.0,
        group_ref=1,
    )
    traj = Trajectory(
        trajectory_id=traj.trajectory_id,
        video_id=traj.video_id,
        nodes=tuple(nodes),
        room_node_count=2,
        rng_seed_used=0,
        k_reduced=False,
    )
    sample = insert_foreign("s0", "p0", traj, pool, random.Random(0))
    ordinals = node_room_ordinals(sample, traj, REG)
    assert ordinals == [REG.ordinal("kitchen"), REG.ordinal("garage"), REG.ordinal("office")]


# -- weights and loss ----------------------------------------------------


def test_resolve_weight():
    assert resolve_weight(1, 3, "auto") == 3.0
    assert resolve_weight(4, 2, "auto") == 0.5
    assert resolve_weight(0, 5, "auto") == 1.0
    assert resolve_weight(5, 0, "auto") == 1.0
    assert resolve_weight(1, 1, 2.5) == 2.5
    with pytest.raises(InputError):
        resolve_weight(1, 1, 0.0)


def test_loss_single_positive_at_half():
    x = np.zeros((1, FEATURE_DIM))
    batch = build_batch(x, np.array([1.0]), w_mode=1.0)
    report = tj_loss(LinearModel.zeros(), batch)
    assert abs(report.loss - math.log(2)) < 1e-12


def test_loss_hand_example():
    # (y=1, p=0.9) and (y=0, p=0.1) at w=1: L = -(ln 0.9 + ln 0.9) / 2
    x = np.zeros((2, FEATURE_DIM))
    x[0, 0] = 1.0
    x[1, 0] = -1.0
    model = LinearModel.zeros()
    model.weights[0] = math.log(9.0)
    batch = build_batch(x, np.array([1.0, 0.0]), w_mode=1.0)
    report = tj_loss(model, batch)
    assert abs(report.loss - (-math.log(0.9))) < 1e-9


def test_auto_weight_three_to_one():
    x = np.zeros((4, FEATURE_DIM))
    batch = build_batch(x, np.array([1.0, 0.0, 0.0, 0.0]))
    assert batch.w == 3.0
    assert batch.n_pos == 1 and batch.n_neg == 3


def test_loss_empty_batch():
    batch = build_batch(np.zeros((0, FEATURE_DIM)), np.zeros(0))
    with pytest.raises(InputError):
        tj_loss(LinearModel.zeros(), batch)


def random_batch(rng: random.Random, w_mode: str | float = 1.0):
    n = rng.randint(1, 8)
    x = np.array(
        [[float(rng.randint(0, 2)) for _ in range(FEATURE_DIM)] for _ in range(n)]
    )
    y = np.array([float(rng.randint(0, 1)) for _ in range(n)])
    model = LinearModel(
        weights=np.array([rng.uniform(-0.2, 0.2) for _ in range(FEATURE_DIM)]),
        bias=rng.uniform(-0.5, 0.5),
    )
    return model, build_batch(x, y, w_mode)


def direct_bce(model: LinearModel, features: np.ndarray, labels: np.ndarray, w: float) -> float:
    # independent re-implementation: python loops only
    total = 0.0
    n = features.shape[0]
    for i in range(n):
        z = model.bias
        for j in range(features.shape[1]):
            z += float(features[i, j]) * float(model.weights[j])
        p = 1.0 / (1.0 + math.exp(-z))
        p = min(max(p, 1e-12), 1.0 - 1e-12)
        y = float(labels[i])
        total += w * y * math.log(p) + (1.0 - y) * math.log(1.0 - p)
    return -total / n


def test_loss_matches_direct_evaluation():
    rng = random.Random(61)
    for _ in range(100):
        model, batch = random_batch(rng)
        report = tj_loss(model, batch)
        expected = direct_bce(model, batch.features, batch.labels, batch.w)
        assert abs(report.loss - expected) <= 1e-12


def test_w_scaling_identity():
    rng = random.Random(67)
    x = np.array([[float(rng.randint(0, 2)) for _ in range(FEATURE_DIM)] for _ in range(5)])
    y = np.ones(5)
    model, _ = random_batch(rng)
    base = tj_loss(model, build_batch(x, y, w_mode=1.0)).loss
    for c in (2.0, 3.5, 7.0):
        scaled = tj_loss(model, build_batch(x, y, w_mode=c)).loss
        assert abs(scaled - c * base) < 1e-9 * max(1.0, abs(scaled))


def test_gradient_matches_central_differences():
    rng = random.Random(71)
    for _ in range(10):
        model, batch = random_batch(rng, w_mode="auto" if rng.random() < 0.5 else 2.0)
        report = tj_loss(model, batch)
        h = 1e-6
        fd = np.zeros(FEATURE_DIM + 1)
        for k in range(FEATURE_DIM + 1):
            for sign, store in ((1.0, 0), (-1.0, 1)):
                shifted = LinearModel(weights=model.weights.copy(), bias=model.bias)
                if k < FEATURE_DIM:
                    shifted.weights[k] += sign * h
                else:
                    shifted.bias += sign * h
                if store == 0:
                    up = tj_loss(shifted, batch).loss
                else:
                    down = tj_loss(shifted, batch).loss
            fd[k] = (up - down) / (2 * h)
        num = np.linalg.norm(report.gradient - fd)
        den = max(np.linalg.norm(report.gradient), np.linalg.norm(fd), 1e-30)
        assert num / den <= 1e-5


def test_loss_convexity_chord():
    rng = random.Random(73)
    for _ in range(20):
        model_a, batch = random_batch(rng)
        model_b, _ = random_batch(rng)
        loss_a = tj_loss(model_a, batch).loss
        loss_b = tj_loss(model_b, batch).loss
        for lam in (0.25, 0.5, 0.75):
            mid = LinearModel(
                weights=lam * model_a.weights + (1 - lam) * model_b.weights,
                bias=lam * model_a.bias + (1 - lam) * model_b.bias,
            )
            loss_mid = tj_loss(mid, batch).loss
            assert loss_mid <= lam * loss_a + (1 - lam) * loss_b + 1e-9


# -- training ------------------------------------------------------------


def separable_toy():
    # positives walk kitchen -> hallway, negatives the reverse
    pos_t = make_traj(["kitchen", "hallway"])
    xs, ys = [], []
    for seed in range(20):
        xs.append(featurize(make_positive("s", "p", pos_t), pos_t, REG))
        ys.append(1.0)
        xs.append(featurize(shuffle_all("s", "p", pos_t, random.Random(seed)), pos_t, REG))
        ys.append(0.0)
    return np.array(xs), np.array(ys)


def test_train_separable_to_perfect_accuracy():
    features, labels = separable_toy()
    result = train(features, labels, TrainConfig(lr=0.1, epochs=500))
    metrics = evaluate(result.model, features, labels)
    assert metrics["accuracy"] == 1.0
    assert result.history[-1] <= result.history[0]


def test_train_starts_at_half():
    features, labels = separable_toy()
    result = train(features, labels, TrainConfig(lr=0.1, epochs=1))
    batch = build_batch(features, labels)
    zero_loss = tj_loss(LinearModel.zeros(), batch).loss
    assert abs(result.history[0] - zero_loss) < 1e-15
    assert np.all(LinearModel.zeros().predict_proba(features) == 0.5)


def test_train_history_non_increasing_small_lr():
    features, labels = separable_toy()
    result = train(features, labels, TrainConfig(lr=0.01, epochs=200))
    for a, b in zip(result.history, result.history[1:]):
        assert b <= a + 1e-9


def test_train_rejects_single_class():
    features = np.zeros((4, FEATURE_DIM))
    with pytest.raises(InputError):
        train(features, np.ones(4), TrainConfig())
    with pytest.raises(InputError):
        train(features, np.zeros(4), TrainConfig())


def test_train_rejects_bad_hyper():
    features, labels = separable_toy()
    with pytest.raises(InputError):
        train(features, labels, TrainConfig(lr=0.0))
    with pytest.raises(InputError):
        train(features, labels, TrainConfig(epochs=0))


def test_train_deterministic():
    features, labels = separable_toy()
    a = train(features, labels, TrainConfig(lr=0.5, epochs=50))
    b = train(features, labels, TrainConfig(lr=0.5, epochs=50))
    assert np.array_equal(a.model.weights, b.model.weights)
    assert a.history == b.history


# -- evaluation ----------------------------------------------------------


def test_evaluate_zero_model_majority_positive():
    features = np.zeros((4, FEATURE_DIM))
    labels = np.array([1.0, 1.0, 1.0, 0.0])
    metrics = evaluate(LinearModel.zeros(), features, labels)
    assert metrics["accuracy"] == 0.75


def test_evaluate_per_strategy_buckets():
    features, labels = separable_toy()
    result = train(features, labels, TrainConfig(lr=0.1, epochs=300))
    tags = ["positive" if y == 1.0 else "shuffle_all" for y in labels]
    metrics = evaluate(result.model, features, labels, strategies=tags)
    assert set(metrics["per_strategy_accuracy"]) == {"positive", "shuffle_all"}
    # absent buckets stay absent
    assert "insert_foreign" not in metrics["per_strategy_accuracy"]


def test_evaluate_empty():
    with pytest.raises(InputError):
        evaluate(LinearModel.zeros(), np.zeros((0, FEATURE_DIM)), np.zeros(0))


# -- persistence ---------------------------------------------------------


def test_model_roundtrip(tmp_path):
    features, labels = separable_toy()
    config = TrainConfig(lr=0.5, epochs=100)
    result = train(features, labels, config)
    metrics = evaluate(result.model, features, labels)
    path = tmp_path / "model.json"
    save_model(path, result, config, metrics)
    loaded = load_model(path)
    # weights are rounded on save; predictions must agree to rounding error
    assert np.allclose(loaded.weights, result.model.weights, atol=1e-12)
    assert abs(loaded.bias - result.model.bias) <= 1e-12


def test_load_rejects_wrong_version(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(
        '{"feature_version": "other/9", "weights": [], "bias": 0.0}', encoding="utf-8"
    )
    with pytest.raises(InputError):
        load_model(path)
    path.write_text(
        '{"feature_version": "%s", "weights": [1.0, 2.0], "bias": 0.0}' % FEATURE_VERSION,
        encoding="utf-8",
    )
    with pytest.raises(InputError):
        load_model(path)
