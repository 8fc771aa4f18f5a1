"""Linear trajectory-judgment learner.

Samples are featurized symbolically (ordered room-type bigram counts,
a room-type histogram, and the node/room counts) and scored by a
logistic model trained with a class-weighted binary cross-entropy:

    L = -(1/N) * sum_n [ w * y_n * log(p_n) + (1 - y_n) * log(1 - p_n) ]

where w defaults to the negative:positive count ratio of the batch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError
from .registry import ROOM_TYPE_COUNT, RoomTypeRegistry
from .samples import JudgmentSample
from .trajectories import Trajectory

FEATURE_VERSION = "bigram-hist-kr/1"
BIGRAM_BLOCK = ROOM_TYPE_COUNT * ROOM_TYPE_COUNT
FEATURE_DIM = BIGRAM_BLOCK + ROOM_TYPE_COUNT + 2

PROB_EPS = 1e-12


@dataclass
class LinearModel:
    weights: np.ndarray  # shape (FEATURE_DIM,)
    bias: float

    @classmethod
    def zeros(cls) -> "LinearModel":
        return cls(weights=np.zeros(FEATURE_DIM), bias=0.0)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        z = features @ self.weights + self.bias
        return _sigmoid(z)


@dataclass
class JudgmentBatch:
    features: np.ndarray  # shape (N, FEATURE_DIM)
    labels: np.ndarray  # shape (N,), values {0, 1}
    w: float
    n_pos: int
    n_neg: int

    def __len__(self) -> int:
        return int(self.labels.shape[0])


@dataclass
class LossReport:
    loss: float
    gradient: np.ndarray  # FEATURE_DIM weights + 1 bias
    n_pos: int
    n_neg: int


@dataclass
class TrainConfig:
    lr: float = 0.5
    epochs: int = 300
    seed: int = 0
    w_mode: str = "auto"  # "auto" = per-batch neg/pos ratio, or a fixed float


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def node_room_ordinals(
    sample: JudgmentSample, trajectory: Trajectory, registry: RoomTypeRegistry
) -> list[int]:
    """Room-type ordinal of each node in the sample's slot order;
    indices beyond the trajectory length resolve through foreign_nodes."""
    ordinals: list[int] = []
    for v in sample.node_order:
        if v < trajectory.length:
            label = trajectory.nodes[v].view.room_type
        else:
            label = sample.foreign_nodes[v - trajectory.length].room_type
        ordinals.append(registry.ordinal(label))
    return ordinals


def featurize(
    sample: JudgmentSample, trajectory: Trajectory, registry: RoomTypeRegistry
) -> np.ndarray:
    """Bigram counts over consecutive node room types in slot order,
    then a room-type histogram, then (node count, room-node count)."""
    ordinals = node_room_ordinals(sample, trajectory, registry)
    x = np.zeros(FEATURE_DIM)
    for a, b in zip(ordinals, ordinals[1:]):
        x[a * ROOM_TYPE_COUNT + b] += 1.0
    for t in ordinals:
        x[BIGRAM_BLOCK + t] += 1.0
    x[BIGRAM_BLOCK + ROOM_TYPE_COUNT] = float(len(ordinals))
    x[BIGRAM_BLOCK + ROOM_TYPE_COUNT + 1] = float(trajectory.room_node_count)
    return x


def resolve_weight(n_pos: int, n_neg: int, w_mode: str | float) -> float:
    """Positive-term weight: the neg/pos ratio under "auto" (1.0 when
    either class is absent), else the given fixed value."""
    if w_mode == "auto":
        if n_pos == 0 or n_neg == 0:
            return 1.0
        return n_neg / n_pos
    w = float(w_mode)
    if w <= 0:
        raise InputError(f"weight must be positive, got {w}")
    return w


def build_batch(
    features: np.ndarray, labels: np.ndarray, w_mode: str | float = "auto"
) -> JudgmentBatch:
    if features.ndim != 2 or features.shape[1] != FEATURE_DIM:
        raise InputError(f"features must be (N, {FEATURE_DIM})")
    if labels.shape != (features.shape[0],):
        raise InputError("labels must align with features")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    return JudgmentBatch(
        features=features,
        labels=labels.astype(float),
        w=resolve_weight(n_pos, n_neg, w_mode),
        n_pos=n_pos,
        n_neg=n_neg,
    )


def tj_loss(model: LinearModel, batch: JudgmentBatch) -> LossReport:
    """Weighted BCE and its analytic gradient.

    Probabilities are clipped to [1e-12, 1 - 1e-12]; the log terms are
    undefined at 0 and 1.
    """
    n = len(batch)
    if n == 0:
        raise InputError("empty batch")
    y = batch.labels
    p = np.clip(model.predict_proba(batch.features), PROB_EPS, 1.0 - PROB_EPS)
    loss = -np.mean(batch.w * y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    # d loss / d z_n, with p already clipped
    gz = (-batch.w * y * (1.0 - p) + (1.0 - y) * p) / n
    grad_w = batch.features.T @ gz
    grad_b = float(np.sum(gz))
    return LossReport(
        loss=float(loss),
        gradient=np.concatenate([grad_w, [grad_b]]),
        n_pos=batch.n_pos,
        n_neg=batch.n_neg,
    )


@dataclass
class TrainResult:
    model: LinearModel
    history: list[float] = field(default_factory=list)
    w_used: float = 1.0


def train(features: np.ndarray, labels: np.ndarray, config: TrainConfig) -> TrainResult:
    """Full-batch gradient descent from a zero-initialized model."""
    batch = build_batch(features, labels, config.w_mode)
    if batch.n_pos == 0 or batch.n_neg == 0:
        raise InputError("training data must contain both classes")
    if config.lr <= 0 or config.epochs < 1:
        raise InputError("lr must be positive and epochs >= 1")
    model = LinearModel.zeros()
    history: list[float] = []
    for _ in range(config.epochs):
        report = tj_loss(model, batch)
        history.append(report.loss)
        model.weights = model.weights - config.lr * report.gradient[:-1]
        model.bias = model.bias - config.lr * float(report.gradient[-1])
    return TrainResult(model=model, history=history, w_used=batch.w)


def evaluate(
    model: LinearModel,
    features: np.ndarray,
    labels: np.ndarray,
    strategies: Sequence[str] | None = None,
) -> dict:
    """Threshold-0.5 metrics; per-strategy accuracy only for buckets
    that are actually present."""
    if features.shape[0] == 0:
        raise InputError("nothing to evaluate")
    p = model.predict_proba(features)
    pred = (p >= 0.5).astype(int)
    y = labels.astype(int)
    correct = pred == y
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    metrics = {
        "accuracy": float(np.mean(correct)),
        "precision": tp / (tp + fp) if tp + fp else 0.0,
        "recall": tp / (tp + fn) if tp + fn else 0.0,
        "n": int(y.shape[0]),
    }
    if strategies is not None:
        per: dict[str, float] = {}
        tags = list(strategies)
        for tag in sorted(set(tags)):
            mask = np.array([t == tag for t in tags])
            per[tag] = float(np.mean(correct[mask]))
        metrics["per_strategy_accuracy"] = per
    return metrics


def save_model(path: str | Path, result: TrainResult, config: TrainConfig, metrics: dict) -> None:
    payload = {
        "feature_version": FEATURE_VERSION,
        "weights": [round(float(v), 12) for v in result.model.weights],
        "bias": round(float(result.model.bias), 12),
        "hyper": {
            "lr": config.lr,
            "epochs": config.epochs,
            "seed": config.seed,
            "w_mode": config.w_mode,
            "w_used": result.w_used,
        },
        "final_metrics": metrics,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("feature_version") != FEATURE_VERSION:
        raise InputError(
            f"model feature version {payload.get('feature_version')!r} "
            f"does not match {FEATURE_VERSION!r}"
        )
    weights = np.asarray(payload["weights"], dtype=float)
    if weights.shape != (FEATURE_DIM,):
        raise InputError("model weight vector has the wrong dimension")
    return LinearModel(weights=weights, bias=float(payload["bias"]))
