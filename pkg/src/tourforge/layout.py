"""Desk-scale layout-reasoning probe.

Synthetic two-node houses place a target room at a bearing governed by
a per-rule sector. A 12-way softmax classifier is asked, from symbolic
one-hot features (current room type, queried room type), which of the
twelve 30-degree intervals of [-180, 180] contains the target. Rule-
governed layouts are learnable well above the 1/12 chance floor; the
probe reports both accuracies and a one-sided two-proportion p-value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import Sequence

import numpy as np

from .errors import InputError
from .registry import ROOM_TYPE_COUNT, RoomTypeRegistry
from .seeding import derive_rng

INTERVAL_COUNT = 12
INTERVAL_WIDTH_DEG = 30.0
FEATURE_DIM = 2 * ROOM_TYPE_COUNT

PROB_EPS = 1e-12


def angle_to_interval(s: float) -> int:
    """Index of the 30-degree interval of [-180, 180] containing s.

    Interval i covers [-180 + 30i, -180 + 30(i+1)); the closing
    endpoint s = 180 belongs to interval 11.
    """
    if not -180.0 <= s <= 180.0:
        raise InputError(f"angle {s} outside [-180, 180]")
    if s == 180.0:
        return INTERVAL_COUNT - 1
    return int((s + 180.0) // INTERVAL_WIDTH_DEG)


def interval_bounds(i: int) -> tuple[float, float]:
    return -180.0 + INTERVAL_WIDTH_DEG * i, -180.0 + INTERVAL_WIDTH_DEG * (i + 1)


@dataclass(frozen=True)
class HouseNode:
    node_id: int
    position: tuple[float, float]
    room_type: str


@dataclass(frozen=True)
class SynthHouse:
    house_id: str
    nodes: tuple[HouseNode, ...]
    edges: tuple[tuple[int, int], ...]
    rule_id: str


@dataclass(frozen=True)
class ProbeRule:
    """One directional regularity: from rooms of current_type, rooms of
    query_type sit in the given bearing interval."""

    rule_id: str
    current_type: str
    query_type: str
    interval: int


@dataclass(frozen=True)
class ProbeInstance:
    house_ref: str
    current_node: int
    query_room_type: str
    s: float
    target_interval: int
    current_room_type: str


def ring_rule_set(registry: RoomTypeRegistry) -> list[ProbeRule]:
    """Twelve rules: registry type j leads to type j+1 in interval j.
    Every (current, query) pair occurring in generated houses then maps
    to exactly one interval, so the targets are fully determined."""
    rules = []
    for j in range(ROOM_TYPE_COUNT):
        rules.append(
            ProbeRule(
                rule_id=f"ring{j:02d}",
                current_type=registry.label(j),
                query_type=registry.label((j + 1) % ROOM_TYPE_COUNT),
                interval=j,
            )
        )
    return rules


# bearings keep this margin from interval edges so the reverse bearing
# (+180 degrees) stays strictly inside its own interval
_EDGE_MARGIN_DEG = 0.5


def generate_house(house_id: str, rule: ProbeRule, rng: Random) -> SynthHouse:
    lo, hi = interval_bounds(rule.interval)
    bearing = rng.uniform(lo + _EDGE_MARGIN_DEG, hi - _EDGE_MARGIN_DEG)
    distance = rng.uniform(2.0, 8.0)
    rad = math.radians(bearing)
    target_pos = (distance * math.cos(rad), distance * math.sin(rad))
    nodes = (
        HouseNode(0, (0.0, 0.0), rule.current_type),
        HouseNode(1, target_pos, rule.query_type),
    )
    return SynthHouse(house_id=house_id, nodes=nodes, edges=((0, 1),), rule_id=rule.rule_id)


def generate_houses(count: int, rng: Random, rules: Sequence[ProbeRule]) -> list[SynthHouse]:
    """Round-robin over the rules, one rule per house."""
    if count < 0:
        raise InputError("house count must be non-negative")
    return [generate_house(f"h{i:05d}", rules[i % len(rules)], rng) for i in range(count)]


def bearing_deg(frm: HouseNode, to: HouseNode) -> float:
    dx = to.position[0] - frm.position[0]
    dy = to.position[1] - frm.position[1]
    if dx == 0.0 and dy == 0.0:
        raise InputError("coincident node positions")
    return math.degrees(math.atan2(dy, dx))


def make_instances(house: SynthHouse, rng: Random) -> list[ProbeInstance]:
    """One instance per ordered node pair. The reference heading at the
    current node is 0 degrees (east), so s is the plain planar bearing."""
    instances: list[ProbeInstance] = []
    for current in house.nodes:
        for other in house.nodes:
            if other.node_id == current.node_id:
                continue
            s = bearing_deg(current, other)
            instances.append(
                ProbeInstance(
                    house_ref=house.house_id,
                    current_node=current.node_id,
                    query_room_type=other.room_type,
                    s=s,
                    target_interval=angle_to_interval(s),
                    current_room_type=current.room_type,
                )
            )
    return instances


def instance_features(instance: ProbeInstance, registry: RoomTypeRegistry) -> np.ndarray:
    x = np.zeros(FEATURE_DIM)
    x[registry.ordinal(instance.current_room_type)] = 1.0
    x[ROOM_TYPE_COUNT + registry.ordinal(instance.query_room_type)] = 1.0
    return x


def instances_to_arrays(
    instances: Sequence[ProbeInstance], registry: RoomTypeRegistry
) -> tuple[np.ndarray, np.ndarray]:
    features = np.stack([instance_features(inst, registry) for inst in instances])
    targets = np.array([inst.target_interval for inst in instances], dtype=int)
    return features, targets


@dataclass
class SoftmaxModel:
    """12-way linear classifier. With negate_logits the probabilities
    follow the sign-flipped convention exp(-x_i)/sum exp(-x_k), which
    is the canonical softmax of the negated logits."""

    weights: np.ndarray  # shape (INTERVAL_COUNT, FEATURE_DIM)
    negate_logits: bool = False

    @classmethod
    def zeros(cls, negate_logits: bool = False) -> "SoftmaxModel":
        return cls(weights=np.zeros((INTERVAL_COUNT, FEATURE_DIM)), negate_logits=negate_logits)

    def logits(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights.T

    def probabilities(self, features: np.ndarray) -> np.ndarray:
        z = self.logits(features)
        if self.negate_logits:
            z = -z
        z = z - z.max(axis=1, keepdims=True)
        ez = np.exp(z)
        return ez / ez.sum(axis=1, keepdims=True)


@dataclass
class ProbeTrainConfig:
    lr: float = 0.5
    epochs: int = 500
    negate_logits: bool = False


def ce_loss(model: SoftmaxModel, features: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient in the shape
    of model.weights."""
    n = features.shape[0]
    if n == 0:
        raise InputError("empty batch")
    probs = model.probabilities(features)
    picked = np.clip(probs[np.arange(n), targets], PROB_EPS, 1.0)
    loss = float(-np.mean(np.log(picked)))
    delta = probs.copy()
    delta[np.arange(n), targets] -= 1.0
    grad = delta.T @ features / n
    if model.negate_logits:
        grad = -grad
    return loss, grad


def train_probe(
    features: np.ndarray, targets: np.ndarray, config: ProbeTrainConfig
) -> tuple[SoftmaxModel, list[float]]:
    if config.lr <= 0 or config.epochs < 1:
        raise InputError("lr must be positive and epochs >= 1")
    if len(set(targets.tolist())) < 2:
        raise InputError("training targets are single-class")
    model = SoftmaxModel.zeros(config.negate_logits)
    history: list[float] = []
    for _ in range(config.epochs):
        loss, grad = ce_loss(model, features, targets)
        history.append(loss)
        model.weights = model.weights - config.lr * grad
    return model, history


def evaluate_probe(model: SoftmaxModel, features: np.ndarray, targets: np.ndarray) -> float:
    probs = model.probabilities(features)
    return float(np.mean(np.argmax(probs, axis=1) == targets))


def two_proportion_p(p_better: float, p_worse: float, n_better: int, n_worse: int) -> float:
    """One-sided p-value for the hypothesis that the first proportion
    exceeds the second."""
    pooled = (p_better * n_better + p_worse * n_worse) / (n_better + n_worse)
    var = pooled * (1.0 - pooled) * (1.0 / n_better + 1.0 / n_worse)
    if var == 0.0:
        return 1.0 if p_better <= p_worse else 0.0
    z = (p_better - p_worse) / math.sqrt(var)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass
class ProbeReport:
    untrained_acc: float
    trained_acc: float
    n_test: int
    p_value: float
    history: list[float] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "untrained_acc": round(self.untrained_acc, 6),
            "trained_acc": round(self.trained_acc, 6),
            "n_test": self.n_test,
            "p_value": float(f"{self.p_value:.6g}"),
        }


def run_probe(
    registry: RoomTypeRegistry,
    seed: int,
    train_houses_per_rule: int = 250,
    test_houses_per_rule: int = 84,
    config: ProbeTrainConfig | None = None,
) -> tuple[ProbeReport, list[SynthHouse], SoftmaxModel]:
    """Generate rule-governed houses, train on one house split and test
    on a disjoint one, and compare against the untrained model."""
    config = config or ProbeTrainConfig()
    rules = ring_rule_set(registry)
    rng = derive_rng(seed, "layout-probe", "houses")
    total = (train_houses_per_rule + test_houses_per_rule) * len(rules)
    houses = generate_houses(total, rng, rules)
    # round-robin generation: house i belongs to rule i % 12, so taking
    # the first train_houses_per_rule * 12 keeps both splits balanced
    cut = train_houses_per_rule * len(rules)
    train_houses, test_houses = houses[:cut], houses[cut:]

    inst_rng = derive_rng(seed, "layout-probe", "instances")
    train_instances = [i for h in train_houses for i in make_instances(h, inst_rng)]
    test_instances = [i for h in test_houses for i in make_instances(h, inst_rng)]
    x_train, y_train = instances_to_arrays(train_instances, registry)
    x_test, y_test = instances_to_arrays(test_instances, registry)

    untrained = SoftmaxModel.zeros(config.negate_logits)
    untrained_acc = evaluate_probe(untrained, x_test, y_test)
    model, history = train_probe(x_train, y_train, config)
    trained_acc = evaluate_probe(model, x_test, y_test)
    report = ProbeReport(
        untrained_acc=untrained_acc,
        trained_acc=trained_acc,
        n_test=int(y_test.shape[0]),
        p_value=two_proportion_p(trained_acc, untrained_acc, y_test.shape[0], y_test.shape[0]),
        history=history,
    )
    return report, houses, model


def house_record(house: SynthHouse) -> dict:
    """JSON-ready record matching the houses file schema."""
    return {
        "house_id": house.house_id,
        "nodes": [
            {
                "node_id": n.node_id,
                "position": [round(n.position[0], 9), round(n.position[1], 9)],
                "room_type": n.room_type,
            }
            for n in house.nodes
        ],
        "edges": [list(e) for e in house.edges],
        "rule_id": house.rule_id,
    }
