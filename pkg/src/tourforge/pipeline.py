"""End-to-end pipeline: ingest -> trajectories -> pairs -> samples ->
split -> stats, with a digest manifest for reproducibility checks.

Every stage draws from rng substreams derived from (global seed, stage,
stable key), so scheduling and stage re-runs cannot change any output.
All files are written with sorted JSON keys and sorted record order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .annotations import FrameRecord, apply_filter, load_annotations, sparse_sample
from .config import PipelineConfig
from .errors import PairSkip, StageError, TourforgeError
from .instructions import PathInstructionPair, TemplateReport, generate_pair, load_templates, pair_record
from .judgment import TrainConfig, evaluate, featurize, save_model, train
from .layout import ProbeTrainConfig, house_record, run_probe
from .registry import RoomTypeRegistry
from .samples import (
    DatasetSplit,
    JudgmentSample,
    donor_pool_from,
    judgment_record,
    make_mlm_sample,
    make_negatives,
    make_positive,
    make_ranking_set,
    split_record,
    split_videos,
)
from .seeding import derive_rng
from .stats import compute_stats, emit_report
from .trajectories import Trajectory, TrajectoryParams, build_for_video, trajectory_record

MANIFEST_NAME = "manifest.json"


@dataclass
class PipelineState:
    config: PipelineConfig
    registry: RoomTypeRegistry | None = None
    kept_frames: dict[str, list[FrameRecord]] = field(default_factory=dict)
    ingest_info: dict = field(default_factory=dict)
    trajectories: list[Trajectory] = field(default_factory=list)
    build_report: dict = field(default_factory=dict)
    pairs: list[PathInstructionPair] = field(default_factory=list)
    pair_skips: list[dict] = field(default_factory=list)
    template_report: TemplateReport = field(default_factory=TemplateReport)
    judgment_samples: list[JudgmentSample] = field(default_factory=list)
    strategy_skips: list[dict] = field(default_factory=list)
    mlm_records: list[dict] = field(default_factory=list)
    ranking_records: list[dict] = field(default_factory=list)
    ranking_skips: list[dict] = field(default_factory=list)
    split: DatasetSplit | None = None

    def trajectory_by_id(self, trajectory_id: str) -> Trajectory:
        return next(t for t in self.trajectories if t.trajectory_id == trajectory_id)


def _load_registry(config: PipelineConfig) -> RoomTypeRegistry:
    if config.registry is None:
        return RoomTypeRegistry.default()
    return RoomTypeRegistry.from_file(config.registry)


def run_ingest(state: PipelineState) -> None:
    cfg = state.config
    state.registry = _load_registry(cfg)
    try:
        videos = load_annotations(cfg.annotations, state.registry, strict=cfg.strict)
    except FileNotFoundError as exc:
        raise StageError("ingest", f"annotations file not found: {cfg.annotations}") from exc

    frames_per_video: dict[str, int] = {}
    room_counts: dict[str, int] = {}
    rejected_by_reason: dict[str, int] = {}
    kept_total = rejected_total = 0
    for video in videos:
        sampled = sparse_sample(video, cfg.rate_hz)
        kept, report = apply_filter(sampled)
        state.kept_frames[video.video_id] = kept
        frames_per_video[video.video_id] = len(kept)
        kept_total += len(kept)
        rejected_total += len(report.rejected)
        for _, reason in report.rejected:
            rejected_by_reason[reason] = rejected_by_reason.get(reason, 0) + 1
        for frame in kept:
            label = state.registry.label(frame.argmax_room())
            room_counts[label] = room_counts.get(label, 0) + 1
    state.ingest_info = {
        "videos": len(videos),
        "frames_kept": kept_total,
        "frames_rejected": rejected_total,
        "rejected_by_reason": dict(sorted(rejected_by_reason.items())),
        "frames_per_video": dict(sorted(frames_per_video.items())),
        "room_type_counts": dict(sorted(room_counts.items())),
    }


def run_trajectories(state: PipelineState) -> None:
    cfg = state.config
    params = TrajectoryParams(
        merge_window=cfg.merge_window,
        k_min=cfg.k_range[0],
        k_max=cfg.k_range[1],
        r_min=cfg.r_range[0],
        r_max=cfg.r_range[1],
        per_video=cfg.trajectories_per_video,
        max_attempts=cfg.max_attempts,
    )
    skips: list[dict] = []
    reduced = 0
    for video_id in sorted(state.kept_frames):
        result = build_for_video(
            video_id, state.kept_frames[video_id], state.registry, params, cfg.seed
        )
        state.trajectories.extend(result.trajectories)
        skips.extend(result.skips)
        reduced += result.reduced_count
    state.build_report = {
        "trajectories": len(state.trajectories),
        "k_reduced": reduced,
        "skips": skips,
    }


def run_pairs(state: PipelineState) -> None:
    cfg = state.config
    try:
        templates = load_templates(cfg.templates, state.template_report)
    except FileNotFoundError as exc:
        raise StageError("instructions", f"templates file not found: {cfg.templates}") from exc
    for trajectory in state.trajectories:
        pair_id = f"{trajectory.trajectory_id}/p0"
        rng = derive_rng(cfg.seed, "pair", trajectory.trajectory_id)
        try:
            pair = generate_pair(pair_id, trajectory, templates, rng)
        except PairSkip as skip:
            state.pair_skips.append(
                {"trajectory_id": trajectory.trajectory_id, "reason": skip.reason}
            )
            continue
        state.pairs.append(pair)


def run_split(state: PipelineState) -> None:
    if state.split is not None:
        return
    cfg = state.config
    video_ids = sorted(state.kept_frames)
    rng = derive_rng(cfg.seed, "split")
    state.split = split_videos(video_ids, cfg.split_fraction, rng, cfg.seed)


def run_samples(state: PipelineState) -> None:
    cfg = state.config
    if state.split is None:
        run_split(state)
    donor_pool = donor_pool_from(state.trajectories)
    train_videos = set(state.split.train_videos)

    # ranking distractors come from the same split side as the gold
    # trajectory so the test side never leaks into training sets
    side_pools: dict[bool, list[str]] = {True: [], False: []}
    pair_by_trajectory: dict[str, PathInstructionPair] = {}
    for pair in state.pairs:
        trajectory = state.trajectory_by_id(pair.trajectory_id)
        side_pools[trajectory.video_id in train_videos].append(pair.trajectory_id)
        pair_by_trajectory[pair.trajectory_id] = pair

    for pair in state.pairs:
        trajectory = state.trajectory_by_id(pair.trajectory_id)
        state.judgment_samples.append(
            make_positive(f"{pair.pair_id}/positive0", pair.pair_id, trajectory)
        )
        neg_rng = derive_rng(cfg.seed, "negatives", pair.pair_id)
        batch = make_negatives(
            pair.pair_id, trajectory, donor_pool, neg_rng, cfg.negatives_per_strategy
        )
        state.judgment_samples.extend(batch.samples)
        state.strategy_skips.extend(batch.skipped)

        mlm_rng = derive_rng(cfg.seed, "mlm", pair.pair_id)
        tokens = pair.instruction.split()
        mlm = make_mlm_sample(f"{pair.pair_id}/mlm0", pair.pair_id, tokens, cfg.p_mask, mlm_rng)
        state.mlm_records.append(
            {
                "sample_id": mlm.sample_id,
                "pair_id": mlm.pair_id,
                "masked_positions": list(mlm.masked_positions),
                "original_tokens": list(mlm.original_tokens),
            }
        )

        in_train = trajectory.video_id in train_videos
        pool = [t for t in side_pools[in_train] if t != pair.trajectory_id]
        if len(pool) < cfg.ranking_candidates:
            state.ranking_skips.append(
                {
                    "pair_id": pair.pair_id,
                    "reason": f"pool of {len(pool)} below {cfg.ranking_candidates} candidates",
                }
            )
        else:
            rank_rng = derive_rng(cfg.seed, "ranking", pair.pair_id)
            ranking = make_ranking_set(
                f"{pair.pair_id}/rank0",
                pair.pair_id,
                pair.trajectory_id,
                pool,
                cfg.ranking_candidates,
                rank_rng,
            )
            state.ranking_records.append(
                {
                    "sample_id": ranking.sample_id,
                    "instruction_ref": ranking.instruction_ref,
                    "candidates": list(ranking.candidates),
                    "gold_index": ranking.gold_index,
                }
            )


def write_jsonl(path: Path, records: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: Path, seed: int, complete: bool, failed_stage: str | None = None) -> Path:
    files = {}
    for path in sorted(out_dir.rglob("*")):
        if path.is_file() and path.name != MANIFEST_NAME:
            files[path.relative_to(out_dir).as_posix()] = _digest(path)
    manifest = {"seed": seed, "complete": complete, "files": files}
    if failed_stage is not None:
        manifest["failed_stage"] = failed_stage
    path = out_dir / MANIFEST_NAME
    write_json(path, manifest)
    return path


STAGE_RUNNERS = (
    ("ingest", run_ingest),
    ("trajectories", run_trajectories),
    ("instructions", run_pairs),
    ("samples", run_samples),
    ("split", run_split),
)


def emit_stage_files(state: PipelineState, out_dir: Path, stage: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if stage == "ingest":
        write_json(out_dir / "ingest_report.json", state.ingest_info)
    elif stage == "trajectories":
        write_jsonl(out_dir / "trajectories.jsonl", [trajectory_record(t) for t in state.trajectories])
        write_json(out_dir / "trajectory_build_report.json", state.build_report)
    elif stage == "instructions":
        write_jsonl(out_dir / "pairs.jsonl", [pair_record(p) for p in state.pairs])
        write_json(
            out_dir / "instruction_report.json",
            {
                "pairs": len(state.pairs),
                "skipped": state.pair_skips,
                "templates_accepted": state.template_report.accepted,
                "templates_rejected": state.template_report.rejected,
            },
        )
    elif stage == "samples":
        write_jsonl(out_dir / "samples.jsonl", [judgment_record(s) for s in state.judgment_samples])
        write_jsonl(out_dir / "mlm_samples.jsonl", state.mlm_records)
        write_jsonl(out_dir / "ranking_samples.jsonl", state.ranking_records)
        n_pos = sum(1 for s in state.judgment_samples if s.label == 1)
        write_json(
            out_dir / "samples_report.json",
            {
                "n_pos": n_pos,
                "n_neg": len(state.judgment_samples) - n_pos,
                "strategy_skips": state.strategy_skips,
                "ranking_skips": state.ranking_skips,
            },
        )
    elif stage == "split":
        write_json(out_dir / "split.json", split_record(state.split))
    else:
        raise ValueError(f"unknown stage {stage!r}")


def run_pipeline(config: PipelineConfig, figures: bool = True) -> Path:
    """Run every stage, then stats, then write the digest manifest.
    Returns the manifest path. On a stage failure the manifest is still
    written, marked incomplete, before the error propagates."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    state = PipelineState(config=config)
    current = "ingest"
    try:
        for stage, runner in STAGE_RUNNERS:
            current = stage
            runner(state)
            emit_stage_files(state, out_dir, stage)
        current = "stats"
        emit_report(compute_stats(out_dir), out_dir, figures=figures)
    except TourforgeError as exc:
        write_manifest(out_dir, config.seed, complete=False, failed_stage=current)
        if isinstance(exc, StageError):
            raise
        raise StageError(current, str(exc)) from exc
    return write_manifest(out_dir, config.seed, complete=True)


def run_stage(config: PipelineConfig, upto: str, figures: bool = True) -> PipelineState:
    """Run stages through `upto` and emit only that stage's files
    (earlier stages are recomputed in memory; they are deterministic)."""
    names = [name for name, _ in STAGE_RUNNERS]
    if upto not in names and upto != "stats":
        raise ValueError(f"unknown stage {upto!r}")
    out_dir = Path(config.out_dir)
    state = PipelineState(config=config)
    if upto == "stats":
        emit_report(compute_stats(out_dir), out_dir, figures=figures)
        return state
    for stage, runner in STAGE_RUNNERS:
        runner(state)
        if stage == upto:
            emit_stage_files(state, out_dir, stage)
            break
    return state


def judgment_dataset(state: PipelineState) -> tuple[np.ndarray, np.ndarray, list[str], list[str]]:
    """Feature matrix, labels, strategies, and video ids for every
    judgment sample in the state."""
    rows = []
    labels = []
    strategies = []
    video_ids = []
    for sample in state.judgment_samples:
        trajectory = state.trajectory_by_id(_pair_to_trajectory(sample.pair_id))
        rows.append(featurize(sample, trajectory, state.registry))
        labels.append(sample.label)
        strategies.append(sample.strategy)
        video_ids.append(trajectory.video_id)
    features = np.stack(rows) if rows else np.zeros((0, 1))
    return features, np.array(labels), strategies, video_ids


def _pair_to_trajectory(pair_id: str) -> str:
    # pair ids are "<trajectory_id>/p<n>"
    return pair_id.rsplit("/", 1)[0]


def run_tj_training(config: PipelineConfig) -> dict:
    """Build the dataset in memory, train on the train-video samples,
    and evaluate on the held-out videos. Writes the model file and
    returns the metrics."""
    state = PipelineState(config=config)
    for _, runner in STAGE_RUNNERS:
        runner(state)
    features, labels, strategies, video_ids = judgment_dataset(state)
    if features.shape[0] == 0:
        raise StageError("train-tj", "no judgment samples to train on")
    train_videos = set(state.split.train_videos)
    in_train = np.array([v in train_videos for v in video_ids])

    train_config = TrainConfig(
        lr=config.train.lr,
        epochs=config.train.epochs,
        seed=config.seed,
        w_mode=config.train.w_mode,
    )
    result = train(features[in_train], labels[in_train], train_config)
    test_mask = ~in_train
    if int(test_mask.sum()) > 0:
        test_strategies = [s for s, m in zip(strategies, test_mask) if m]
        metrics = evaluate(result.model, features[test_mask], labels[test_mask], test_strategies)
    else:
        metrics = {"accuracy": None, "note": "empty test side"}
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_model(out_dir / "tj_model.json", result, train_config, metrics)
    return metrics


def run_layout_probe(config: PipelineConfig) -> dict:
    """Generate rule-governed houses, run the probe, and write the
    houses file plus the probe report."""
    registry = _load_registry(config)
    probe_config = ProbeTrainConfig(
        lr=config.probe.lr,
        epochs=config.probe.epochs,
        negate_logits=config.probe.negate_logits,
    )
    report, houses, _model = run_probe(
        registry,
        config.seed,
        train_houses_per_rule=config.probe.train_houses_per_rule,
        test_houses_per_rule=config.probe.test_houses_per_rule,
        config=probe_config,
    )
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_dir / "houses.jsonl", [house_record(h) for h in houses])
    write_json(out_dir / "probe_report.json", report.to_record())
    return report.to_record()
