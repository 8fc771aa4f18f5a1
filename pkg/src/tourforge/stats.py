"""Corpus statistics: exact counts plus rendered distribution figures.

compute_stats reads the pipeline's emitted artifacts; emit_report
writes a machine-readable JSON file, a diff-stable text table (6
significant digits), and bar-chart PNGs of the main distributions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .instructions import ACTION_TEXTS

# pairs files carry the rendered phrases; the report counts the keys
_TEXT_TO_ACTION = {text: action for action, text in ACTION_TEXTS.items()}


@dataclass
class StatsReport:
    videos: int = 0
    frames_kept: int = 0
    frames_rejected: int = 0
    rejected_by_reason: dict = field(default_factory=dict)
    frames_per_video: dict = field(default_factory=dict)  # video_id -> kept count
    room_type_counts: dict = field(default_factory=dict)
    action_counts: dict = field(default_factory=dict)
    trajectory_lengths: dict = field(default_factory=dict)  # K -> count
    trajectories: int = 0
    k_reduced: int = 0
    trajectories_skipped: int = 0
    pairs: int = 0
    judgment_samples: int = 0
    n_pos: int = 0
    n_neg: int = 0

    def k_reduced_fraction(self) -> float:
        return self.k_reduced / self.trajectories if self.trajectories else 0.0

    def to_record(self) -> dict:
        return {
            "videos": self.videos,
            "frames_kept": self.frames_kept,
            "frames_rejected": self.frames_rejected,
            "rejected_by_reason": dict(sorted(self.rejected_by_reason.items())),
            "frames_per_video": dict(sorted(self.frames_per_video.items())),
            "room_type_counts": dict(sorted(self.room_type_counts.items())),
            "action_counts": dict(sorted(self.action_counts.items())),
            "trajectory_lengths": {
                str(k): v for k, v in sorted(self.trajectory_lengths.items())
            },
            "trajectories": self.trajectories,
            "k_reduced": self.k_reduced,
            "k_reduced_fraction": _sig6(self.k_reduced_fraction()),
            "trajectories_skipped": self.trajectories_skipped,
            "pairs": self.pairs,
            "judgment_samples": self.judgment_samples,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
        }


def _sig6(value: float) -> float:
    return float(f"{value:.6g}")


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def compute_stats(out_dir: str | Path) -> StatsReport:
    """Assemble the report from whichever artifacts exist in out_dir.

    Missing stage outputs leave their sections at zero so the stats
    subcommand works after partial runs.
    """
    out = Path(out_dir)
    report = StatsReport()

    ingest_path = out / "ingest_report.json"
    if ingest_path.exists():
        ingest = json.loads(ingest_path.read_text(encoding="utf-8"))
        report.videos = ingest.get("videos", 0)
        report.frames_kept = ingest.get("frames_kept", 0)
        report.frames_rejected = ingest.get("frames_rejected", 0)
        report.rejected_by_reason = ingest.get("rejected_by_reason", {})
        report.frames_per_video = ingest.get("frames_per_video", {})
        report.room_type_counts = ingest.get("room_type_counts", {})

    traj_path = out / "trajectories.jsonl"
    if traj_path.exists():
        for record in _read_jsonl(traj_path):
            report.trajectories += 1
            k = record["K"]
            report.trajectory_lengths[k] = report.trajectory_lengths.get(k, 0) + 1

    build_path = out / "trajectory_build_report.json"
    if build_path.exists():
        build = json.loads(build_path.read_text(encoding="utf-8"))
        report.k_reduced = build.get("k_reduced", 0)
        report.trajectories_skipped = len(build.get("skips", []))

    pairs_path = out / "pairs.jsonl"
    if pairs_path.exists():
        for record in _read_jsonl(pairs_path):
            report.pairs += 1
            for text in record["actions"]:
                action = _TEXT_TO_ACTION.get(text, text)
                report.action_counts[action] = report.action_counts.get(action, 0) + 1

    samples_path = out / "samples.jsonl"
    if samples_path.exists():
        for record in _read_jsonl(samples_path):
            report.judgment_samples += 1
            if record["label"] == 1:
                report.n_pos += 1
            else:
                report.n_neg += 1

    return report


def _table(report: StatsReport) -> str:
    rec = report.to_record()
    lines = ["metric value", "------ -----"]
    for key in (
        "videos",
        "frames_kept",
        "frames_rejected",
        "trajectories",
        "k_reduced",
        "k_reduced_fraction",
        "trajectories_skipped",
        "pairs",
        "judgment_samples",
        "n_pos",
        "n_neg",
    ):
        lines.append(f"{key} {rec[key]:.6g}" if isinstance(rec[key], float) else f"{key} {rec[key]}")
    for section in (
        "rejected_by_reason",
        "room_type_counts",
        "action_counts",
        "trajectory_lengths",
    ):
        lines.append("")
        lines.append(f"[{section}]")
        for key, value in rec[section].items():
            lines.append(f"{key} {value}")
    return "\n".join(lines) + "\n"


def _bar_figure(path: Path, title: str, labels: list[str], values: list[int]) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(labels)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_title(title)
    ax.set_ylabel("count")
    fig.tight_layout()
    # strip the library version stamp so re-renders are byte-stable
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def emit_report(report: StatsReport, out_dir: str | Path, figures: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    json_path = out / "stats.json"
    json_path.write_text(
        json.dumps(report.to_record(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(json_path)

    txt_path = out / "stats.txt"
    txt_path.write_text(_table(report), encoding="utf-8")
    written.append(txt_path)

    if figures:
        rec = report.to_record()
        for name, title, section in (
            ("frames_per_video", "Kept frames per video", "frames_per_video"),
            ("room_types", "Room-type distribution of kept frames", "room_type_counts"),
            ("actions", "Action distribution", "action_counts"),
            ("trajectory_lengths", "Trajectory length distribution", "trajectory_lengths"),
        ):
            data = rec[section]
            fig_path = out / f"{name}.png"
            _bar_figure(fig_path, title, list(data.keys()), list(data.values()))
            written.append(fig_path)
    return written
