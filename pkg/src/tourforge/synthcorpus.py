"""Synthetic tour-video corpus with a known layout grammar.

Each video walks an arc of the registry ring: room ordinals a, a+1,
..., (a+L-1) mod 12. Node sequences built from such videos are ring-
forward with step sizes 1..5, so any order disturbance produces a
backward bigram, which keeps the judgment task honest and learnable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from random import Random

from .registry import ROOM_TYPE_COUNT, RoomTypeRegistry
from .seeding import derive_rng

OBJECT_LEXICON: dict[str, tuple[str, ...]] = {
    "bathroom": ("mirror", "bathtub", "toilet"),
    "bedroom": ("bed", "dresser", "nightstand"),
    "closet": ("shelf", "coat rack", "shoe rack"),
    "dining room": ("dining table", "sideboard", "chandelier"),
    "entryway": ("console table", "doormat", "coat hook"),
    "family room": ("couch", "television", "bookshelf"),
    "garage": ("workbench", "toolbox", "bicycle"),
    "hallway": ("runner rug", "picture frame", "wall sconce"),
    "kitchen": ("oven", "sink", "fridge"),
    "laundry room": ("washer", "dryer", "ironing board"),
    "living room": ("sofa", "coffee table", "armchair"),
    "office": ("desk", "monitor", "bookcase"),
}

# every line keeps one more noun blank than verb blanks, covering noun
# arities 2 through 7
TEMPLATES: tuple[str, ...] = (
    "walk past the {NP} and {VP} into the {NP}",
    "leave the {NP} then {VP} toward the {NP}",
    "from the {NP} you should {VP} until you reach the {NP}",
    "start at the {NP} and {VP} through the {NP} then {VP} to the {NP}",
    "exit the {NP} and {VP} past the {NP} before you {VP} into the {NP}",
    "head out of the {NP} then {VP} by the {NP} and {VP} to stop at the {NP}",
    "begin in the {NP} and {VP} along the {NP} then {VP} across the {NP} and finally {VP} into the {NP}",
    "leave the {NP} then {VP} past the {NP} and {VP} through the {NP} before you {VP} toward the {NP}",
    "leave the {NP} then {VP} into the {NP} and {VP} past the {NP} then {VP} along the {NP} before you {VP} into the {NP}",
    "walk out of the {NP} and {VP} by the {NP} then {VP} through the {NP} and {VP} along the {NP} before you {VP} into the {NP}",
    "begin at the {NP} then {VP} into the {NP} and {VP} past the {NP} then {VP} through the {NP} and {VP} beyond the {NP} before you {VP} toward the {NP}",
    "leave the {NP} and {VP} through the {NP} then {VP} by the {NP} and {VP} along the {NP} then {VP} past the {NP} before you {VP} into the {NP}",
    "start in the {NP} and {VP} into the {NP} then {VP} past the {NP} and {VP} through the {NP} then {VP} along the {NP} and {VP} beyond the {NP} before you {VP} into the {NP}",
    "after the {NP} you {VP} toward the {NP} and {VP} along the {NP} then {VP} past the {NP} and {VP} into the {NP} then {VP} across the {NP} before you {VP} to the {NP}",
)


@dataclass(frozen=True)
class SynthCorpusParams:
    n_videos: int = 12
    arc_min: int = 4
    arc_max: int = 6
    frames_per_group_min: int = 8
    frames_per_group_max: int = 12
    fps: float = 1.0
    noise_rate: float = 0.12
    action_rate: float = 0.5


def _room_probs(argmax: int, rng: Random) -> list[float]:
    top = rng.uniform(0.5, 0.95)
    rest = [rng.uniform(0.05, 1.0) for _ in range(ROOM_TYPE_COUNT - 1)]
    scale = (1.0 - top) / sum(rest)
    probs: list[float] = []
    j = 0
    for i in range(ROOM_TYPE_COUNT):
        if i == argmax:
            probs.append(top)
        else:
            probs.append(rest[j] * scale)
            j += 1
    return [round(p, 9) for p in probs]


def _objects_for(room: str, rng: Random) -> list[dict]:
    lexicon = OBJECT_LEXICON[room]
    count = rng.randint(1, len(lexicon))
    labels = rng.sample(lexicon, count)
    return [{"label": label, "score": round(rng.uniform(0.3, 0.95), 4)} for label in labels]


def _noise_record(rng: Random) -> dict:
    # one of the three rejection causes, equally likely
    kind = rng.randrange(3)
    return {
        "person": kind == 0,
        "outdoor": kind == 1,
        "region_count": 0 if kind == 2 else rng.randint(1, 4),
    }


def generate_video(video_id: str, registry: RoomTypeRegistry, params: SynthCorpusParams, rng: Random) -> list[dict]:
    """Annotation records (JSON-ready dicts) for one arc-walking video."""
    start = rng.randrange(ROOM_TYPE_COUNT)
    arc_len = rng.randint(params.arc_min, params.arc_max)
    yaw = rng.uniform(-180.0, 180.0)
    records: list[dict] = []
    frame_index = 0
    for step in range(arc_len):
        room_ord = (start + step) % ROOM_TYPE_COUNT
        room = registry.label(room_ord)
        n_frames = rng.randint(params.frames_per_group_min, params.frames_per_group_max)
        for _ in range(n_frames):
            yaw = (yaw + rng.uniform(-40.0, 40.0) + 180.0) % 360.0 - 180.0
            record = {
                "video_id": video_id,
                "frame_index": frame_index,
                "timestamp_s": round(frame_index / params.fps, 6),
                "room_probs": _room_probs(room_ord, rng),
                "person": False,
                "outdoor": False,
                "objects": _objects_for(room, rng),
                "region_count": rng.randint(1, 6),
                "yaw_deg": round(yaw, 4),
            }
            if rng.random() < params.noise_rate:
                record.update(_noise_record(rng))
            if rng.random() < params.action_rate:
                record["action_to_next"] = rng.choice(["forward", "left", "right"])
            records.append(record)
            frame_index += 1
    return records


def generate_corpus(
    registry: RoomTypeRegistry, params: SynthCorpusParams, seed: int
) -> list[dict]:
    records: list[dict] = []
    for i in range(params.n_videos):
        video_id = f"v{i:03d}"
        rng = derive_rng(seed, "synth-video", video_id)
        records.extend(generate_video(video_id, registry, params, rng))
    return records


def write_corpus(
    out_dir: str | Path,
    registry: RoomTypeRegistry,
    params: SynthCorpusParams,
    seed: int,
) -> dict[str, Path]:
    """Write annotations.jsonl, registry.txt, and templates.txt."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "annotations": out / "annotations.jsonl",
        "registry": out / "registry.txt",
        "templates": out / "templates.txt",
    }
    records = generate_corpus(registry, params, seed)
    with open(paths["annotations"], "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    registry.to_file(paths["registry"])
    paths["templates"].write_text("\n".join(TEMPLATES) + "\n", encoding="utf-8")
    return paths
