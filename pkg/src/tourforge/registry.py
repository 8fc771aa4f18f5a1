"""The 12-way room-type alphabet.

The room categories are an input, not a hard-coded truth: any file with
exactly 12 distinct lowercase labels works. DEFAULT_ROOM_TYPES is the
documented default used by the bundled corpus and the synthetic
generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError

ROOM_TYPE_COUNT = 12

DEFAULT_ROOM_TYPES = (
    "bathroom",
    "bedroom",
    "closet",
    "dining room",
    "entryway",
    "family room",
    "garage",
    "hallway",
    "kitchen",
    "laundry room",
    "living room",
    "office",
)


@dataclass(frozen=True)
class RoomTypeRegistry:
    """Ordered room-type labels with a label -> ordinal bijection."""

    types: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.types) != ROOM_TYPE_COUNT:
            raise InputError(
                f"registry must have exactly {ROOM_TYPE_COUNT} room types, got {len(self.types)}"
            )
        if len(set(self.types)) != len(self.types):
            raise InputError("registry labels must be unique")
        for label in self.types:
            if not label or label != label.strip().lower():
                raise InputError(f"registry label {label!r} must be non-empty lowercase")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.types)})

    def ordinal(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise InputError(f"unknown room type {label!r}") from None

    def label(self, ordinal: int) -> str:
        return self.types[ordinal]

    def __len__(self) -> int:
        return ROOM_TYPE_COUNT

    @classmethod
    def default(cls) -> "RoomTypeRegistry":
        return cls(DEFAULT_ROOM_TYPES)

    @classmethod
    def from_file(cls, path: str | Path) -> "RoomTypeRegistry":
        """One label per line, exactly 12 lines."""
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        labels = tuple(line.strip() for line in lines if line.strip())
        return cls(labels)

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.types) + "\n", encoding="utf-8")
