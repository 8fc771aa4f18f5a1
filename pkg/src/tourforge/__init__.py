"""tourforge: build navigation path-instruction datasets from annotated
house-tour videos, plus the judgment pretext task and layout probe."""

from .registry import ROOM_TYPE_COUNT, DEFAULT_ROOM_TYPES, RoomTypeRegistry

__version__ = "0.1.0"

__all__ = [
    "ROOM_TYPE_COUNT",
    "DEFAULT_ROOM_TYPES",
    "RoomTypeRegistry",
    "__version__",
]
