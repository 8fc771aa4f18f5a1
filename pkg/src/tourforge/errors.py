"""Exception hierarchy shared across the pipeline.

CLI exit codes: ConfigError -> 2, InputError -> 3, StageError -> 4.
"""

from __future__ import annotations


class TourforgeError(Exception):
    """Base class for everything raised on purpose by this package."""


class ConfigError(TourforgeError):
    """Bad configuration value; message names the offending field."""


class InputError(TourforgeError):
    """An input file is missing, unreadable, or violates its schema."""


class StageError(TourforgeError):
    """A pipeline stage failed; message names the stage and cause."""

    def __init__(self, stage: str, cause: str):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class AnnotationParseError(InputError):
    """Line-level failure while reading an annotations file."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SchemaError(AnnotationParseError):
    """Well-formed line whose fields violate the annotations schema."""


class DuplicateFrameError(AnnotationParseError):
    """Second occurrence of a (video_id, frame_index) pair."""


class TemplateError(InputError):
    """Template file unusable (empty or unreadable)."""


class GenerationError(StageError):
    """Instruction generation impossible for a trajectory."""

    def __init__(self, cause: str):
        super().__init__("instructions", cause)


class TrajectorySkip(TourforgeError):
    """A video/trajectory draw cannot satisfy the construction bounds.

    Not fatal: the pipeline records a diagnostics entry and moves on.
    """

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class PairSkip(TourforgeError):
    """A trajectory cannot be paired with an instruction (e.g. no action
    label and no yaw on a node transition). Recorded, not fatal."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class StrategyInapplicable(TourforgeError):
    """A negative-sample strategy has no valid output for this pair."""

    def __init__(self, strategy: str, reason: str):
        super().__init__(f"{strategy}: {reason}")
        self.strategy = strategy
        self.reason = reason
