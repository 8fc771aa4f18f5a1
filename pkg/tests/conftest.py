from __future__ import annotations

from pathlib import Path

import pytest

from tourforge.config import PipelineConfig
from tourforge.registry import RoomTypeRegistry

REPO_ROOT = Path(__file__).resolve().parent.parent
MINI_CORPUS = REPO_ROOT / "data" / "mini_corpus"


@pytest.fixture
def registry() -> RoomTypeRegistry:
    return RoomTypeRegistry.default()


@pytest.fixture
def mini_corpus_config(tmp_path) -> PipelineConfig:
    return PipelineConfig(
        annotations=MINI_CORPUS / "annotations.jsonl",
        templates=MINI_CORPUS / "templates.txt",
        registry=MINI_CORPUS / "registry.txt",
        out_dir=tmp_path / "out",
        seed=42,
    )
