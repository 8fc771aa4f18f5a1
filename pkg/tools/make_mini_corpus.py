"""Regenerate the bundled mini corpus under data/mini_corpus.

The corpus is checked in; rerun this only when the synthetic generator
changes, then refresh the golden digests in tests/golden/.
"""

from __future__ import annotations

import sys
from pathlib import Path

from tourforge.registry import RoomTypeRegistry
from tourforge.synthcorpus import SynthCorpusParams, write_corpus

CORPUS_SEED = 7
N_VIDEOS = 12


def main() -> int:
    root = Path(__file__).resolve().parent.parent
    out = root / "data" / "mini_corpus"
    paths = write_corpus(out, RoomTypeRegistry.default(), SynthCorpusParams(n_videos=N_VIDEOS), CORPUS_SEED)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path.relative_to(root)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
