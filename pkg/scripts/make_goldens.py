"""Regenerate the committed golden fixtures (run from the repo root).

Usage: python scripts/make_goldens.py

Writes the toy-encoder golden embeddings; the service golden and the
frontend stub fixtures are produced by scripts/make_service_goldens.py
because they need a trained fixture artifact.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from golden_utils import GOLDEN_DIR, GOLDEN_EMBEDDINGS, compute_golden_embeddings


def main() -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    embeddings = compute_golden_embeddings()
    np.savez(GOLDEN_EMBEDDINGS, embeddings=embeddings)
    print(f"wrote {GOLDEN_EMBEDDINGS} with shape {embeddings.shape}")


if __name__ == "__main__":
    main()
