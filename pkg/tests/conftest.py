"""Shared fixtures: the synthetic separable corpus and one full pipeline run."""

from __future__ import annotations

import copy
import time
from types import SimpleNamespace

import pytest

from simrec.contrastive import ContrastiveConfig, finetune
from simrec.corpus import CorpusSplit, build_pair_dataset, hash_split_assignment
from simrec.encoders import ToyTransformerEncoder
from simrec.recommender import DownstreamConfig, train_downstream
from simrec.synthetic import make_synthetic_corpus


@pytest.fixture(scope="session")
def synthetic_split() -> CorpusSplit:
    """8 journals x 25 docs, disjoint vocabularies, hash-split 80/20."""
    papers, journals = make_synthetic_corpus(n_journals=8, docs_per_journal=25, seed=7)
    train = [p for p in papers if hash_split_assignment(p.id) == "train"]
    test = [p for p in papers if hash_split_assignment(p.id) != "train"]
    return CorpusSplit(train=train, test=test, journals=journals)


@pytest.fixture(scope="session")
def pipeline(synthetic_split):
    """One full run: contrastive fine-tune, then TAK and TAKS heads.

    Shared across the acceptance, service, and CLI-free tests so the
    expensive training happens once per session. Timing is recorded for
    the end-to-end budget check.
    """
    started = time.monotonic()
    pairs = build_pair_dataset(synthetic_split)
    texts = [t for pair in pairs.pairs for t in pair]
    encoder = ToyTransformerEncoder.from_texts(texts, seed=13)
    encoder, contrastive_log = finetune(encoder, pairs, ContrastiveConfig(seed=13))

    config = DownstreamConfig(seed=13, epochs=30)
    model_tak = train_downstream(copy.deepcopy(encoder), synthetic_split, "TAK", config)
    model_taks = train_downstream(copy.deepcopy(encoder), synthetic_split, "TAKS", config)
    elapsed = time.monotonic() - started

    return SimpleNamespace(
        split=synthetic_split,
        pairs=pairs,
        encoder=encoder,
        contrastive_log=contrastive_log,
        model_tak=model_tak,
        model_taks=model_taks,
        downstream_config=config,
        elapsed_seconds=elapsed,
    )
