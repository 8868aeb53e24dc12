"""Run configuration, seeding, and reproducible timestamps.

Config files are plain YAML or JSON mappings merged over the built-in
defaults; CLI flags win over both. The SIMREC_CONFIG environment variable
supplies a config path when --config is not given.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import random
from pathlib import Path
from typing import Any

import numpy as np
import torch
import yaml

CONFIG_ENV_VAR = "SIMREC_CONFIG"

DEFAULTS: dict[str, Any] = {
    "seed": 13,
    "max_len": 256,
    # toy encoder
    "toy_layers": 2,
    "toy_heads": 2,
    "toy_model_dim": 48,
    "toy_ffn_dim": 96,
    "toy_vocab_size": 4096,
    "toy_max_len": 64,
    # contrastive stage
    "tau": 0.05,
    "contrastive_batch_size": 32,
    "contrastive_epochs": 3,
    "contrastive_lr": None,          # resolved: 1e-3 for toy, 3e-5 for pretrained
    "weight_decay": 0.01,
    "warmup_fraction": 0.1,
    "include_positive": True,
    # downstream stage
    "hidden_dim": 256,
    "dropout": 0.1,
    "downstream_batch_size": 32,
    "downstream_epochs": 30,
    "downstream_lr": 1e-3,
    "encoder_lr_scale": 0.1,
    "freeze_encoder": False,
    "eval_batch_size": 64,
}


def load_config(path: str | os.PathLike | None = None) -> dict[str, Any]:
    """Merge a config file (if any) over DEFAULTS and return the result.

    When path is None, falls back to $SIMREC_CONFIG. Unknown keys are kept
    so callers can carry extra settings through.
    """
    merged = dict(DEFAULTS)
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return merged
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".json":
        overrides = json.loads(text)
    else:
        overrides = yaml.safe_load(text)
    if overrides is None:
        overrides = {}
    if not isinstance(overrides, dict):
        raise ValueError(f"config file {p} must contain a mapping")
    merged.update(overrides)
    return merged


def seed_everything(seed: int) -> None:
    """Seed python, numpy, and torch RNGs for a reproducible run."""
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def utc_timestamp() -> str:
    """ISO-8601 UTC timestamp; honors SOURCE_DATE_EPOCH for reproducible runs."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        ts = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        ts = _dt.datetime.now(tz=_dt.timezone.utc)
    return ts.replace(microsecond=0).isoformat()
