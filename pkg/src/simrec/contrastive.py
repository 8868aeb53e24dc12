"""In-batch-negative contrastive objective and the encoder fine-tuning loop.

For a mini-batch of N (paper text, scope text) pairs with embeddings h_i
and h_i+, the per-sample loss is

    l_i = -log( exp(sim(h_i, h_i+)/tau) / sum_j exp(sim(h_i, h_j+)/tau) )

with sim = cosine similarity and the sum running over all N columns
(the positive included by default). The batch loss is the mean of l_i,
computed via logsumexp so large similarity/temperature ratios stay stable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import torch

from .config import seed_everything
from .corpus import PairDataset
from .errors import DegenerateBatch, DimensionMismatch, NonFiniteLoss, ZeroNormVector

EPS_NORM = 1e-12


def cosine_similarity(h1, h2, eps: float = EPS_NORM) -> float:
    """Cosine of two vectors, clamped to [-1, 1] against round-off."""
    a = np.asarray(h1, dtype=np.float64)
    b = np.asarray(h2, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch(f"vector shapes {a.shape} and {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na <= eps or nb <= eps:
        raise ZeroNormVector()
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def similarity_matrix(h: torch.Tensor, h_plus: torch.Tensor,
                      eps: float = EPS_NORM) -> torch.Tensor:
    """Matrix S with S[i, j] = cosine(h[i], h_plus[j]); differentiable.

    Raises ZeroNormVector (with the offending row index) if any row of
    either batch has norm <= eps.
    """
    h = torch.as_tensor(h)
    h_plus = torch.as_tensor(h_plus)
    if h.ndim != 2 or h.shape != h_plus.shape:
        raise DimensionMismatch(
            f"batch shapes {tuple(h.shape)} and {tuple(h_plus.shape)}"
        )
    for name, mat in (("h", h), ("h_plus", h_plus)):
        norms = mat.norm(dim=1)
        bad = torch.nonzero(norms <= eps)
        if bad.numel():
            raise ZeroNormVector(f"zero-norm row in {name}", index=int(bad[0, 0]))
    hn = h / h.norm(dim=1, keepdim=True)
    pn = h_plus / h_plus.norm(dim=1, keepdim=True)
    return (hn @ pn.T).clamp(-1.0, 1.0)


def info_nce_loss(similarities, tau: float, include_positive: bool = True) -> torch.Tensor:
    """Mean in-batch contrastive loss over a square similarity matrix.

    The denominator sums over every column of the row (the diagonal
    positive included unless include_positive=False). Returns a scalar
    tensor so gradients can flow back through the similarities.
    """
    s = torch.as_tensor(similarities)
    if not s.is_floating_point():
        s = s.to(torch.get_default_dtype())
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionMismatch(f"similarity matrix must be square, got {tuple(s.shape)}")
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    n = s.shape[0]
    logits = s / tau
    if not include_positive:
        if n == 1:
            # empty denominator; 0 is the only finite choice
            return (s * 0.0).sum()
        mask = torch.eye(n, dtype=torch.bool, device=s.device)
        denom = torch.logsumexp(logits.masked_fill(mask, float("-inf")), dim=1)
    else:
        denom = torch.logsumexp(logits, dim=1)
    per_sample = denom - logits.diagonal()
    return per_sample.mean()


@dataclass
class ContrastiveConfig:
    """Hyperparameters for the pair fine-tuning stage."""

    tau: float = 0.05
    batch_size: int = 32
    epochs: int = 3
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    seed: int = 13
    warmup_fraction: float = 0.1
    include_positive: bool = True
    max_len: int | None = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be > 0 and weight_decay >= 0")


@dataclass
class LossLogEntry:
    step: int
    epoch: int
    loss: float
    lr: float

    def to_json(self) -> str:
        import json
        return json.dumps(
            {"step": self.step, "epoch": self.epoch, "loss": self.loss, "lr": self.lr}
        )


def _batched_indices(order: Sequence[int], batch_size: int):
    for start in range(0, len(order), batch_size):
        yield order[start:start + batch_size]


def finetune(encoder, pairs, config: ContrastiveConfig, log_path=None):
    """Fine-tune all encoder parameters on (paper, scope) pairs.

    Runs epochs x ceil(|pairs|/batch_size) AdamW steps with linear warmup
    over the first warmup_fraction of steps, shuffling pairs once per epoch
    under the config seed. Returns (encoder, per-step loss log); the same
    config and seed reproduce the log bit-for-bit.
    """
    pair_list = pairs.pairs if isinstance(pairs, PairDataset) else list(pairs)
    if not pair_list:
        raise ValueError("cannot fine-tune on an empty pair set")
    if config.batch_size == 1:
        warnings.warn(
            "batch_size=1 gives no in-batch negatives; loss is identically 0",
            DegenerateBatch,
        )

    seed_everything(config.seed)
    encoder.train()
    optimizer = torch.optim.AdamW(
        encoder.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
    )
    n = len(pair_list)
    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    warmup_steps = max(1, math.ceil(config.warmup_fraction * total_steps))
    shuffler = torch.Generator().manual_seed(config.seed)

    log: list[LossLogEntry] = []
    writer = open(log_path, "w", encoding="utf-8") if log_path else None
    step = 0
    try:
        for epoch in range(config.epochs):
            order = torch.randperm(n, generator=shuffler).tolist()
            for chunk in _batched_indices(order, config.batch_size):
                xs = [pair_list[i][0] for i in chunk]
                xps = [pair_list[i][1] for i in chunk]
                h = encoder.encode(encoder.tokenize(xs, max_len=config.max_len))
                h_plus = encoder.encode(encoder.tokenize(xps, max_len=config.max_len))
                sims = similarity_matrix(h, h_plus)
                loss = info_nce_loss(sims, config.tau, config.include_positive)
                loss_value = loss.item()
                if not torch.isfinite(loss):
                    raise NonFiniteLoss(step, loss_value, "contrastive fine-tuning")
                lr = config.learning_rate * min(1.0, (step + 1) / warmup_steps)
                for group in optimizer.param_groups:
                    group["lr"] = lr
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                entry = LossLogEntry(step=step, epoch=epoch, loss=loss_value, lr=lr)
                log.append(entry)
                if writer:
                    writer.write(entry.to_json() + "\n")
                step += 1
    finally:
        if writer:
            writer.close()

    encoder.eval()
    encoder.provenance = dict(getattr(encoder, "provenance", {}) or {})
    encoder.provenance["contrastive"] = asdict(config)
    return encoder, log
