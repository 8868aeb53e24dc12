"""Downstream classification heads over the fine-tuned encoder.

PaperInfoHead: embedding -> hidden linear + ReLU + dropout -> linear ->
softmax over journals.

ScopeFusionHead adds a second branch: every journal's scope embedding is
projected through its own linear + ReLU, the cosine between the paper
feature and each projected scope becomes a J-length feature vector, and
the fusion layer maps concat(paper feature, cosines) to journal
probabilities.
"""

from __future__ import annotations

from typing import Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from .corpus import JournalProfile
from .errors import DimensionMismatch
from .text import normalize_text

EPS_NORM = 1e-12


def masked_cosine(a: torch.Tensor, b: torch.Tensor, eps: float = EPS_NORM) -> torch.Tensor:
    """Row-by-row cosine (B, h) x (J, h) -> (B, J); zero where a norm <= eps.

    ReLU branches can legitimately output all-zero features, so zero-norm
    rows produce a neutral 0 cosine instead of an error.
    """
    na = a.norm(dim=-1)
    nb = b.norm(dim=-1)
    denom = na.clamp_min(eps).unsqueeze(-1) * nb.clamp_min(eps).unsqueeze(0)
    cos = (a @ b.T) / denom
    valid = (na > eps).unsqueeze(-1) & (nb > eps).unsqueeze(0)
    return torch.where(valid, cos.clamp(-1.0, 1.0), cos.new_zeros(()))


class PaperInfoHead(nn.Module):
    """Paper-information classifier head."""

    kind = "p"

    def __init__(self, input_dim: int, hidden_dim: int, n_journals: int,
                 dropout: float = 0.1):
        super().__init__()
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.n_journals = n_journals
        self.fc1 = nn.Linear(input_dim, hidden_dim)
        self.dropout = nn.Dropout(dropout)
        self.fc2 = nn.Linear(hidden_dim, n_journals)

    def logits(self, embeddings: torch.Tensor) -> torch.Tensor:
        if embeddings.shape[-1] != self.input_dim:
            raise DimensionMismatch(
                f"embedding dim {embeddings.shape[-1]} != head input {self.input_dim}"
            )
        hidden = self.dropout(F.relu(self.fc1(embeddings)))
        return self.fc2(hidden)

    def forward(self, embeddings: torch.Tensor) -> torch.Tensor:
        return F.softmax(self.logits(embeddings), dim=-1)


class ScopeFusionHead(nn.Module):
    """Paper + scopes classifier head with cosine fusion."""

    kind = "ps"

    def __init__(self, input_dim: int, hidden_dim: int, n_journals: int,
                 dropout: float = 0.1, eps: float = EPS_NORM):
        super().__init__()
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.n_journals = n_journals
        self.eps = eps
        self.paper_fc = nn.Linear(input_dim, hidden_dim)
        self.dropout = nn.Dropout(dropout)
        # scope projector output matches hidden_dim so the cosine is defined
        self.scope_fc = nn.Linear(input_dim, hidden_dim)
        self.fusion = nn.Linear(hidden_dim + n_journals, n_journals)

    def logits(self, embeddings: torch.Tensor, scope_table: torch.Tensor) -> torch.Tensor:
        if embeddings.shape[-1] != self.input_dim:
            raise DimensionMismatch(
                f"embedding dim {embeddings.shape[-1]} != head input {self.input_dim}"
            )
        if scope_table.shape != (self.n_journals, self.input_dim):
            raise DimensionMismatch(
                f"scope table {tuple(scope_table.shape)} != "
                f"({self.n_journals}, {self.input_dim})"
            )
        paper_feat = self.dropout(F.relu(self.paper_fc(embeddings)))
        scope_feat = F.relu(self.scope_fc(scope_table))
        cos_feat = masked_cosine(paper_feat, scope_feat, self.eps)
        return self.fusion(torch.cat([paper_feat, cos_feat], dim=-1))

    def forward(self, embeddings: torch.Tensor, scope_table: torch.Tensor) -> torch.Tensor:
        return F.softmax(self.logits(embeddings, scope_table), dim=-1)


def _run_head(head: nn.Module, args: tuple, train_mode: bool) -> torch.Tensor:
    # train_mode only toggles dropout; gradient tracking is the caller's call
    was_training = head.training
    head.train(train_mode)
    try:
        return head(*args)
    finally:
        head.train(was_training)


def forward_p(embedding, head: PaperInfoHead, train_mode: bool = False) -> torch.Tensor:
    """Probability vector(s) from the paper-information head.

    Accepts a single d-vector or a (batch, d) matrix; the output matches.
    """
    emb = torch.as_tensor(embedding, dtype=head.fc1.weight.dtype)
    single = emb.ndim == 1
    if single:
        emb = emb.unsqueeze(0)
    probs = _run_head(head, (emb,), train_mode)
    return probs.squeeze(0) if single else probs


def forward_ps(embedding, scope_table, head: ScopeFusionHead,
               train_mode: bool = False) -> torch.Tensor:
    """Probability vector(s) from the scope-fusion head."""
    dtype = head.paper_fc.weight.dtype
    emb = torch.as_tensor(embedding, dtype=dtype)
    table = torch.as_tensor(scope_table, dtype=dtype)
    single = emb.ndim == 1
    if single:
        emb = emb.unsqueeze(0)
    probs = _run_head(head, (emb, table), train_mode)
    return probs.squeeze(0) if single else probs


def build_scope_table(encoder, journals: Sequence[JournalProfile],
                      batch_size: int = 64, max_len: int | None = None) -> torch.Tensor:
    """Encode every journal's normalized scope text; rows follow table order.

    The result is detached: downstream training treats it as a constant
    and refreshes it whenever encoder weights move.
    """
    texts = [normalize_text(j.scope_text) for j in journals]
    was_training = encoder.training
    encoder.eval()
    try:
        with torch.no_grad():
            table = encoder.embed(texts, batch_size=batch_size, max_len=max_len)
    finally:
        encoder.train(was_training)
    return table.detach()
