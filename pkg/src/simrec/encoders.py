"""Sentence encoders: whitespace vocab + toy transformer, pretrained adapter.

Both encoders share the same contract: tokenize a list of texts into a
fixed-width TokenizedBatch whose rows start with the classification token,
then encode the batch into one embedding per row by taking the final
hidden state at position 0.

Encoder artifacts are directories holding a versioned manifest plus weight
blobs; loaders reject manifests that disagree with their contents.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import torch
import torch.nn as nn

from .errors import DimensionMismatch, ManifestMismatch

MANIFEST_VERSION = 1
MANIFEST_FILE = "manifest.json"
WEIGHTS_FILE = "weights.pt"
VOCAB_FILE = "vocab.json"

KIND_TOY = "toy_transformer"
KIND_PRETRAINED = "pretrained_adapter"


@dataclass(frozen=True)
class EncoderSpec:
    """Identifies an encoder family, its config, and its embedding width."""

    kind: str
    config: dict
    output_dim: int


@dataclass
class TokenizedBatch:
    """Fixed-width token ids plus a 0/1 mask marking real tokens."""

    token_ids: torch.Tensor     # (batch, max_len) long
    attention_mask: torch.Tensor  # (batch, max_len) long

    def __len__(self) -> int:
        return self.token_ids.shape[0]

    def validate(self, cls_token_id: int) -> None:
        """Check the structural invariants: CLS-first rows, contiguous masks."""
        ids, mask = self.token_ids, self.attention_mask
        if ids.shape != mask.shape or ids.ndim != 2:
            raise DimensionMismatch(f"ids {tuple(ids.shape)} vs mask {tuple(mask.shape)}")
        if not torch.all(ids[:, 0] == cls_token_id):
            raise DimensionMismatch("rows must start with the classification token")
        # prefix-contiguous: once the mask drops to 0 it stays 0
        diffs = mask[:, 1:].int() - mask[:, :-1].int()
        if torch.any(diffs > 0):
            raise DimensionMismatch("attention mask is not prefix-contiguous")


class Vocabulary:
    """Whole-word whitespace vocabulary with PAD/CLS/UNK specials."""

    PAD, CLS, UNK = 0, 1, 2
    SPECIALS = ["[PAD]", "[CLS]", "[UNK]"]

    def __init__(self, tokens: Sequence[str]):
        self.tokens = list(tokens)
        self.index = {tok: i + len(self.SPECIALS) for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens) + len(self.SPECIALS)

    @classmethod
    def build(cls, texts: Sequence[str], max_size: int | None = None) -> "Vocabulary":
        """Sorted unique whitespace tokens from texts (deterministic order)."""
        seen = sorted({tok for text in texts for tok in text.split()})
        if max_size is not None:
            budget = max_size - len(cls.SPECIALS)
            if budget < 1:
                raise ValueError("max_size leaves no room for content tokens")
            seen = seen[:budget]
        return cls(seen)

    def lookup(self, token: str) -> int:
        return self.index.get(token, self.UNK)


@dataclass
class ToyConfig:
    layers: int = 2
    heads: int = 2
    model_dim: int = 48
    ffn_dim: int = 96
    vocab_size: int = 4096
    max_len: int = 64
    dropout: float = 0.0

    def __post_init__(self):
        for name in ("layers", "heads", "model_dim", "ffn_dim", "vocab_size", "max_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"toy config field {name} must be >= 1")
        if self.model_dim % self.heads:
            raise ValueError("model_dim must be divisible by heads")


class _SelfAttention(nn.Module):
    """Multi-head self-attention written out explicitly.

    Built-in transformer layers switch to fused kernels depending on grad
    mode, which makes outputs differ between training and inference paths;
    spelling the math out keeps one code path always.
    """

    def __init__(self, dim: int, heads: int, dropout: float):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.out = nn.Linear(dim, dim)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        batch, length, dim = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        shape = (batch, length, self.heads, self.head_dim)
        q = q.view(shape).transpose(1, 2)
        k = k.view(shape).transpose(1, 2)
        v = v.view(shape).transpose(1, 2)
        scores = (q @ k.transpose(-2, -1)) / math.sqrt(self.head_dim)
        scores = scores.masked_fill(pad_mask[:, None, None, :], float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        attn = self.dropout(attn)
        mixed = (attn @ v).transpose(1, 2).reshape(batch, length, dim)
        return self.out(mixed)


class _Block(nn.Module):
    """Pre-norm transformer block: LN->attention and LN->FFN residuals."""

    def __init__(self, dim: int, heads: int, ffn_dim: int, dropout: float):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = _SelfAttention(dim, heads, dropout)
        self.norm2 = nn.LayerNorm(dim)
        self.ffn = nn.Sequential(
            nn.Linear(dim, ffn_dim), nn.GELU(), nn.Linear(ffn_dim, dim),
        )
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        x = x + self.dropout(self.attn(self.norm1(x), pad_mask))
        return x + self.dropout(self.ffn(self.norm2(x)))


class ToyTransformerEncoder(nn.Module):
    """Small pre-norm transformer for desk-scale runs and tests.

    Learned positional embeddings, whole-word whitespace tokenizer over a
    corpus-built vocabulary, first-token pooling.
    """

    kind = KIND_TOY

    def __init__(self, vocab: Vocabulary, config: ToyConfig | None = None,
                 seed: int | None = None):
        super().__init__()
        self.config = config or ToyConfig()
        if len(vocab) > self.config.vocab_size:
            raise DimensionMismatch(
                f"vocabulary of {len(vocab)} exceeds vocab_size {self.config.vocab_size}"
            )
        self.vocab = vocab
        self.provenance: dict = {}
        if seed is not None:
            with torch.random.fork_rng(devices=[]):
                torch.manual_seed(seed)
                self._build()
        else:
            self._build()

    def _build(self) -> None:
        cfg = self.config
        self.token_embedding = nn.Embedding(cfg.vocab_size, cfg.model_dim,
                                            padding_idx=Vocabulary.PAD)
        self.position_embedding = nn.Embedding(cfg.max_len, cfg.model_dim)
        self.blocks = nn.ModuleList([
            _Block(cfg.model_dim, cfg.heads, cfg.ffn_dim, cfg.dropout)
            for _ in range(cfg.layers)
        ])
        self.final_norm = nn.LayerNorm(cfg.model_dim)

    @property
    def output_dim(self) -> int:
        return self.config.model_dim

    @property
    def spec(self) -> EncoderSpec:
        return EncoderSpec(kind=self.kind, config=vars(self.config).copy(),
                           output_dim=self.output_dim)

    @classmethod
    def from_texts(cls, texts: Sequence[str], config: ToyConfig | None = None,
                   seed: int | None = None) -> "ToyTransformerEncoder":
        config = config or ToyConfig()
        vocab = Vocabulary.build(texts, max_size=config.vocab_size)
        return cls(vocab, config, seed=seed)

    def tokenize(self, texts: Sequence[str], max_len: int | None = None) -> TokenizedBatch:
        """CLS-prefixed, truncated, and padded whole-word token rows."""
        if max_len is None:
            max_len = self.config.max_len
        if max_len < 2:
            raise ValueError("max_len must be >= 2 (classification + content token)")
        if max_len > self.config.max_len:
            raise DimensionMismatch(
                f"max_len {max_len} exceeds position table ({self.config.max_len})"
            )
        rows, masks = [], []
        for text in texts:
            ids = [Vocabulary.CLS] + [self.vocab.lookup(t) for t in text.split()]
            ids = ids[:max_len]
            mask = [1] * len(ids) + [0] * (max_len - len(ids))
            ids = ids + [Vocabulary.PAD] * (max_len - len(ids))
            rows.append(ids)
            masks.append(mask)
        return TokenizedBatch(
            token_ids=torch.tensor(rows, dtype=torch.long),
            attention_mask=torch.tensor(masks, dtype=torch.long),
        )

    def forward(self, batch: TokenizedBatch) -> torch.Tensor:
        ids, mask = batch.token_ids, batch.attention_mask
        if int(ids.max()) >= self.config.vocab_size:
            raise DimensionMismatch(
                f"token id {int(ids.max())} outside vocabulary of {self.config.vocab_size}"
            )
        positions = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        hidden = self.token_embedding(ids) + self.position_embedding(positions)
        pad_mask = mask == 0
        for block in self.blocks:
            hidden = block(hidden, pad_mask)
        hidden = self.final_norm(hidden)
        return hidden[:, 0, :]

    def encode(self, batch: TokenizedBatch) -> torch.Tensor:
        """Embeddings for a tokenized batch: final hidden state at position 0."""
        return self(batch)

    def embed(self, texts: Sequence[str], batch_size: int = 64,
              max_len: int | None = None) -> torch.Tensor:
        """Tokenize and encode texts in deterministic chunks."""
        chunks = []
        for start in range(0, len(texts), batch_size):
            batch = self.tokenize(texts[start:start + batch_size], max_len=max_len)
            chunks.append(self.encode(batch))
        if not chunks:
            return torch.zeros((0, self.output_dim))
        return torch.cat(chunks, dim=0)


class PretrainedTransformerEncoder(nn.Module):
    """Adapter around a HuggingFace masked-LM backbone with first-token pooling.

    The engine has no hard dependency on any particular checkpoint; the
    backbone is identified by an opaque name and loaded lazily, so the
    transformers package is only required when this class is used.
    """

    kind = KIND_PRETRAINED

    def __init__(self, model=None, tokenizer=None, model_name: str | None = None,
                 max_len: int = 256):
        super().__init__()
        if model is None or tokenizer is None:
            if model_name is None:
                raise ValueError("need either model+tokenizer or a model_name")
            from transformers import AutoModel, AutoTokenizer
            model = AutoModel.from_pretrained(model_name)
            tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = model
        self.tokenizer = tokenizer
        self.model_name = model_name or getattr(model.config, "name_or_path", "local")
        self.max_len = max_len
        self.provenance: dict = {}

    @property
    def output_dim(self) -> int:
        return int(self.model.config.hidden_size)

    @property
    def spec(self) -> EncoderSpec:
        return EncoderSpec(
            kind=self.kind,
            config={"model_name": self.model_name, "max_len": self.max_len},
            output_dim=self.output_dim,
        )

    def tokenize(self, texts: Sequence[str], max_len: int | None = None) -> TokenizedBatch:
        if max_len is None:
            max_len = self.max_len
        if max_len < 2:
            raise ValueError("max_len must be >= 2 (classification + content token)")
        enc = self.tokenizer(
            list(texts), padding="max_length", truncation=True,
            max_length=max_len, return_tensors="pt",
        )
        return TokenizedBatch(token_ids=enc["input_ids"],
                              attention_mask=enc["attention_mask"])

    def forward(self, batch: TokenizedBatch) -> torch.Tensor:
        vocab_size = int(self.model.config.vocab_size)
        if int(batch.token_ids.max()) >= vocab_size:
            raise DimensionMismatch(
                f"token id {int(batch.token_ids.max())} outside vocabulary of {vocab_size}"
            )
        out = self.model(input_ids=batch.token_ids, attention_mask=batch.attention_mask)
        return out.last_hidden_state[:, 0, :]

    def encode(self, batch: TokenizedBatch) -> torch.Tensor:
        return self(batch)

    def embed(self, texts: Sequence[str], batch_size: int = 64,
              max_len: int | None = None) -> torch.Tensor:
        chunks = []
        for start in range(0, len(texts), batch_size):
            batch = self.tokenize(texts[start:start + batch_size], max_len=max_len)
            chunks.append(self.encode(batch))
        if not chunks:
            return torch.zeros((0, self.output_dim))
        return torch.cat(chunks, dim=0)


# -- artifact directories ----------------------------------------------------


def save_encoder(encoder, out_dir: str | Path, provenance: dict | None = None) -> Path:
    """Persist an encoder as a versioned artifact directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    merged = dict(getattr(encoder, "provenance", {}) or {})
    if provenance:
        merged.update(provenance)
    manifest = {
        "format_version": MANIFEST_VERSION,
        "kind": encoder.kind,
        "config": encoder.spec.config,
        "output_dim": encoder.output_dim,
        "provenance": merged,
    }
    if encoder.kind == KIND_TOY:
        torch.save(encoder.state_dict(), out / WEIGHTS_FILE)
        (out / VOCAB_FILE).write_text(
            json.dumps(encoder.vocab.tokens, ensure_ascii=False), encoding="utf-8"
        )
    elif encoder.kind == KIND_PRETRAINED:
        encoder.model.save_pretrained(out / "hf_model")
        encoder.tokenizer.save_pretrained(out / "hf_tokenizer")
    else:
        raise ManifestMismatch(f"unknown encoder kind {encoder.kind!r}")
    (out / MANIFEST_FILE).write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return out


def load_encoder(artifact_dir: str | Path):
    """Load an encoder artifact, rejecting inconsistent manifests."""
    root = Path(artifact_dir)
    manifest_path = root / MANIFEST_FILE
    if not manifest_path.is_file():
        raise ManifestMismatch(f"no manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestMismatch(f"unreadable manifest: {exc}") from None
    if manifest.get("format_version") != MANIFEST_VERSION:
        raise ManifestMismatch(
            f"unsupported manifest version {manifest.get('format_version')!r}"
        )
    kind = manifest.get("kind")
    config = manifest.get("config") or {}
    output_dim = manifest.get("output_dim")

    if kind == KIND_TOY:
        try:
            cfg = ToyConfig(**config)
        except (TypeError, ValueError) as exc:
            raise ManifestMismatch(f"bad toy config: {exc}") from None
        if output_dim != cfg.model_dim:
            raise ManifestMismatch(
                f"manifest output_dim {output_dim} != model_dim {cfg.model_dim}"
            )
        vocab_path = root / VOCAB_FILE
        if not vocab_path.is_file():
            raise ManifestMismatch(f"missing vocab file {vocab_path}")
        vocab = Vocabulary(json.loads(vocab_path.read_text(encoding="utf-8")))
        if len(vocab) > cfg.vocab_size:
            raise ManifestMismatch("vocabulary larger than configured vocab_size")
        encoder = ToyTransformerEncoder(vocab, cfg)
        try:
            state = torch.load(root / WEIGHTS_FILE, weights_only=True)
            encoder.load_state_dict(state, strict=True)
        except (FileNotFoundError, RuntimeError) as exc:
            raise ManifestMismatch(f"weights do not match manifest: {exc}") from None
    elif kind == KIND_PRETRAINED:
        from transformers import AutoModel, AutoTokenizer
        model = AutoModel.from_pretrained(root / "hf_model")
        tokenizer = AutoTokenizer.from_pretrained(root / "hf_tokenizer")
        encoder = PretrainedTransformerEncoder(
            model=model, tokenizer=tokenizer,
            model_name=config.get("model_name"), max_len=config.get("max_len", 256),
        )
        if output_dim != encoder.output_dim:
            raise ManifestMismatch(
                f"manifest output_dim {output_dim} != hidden size {encoder.output_dim}"
            )
    else:
        raise ManifestMismatch(f"unknown encoder kind {kind!r}")

    encoder.provenance = manifest.get("provenance") or {}
    encoder.eval()
    return encoder
