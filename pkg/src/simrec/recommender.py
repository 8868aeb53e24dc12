"""Downstream training, top-K ranking, and persisted model artifacts.

A trained model bundles the encoder, one classification head, the feature
combo it was trained for, and a snapshot of the journal table (plus the
scope embedding table for the fusion architecture). Artifacts are
directories with a manifest whose content hash is verified on load.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .contrastive import LossLogEntry
from .corpus import (
    CorpusSplit,
    FeatureCombo,
    JournalProfile,
    PaperRecord,
    compose_features,
    journal_table_hash,
    journal_to_dict,
)
from .encoders import load_encoder, save_encoder
from .errors import (
    AllFieldsEmpty,
    ComboJournalMismatch,
    DimensionMismatch,
    ManifestMismatch,
    NonFiniteLoss,
)
from .config import seed_everything
from .heads import PaperInfoHead, ScopeFusionHead, build_scope_table
from .validation import check_positive_int, check_probability_vector

logger = logging.getLogger(__name__)

MODEL_MANIFEST_VERSION = 1
MODEL_MANIFEST_FILE = "manifest.json"
HEAD_WEIGHTS_FILE = "head.pt"
SCOPE_TABLE_FILE = "scope_table.pt"
JOURNALS_FILE = "journals.jsonl"
ENCODER_SUBDIR = "encoder"


@dataclass
class RankedRecommendations:
    """Top-k journals: (journal_id, score) in non-increasing score order."""

    items: list[tuple]
    k: int

    def journal_ids(self) -> list:
        return [jid for jid, _ in self.items]


def recommend_top_k(probs, k: int, journal_ids: Sequence | None = None) -> RankedRecommendations:
    """The k highest-probability journals, ties broken by ascending id.

    k larger than the journal count returns all journals, fully ordered.
    """
    p = check_probability_vector(probs)
    check_positive_int(k, "k")
    n = p.size
    if journal_ids is None:
        ids: list = list(range(n))
    else:
        ids = list(journal_ids)
        if len(ids) != n:
            raise DimensionMismatch(f"{len(ids)} journal ids for {n} probabilities")
    order = sorted(range(n), key=lambda j: (-p[j], ids[j]))
    take = min(k, n)
    return RankedRecommendations(
        items=[(ids[j], float(p[j])) for j in order[:take]], k=k
    )


@dataclass
class DownstreamConfig:
    """Hyperparameters for training a classification head."""

    hidden_dim: int = 256
    dropout: float = 0.1
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    encoder_lr_scale: float = 0.1
    freeze_encoder: bool = False
    seed: int = 13
    max_len: int | None = None
    eval_batch_size: int = 64

    def __post_init__(self):
        if self.hidden_dim < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("hidden_dim, epochs, batch_size must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be > 0 and weight_decay >= 0")


# -- content hashing ---------------------------------------------------------


def _digest_module(h, module: torch.nn.Module) -> None:
    state = module.state_dict()
    for key in sorted(state):
        tensor = state[key]
        h.update(key.encode("utf-8"))
        h.update(str(tuple(tensor.shape)).encode("utf-8"))
        h.update(tensor.detach().cpu().contiguous().numpy().tobytes())


def encoder_content_hash(encoder) -> str:
    """Stable hash over an encoder's spec and parameter bytes."""
    h = hashlib.sha256()
    spec = encoder.spec
    h.update(json.dumps({"kind": spec.kind, "config": spec.config,
                         "output_dim": spec.output_dim}, sort_keys=True).encode())
    _digest_module(h, encoder)
    return h.hexdigest()


# -- the trained model -------------------------------------------------------


class DownstreamModel:
    """A trained classifier: encoder + head + combo + journal snapshot."""

    def __init__(self, encoder, head, combo: FeatureCombo,
                 journals: Sequence[JournalProfile],
                 scope_table: torch.Tensor | None = None,
                 seed: int = 0, max_len: int | None = None,
                 training_info: dict | None = None):
        if head.kind == "ps" and scope_table is None:
            raise DimensionMismatch("scope-fusion head requires a scope table")
        self.encoder = encoder
        self.head = head
        self.combo = combo
        self.journals = list(journals)
        self.scope_table = scope_table
        self.seed = seed
        self.max_len = max_len
        self.training_info = training_info or {}
        self.journal_hash = journal_table_hash(self.journals)
        self.encoder.eval()
        self.head.eval()

    @property
    def architecture(self) -> str:
        return self.head.kind

    @property
    def journal_ids(self) -> list[str]:
        return [j.journal_id for j in self.journals]

    def compose(self, record: PaperRecord) -> str:
        return compose_features(record, self.combo)

    def artifact_hash(self) -> str:
        # weights are immutable once the model is assembled, so memoize
        cached = getattr(self, "_artifact_hash", None)
        if cached is not None:
            return cached
        h = hashlib.sha256()
        core = {
            "format_version": MODEL_MANIFEST_VERSION,
            "architecture": self.architecture,
            "combo": self.combo.code,
            "input_dim": self.head.input_dim,
            "hidden_dim": self.head.hidden_dim,
            "n_journals": self.head.n_journals,
            "dropout": float(self.head.dropout.p),
            "seed": self.seed,
            "journal_table_hash": self.journal_hash,
        }
        h.update(json.dumps(core, sort_keys=True).encode("utf-8"))
        _digest_module(h, self.head)
        if self.scope_table is not None:
            h.update(self.scope_table.detach().cpu().contiguous().numpy().tobytes())
        h.update(encoder_content_hash(self.encoder).encode("utf-8"))
        h.update(json.dumps(
            [journal_to_dict(j) for j in self.journals], ensure_ascii=False, sort_keys=True
        ).encode("utf-8"))
        self._artifact_hash = h.hexdigest()
        return self._artifact_hash

    def predict_proba(self, inputs, batch_size: int = 64) -> np.ndarray:
        """Probability matrix (n inputs x J journals), eval mode."""
        texts = [self.compose(x) if isinstance(x, PaperRecord) else x for x in inputs]
        with torch.no_grad():
            emb = self.encoder.embed(texts, batch_size=batch_size, max_len=self.max_len)
            if self.architecture == "ps":
                probs = self.head(emb, self.scope_table.to(emb.dtype))
            else:
                probs = self.head(emb)
        return probs.cpu().numpy()

    def recommend(self, record_or_text, k: int = 10) -> RankedRecommendations:
        probs = self.predict_proba([record_or_text])[0]
        return recommend_top_k(probs, k, journal_ids=self.journal_ids)

    def recommend_from_probs(self, probs, k: int = 10) -> RankedRecommendations:
        return recommend_top_k(probs, k, journal_ids=self.journal_ids)

    def model_info(self) -> dict:
        return {
            "combo": self.combo.code,
            "architecture": self.architecture,
            "artifact_hash": self.artifact_hash(),
        }

    # -- persistence --------------------------------------------------------

    def save(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_encoder(self.encoder, out / ENCODER_SUBDIR)
        torch.save(self.head.state_dict(), out / HEAD_WEIGHTS_FILE)
        if self.scope_table is not None:
            torch.save(self.scope_table, out / SCOPE_TABLE_FILE)
        with open(out / JOURNALS_FILE, "w", encoding="utf-8") as fh:
            for j in self.journals:
                fh.write(json.dumps(journal_to_dict(j), ensure_ascii=False) + "\n")
        manifest = {
            "format_version": MODEL_MANIFEST_VERSION,
            "architecture": self.architecture,
            "combo": self.combo.code,
            "input_dim": self.head.input_dim,
            "hidden_dim": self.head.hidden_dim,
            "n_journals": self.head.n_journals,
            "dropout": float(self.head.dropout.p),
            "seed": self.seed,
            "max_len": self.max_len,
            "journal_table_hash": self.journal_hash,
            "artifact_hash": self.artifact_hash(),
            "training": self.training_info,
        }
        (out / MODEL_MANIFEST_FILE).write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
        return out

    @classmethod
    def load(cls, artifact_dir: str | Path) -> "DownstreamModel":
        root = Path(artifact_dir)
        manifest_path = root / MODEL_MANIFEST_FILE
        if not manifest_path.is_file():
            raise ManifestMismatch(f"no manifest at {manifest_path}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("format_version") != MODEL_MANIFEST_VERSION:
            raise ManifestMismatch(
                f"unsupported model manifest version {manifest.get('format_version')!r}"
            )
        encoder = load_encoder(root / ENCODER_SUBDIR)
        journals = []
        with open(root / JOURNALS_FILE, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    journals.append(JournalProfile(
                        journal_id=obj["journal_id"], name=obj["name"],
                        scope_text=obj["scope_text"],
                    ))
        arch = manifest.get("architecture")
        dims = (manifest["input_dim"], manifest["hidden_dim"], manifest["n_journals"])
        if manifest["input_dim"] != encoder.output_dim:
            raise ManifestMismatch(
                f"manifest input_dim {manifest['input_dim']} != encoder "
                f"output_dim {encoder.output_dim}"
            )
        if manifest["n_journals"] != len(journals):
            raise ManifestMismatch(
                f"manifest n_journals {manifest['n_journals']} != snapshot {len(journals)}"
            )
        if arch == "p":
            head = PaperInfoHead(*dims, dropout=manifest.get("dropout", 0.1))
            scope_table = None
        elif arch == "ps":
            head = ScopeFusionHead(*dims, dropout=manifest.get("dropout", 0.1))
            scope_path = root / SCOPE_TABLE_FILE
            if not scope_path.is_file():
                raise ManifestMismatch("fusion architecture without a scope table blob")
            scope_table = torch.load(scope_path, weights_only=True)
        else:
            raise ManifestMismatch(f"unknown architecture {arch!r}")
        try:
            head.load_state_dict(torch.load(root / HEAD_WEIGHTS_FILE, weights_only=True),
                                 strict=True)
        except (FileNotFoundError, RuntimeError) as exc:
            raise ManifestMismatch(f"head weights do not match manifest: {exc}") from None
        model = cls(
            encoder=encoder, head=head, combo=FeatureCombo.parse(manifest["combo"]),
            journals=journals, scope_table=scope_table, seed=manifest.get("seed", 0),
            max_len=manifest.get("max_len"), training_info=manifest.get("training") or {},
        )
        if model.journal_hash != manifest.get("journal_table_hash"):
            raise ManifestMismatch("journal snapshot disagrees with recorded table hash")
        if model.artifact_hash() != manifest.get("artifact_hash"):
            raise ManifestMismatch("artifact content hash mismatch (edited artifact?)")
        return model


# -- training ----------------------------------------------------------------


def _batched(order: Sequence[int], batch_size: int):
    for start in range(0, len(order), batch_size):
        yield list(order[start:start + batch_size])


def train_downstream(encoder, split: CorpusSplit, combo,
                     config: DownstreamConfig | None = None,
                     out_dir: str | Path | None = None,
                     log_path: str | Path | None = None) -> DownstreamModel:
    """Train a classification head (and optionally the encoder) on the split.

    Selects the paper-information head unless combo.use_scopes, in which
    case the scope-fusion head runs with a per-epoch-refreshed scope table.
    Minimizes cross-entropy with AdamW; the encoder trains at
    encoder_lr_scale of the head learning rate unless freeze_encoder.
    Reproducible under config.seed.
    """
    if isinstance(combo, str):
        combo = FeatureCombo.parse(combo)
    config = config or DownstreamConfig()
    if not split.train:
        raise ValueError("cannot train on an empty train split")

    table_hash = journal_table_hash(split.journals)
    provenance = dict(getattr(encoder, "provenance", {}) or {})
    recorded = provenance.get("journal_table_hash")
    if recorded is not None and recorded != table_hash:
        raise ComboJournalMismatch(
            "journal table differs from the one recorded in the encoder artifact"
        )
    if "contrastive" not in provenance:
        logger.warning("encoder has no contrastive fine-tuning provenance")

    seed_everything(config.seed)
    head_cls = ScopeFusionHead if combo.use_scopes else PaperInfoHead
    head = head_cls(encoder.output_dim, config.hidden_dim, len(split.journals),
                    dropout=config.dropout)

    journal_index = {jid: i for i, jid in enumerate(split.journal_ids)}
    texts: list[str] = []
    labels: list[int] = []
    skipped = 0
    for record in split.train:
        try:
            texts.append(compose_features(record, combo))
        except AllFieldsEmpty:
            skipped += 1
            continue
        labels.append(journal_index[record.journal_id])
    if not texts:
        raise ValueError("every training record composed to empty text")
    if skipped:
        logger.warning("skipped %d records whose %s fields normalize to empty",
                       skipped, combo.code)
    y = torch.tensor(labels, dtype=torch.long)

    param_groups = [{"params": list(head.parameters()), "lr": config.learning_rate}]
    cached_embeddings = None
    if config.freeze_encoder:
        encoder.eval()
        with torch.no_grad():
            cached_embeddings = encoder.embed(
                texts, batch_size=config.eval_batch_size, max_len=config.max_len
            )
    else:
        encoder.train()
        param_groups.append({
            "params": list(encoder.parameters()),
            "lr": config.learning_rate * config.encoder_lr_scale,
        })
    optimizer = torch.optim.AdamW(param_groups, weight_decay=config.weight_decay)

    scope_table = None
    if combo.use_scopes and config.freeze_encoder:
        scope_table = build_scope_table(encoder, split.journals,
                                        batch_size=config.eval_batch_size,
                                        max_len=config.max_len)

    shuffler = torch.Generator().manual_seed(config.seed)
    log: list[LossLogEntry] = []
    writer = open(log_path, "w", encoding="utf-8") if log_path else None
    step = 0
    head.train()
    try:
        for epoch in range(config.epochs):
            if combo.use_scopes and not config.freeze_encoder:
                scope_table = build_scope_table(encoder, split.journals,
                                                batch_size=config.eval_batch_size,
                                                max_len=config.max_len)
            order = torch.randperm(len(texts), generator=shuffler).tolist()
            for chunk in _batched(order, config.batch_size):
                if cached_embeddings is not None:
                    emb = cached_embeddings[chunk]
                else:
                    batch = encoder.tokenize([texts[i] for i in chunk],
                                             max_len=config.max_len)
                    emb = encoder.encode(batch)
                if combo.use_scopes:
                    logits = head.logits(emb, scope_table.to(emb.dtype))
                else:
                    logits = head.logits(emb)
                loss = F.cross_entropy(logits, y[chunk])
                loss_value = loss.item()
                if not torch.isfinite(loss):
                    raise NonFiniteLoss(step, loss_value, f"downstream {combo.code}")
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                entry = LossLogEntry(step=step, epoch=epoch, loss=loss_value,
                                     lr=config.learning_rate)
                log.append(entry)
                if writer:
                    writer.write(entry.to_json() + "\n")
                step += 1
    finally:
        if writer:
            writer.close()

    head.eval()
    encoder.eval()
    if combo.use_scopes:
        # exact table for inference, from the final weights
        scope_table = build_scope_table(encoder, split.journals,
                                        batch_size=config.eval_batch_size,
                                        max_len=config.max_len)

    model = DownstreamModel(
        encoder=encoder, head=head, combo=combo, journals=split.journals,
        scope_table=scope_table, seed=config.seed, max_len=config.max_len,
        training_info={
            "config": asdict(config),
            "steps": step,
            "skipped_records": skipped,
            "final_loss": log[-1].loss if log else None,
        },
    )
    model.loss_log = log
    if out_dir is not None:
        model.save(out_dir)
    return model


def initial_cross_entropy(n_journals: int) -> float:
    """Cross-entropy of a uniform predictor: the ln(J) training baseline."""
    return math.log(n_journals)
