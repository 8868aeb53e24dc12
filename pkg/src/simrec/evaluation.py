"""Accuracy@K and the feature-combination sweep.

Accuracy@K is the hit rate: the fraction of test papers whose true
journal appears among the first K recommended journals. The sweep trains
one downstream model per combo from a shared encoder state and reports
K in {1, 3, 5, 10} per row.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .config import utc_timestamp
from .corpus import COMBO_ORDER, CorpusSplit, FeatureCombo, compose_features, corpus_hash
from .errors import AllFieldsEmpty, SimrecError
from .recommender import (
    DownstreamConfig,
    RankedRecommendations,
    encoder_content_hash,
    recommend_top_k,
    train_downstream,
)
from .validation import check_positive_int, check_same_length

logger = logging.getLogger(__name__)

K_VALUES = (1, 3, 5, 10)


def accuracy_at_k(rankings: Sequence[RankedRecommendations],
                  labels: Sequence, K: int) -> float:
    """Fraction of samples whose true label is among the first K items."""
    check_positive_int(K, "K")
    check_same_length(rankings, labels, "rankings and labels")
    if not rankings:
        raise ValueError("cannot compute accuracy over zero samples")
    hits = 0
    for ranking, label in zip(rankings, labels):
        top = ranking.items[:K]
        if any(jid == label for jid, _ in top):
            hits += 1
    return hits / len(rankings)


@dataclass
class EvalRow:
    combo: str
    accuracy: dict[int, float]
    artifact_hash: str


@dataclass
class EvalReport:
    rows: list[EvalRow] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def run_sweep(encoder, split: CorpusSplit, combos: Sequence,
              config: DownstreamConfig | None = None) -> EvalReport:
    """Train and evaluate one row per combo, starting each from the same
    encoder state.

    A failing row is recorded (combo + error name) and the sweep moves on;
    completed rows are preserved.
    """
    combos = [FeatureCombo.parse(c) if isinstance(c, str) else c for c in combos]
    config = config or DownstreamConfig()
    report = EvalReport(metadata={
        "dataset_hash": corpus_hash(split),
        "encoder_hash": encoder_content_hash(encoder),
        "timestamp": utc_timestamp(),
        "seed": config.seed,
    })

    test_labels: list[str] = []
    test_records = []
    for record in split.test:
        test_records.append(record)
        test_labels.append(record.journal_id)

    for combo in combos:
        try:
            row_encoder = copy.deepcopy(encoder)
            model = train_downstream(row_encoder, split, combo, config)
            texts, labels = [], []
            for record, label in zip(test_records, test_labels):
                try:
                    texts.append(compose_features(record, combo))
                except AllFieldsEmpty:
                    continue
                labels.append(label)
            probs = model.predict_proba(texts, batch_size=config.eval_batch_size)
            k_max = min(max(K_VALUES), len(split.journals))
            rankings = [
                recommend_top_k(row, k_max, journal_ids=model.journal_ids)
                for row in probs
            ]
            accuracy = {k: accuracy_at_k(rankings, labels, k) for k in K_VALUES}
            report.rows.append(EvalRow(combo=combo.code, accuracy=accuracy,
                                       artifact_hash=model.artifact_hash()))
        except (SimrecError, ValueError, RuntimeError) as exc:
            logger.error("sweep row %s failed: %s", combo.code, exc)
            report.failures.append({
                "combo": combo.code,
                "error": type(exc).__name__,
                "detail": str(exc),
            })
    return report


def _canonical_order(rows: Sequence[EvalRow]) -> list[EvalRow]:
    return sorted(rows, key=lambda r: COMBO_ORDER.index(r.combo))


def export_report(report: EvalReport, path: str | Path) -> Path:
    """Write the machine-readable JSONL report plus a fixed-width text table.

    Both files list rows in the canonical combo order. Re-exporting the
    same report reproduces the JSONL byte for byte.
    """
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = _canonical_order(report.rows)

    with open(out, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps({
                "combo": row.combo,
                "accuracy": {str(k): row.accuracy[k] for k in K_VALUES},
                "artifact_hash": row.artifact_hash,
                "metadata": report.metadata,
            }, sort_keys=True) + "\n")

    text_path = out.with_suffix(".txt")
    header = f"{'Combo':<8}" + "".join(f"{'Acc@' + str(k):>10}" for k in K_VALUES)
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.combo:<8}" + "".join(f"{row.accuracy[k]:>10.4f}" for k in K_VALUES)
        )
    for failure in report.failures:
        lines.append(f"# {failure['combo']}: failed with {failure['error']}")
    text_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out
