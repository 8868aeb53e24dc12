"""Scikit-learn style estimators wrapping the pipeline stages.

These compose with the wider ecosystem (Pipeline, clone, get_params) while
delegating the actual work to the library operations. Constructor
arguments are stored verbatim per sklearn convention; fitted state lives
in trailing-underscore attributes.
"""

from __future__ import annotations

import copy

import numpy as np
import torch
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .contrastive import ContrastiveConfig, finetune
from .corpus import (
    CorpusSplit,
    FeatureCombo,
    JournalProfile,
    PairDataset,
    PaperRecord,
    compose_features,
)
from .encoders import ToyConfig, ToyTransformerEncoder
from .recommender import DownstreamConfig, train_downstream
from .text import normalize_text
from .validation import check_texts


class TextNormalizer(BaseEstimator, TransformerMixin):
    """Stateless transformer applying the six-rule cleaning pipeline."""

    def __init__(self, extra_stopwords_path=None):
        self.extra_stopwords_path = extra_stopwords_path

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [normalize_text(t, self.extra_stopwords_path) for t in check_texts(X)]


class ContrastiveTextEncoder(BaseEstimator, TransformerMixin):
    """Fit: contrastive fine-tuning on (text, positive text) pairs.
    Transform: texts -> embedding matrix.

    With encoder=None a toy transformer is built from the fit pairs'
    vocabulary; otherwise the given encoder is copied and fine-tuned.
    """

    def __init__(self, encoder=None, tau=0.05, batch_size=32, epochs=3,
                 learning_rate=1e-3, weight_decay=0.01, seed=13,
                 warmup_fraction=0.1, include_positive=True, max_len=None,
                 toy_layers=2, toy_heads=2, toy_model_dim=48, toy_ffn_dim=96,
                 toy_vocab_size=4096, toy_max_len=64):
        self.encoder = encoder
        self.tau = tau
        self.batch_size = batch_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.seed = seed
        self.warmup_fraction = warmup_fraction
        self.include_positive = include_positive
        self.max_len = max_len
        self.toy_layers = toy_layers
        self.toy_heads = toy_heads
        self.toy_model_dim = toy_model_dim
        self.toy_ffn_dim = toy_ffn_dim
        self.toy_vocab_size = toy_vocab_size
        self.toy_max_len = toy_max_len

    def _config(self) -> ContrastiveConfig:
        return ContrastiveConfig(
            tau=self.tau, batch_size=self.batch_size, epochs=self.epochs,
            learning_rate=self.learning_rate, weight_decay=self.weight_decay,
            seed=self.seed, warmup_fraction=self.warmup_fraction,
            include_positive=self.include_positive, max_len=self.max_len,
        )

    def fit(self, X, y=None):
        pairs = X.pairs if isinstance(X, PairDataset) else list(X)
        if self.encoder is not None:
            encoder = copy.deepcopy(self.encoder)
        else:
            texts = [t for pair in pairs for t in pair]
            encoder = ToyTransformerEncoder.from_texts(
                texts,
                ToyConfig(layers=self.toy_layers, heads=self.toy_heads,
                          model_dim=self.toy_model_dim, ffn_dim=self.toy_ffn_dim,
                          vocab_size=self.toy_vocab_size, max_len=self.toy_max_len),
                seed=self.seed,
            )
        self.encoder_, self.loss_log_ = finetune(encoder, pairs, self._config())
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "encoder_"):
            raise NotFittedError("ContrastiveTextEncoder is not fitted")
        with torch.no_grad():
            emb = self.encoder_.embed(check_texts(X), max_len=self.max_len)
        return emb.cpu().numpy()


class JournalRecommender(BaseEstimator, ClassifierMixin):
    """Journal classifier over paper records for one feature combo.

    The journal table is a constructor parameter (the label space plus the
    scope texts the fusion head needs), the same way CountVectorizer takes
    a vocabulary. fit() derives labels from each record's journal_id unless
    y (journal ids) is passed explicitly.
    """

    def __init__(self, journals, encoder=None, combo="TAK", hidden_dim=256,
                 dropout=0.1, epochs=30, batch_size=32, learning_rate=1e-3,
                 weight_decay=0.01, encoder_lr_scale=0.1, freeze_encoder=False,
                 seed=13, max_len=None, eval_batch_size=64):
        self.journals = journals
        self.encoder = encoder
        self.combo = combo
        self.hidden_dim = hidden_dim
        self.dropout = dropout
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.encoder_lr_scale = encoder_lr_scale
        self.freeze_encoder = freeze_encoder
        self.seed = seed
        self.max_len = max_len
        self.eval_batch_size = eval_batch_size

    def _records(self, X, y=None) -> list[PaperRecord]:
        records = list(X)
        for i, rec in enumerate(records):
            if not isinstance(rec, PaperRecord):
                raise TypeError(f"X[{i}] is {type(rec).__name__}, expected PaperRecord")
        if y is not None:
            if len(y) != len(records):
                raise ValueError("y length does not match X")
            records = [
                PaperRecord(id=r.id, title=r.title, abstract=r.abstract,
                            keywords=r.keywords, journal_id=label)
                for r, label in zip(records, y)
            ]
        return records

    def fit(self, X, y=None):
        journals = list(self.journals)
        for j in journals:
            if not isinstance(j, JournalProfile):
                raise TypeError("journals must be JournalProfile instances")
        records = self._records(X, y)
        split = CorpusSplit(train=records, test=[], journals=journals)
        combo = FeatureCombo.parse(self.combo) if isinstance(self.combo, str) else self.combo
        if self.encoder is not None:
            encoder = copy.deepcopy(self.encoder)
        else:
            texts = [compose_features(r, FeatureCombo.parse("TAK")) for r in records]
            texts += [normalize_text(j.scope_text) for j in journals]
            encoder = ToyTransformerEncoder.from_texts(texts, seed=self.seed)
        config = DownstreamConfig(
            hidden_dim=self.hidden_dim, dropout=self.dropout, epochs=self.epochs,
            batch_size=self.batch_size, learning_rate=self.learning_rate,
            weight_decay=self.weight_decay, encoder_lr_scale=self.encoder_lr_scale,
            freeze_encoder=self.freeze_encoder, seed=self.seed, max_len=self.max_len,
            eval_batch_size=self.eval_batch_size,
        )
        self.model_ = train_downstream(encoder, split, combo, config)
        self.classes_ = np.array(self.model_.journal_ids)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("JournalRecommender is not fitted")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        return self.model_.predict_proba(list(X), batch_size=self.eval_batch_size)

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        # top-1 via the ranking rule so probability ties break by ascending id
        ids = [
            self.model_.recommend_from_probs(row, 1).items[0][0] for row in probs
        ]
        return np.array(ids)

    def recommend(self, X, k: int = 10):
        self._check_fitted()
        probs = self.predict_proba(X)
        return [self.model_.recommend_from_probs(row, k) for row in probs]
