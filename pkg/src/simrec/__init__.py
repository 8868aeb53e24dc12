"""simrec: contrastively fine-tuned journal recommendation."""

from .contrastive import (
    ContrastiveConfig,
    cosine_similarity,
    finetune,
    info_nce_loss,
    similarity_matrix,
)
from .corpus import (
    CorpusSplit,
    FeatureCombo,
    JournalProfile,
    PairDataset,
    PaperRecord,
    all_combos,
    build_pair_dataset,
    compose_features,
    load_corpus,
)
from .encoders import (
    EncoderSpec,
    PretrainedTransformerEncoder,
    TokenizedBatch,
    ToyConfig,
    ToyTransformerEncoder,
    Vocabulary,
    load_encoder,
    save_encoder,
)
from .estimators import ContrastiveTextEncoder, JournalRecommender, TextNormalizer
from .evaluation import EvalReport, accuracy_at_k, export_report, run_sweep
from .heads import PaperInfoHead, ScopeFusionHead, build_scope_table, forward_p, forward_ps
from .recommender import (
    DownstreamConfig,
    DownstreamModel,
    RankedRecommendations,
    recommend_top_k,
    train_downstream,
)
from .text import normalize_text

__version__ = "0.1.0"

__all__ = [
    "ContrastiveConfig",
    "ContrastiveTextEncoder",
    "CorpusSplit",
    "DownstreamConfig",
    "DownstreamModel",
    "EncoderSpec",
    "EvalReport",
    "FeatureCombo",
    "JournalProfile",
    "JournalRecommender",
    "PairDataset",
    "PaperInfoHead",
    "PaperRecord",
    "PretrainedTransformerEncoder",
    "RankedRecommendations",
    "ScopeFusionHead",
    "TextNormalizer",
    "TokenizedBatch",
    "ToyConfig",
    "ToyTransformerEncoder",
    "Vocabulary",
    "accuracy_at_k",
    "all_combos",
    "build_pair_dataset",
    "build_scope_table",
    "compose_features",
    "cosine_similarity",
    "export_report",
    "finetune",
    "forward_p",
    "forward_ps",
    "info_nce_loss",
    "load_corpus",
    "load_encoder",
    "normalize_text",
    "recommend_top_k",
    "run_sweep",
    "save_encoder",
    "similarity_matrix",
    "train_downstream",
]
