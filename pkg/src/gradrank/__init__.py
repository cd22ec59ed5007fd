"""Grad-CAM explanations for a MatchPyramid-style neural ranker."""

from .errors import (
    ConfigError,
    DegenerateMapError,
    DivergenceError,
    EmptyInputError,
    FormatError,
    GradRankError,
    ShapeError,
    StaleCacheError,
)
from .text import (
    EmbeddingTable,
    RankingDataset,
    RankingRecord,
    TokenSequence,
    load_dataset,
    load_embeddings,
    tokenize,
)
from .interaction import build_interaction_matrix, flatten_columns
from .ranker import (
    ActivationCache,
    RankerConfig,
    RankerModel,
    backward_to_feature_maps,
    forward,
    init_model,
    load_model,
    pairwise_accuracy,
    save_model,
    train,
)
from .gradcam import bilinear_upsample, explain, importance_weights, localization_map
from .terms import effective_terms, filtered_terms
from .snippet import SnippetSpan, gradcam_snippet, vanilla_snippet
from .stats import kurtosis, map_total, mann_whitney_u
from .corpus import corpus_analysis, generate_synthetic_corpus
from .report import ExplanationReport

__version__ = "0.1.0"
