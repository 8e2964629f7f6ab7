"""Modality-importance guided reward, dataset and metric toolkit for multimodal emotion reasoning."""

from __future__ import annotations

__version__ = "0.1.0"

from .classifier import ClassifierVerdict, EmotionClassifier, Lexicon, classify_sentence, emotion_set, load_lexicon
from .databuild import (
    BuildOptions,
    BuildStats,
    FauEmotionTable,
    RawSample,
    TrainingRecord,
    build_sft_dataset,
    fau_filter,
    load_fau_table,
    reorder,
)
from .errors import (
    ConfigError,
    EmptyDataset,
    EmptyGroup,
    MigrError,
    MissingTableEntry,
    NestedSegment,
    NonFiniteGradient,
    TraceError,
    TrailingGarbage,
    UnbalancedDelimiter,
    UnresolvedMI,
)
from .metrics import EvalRecord, MetricsReport, evaluate
from .mi import ModalityImportance, PredictionTriple, estimate_mi, mi_distribution
from .rewards import RewardBreakdown, r_answer, r_mao, r_mgr, score, score_text
from .taxonomy import EmotionLabel, Taxonomy, load_taxonomy, normalize_label
from .trace import ReasoningTrace, Segment, SegmentKind, TokenConfig, parse_trace, render_trace, split_sentences
