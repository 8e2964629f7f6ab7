"""Rollout rewards for modality-aligned reasoning.

Three components, summed into ``r_total``:

* ``r_mao`` (order): 1 when the trace opens with the description segment of
  the dominant modality and that segment's sentences yield the target emotion.
* ``r_mgr`` (grounding): fraction of sentences in the dominant description plus
  the think segment that classify as the target. No sentences scores 0.
* ``r_answer``: 1 when the answer segment normalizes to the target.

For ``mi == both`` the dominant modality is whichever description the rollout
chose to open with, so either order can earn ``r_mao``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .classifier import EmotionClassifier, emotion_set
from .errors import TraceError, UnresolvedMI
from .mi import ModalityImportance
from .taxonomy import EmotionLabel, Taxonomy, normalize_label
from .trace import (
    DEFAULT_TOKENS,
    ReasoningTrace,
    SegmentKind,
    TokenConfig,
    first_description,
    parse_trace,
    segment_text,
    split_sentences,
)

REWARD_MODES = ("total", "answer_only", "mao_only", "mgr_only")

_DESC_FOR = {ModalityImportance.AUDIO: SegmentKind.AUD_DESC, ModalityImportance.VISUAL: SegmentKind.VIS_DESC}


@dataclass(frozen=True)
class RewardBreakdown:
    r_mao: float
    r_mgr: float
    r_answer: float

    @property
    def r_total(self) -> float:
        return self.r_mao + self.r_mgr + self.r_answer

    def select(self, mode: str) -> float:
        if mode == "total":
            return self.r_total
        if mode == "answer_only":
            return self.r_answer
        if mode == "mao_only":
            return self.r_mao
        if mode == "mgr_only":
            return self.r_mgr
        raise ValueError(f"unknown reward mode {mode!r}; expected one of {REWARD_MODES}")

    def to_dict(self) -> dict:
        return {"r_mao": self.r_mao, "r_mgr": self.r_mgr, "r_answer": self.r_answer, "r_total": self.r_total}


ZERO = RewardBreakdown(0.0, 0.0, 0.0)


def dominant_description(trace: ReasoningTrace, mi: ModalityImportance) -> SegmentKind | None:
    """The description segment kind that counts as dominant for this rollout."""
    if mi is ModalityImportance.UNRESOLVED:
        raise UnresolvedMI("rewards need a resolved modality importance")
    if mi is ModalityImportance.BOTH:
        return first_description(trace)
    return _DESC_FOR[mi]


def grounding_sentences(trace: ReasoningTrace, mi: ModalityImportance) -> list[str]:
    """Sentences of the dominant description followed by those of the think segment."""
    kind = dominant_description(trace, mi)
    if kind is None:
        return []
    out = split_sentences(segment_text(trace, kind) or "")
    out += split_sentences(segment_text(trace, SegmentKind.THINK) or "")
    return out


def r_mao(trace: ReasoningTrace, mi: ModalityImportance, target: EmotionLabel,
          classifier: EmotionClassifier) -> float:
    kind = dominant_description(trace, mi)
    if kind is None or trace.first_kind is not kind:
        return 0.0
    leading = split_sentences(trace.segments[0].text)
    return 1.0 if target in emotion_set(leading, classifier) else 0.0


def r_mgr(trace: ReasoningTrace, mi: ModalityImportance, target: EmotionLabel,
          classifier: EmotionClassifier) -> float:
    sentences = grounding_sentences(trace, mi)
    if not sentences:
        return 0.0
    hits = sum(1 for s in sentences if classifier.classify(s).label == target)
    return hits / len(sentences)


def r_answer(trace: ReasoningTrace, target: EmotionLabel, taxonomy: Taxonomy) -> float:
    text = segment_text(trace, SegmentKind.ANSWER)
    return 1.0 if normalize_label(text, taxonomy) == target else 0.0


def score(trace: ReasoningTrace, mi: ModalityImportance, target: EmotionLabel,
          classifier: EmotionClassifier, taxonomy: Taxonomy) -> RewardBreakdown:
    return RewardBreakdown(
        r_mao(trace, mi, target, classifier),
        r_mgr(trace, mi, target, classifier),
        r_answer(trace, target, taxonomy),
    )


def score_text(text: str, mi: ModalityImportance, target: EmotionLabel, classifier: EmotionClassifier,
               taxonomy: Taxonomy, tokens: TokenConfig = DEFAULT_TOKENS) -> RewardBreakdown:
    """Score raw rollout text; anything the parser rejects earns zero on every component."""
    if mi is ModalityImportance.UNRESOLVED:
        raise UnresolvedMI("rewards need a resolved modality importance")
    try:
        trace = parse_trace(text, tokens)
    except TraceError:
        return ZERO
    return score(trace, mi, target, classifier, taxonomy)
