"""Modality importance: which input modality carries the target emotion.

The decision compares the correctness of three offline predictions for a
sample (audio-only, visual-only, audio-visual):

    audio  visual  av     ->  result
    ok     wrong   any        audio
    wrong  ok      any        visual
    ok     ok      any        both
    wrong  wrong   ok         both
    wrong  wrong   wrong      unresolved

A missing prediction counts as wrong.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from .taxonomy import EmotionLabel, Taxonomy, normalize_label


class ModalityImportance(str, enum.Enum):
    AUDIO = "audio"
    VISUAL = "visual"
    BOTH = "both"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class PredictionTriple:
    audio_only: EmotionLabel | None = None
    visual_only: EmotionLabel | None = None
    audio_visual: EmotionLabel | None = None

    def swapped(self) -> "PredictionTriple":
        return PredictionTriple(self.visual_only, self.audio_only, self.audio_visual)

    @classmethod
    def from_record(cls, record: Mapping, taxonomy: Taxonomy) -> "PredictionTriple":
        """Read ``pred_audio``/``pred_visual``/``pred_av`` or a nested ``triple`` object."""
        nested = record.get("triple")
        if isinstance(nested, Mapping):
            keys = ("audio_only", "visual_only", "audio_visual")
            src = nested
        else:
            keys = ("pred_audio", "pred_visual", "pred_av")
            src = record
        return cls(*(normalize_label(src.get(k), taxonomy) for k in keys))

    def to_record(self) -> dict:
        name = lambda lab: None if lab is None else lab.name  # noqa: E731
        return {"pred_audio": name(self.audio_only), "pred_visual": name(self.visual_only),
                "pred_av": name(self.audio_visual)}


def estimate_mi(triple: PredictionTriple, target: EmotionLabel) -> ModalityImportance:
    a = triple.audio_only == target
    v = triple.visual_only == target
    if a and v:
        return ModalityImportance.BOTH
    if a:
        return ModalityImportance.AUDIO
    if v:
        return ModalityImportance.VISUAL
    if triple.audio_visual == target:
        return ModalityImportance.BOTH
    return ModalityImportance.UNRESOLVED


def mi_distribution(samples: Iterable[tuple[PredictionTriple, EmotionLabel]]) -> dict[ModalityImportance, int]:
    counts = Counter(estimate_mi(triple, target) for triple, target in samples)
    return {m: counts.get(m, 0) for m in ModalityImportance}
