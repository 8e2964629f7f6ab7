"""Sentence-level emotion classification.

Rewards and metrics only rely on the :class:`EmotionClassifier` protocol; the
shipped implementation is a keyword :class:`Lexicon`. A model-backed classifier
can be dropped in by providing ``classify`` and ``taxonomy``.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .errors import ConfigError
from .taxonomy import EmotionLabel, Taxonomy, normalize_label


@dataclass(frozen=True)
class ClassifierVerdict:
    label: EmotionLabel | None
    matched: tuple[tuple[str, EmotionLabel], ...] = ()


class EmotionClassifier(Protocol):
    taxonomy: Taxonomy

    def classify(self, sentence: str) -> ClassifierVerdict: ...


def dominant_label(labels: Iterable[EmotionLabel]) -> EmotionLabel | None:
    """Most frequent label; ties go to the lower taxonomy id."""
    counts = Counter(labels)
    if not counts:
        return None
    return min(counts, key=lambda lab: (-counts[lab], lab.id))


# verdicts are pure functions of the sentence; rollouts repeat sentences heavily
_CACHE_SIZE = 65536


@dataclass(frozen=True)
class Lexicon:
    """Keyword/phrase table matched on word boundaries, longest phrase first."""

    taxonomy: Taxonomy
    entries: Mapping[str, int]
    _pattern: re.Pattern | None = field(default=None, init=False, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        for kw, idx in self.entries.items():
            if not kw or kw != kw.strip().lower():
                raise ConfigError(f"lexicon keyword {kw!r} must be nonempty, lowercase and trimmed")
            if not 0 <= idx < len(self.taxonomy):
                raise ConfigError(f"lexicon keyword {kw!r} maps to unknown label id {idx}")
        if self.entries:
            # regex alternation is ordered: longer alternatives must come first
            alts = sorted(self.entries, key=lambda k: (-len(k), k))
            pattern = re.compile(r"\b(?:" + "|".join(re.escape(k) for k in alts) + r")\b", re.IGNORECASE)
            object.__setattr__(self, "_pattern", pattern)

    def classify(self, sentence: str) -> ClassifierVerdict:
        if self._pattern is None:
            return ClassifierVerdict(None)
        hit = self._cache.get(sentence)
        if hit is not None:
            return hit
        matched = tuple(
            (m.group(0).lower(), self.taxonomy.labels[self.entries[m.group(0).lower()]])
            for m in self._pattern.finditer(sentence)
        )
        verdict = ClassifierVerdict(dominant_label(lab for _, lab in matched), matched)
        if len(self._cache) >= _CACHE_SIZE:
            self._cache.clear()
        self._cache[sentence] = verdict
        return verdict

    def keywords_for(self, label: EmotionLabel) -> list[str]:
        return sorted(k for k, i in self.entries.items() if i == label.id)

    @classmethod
    def from_dict(cls, data: Mapping, taxonomy: Taxonomy) -> "Lexicon":
        declared = data.get("taxonomy")
        if declared is not None and declared != taxonomy.name:
            raise ConfigError(f"lexicon is for taxonomy {declared!r}, active taxonomy is {taxonomy.name!r}")
        entries = {}
        for kw, name in dict(data.get("entries", {})).items():
            label = normalize_label(name, taxonomy)
            if label is None:
                raise ConfigError(f"lexicon keyword {kw!r} maps to {name!r}, not in taxonomy {taxonomy.name!r}")
            entries[kw.strip().lower()] = label.id
        return cls(taxonomy, entries)

    def to_dict(self) -> dict:
        return {"taxonomy": self.taxonomy.name,
                "entries": {k: self.taxonomy.labels[i].name for k, i in sorted(self.entries.items())}}


def load_lexicon(source: str | Path | None, taxonomy: Taxonomy) -> Lexicon:
    """Load a lexicon file; ``None`` selects the built-in default for ``taxonomy``."""
    if source is None:
        try:
            text = resources.files("migr.data").joinpath(f"lexicon_{taxonomy.name}.json").read_text("utf-8")
        except FileNotFoundError as exc:
            raise ConfigError(f"no built-in lexicon for taxonomy {taxonomy.name!r}") from exc
        return Lexicon.from_dict(json.loads(text), taxonomy)
    path = Path(source)
    try:
        data = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot load lexicon: {exc}") from exc
    return Lexicon.from_dict(data, taxonomy)


def classify_sentence(sentence: str, classifier: EmotionClassifier) -> ClassifierVerdict:
    return classifier.classify(sentence)


def emotion_set(sentences: Iterable[str], classifier: EmotionClassifier) -> set[EmotionLabel]:
    out = set()
    for s in sentences:
        label = classifier.classify(s).label
        if label is not None:
            out.add(label)
    return out
