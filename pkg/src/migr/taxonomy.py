"""Emotion label sets and surface-form normalization.

Taxonomies are plain JSON data::

    {"name": "dfew", "labels": ["happy", ...], "aliases": {"happiness": "happy"}}

Label ids are positions in ``labels``. The shipped alias tables are convenience
defaults (common inflections and nouns), not part of any benchmark definition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping

from .errors import ConfigError

BUILTIN_TAXONOMIES = ("dfew", "mafw", "emer")


@dataclass(frozen=True, order=True)
class EmotionLabel:
    id: int
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Taxonomy:
    name: str
    labels: tuple[EmotionLabel, ...]
    aliases: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for i, label in enumerate(self.labels):
            if label.id != i:
                raise ConfigError(f"taxonomy {self.name!r}: label {label.name!r} has id {label.id}, expected {i}")
            if not label.name or label.name != label.name.strip().lower():
                raise ConfigError(f"taxonomy {self.name!r}: label name {label.name!r} must be lowercase and trimmed")
            if label.name in seen:
                raise ConfigError(f"taxonomy {self.name!r}: duplicate label {label.name!r}")
            seen.add(label.name)
        for surface, idx in self.aliases.items():
            if not 0 <= idx < len(self.labels):
                raise ConfigError(f"taxonomy {self.name!r}: alias {surface!r} points at unknown id {idx}")

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[EmotionLabel]:
        return iter(self.labels)

    def __contains__(self, label: object) -> bool:
        return isinstance(label, EmotionLabel) and 0 <= label.id < len(self.labels) and self.labels[label.id] == label

    @property
    def names(self) -> list[str]:
        return [label.name for label in self.labels]

    def label(self, name: str) -> EmotionLabel:
        """Strict lookup by canonical name or alias; raises ``KeyError`` when unmapped."""
        found = normalize_label(name, self)
        if found is None:
            raise KeyError(f"{name!r} is not a label of taxonomy {self.name!r}")
        return found

    def neighbor(self, label: EmotionLabel) -> EmotionLabel:
        """The next label in taxonomy order, wrapping around."""
        return self.labels[(label.id + 1) % len(self.labels)]

    @classmethod
    def from_dict(cls, data: Mapping) -> "Taxonomy":
        try:
            name = data["name"]
            names = list(data["labels"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"taxonomy config needs 'name' and 'labels': {exc}") from exc
        labels = tuple(EmotionLabel(i, str(n)) for i, n in enumerate(names))
        index = {label.name: label.id for label in labels}
        aliases: dict[str, int] = {label.name: label.id for label in labels}
        for surface, canonical in dict(data.get("aliases", {})).items():
            if canonical not in index:
                raise ConfigError(f"taxonomy {name!r}: alias {surface!r} maps to unknown label {canonical!r}")
            aliases[surface.strip().lower()] = index[canonical]
        return cls(name=str(name), labels=labels, aliases=aliases)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "labels": self.names,
            "aliases": {s: self.labels[i].name for s, i in self.aliases.items() if s != self.labels[i].name},
        }


def normalize_label(text: str | None, taxonomy: Taxonomy) -> EmotionLabel | None:
    """Map a surface string to a label, or ``None`` when it is not recognised."""
    if text is None:
        return None
    idx = taxonomy.aliases.get(text.strip().lower())
    return None if idx is None else taxonomy.labels[idx]


def load_taxonomy(source: str | Path) -> Taxonomy:
    """Load a taxonomy from a JSON path, or by built-in name (``dfew``, ``mafw``, ``emer``)."""
    if isinstance(source, str) and source.lower() in BUILTIN_TAXONOMIES:
        text = resources.files("migr.data").joinpath(f"taxonomy_{source.lower()}.json").read_text("utf-8")
        return Taxonomy.from_dict(json.loads(text))
    path = Path(source)
    try:
        return Taxonomy.from_dict(json.loads(path.read_text("utf-8")))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot load taxonomy: {exc}") from exc
