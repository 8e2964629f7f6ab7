"""Construction of the modality-ordered SFT corpus.

Each raw sample carries a target emotion, audio/visual/think reasoning texts,
three offline predictions and, optionally, its facial action units. Samples
whose action units do not match the target's prototype are dropped, the
modality importance is estimated, unresolved samples are dropped, and the rest
are rendered with the dominant modality's description first (twice, in both
orders, when both modalities are informative).
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import ConfigError, MigrError, MissingTableEntry, UnresolvedMI
from .mi import ModalityImportance, PredictionTriple, estimate_mi
from .taxonomy import EmotionLabel, Taxonomy, normalize_label
from .trace import DEFAULT_TOKENS, ReasoningTrace, Segment, SegmentKind, TokenConfig, render_trace

log = logging.getLogger(__name__)

# Targets without an action-unit prototype skip the filter.
FAU_EXEMPT = frozenset({"neutral"})


@dataclass(frozen=True)
class FauEmotionTable:
    table: Mapping[EmotionLabel, frozenset[int]]

    def __post_init__(self):
        for label, aus in self.table.items():
            if not aus:
                raise ConfigError(f"empty action-unit set for {label.name!r}")
            if any(au <= 0 for au in aus):
                raise ConfigError(f"action-unit ids for {label.name!r} must be positive")

    def __contains__(self, label: EmotionLabel) -> bool:
        return label in self.table

    def __getitem__(self, label: EmotionLabel) -> frozenset[int]:
        return self.table[label]

    @classmethod
    def from_dict(cls, data: Mapping, taxonomy: Taxonomy) -> "FauEmotionTable":
        out = {}
        raw = data.get("table", data)
        for name, aus in raw.items():
            if name.startswith("_"):
                continue
            label = normalize_label(name, taxonomy)
            if label is None:
                raise ConfigError(f"FAU table label {name!r} is not in taxonomy {taxonomy.name!r}")
            if label in out:
                raise ConfigError(f"FAU table lists {label.name!r} twice")
            out[label] = frozenset(int(a) for a in aus)
        return cls(out)


def load_fau_table(source: str | Path | None, taxonomy: Taxonomy) -> FauEmotionTable:
    if source is None:
        text = resources.files("migr.data").joinpath("fau_table.json").read_text("utf-8")
        return FauEmotionTable.from_dict(json.loads(text), taxonomy)
    path = Path(source)
    try:
        data = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot load FAU table: {exc}") from exc
    return FauEmotionTable.from_dict(data, taxonomy)


def fau_filter(sample_fau: Iterable[int], target: EmotionLabel, table: FauEmotionTable,
               mode: str = "exact") -> bool:
    """Exact set equality with the target's prototype; ``mode="subset"`` only requires the prototype."""
    if target not in table:
        raise MissingTableEntry(f"no action-unit prototype for {target.name!r}")
    observed = frozenset(sample_fau)
    if mode == "exact":
        return observed == table[target]
    if mode == "subset":
        return table[target] <= observed
    raise ValueError(f"unknown FAU match mode {mode!r}")


@dataclass(frozen=True)
class RawSample:
    id: str
    target: EmotionLabel
    aud_text: str
    vis_text: str
    think_text: str
    triple: PredictionTriple
    fau: frozenset[int] | None = None

    @classmethod
    def from_dict(cls, data: Mapping, taxonomy: Taxonomy, tokens: TokenConfig = DEFAULT_TOKENS) -> "RawSample":
        try:
            target = taxonomy.label(str(data["target"]))
        except KeyError as exc:
            raise ValueError(f"field 'target': {exc}") from None
        texts = {}
        for key in ("aud_text", "vis_text", "think_text"):
            value = data.get(key, "")
            if not isinstance(value, str):
                raise ValueError(f"field {key!r} must be a string")
            for tok in tokens.all_tokens:
                if tok in value:
                    raise ValueError(f"field {key!r} contains delimiter {tok!r}")
            texts[key] = value.strip()
        fau = data.get("fau")
        if fau is not None:
            if not isinstance(fau, list) or not all(isinstance(a, int) and a > 0 for a in fau):
                raise ValueError("field 'fau' must be a list of positive integers")
            fau = frozenset(fau)
        return cls(str(data.get("id", "")), target, texts["aud_text"], texts["vis_text"], texts["think_text"],
                   PredictionTriple.from_record(data, taxonomy), fau)


@dataclass(frozen=True)
class TrainingRecord:
    id: str
    mi: ModalityImportance
    rendered: str
    target: EmotionLabel
    order: str

    def to_dict(self) -> dict:
        # trace_text duplicates rendered so the output feeds `score`/`evaluate` unchanged
        return {"id": self.id, "mi": self.mi.value, "target": self.target.name, "order": self.order,
                "rendered": self.rendered, "trace_text": self.rendered}


_ORDERS = {
    "audio_first": (SegmentKind.AUD_DESC, SegmentKind.VIS_DESC),
    "visual_first": (SegmentKind.VIS_DESC, SegmentKind.AUD_DESC),
}


def _record(sample: RawSample, mi: ModalityImportance, order: str, tokens: TokenConfig, suffix: bool):
    text = {SegmentKind.AUD_DESC: sample.aud_text, SegmentKind.VIS_DESC: sample.vis_text}
    segments = [Segment(k, text[k]) for k in _ORDERS[order]]
    segments += [Segment(SegmentKind.THINK, sample.think_text), Segment(SegmentKind.ANSWER, sample.target.name)]
    rid = f"{sample.id}:{order}" if suffix else sample.id
    return TrainingRecord(rid, mi, render_trace(ReasoningTrace(tuple(segments)), tokens), sample.target, order)


def reorder(sample: RawSample, mi: ModalityImportance, tokens: TokenConfig = DEFAULT_TOKENS) -> list[TrainingRecord]:
    if mi is ModalityImportance.AUDIO:
        return [_record(sample, mi, "audio_first", tokens, False)]
    if mi is ModalityImportance.VISUAL:
        return [_record(sample, mi, "visual_first", tokens, False)]
    if mi is ModalityImportance.BOTH:
        return [_record(sample, mi, "audio_first", tokens, True), _record(sample, mi, "visual_first", tokens, True)]
    raise UnresolvedMI(f"sample {sample.id!r}: cannot order reasoning without a dominant modality")


@dataclass
class BuildOptions:
    require_fau: bool = True
    fau_mode: str = "exact"
    tokens: TokenConfig = DEFAULT_TOKENS


@dataclass
class BuildStats:
    input: int = 0
    fau_rejected: int = 0
    unresolved_dropped: int = 0
    emitted: int = 0
    kept: dict[str, int] = field(default_factory=lambda: {"audio": 0, "visual": 0, "both": 0})
    errors: list[dict] = field(default_factory=list)

    @property
    def kept_total(self) -> int:
        return sum(self.kept.values())

    def to_dict(self) -> dict:
        return {"input": self.input, "fau_rejected": self.fau_rejected,
                "unresolved_dropped": self.unresolved_dropped, "emitted": self.emitted,
                "kept": dict(self.kept), "invalid": len(self.errors), "errors": list(self.errors)}


def build_records(samples: Iterable[RawSample | Exception], table: FauEmotionTable,
                  options: BuildOptions | None = None, stats: BuildStats | None = None) -> Iterator[TrainingRecord]:
    """Stream training records; ``stats`` is updated in place as the stream is consumed.

    Items that are exceptions (upstream parse failures) are recorded in
    ``stats.errors`` and skipped, as are samples whose target has no FAU prototype.
    ``stats.input`` counts valid samples only, so
    ``input == fau_rejected + unresolved_dropped + kept_total``.
    """
    options = options or BuildOptions()
    stats = stats if stats is not None else BuildStats()
    for pos, sample in enumerate(samples, start=1):
        if isinstance(sample, Exception):
            stats.errors.append({"line": getattr(sample, "line", pos), "error": str(sample)})
            continue
        if options.require_fau and sample.fau is not None and sample.target.name not in FAU_EXEMPT:
            try:
                passed = fau_filter(sample.fau, sample.target, table, options.fau_mode)
            except MigrError as exc:
                stats.errors.append({"line": pos, "id": sample.id, "error": str(exc)})
                continue
            stats.input += 1
            if not passed:
                stats.fau_rejected += 1
                continue
        else:
            stats.input += 1
        mi = estimate_mi(sample.triple, sample.target)
        if mi is ModalityImportance.UNRESOLVED:
            stats.unresolved_dropped += 1
            continue
        records = reorder(sample, mi, options.tokens)
        stats.kept[mi.value] += 1
        stats.emitted += len(records)
        yield from records


def build_sft_dataset(samples: Iterable[RawSample | Exception], table: FauEmotionTable,
                      options: BuildOptions | None = None) -> tuple[list[TrainingRecord], BuildStats]:
    stats = BuildStats()
    records = list(build_records(samples, table, options, stats))
    return records, stats


DEFAULT_AUDIO_CUES = ("voice", "tone", "speech", "says", "said", "speaks", "sound", "pitch", "sob", "sobbing",
                      "laugh", "laughing", "shout", "shouting", "whisper", "sigh", "audio", "hear", "heard")
DEFAULT_VISUAL_CUES = ("face", "facial", "eyes", "eyebrows", "brow", "mouth", "lips", "smile", "smiling", "frown",
                       "frowning", "expression", "gaze", "looks", "posture", "gesture", "tears", "video", "scene")


def decompose_reasoning(text: str, audio_cues: Iterable[str] = DEFAULT_AUDIO_CUES,
                        visual_cues: Iterable[str] = DEFAULT_VISUAL_CUES) -> tuple[str, str, str]:
    """Heuristically route sentences of one reasoning text into (audio, visual, think).

    A sentence goes to the side whose cue words it mentions more often; sentences
    with no cues or a tie go to think. This is a convenience for unannotated
    corpora, not part of the reference annotation procedure.
    """
    from .trace import split_sentences

    def pattern(words):
        return re.compile(r"\b(?:" + "|".join(re.escape(w) for w in words) + r")\b", re.IGNORECASE)

    aud_re, vis_re = pattern(audio_cues), pattern(visual_cues)
    parts = {"a": [], "v": [], "t": []}
    for sentence in split_sentences(text):
        a, v = len(aud_re.findall(sentence)), len(vis_re.findall(sentence))
        parts["a" if a > v else "v" if v > a else "t"].append(sentence)
    return " ".join(parts["a"]), " ".join(parts["v"]), " ".join(parts["t"])
