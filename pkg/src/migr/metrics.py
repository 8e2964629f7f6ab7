"""Recognition and explanation-consistency metrics.

Per record: ground truth ``y``, predicted label ``p`` and the emotion expressed
by the reasoning ``e`` (either supplied by an external judge or inferred with a
classifier over all non-answer text). Missing ``p`` or ``e`` never matches.

* WAR: micro accuracy. UAR: mean per-class recall over classes present.
* EEA = mean[e == y], EPC = mean[e == p], FCR = mean[e == y and p == y].
* ``inconsistent_all`` = mean[p == y and e != y] (answer right, reasoning wrong),
  which is WAR - FCR; ``inconsistent_among_correct`` divides it by WAR.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .classifier import EmotionClassifier
from .errors import EmptyDataset
from .taxonomy import EmotionLabel, Taxonomy, normalize_label
from .trace import ReasoningTrace, SegmentKind, segment_text, split_sentences


@dataclass(frozen=True)
class EvalRecord:
    id: str
    target: EmotionLabel
    predicted: EmotionLabel | None = None
    reasoning_emotion: EmotionLabel | None = None


@dataclass
class MetricsReport:
    n: int
    war: float
    uar: float
    eea: float
    epc: float
    fcr: float
    inconsistent_all: float
    inconsistent_among_correct: float
    per_class_recall: dict[str, float] = field(default_factory=dict)
    confusion: list[list[int]] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "war": self.war, "uar": self.uar, "eea": self.eea, "epc": self.epc, "fcr": self.fcr,
            "inconsistent_all": self.inconsistent_all,
            "inconsistent_among_correct": self.inconsistent_among_correct,
            "per_class_recall": self.per_class_recall,
            "confusion": {"labels": self.labels, "columns": self.labels + ["unk"], "counts": self.confusion},
        }

    def to_text(self, name: str = "model") -> str:
        """Aligned table in percent: consistency block, accuracy block, then inconsistency."""
        cols = ["FCR", "EEA", "EPC", "UAR", "WAR", "RxA_all", "RxA_correct"]
        vals = [self.fcr, self.eea, self.epc, self.uar, self.war,
                self.inconsistent_all, self.inconsistent_among_correct]
        width = max(len(name), 5)
        head = f"{'Model':<{width}}  " + "  ".join(f"{c:>11}" for c in cols)
        row = f"{name:<{width}}  " + "  ".join(f"{100 * v:>11.2f}" for v in vals)
        per = "  ".join(f"{k}={100 * v:.2f}" for k, v in self.per_class_recall.items())
        return f"{head}\n{row}\nper-class recall: {per}\nn = {self.n}\n"


def _encode(records: Sequence[EvalRecord]):
    code = lambda lab: -1 if lab is None else lab.id  # noqa: E731
    return (np.array([r.target.id for r in records], dtype=np.int64),
            np.array([code(r.predicted) for r in records], dtype=np.int64),
            np.array([code(r.reasoning_emotion) for r in records], dtype=np.int64))


def _tally(records: Sequence[EvalRecord], n_classes: int):
    if not records:
        raise EmptyDataset("metrics need at least one record")
    return _kernels.tally(*_encode(records), n_classes)


def _n_classes(records: Sequence[EvalRecord], taxonomy: Taxonomy | None) -> int:
    if taxonomy is not None:
        return len(taxonomy)
    ids = [r.target.id for r in records]
    ids += [lab.id for r in records for lab in (r.predicted, r.reasoning_emotion) if lab is not None]
    return max(ids, default=-1) + 1


def compute_war(records: Sequence[EvalRecord]) -> float:
    _, counts = _tally(records, _n_classes(records, None))
    return int(counts[0]) / len(records)


def per_class_recall(records: Sequence[EvalRecord], taxonomy: Taxonomy | None = None) -> dict[int, float]:
    """Recall keyed by label id, only for classes with at least one sample."""
    confusion, _ = _tally(records, _n_classes(records, taxonomy))
    out = {}
    for i, row in enumerate(confusion):
        total = int(row.sum())
        if total:
            out[i] = int(row[i]) / total
    return out


def compute_uar(records: Sequence[EvalRecord], taxonomy: Taxonomy | None = None) -> float:
    recalls = per_class_recall(records, taxonomy)
    return sum(recalls.values()) / len(recalls)


def compute_consistency(records: Sequence[EvalRecord]) -> tuple[float, float, float]:
    _, counts = _tally(records, _n_classes(records, None))
    n = len(records)
    return int(counts[1]) / n, int(counts[2]) / n, int(counts[3]) / n


def inconsistency_rates(records: Sequence[EvalRecord]) -> tuple[float, float]:
    _, counts = _tally(records, _n_classes(records, None))
    correct, both = int(counts[0]), int(counts[3])
    bad = correct - both
    return bad / len(records), (bad / correct if correct else 0.0)


def confusion_matrix(records: Sequence[EvalRecord], taxonomy: Taxonomy) -> np.ndarray:
    """Rows are targets, columns predictions; the extra last column counts absent predictions."""
    confusion, _ = _tally(records, len(taxonomy))
    return confusion


def evaluate(records: Sequence[EvalRecord], taxonomy: Taxonomy) -> MetricsReport:
    records = list(records)
    confusion, counts = _tally(records, len(taxonomy))
    n = len(records)
    correct, eea, epc, both = (int(c) for c in counts)
    recalls = {}
    for i, row in enumerate(confusion):
        total = int(row.sum())
        if total:
            recalls[taxonomy.labels[i].name] = int(row[i]) / total
    return MetricsReport(
        n=n,
        war=correct / n,
        uar=sum(recalls.values()) / len(recalls),
        eea=eea / n,
        epc=epc / n,
        fcr=both / n,
        inconsistent_all=(correct - both) / n,
        inconsistent_among_correct=(correct - both) / correct if correct else 0.0,
        per_class_recall=recalls,
        confusion=confusion.tolist(),
        labels=taxonomy.names,
    )


def reasoning_sentences(trace: ReasoningTrace) -> list[str]:
    return [s for seg in trace.segments if seg.kind is not SegmentKind.ANSWER for s in split_sentences(seg.text)]


def reasoning_emotion(trace: ReasoningTrace, classifier: EmotionClassifier) -> EmotionLabel | None:
    """Single emotion of the whole explanation: the classifier run over all non-answer text."""
    text = " ".join(seg.text for seg in trace.segments if seg.kind is not SegmentKind.ANSWER)
    return classifier.classify(text).label


def reasoning_topk(trace: ReasoningTrace, classifier: EmotionClassifier, k: int) -> list[EmotionLabel]:
    """Labels ranked by how many reasoning sentences classify as them (ties by taxonomy order)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(v for v in (classifier.classify(s).label for s in reasoning_sentences(trace)) if v is not None)
    ranked = sorted(counts, key=lambda lab: (-counts[lab], lab.id))
    return ranked[:k]


def topk_hit_rate(traces: Iterable[ReasoningTrace], label: EmotionLabel, classifier: EmotionClassifier,
                  k: int = 2) -> float:
    """Fraction of traces whose top-``k`` reasoning emotions include ``label``."""
    traces = list(traces)
    if not traces:
        raise EmptyDataset("no traces")
    return sum(label in reasoning_topk(t, classifier, k) for t in traces) / len(traces)


def prediction_distribution(records: Iterable[EvalRecord], taxonomy: Taxonomy) -> dict[str, int]:
    """Predicted-label histogram; unparseable predictions land in ``unk``."""
    counts = Counter("unk" if r.predicted is None else r.predicted.name for r in records)
    return {name: counts.get(name, 0) for name in taxonomy.names + ["unk"]}


def record_from_trace(id: str, target: EmotionLabel, trace: ReasoningTrace, classifier: EmotionClassifier,
                      taxonomy: Taxonomy) -> EvalRecord:
    predicted = normalize_label(segment_text(trace, SegmentKind.ANSWER), taxonomy)
    return EvalRecord(id, target, predicted, reasoning_emotion(trace, classifier))


def record_from_dict(data: Mapping, taxonomy: Taxonomy) -> EvalRecord:
    """Build an :class:`EvalRecord` with judge-supplied ``predicted`` and ``reasoning_emotion``."""
    target = taxonomy.label(str(data["target"]))
    return EvalRecord(str(data.get("id", "")), target,
                      normalize_label(data.get("predicted"), taxonomy),
                      normalize_label(data.get("reasoning_emotion"), taxonomy))


__all__ = [
    "EvalRecord", "MetricsReport", "compute_war", "compute_uar", "compute_consistency", "inconsistency_rates",
    "per_class_recall", "confusion_matrix", "evaluate", "reasoning_emotion", "reasoning_topk", "topk_hit_rate",
    "prediction_distribution", "record_from_trace", "record_from_dict",
]
