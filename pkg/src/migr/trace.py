"""Parsing and rendering of token-delimited reasoning traces.

A trace is a sequence of segments, each wrapped in an opening and a closing
delimiter::

    <aud_desc> sobbing voice <aud_desc>
    <vis_desc> frowning <vis_desc>
    <think> sad overall </think>
    <answer> sad </answer>

The modality description tokens use the same string on both ends; think and
answer use the usual ``<x>``/``</x>`` pair. Both styles are configurable through
:class:`TokenConfig`.
"""

from __future__ import annotations

import enum
import json
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ConfigError, NestedSegment, TrailingGarbage, UnbalancedDelimiter


class SegmentKind(str, enum.Enum):
    AUD_DESC = "aud_desc"
    VIS_DESC = "vis_desc"
    THINK = "think"
    ANSWER = "answer"


DESCRIPTION_KINDS = (SegmentKind.AUD_DESC, SegmentKind.VIS_DESC)


class DuplicateSegmentWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    text: str


@dataclass(frozen=True)
class ReasoningTrace:
    segments: tuple[Segment, ...] = ()

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def kinds(self) -> list[SegmentKind]:
        return [s.kind for s in self.segments]

    @property
    def first_kind(self) -> SegmentKind | None:
        return self.segments[0].kind if self.segments else None

    def is_canonical(self) -> bool:
        """At most one answer (and last), at most one description per modality."""
        kinds = self.kinds
        if kinds.count(SegmentKind.ANSWER) > 1:
            return False
        if SegmentKind.ANSWER in kinds and kinds[-1] is not SegmentKind.ANSWER:
            return False
        return all(kinds.count(k) <= 1 for k in DESCRIPTION_KINDS)


@dataclass(frozen=True)
class TokenConfig:
    delimiters: Mapping[SegmentKind, tuple[str, str]]

    def __post_init__(self):
        if set(self.delimiters) != set(SegmentKind):
            raise ConfigError("token config must define all four segment kinds")
        owner: dict[str, SegmentKind] = {}
        for kind, (open_, close) in self.delimiters.items():
            if not open_ or not close:
                raise ConfigError(f"empty delimiter for {kind.value}")
            for tok in {open_, close}:
                if tok in owner and owner[tok] is not kind:
                    raise ConfigError(f"delimiter {tok!r} shared by {owner[tok].value} and {kind.value}")
                owner[tok] = kind

    def open(self, kind: SegmentKind) -> str:
        return self.delimiters[kind][0]

    def close(self, kind: SegmentKind) -> str:
        return self.delimiters[kind][1]

    @property
    def all_tokens(self) -> set[str]:
        return {tok for pair in self.delimiters.values() for tok in pair}

    @classmethod
    def default(cls) -> "TokenConfig":
        return cls({
            SegmentKind.AUD_DESC: ("<aud_desc>", "<aud_desc>"),
            SegmentKind.VIS_DESC: ("<vis_desc>", "<vis_desc>"),
            SegmentKind.THINK: ("<think>", "</think>"),
            SegmentKind.ANSWER: ("<answer>", "</answer>"),
        })

    @classmethod
    def from_dict(cls, data: Mapping) -> "TokenConfig":
        try:
            return cls({SegmentKind(k): (str(v["open"]), str(v["close"])) for k, v in data.items()})
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad token config: {exc}") from exc

    def to_dict(self) -> dict:
        return {k.value: {"open": o, "close": c} for k, (o, c) in self.delimiters.items()}


def load_tokens(path: str | Path) -> TokenConfig:
    path = Path(path)
    try:
        return TokenConfig.from_dict(json.loads(path.read_text("utf-8")))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot load token config: {exc}") from exc


DEFAULT_TOKENS = TokenConfig.default()


def _find_any(text: str, tokens: list[str], start: int, end: int) -> int:
    """Offset of the earliest token occurrence in ``text[start:end]``, or -1."""
    best = -1
    for tok in tokens:
        i = text.find(tok, start, end)
        if i != -1 and (best == -1 or i < best):
            best = i
    return best


def parse_trace(text: str, tokens: TokenConfig = DEFAULT_TOKENS) -> ReasoningTrace:
    """Parse ``text`` into segments; interiors are whitespace-trimmed.

    Raises one of :class:`UnbalancedDelimiter`, :class:`NestedSegment` or
    :class:`TrailingGarbage`, each carrying the offending offset.
    """
    # longest opener first so that a token which prefixes another cannot shadow it
    openers = sorted(((tokens.open(k), k) for k in SegmentKind), key=lambda p: -len(p[0]))
    every = sorted(tokens.all_tokens, key=len, reverse=True)
    segments = []
    i, n = 0, len(text)
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            break
        for open_, kind in openers:
            if text.startswith(open_, i):
                break
        else:
            raise TrailingGarbage("text outside any segment", i)
        body = i + len(open_)
        close = tokens.close(kind)
        j = text.find(close, body)
        if j == -1:
            raise UnbalancedDelimiter(f"{open_!r} is never closed", i)
        inner = _find_any(text, every, body, j)
        if inner != -1:
            raise NestedSegment(f"delimiter inside {kind.value} segment", inner)
        segments.append(Segment(kind, text[body:j].strip()))
        i = j + len(close)
    return ReasoningTrace(tuple(segments))


def render_trace(trace: ReasoningTrace, tokens: TokenConfig = DEFAULT_TOKENS) -> str:
    return "\n".join(f"{tokens.open(s.kind)} {s.text} {tokens.close(s.kind)}" for s in trace.segments)


_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


def split_sentences(text: str) -> list[str]:
    """Split after ``.``, ``!`` or ``?`` when followed by whitespace; trailing fragments are kept."""
    return [s.strip() for s in _SENTENCE_END.split(text) if s.strip()]


def segment_text(trace: ReasoningTrace, kind: SegmentKind) -> str | None:
    found = [s.text for s in trace.segments if s.kind is kind]
    if not found:
        return None
    if len(found) > 1:
        warnings.warn(f"trace has {len(found)} {kind.value} segments; using the first",
                      DuplicateSegmentWarning, stacklevel=2)
    return found[0]


def first_description(trace: ReasoningTrace) -> SegmentKind | None:
    """Kind of the earliest audio or visual description segment."""
    for s in trace.segments:
        if s.kind in DESCRIPTION_KINDS:
            return s.kind
    return None
