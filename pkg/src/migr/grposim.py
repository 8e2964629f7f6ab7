"""Toy group-relative policy optimization over templated reasoning traces.

An episode fixes a target emotion, a dominant modality (audio or visual) and a
cue strength. The policy is a table of categorical logits:

    row 0-1   leading modality given the observed dominant modality
              (choice 0: audio description first, 1: visual first)
    row 2-7   per sentence emission, indexed by (observed modality, segment)
              with segments (aud_desc, vis_desc, think); choices are
              0: target-emotion keyword, 1: distractor keyword, 2: no emotion
    row 8     answer (0: target, 1: distractor); the correct logit gets
              ``cue_gain * cue_strength`` added, a fixed input not a parameter

That is 4 + 18 + 2 = 24 free parameters. Every sampled trace is rendered as
text and scored by the real reward functions, so the loop exercises the
parser, classifier and rewards end to end. Updates are REINFORCE with
group-normalized advantages, no KL term and an optional L2 pull to the
initial parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .classifier import Lexicon, load_lexicon
from .errors import EmptyGroup, NonFiniteGradient
from .mi import ModalityImportance
from .rewards import REWARD_MODES, RewardBreakdown, score_text
from .taxonomy import EmotionLabel, Taxonomy, load_taxonomy
from .trace import DEFAULT_TOKENS, ReasoningTrace, Segment, SegmentKind, render_trace

MODALITIES = (ModalityImportance.AUDIO, ModalityImportance.VISUAL)
SEGMENTS = (SegmentKind.AUD_DESC, SegmentKind.VIS_DESC, SegmentKind.THINK)
ORDER_ROW, EMIT_ROW, ANSWER_ROW = 0, 2, 8
WIDTHS = np.array([2, 2, 3, 3, 3, 3, 3, 3, 2], dtype=np.int64)
N_PARAMS = int(WIDTHS.sum())

TEMPLATES = {
    SegmentKind.AUD_DESC: ("The voice carries {kw}.", "The speaker talks at an even pace."),
    SegmentKind.VIS_DESC: ("The face shows {kw}.", "The camera holds on a plain room."),
    SegmentKind.THINK: ("Taken together this reads as {kw}.", "The cues need to be weighed together."),
}


@dataclass(frozen=True)
class EpisodeContext:
    target: EmotionLabel
    mi: ModalityImportance
    cue_strength: float


@dataclass
class PolicyParams:
    table: np.ndarray = field(default_factory=lambda: np.zeros((len(WIDTHS), 3)))

    def __post_init__(self):
        self.table = np.array(self.table, dtype=np.float64)
        if self.table.shape != (len(WIDTHS), 3):
            raise ValueError(f"policy table must have shape {(len(WIDTHS), 3)}")

    @property
    def order_logits(self) -> np.ndarray:
        return self.table[ORDER_ROW:ORDER_ROW + 2, :2]

    @property
    def emotion_logits(self) -> np.ndarray:
        return self.table[EMIT_ROW:EMIT_ROW + 6].reshape(2, 3, 3)

    @property
    def answer_logits(self) -> np.ndarray:
        return self.table[ANSWER_ROW, :2]

    def mask(self) -> np.ndarray:
        return np.arange(3)[None, :] < WIDTHS[:, None]

    def flat(self) -> np.ndarray:
        return self.table[self.mask()].copy()

    @classmethod
    def from_flat(cls, vec: Sequence[float]) -> "PolicyParams":
        params = cls()
        params.table[params.mask()] = np.asarray(vec, dtype=np.float64)
        return params

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.table.copy())


@dataclass
class SimConfig:
    steps: int = 300
    group_size: int = 4
    lr: float = 0.1
    reward_mode: str = "total"
    seed: int = 0
    eps: float = 1e-4
    sentence_count: int = 3
    cue_gain: float = 2.0
    cue_low: float = 0.0
    cue_high: float = 1.0
    l2: float = 0.0
    eval_rollouts: int = 512
    eval_every: int = 0
    taxonomy: str = "dfew"

    def __post_init__(self):
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"reward_mode must be one of {REWARD_MODES}")
        if self.group_size < 1 or self.steps < 0 or self.sentence_count < 1:
            raise ValueError("group_size and sentence_count must be >= 1, steps >= 0")


@dataclass(frozen=True)
class Rollout:
    text: str
    choices: np.ndarray
    log_prob: float
    grad: np.ndarray


@dataclass
class GroupRollout:
    context: EpisodeContext
    traces: list[str]
    rewards: list[RewardBreakdown]
    advantages: list[float]


@dataclass
class LogEntry:
    phase: str
    step: int
    mean_reward: float
    order_rate: float
    consistency_rate: float
    answer_accuracy: float
    n_rollouts: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingLog:
    config: SimConfig
    entries: list[LogEntry] = field(default_factory=list)
    params: PolicyParams | None = None

    @property
    def initial(self) -> LogEntry:
        return next(e for e in self.entries if e.phase == "eval")

    @property
    def final(self) -> LogEntry:
        return [e for e in self.entries if e.phase == "eval"][-1]

    def lines(self) -> Iterator[dict]:
        for e in self.entries:
            yield e.to_dict()


def group_advantages(rewards: Sequence[float], eps: float = 1e-4) -> list[float]:
    """``(r - mean) / (population std + eps)``; identical rewards give zeros."""
    if len(rewards) == 0:
        raise EmptyGroup("group has no rewards")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return _kernels.group_advantages(rewards, eps).tolist()


def _episode_from_rng(rng: np.random.Generator, taxonomy: Taxonomy, low: float = 0.0,
                      high: float = 1.0) -> EpisodeContext:
    target = taxonomy.labels[int(rng.integers(len(taxonomy)))]
    mi = MODALITIES[int(rng.integers(2))]
    return EpisodeContext(target, mi, float(rng.uniform(low, high)))


def sample_episode(rng_seed, taxonomy: Taxonomy | None = None, low: float = 0.0, high: float = 1.0) -> EpisodeContext:
    """Deterministic context for a seed (an int or a sequence of ints)."""
    return _episode_from_rng(np.random.default_rng(rng_seed), taxonomy or load_taxonomy("dfew"), low, high)


class Simulator:
    def __init__(self, config: SimConfig | None = None, taxonomy: Taxonomy | None = None,
                 lexicon: Lexicon | None = None, tokens=DEFAULT_TOKENS):
        self.config = config or SimConfig()
        self.taxonomy = taxonomy or load_taxonomy(self.config.taxonomy)
        self.lexicon = lexicon or load_lexicon(None, self.taxonomy)
        self.tokens = tokens
        sc = self.config.sentence_count
        # decision layout: order, sc sentences per segment in SEGMENTS order, answer
        self.n_decisions = 2 + 3 * sc
        self._keyword = {}
        for label in self.taxonomy:
            kws = self.lexicon.keywords_for(label)
            if not kws:
                raise ValueError(f"lexicon has no keyword for {label.name!r}")
            self._keyword[label] = kws[0]
        self._check_templates()

    def _check_templates(self):
        for kind, (emo, filler) in TEMPLATES.items():
            if self.lexicon.classify(filler).label is not None:
                raise ValueError(f"filler sentence for {kind.value} matches an emotion keyword")
            for label, kw in self._keyword.items():
                got = self.lexicon.classify(emo.format(kw=kw)).label
                if got != label:
                    raise ValueError(f"template sentence for {label.name!r} classifies as {got}")

    def rows(self, context: EpisodeContext) -> np.ndarray:
        obs = MODALITIES.index(context.mi)
        rows = [ORDER_ROW + obs]
        for seg in range(3):
            rows += [EMIT_ROW + 3 * obs + seg] * self.config.sentence_count
        rows.append(ANSWER_ROW)
        return np.array(rows, dtype=np.int64)

    def bias(self, context: EpisodeContext) -> np.ndarray:
        b = np.zeros((self.n_decisions, 3))
        b[-1, 0] = self.config.cue_gain * context.cue_strength
        return b

    def render(self, context: EpisodeContext, choices: Sequence[int]) -> str:
        sc = self.config.sentence_count
        distractor = self.taxonomy.neighbor(context.target)
        texts = {}
        for s, kind in enumerate(SEGMENTS):
            emo, filler = TEMPLATES[kind]
            sentences = []
            for c in choices[1 + s * sc:1 + (s + 1) * sc]:
                if c == 2:
                    sentences.append(filler)
                else:
                    sentences.append(emo.format(kw=self._keyword[context.target if c == 0 else distractor]))
            texts[kind] = " ".join(sentences)
        lead = SEGMENTS[:2] if choices[0] == 0 else SEGMENTS[1::-1]
        answer = context.target if choices[-1] == 0 else distractor
        segments = [Segment(k, texts[k]) for k in lead]
        segments += [Segment(SegmentKind.THINK, texts[SegmentKind.THINK]), Segment(SegmentKind.ANSWER, answer.name)]
        return render_trace(ReasoningTrace(tuple(segments)), self.tokens)

    def rollout(self, params: PolicyParams, context: EpisodeContext, rng: np.random.Generator) -> Rollout:
        u = rng.random(self.n_decisions)
        choices, logp, grad = _kernels.sample_decisions(params.table, WIDTHS, self.rows(context),
                                                        self.bias(context), u)
        return Rollout(self.render(context, choices), choices, float(logp), grad)

    def generate(self, params: PolicyParams, context: EpisodeContext, rng: np.random.Generator) -> tuple[str, float]:
        r = self.rollout(params, context, rng)
        return r.text, r.log_prob

    def log_prob(self, params: PolicyParams, context: EpisodeContext, choices: Sequence[int]):
        """Exact log-probability of a choice vector and its gradient with respect to the table."""
        logp, grad = _kernels.decision_log_prob(params.table, WIDTHS, self.rows(context), self.bias(context),
                                                np.asarray(choices, dtype=np.int64))
        return float(logp), grad

    def outcome_space(self, context: EpisodeContext) -> Iterator[tuple[int, ...]]:
        widths = [int(WIDTHS[r]) for r in self.rows(context)]
        return itertools.product(*(range(w) for w in widths))

    def score(self, text: str, context: EpisodeContext) -> RewardBreakdown:
        return score_text(text, context.mi, context.target, self.lexicon, self.taxonomy, self.tokens)

    def is_aligned(self, choices: Sequence[int], context: EpisodeContext) -> bool:
        return MODALITIES[int(choices[0])] is context.mi

    def run_group(self, params: PolicyParams, context: EpisodeContext, step: int):
        seed = self.config.seed
        rollouts = [self.rollout(params, context, np.random.default_rng([seed, 1, step, i]))
                    for i in range(self.config.group_size)]
        rewards = [self.score(r.text, context) for r in rollouts]
        adv = group_advantages([b.select(self.config.reward_mode) for b in rewards], self.config.eps)
        return rollouts, GroupRollout(context, [r.text for r in rollouts], rewards, adv)

    def _summarize(self, phase, step, contexts, rollouts, rewards) -> LogEntry:
        n = len(rollouts)
        mode = self.config.reward_mode
        return LogEntry(
            phase=phase,
            step=step,
            mean_reward=sum(b.select(mode) for b in rewards) / n,
            order_rate=sum(self.is_aligned(r.choices, c) for r, c in zip(rollouts, contexts)) / n,
            consistency_rate=sum(b.r_mgr >= 0.5 for b in rewards) / n,
            answer_accuracy=sum(b.r_answer for b in rewards) / n,
            n_rollouts=n,
        )

    def evaluate(self, params: PolicyParams, step: int) -> LogEntry:
        cfg = self.config
        contexts, rollouts, rewards = [], [], []
        for j in range(cfg.eval_rollouts):
            rng = np.random.default_rng([cfg.seed, 2, j])
            ctx = _episode_from_rng(rng, self.taxonomy, cfg.cue_low, cfg.cue_high)
            r = self.rollout(params, ctx, rng)
            contexts.append(ctx)
            rollouts.append(r)
            rewards.append(self.score(r.text, ctx))
        return self._summarize("eval", step, contexts, rollouts, rewards)

    def train(self, params: PolicyParams | None = None) -> TrainingLog:
        cfg = self.config
        params = params.copy() if params is not None else PolicyParams()
        init = params.copy()
        log = TrainingLog(cfg)
        log.entries.append(self.evaluate(params, 0))
        for step in range(1, cfg.steps + 1):
            context = _episode_from_rng(np.random.default_rng([cfg.seed, 0, step]), self.taxonomy,
                                        cfg.cue_low, cfg.cue_high)
            rollouts, group = self.run_group(params, context, step)
            grad = np.zeros_like(params.table)
            for a, r in zip(group.advantages, rollouts):
                grad += a * r.grad
            grad /= len(rollouts)
            if cfg.l2:
                grad -= cfg.l2 * (params.table - init.table)
            if not np.all(np.isfinite(grad)):
                raise NonFiniteGradient(step)
            params.table += cfg.lr * grad
            log.entries.append(self._summarize("train", step, [context] * len(rollouts), rollouts, group.rewards))
            if cfg.eval_every and step % cfg.eval_every == 0 and step != cfg.steps:
                log.entries.append(self.evaluate(params, step))
        if cfg.steps:
            log.entries.append(self.evaluate(params, cfg.steps))
        log.params = params
        return log


def train(config: SimConfig | None = None, params: PolicyParams | None = None) -> TrainingLog:
    return Simulator(config).train(params)


def generate(params: PolicyParams, context: EpisodeContext, rng: np.random.Generator,
             simulator: Simulator | None = None) -> tuple[str, float]:
    return (simulator or Simulator()).generate(params, context, rng)

