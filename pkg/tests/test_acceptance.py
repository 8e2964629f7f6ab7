"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""

import itertools
import json
import random
import statistics
import string
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, SMALL_LEXICON
from metric_oracle import oracle_metrics
from migr.cli import run
from migr.errors import NestedSegment, TraceError, TrailingGarbage, UnbalancedDelimiter
from migr.grposim import N_PARAMS, EpisodeContext, PolicyParams, SimConfig, Simulator, group_advantages, train
from migr.metrics import EvalRecord, evaluate
from migr.mi import ModalityImportance as MI
from migr.mi import PredictionTriple, estimate_mi
from migr.rewards import score
from migr.trace import ReasoningTrace, Segment, SegmentKind, TokenConfig, parse_trace, render_trace
from reward_oracle import oracle_rewards, sentence


def report(number, title, ok, detail, elapsed, limit):
    ok = ok and elapsed < limit
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} -- {detail} [{elapsed:.2f}s / {limit:.0f}s]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# 1 ----------------------------------------------------------------------------

def _synthetic_eval_rows(n, correct, faithful, names, seed):
    """``correct`` right answers, of which ``faithful`` also have matching reasoning."""
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        y = names[i % len(names)]
        other = names[(names.index(y) + 1 + rng.randrange(len(names) - 1)) % len(names)]
        if i < faithful:
            p, e = y, y
        elif i < correct:
            p, e = y, other
        else:
            p, e = other, rng.choice([y, other])
        rows.append({"id": str(i), "target": y, "predicted": p, "reasoning_emotion": e})
    rng.shuffle(rows)
    return rows


@pytest.mark.parametrize("model, war, fcr, want_all, want_correct", [
    ("MIGR", 0.7393, 0.6848, 0.0545, 0.0737),
    ("ERV", 0.7581, 0.6206, 0.1375, 0.1810),
])
def test_c1_inconsistency_identity(tmp_path, dfew, model, war, fcr, want_all, want_correct):
    t0 = time.perf_counter()
    n = 10_000
    rows = _synthetic_eval_rows(n, round(war * n), round(fcr * n), dfew.names, seed=1)
    src, rep = tmp_path / "eval.jsonl", tmp_path / "report.json"
    src.write_text("".join(json.dumps(r) + "\n" for r in rows))
    code = run(["evaluate", "--in", str(src), "--report", str(rep)])
    body = json.loads(rep.read_text())
    elapsed = time.perf_counter() - t0
    ok = (code == 0 and body["war"] == pytest.approx(war, abs=1e-12) and body["fcr"] == pytest.approx(fcr, abs=1e-12)
          and abs(body["inconsistent_all"] - want_all) <= 1e-4
          and abs(body["inconsistent_among_correct"] - want_correct) <= 5e-4)
    detail = (f"{model}: all={body['inconsistent_all']:.4f} (want {want_all}), "
              f"among_correct={body['inconsistent_among_correct']:.4f} (want {want_correct})")
    report(1, "inconsistency identity", ok, detail, elapsed, 5)


# 2 ----------------------------------------------------------------------------

def test_c2_metric_oracle(dfew):
    t0 = time.perf_counter()
    rng = random.Random(2)
    names = dfew.names
    worst, failures = 0.0, []
    keys = ["war", "uar", "eea", "epc", "fcr", "inconsistent_all", "inconsistent_among_correct"]
    for case in range(1000):
        k = rng.randint(1, len(names))
        classes = rng.sample(names, k)
        size = rng.randint(1, 100)
        absent = rng.random() * 0.3
        pick = lambda: None if rng.random() < absent else rng.choice(classes)  # noqa: E731
        rows = [(rng.choice(classes), pick(), pick()) for _ in range(size)]
        recs = [EvalRecord(str(i), dfew.label(y), p and dfew.label(p), e and dfew.label(e))
                for i, (y, p, e) in enumerate(rows)]
        got = evaluate(recs, dfew).to_dict()
        ref = oracle_metrics(rows, names)
        diff = max(abs(got[key] - ref[key]) for key in keys)
        worst = max(worst, diff)
        invariant = (got["fcr"] <= min(got["eea"], got["epc"], got["war"]) + 1e-15
                     and abs(got["inconsistent_all"] - (got["war"] - got["fcr"])) < 1e-12)
        if diff >= 5e-11 or not invariant:
            failures.append(case)
    elapsed = time.perf_counter() - t0
    report(2, "metric oracle equivalence", not failures,
           f"1000 datasets, max |diff|={worst:.1e}, failing={failures[:5]}", elapsed, 30)


# 3 ----------------------------------------------------------------------------

def _keywords_by_label(dfew):
    out = {name: [] for name in dfew.names}
    for kw, lab in sorted(SMALL_LEXICON.items()):
        out[lab].append(kw)
    return out


def test_c3_reward_oracle(small_lexicon, dfew):
    """Exhaustive over an abstracted template space.

    Per target (7) x leading order (2) x MI (audio, visual, both), each of the
    three reasoning segments holds a multiset of up to 3 sentences over
    {on-target keyword, off-target keyword, filler}: 20 multisets per segment,
    8,000 joint fillings. Which concrete keyword fills an on/off slot rotates
    through the 10-keyword lexicon so every keyword is exercised in both roles,
    and the answer cycles through {target, another label, absent}.
    """
    t0 = time.perf_counter()
    by_label = _keywords_by_label(dfew)
    multisets = [m for size in range(4) for m in itertools.combinations_with_replacement("nof", size)]
    assert len(multisets) == 20
    cases = mismatches = invariant_bad = 0
    seen_on, seen_off = set(), set()
    for target in dfew.names:
        on_pool = by_label[target]
        off_pool = [kw for kw in sorted(SMALL_LEXICON) if SMALL_LEXICON[kw] != target]
        other = next(name for name in dfew.names if name != target)
        rot = itertools.count()
        for order in (("aud", "vis"), ("vis", "aud")):
            for mi in ("audio", "visual", "both"):
                for fill in itertools.product(multisets, repeat=3):
                    i = next(rot)
                    on, off = on_pool[i % len(on_pool)], off_pool[i % len(off_pool)]
                    seen_on.add(on)
                    seen_off.add(off)
                    sym = {"n": None, "o": on, "f": off}
                    kinds = list(order) + ["think"]
                    segs = [(k, [sym[s] for s in m]) for k, m in zip(kinds, fill)]
                    answer = (target, other, None)[i % 3]
                    parts = [Segment({"aud": SegmentKind.AUD_DESC, "vis": SegmentKind.VIS_DESC,
                                      "think": SegmentKind.THINK}[k], " ".join(sentence(kw) for kw in kws))
                             for k, kws in segs]
                    if answer is not None:
                        parts.append(Segment(SegmentKind.ANSWER, answer))
                    text = render_trace(ReasoningTrace(tuple(parts)))
                    got = score(parse_trace(text), MI(mi), dfew.label(target), small_lexicon, dfew)
                    ref = oracle_rewards(segs, mi, target, SMALL_LEXICON, answer)
                    cases += 1
                    mismatches += (got.r_mao, got.r_mgr, got.r_answer) != ref
                    invariant_bad += not (got.r_mao in (0.0, 1.0) and got.r_answer in (0.0, 1.0)
                                          and 0.0 <= got.r_mgr <= 1.0
                                          and got.r_total == got.r_mao + got.r_mgr + got.r_answer)
    covered = seen_on | seen_off == set(SMALL_LEXICON)
    elapsed = time.perf_counter() - t0
    report(3, "reward oracle equivalence", mismatches == 0 and invariant_bad == 0 and covered,
           f"{cases} cases, mismatches={mismatches}, invariant violations={invariant_bad}, "
           f"keywords covered={len(seen_on | seen_off)}/10", elapsed, 60)


# 4 ----------------------------------------------------------------------------

MI_TABLE = {
    (True, False, True): MI.AUDIO, (True, False, False): MI.AUDIO,
    (False, True, True): MI.VISUAL, (False, True, False): MI.VISUAL,
    (True, True, True): MI.BOTH, (True, True, False): MI.BOTH,
    (False, False, True): MI.BOTH,
    (False, False, False): MI.UNRESOLVED,
}
SWAP = {MI.AUDIO: MI.VISUAL, MI.VISUAL: MI.AUDIO, MI.BOTH: MI.BOTH, MI.UNRESOLVED: MI.UNRESOLVED}


def test_c4_mi_table(dfew):
    t0 = time.perf_counter()
    bad = []
    for target in dfew.labels:
        wrongs = [lab for lab in dfew.labels if lab != target] + [None]
        for flags, want in MI_TABLE.items():
            for wrong in wrongs:
                triple = PredictionTriple(*(target if f else wrong for f in flags))
                got = estimate_mi(triple, target)
                if got is not want or estimate_mi(triple.swapped(), target) is not SWAP[want]:
                    bad.append((target.name, flags, wrong and wrong.name))
    elapsed = time.perf_counter() - t0
    report(4, "modality importance table", not bad and len(MI_TABLE) == 8,
           f"8 rows x 7 targets x 7 wrong fillers, with swap symmetry; failing={bad[:3]}", elapsed, 1)


# 5 ----------------------------------------------------------------------------

def _random_text(rng, tokens):
    alphabet = string.ascii_letters + string.digits + " .,!?<>/_\n\t'\"-"
    while True:
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40))).strip()
        if rng.random() < 0.2:
            text = " ".join(rng.choice(["Yes.", "No!", "Why?", "<", ">", "</", "a_b"]) for _ in range(rng.randint(1, 5)))
        if not any(tok in text for tok in tokens.all_tokens):
            return text


def test_c5_parser_round_trip():
    t0 = time.perf_counter()
    rng = random.Random(5)
    tokens = TokenConfig.default()
    kinds = list(SegmentKind)
    failures = 0
    for _ in range(10_000):
        trace = ReasoningTrace(tuple(Segment(rng.choice(kinds), _random_text(rng, tokens))
                                     for _ in range(rng.randint(0, 6))))
        failures += parse_trace(render_trace(trace, tokens), tokens) != trace
    malformed = {
        "unbalanced": "<aud_desc> the voice trembles",
        "nested": "<think> a <answer> b </answer> </think>",
        "trailing": "<think> a </think> leftover words",
    }
    kinds_seen = {}
    for name, text in malformed.items():
        try:
            parse_trace(text, tokens)
        except TraceError as exc:
            kinds_seen[name] = type(exc)
    expected = {"unbalanced": UnbalancedDelimiter, "nested": NestedSegment, "trailing": TrailingGarbage}
    elapsed = time.perf_counter() - t0
    report(5, "parser round trip", failures == 0 and kinds_seen == expected,
           f"10000 traces, failures={failures}, error kinds={sorted(c.__name__ for c in kinds_seen.values())}",
           elapsed, 10)


# 6 ----------------------------------------------------------------------------

def _raw_sample(rng, i, names, kind):
    target = rng.choice(names)
    wrong = rng.choice([n for n in names if n != target] + [None])
    flags = {"audio": [(1, 0, 1), (1, 0, 0)], "visual": [(0, 1, 1), (0, 1, 0)],
             "both": [(1, 1, 1), (1, 1, 0), (0, 0, 1)], "unresolved": [(0, 0, 0)]}[kind]
    a, v, av = rng.choice(flags)
    pick = lambda f: target if f else wrong  # noqa: E731
    return {"id": f"s{i}", "target": target, "aud_text": f"Audio {i}.", "vis_text": f"Visual {i}.",
            "think_text": f"Think {i}.", "pred_audio": pick(a), "pred_visual": pick(v), "pred_av": pick(av)}


def test_c6_reordering_contract(tmp_path, dfew):
    t0 = time.perf_counter()
    rng = random.Random(6)
    problems = []
    for corpus in range(20):
        kinds = [rng.choice(["audio", "visual", "both", "unresolved"]) for _ in range(rng.randint(1, 150))]
        rows = [_raw_sample(rng, i, dfew.names, k) for i, k in enumerate(kinds)]
        src, out, stats = tmp_path / f"in{corpus}.jsonl", tmp_path / f"out{corpus}.jsonl", tmp_path / "s.json"
        src.write_text("".join(json.dumps(r) + "\n" for r in rows))
        if run(["build-sft", "--in", str(src), "--out", str(out), "--stats", str(stats)]) != 0:
            problems.append((corpus, "exit code"))
            continue
        emitted = [json.loads(line) for line in out.read_text().splitlines()]
        n_a, n_v, n_b = (kinds.count(k) for k in ("audio", "visual", "both"))
        if len(emitted) != n_a + n_v + 2 * n_b or json.loads(stats.read_text())["emitted"] != len(emitted):
            problems.append((corpus, "count"))
        for row, kind in zip(rows, kinds):
            mine = [r for r in emitted if r["id"].split(":")[0] == row["id"]]
            if kind == "both":
                leads = [parse_trace(r["rendered"]).first_kind for r in mine]
                if sorted(leads) != sorted([SegmentKind.AUD_DESC, SegmentKind.VIS_DESC]):
                    problems.append((corpus, row["id"]))
            elif len(mine) != (kind != "unresolved"):
                problems.append((corpus, row["id"]))
    elapsed = time.perf_counter() - t0
    report(6, "reordering contract", not problems,
           f"20 corpora, emitted == A + V + 2*Both everywhere; problems={problems[:3]}", elapsed, 5)


# 7 ----------------------------------------------------------------------------

def test_c7_reward_shaping_effect():
    t0 = time.perf_counter()
    seeds = range(5)
    logs = {mode: [train(SimConfig(reward_mode=mode, group_size=4, seed=s)) for s in seeds]
            for mode in ("total", "answer_only")}
    initial = statistics.median(log.initial.order_rate for log in logs["total"])
    order = {m: statistics.median(log.final.order_rate for log in ls) for m, ls in logs.items()}
    consist = {m: statistics.median(log.final.consistency_rate for log in ls) for m, ls in logs.items()}
    repeat = [list(train(SimConfig(reward_mode=m, group_size=4, seed=0)).lines()) == list(logs[m][0].lines())
              for m in logs]
    elapsed = time.perf_counter() - t0
    ok = (abs(initial - 0.5) <= 0.1 and order["total"] >= 0.90 and order["answer_only"] <= 0.65
          and consist["total"] - consist["answer_only"] >= 0.20 and all(repeat))
    detail = (f"initial order {initial:.3f}; final order total={order['total']:.3f} "
              f"answer_only={order['answer_only']:.3f}; consistency gap="
              f"{consist['total'] - consist['answer_only']:.3f}; deterministic={all(repeat)}")
    report(7, "simulator reward shaping", ok, detail, elapsed, 120)


# 8 ----------------------------------------------------------------------------

def test_c8_simulator_numerics(dfew):
    t0 = time.perf_counter()
    sim = Simulator(SimConfig(eval_rollouts=8))
    rng = np.random.default_rng(8)
    worst_grad = 0.0
    h = 1e-5
    for _ in range(100):
        params = PolicyParams.from_flat(rng.normal(scale=1.5, size=N_PARAMS))
        ctx = EpisodeContext(dfew.labels[int(rng.integers(7))], (MI.AUDIO, MI.VISUAL)[int(rng.integers(2))],
                             float(rng.random()))
        r = sim.rollout(params, ctx, rng)
        flat = params.flat()
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            up, down = flat.copy(), flat.copy()
            up[i] += h
            down[i] -= h
            numeric[i] = (sim.log_prob(PolicyParams.from_flat(up), ctx, r.choices)[0]
                          - sim.log_prob(PolicyParams.from_flat(down), ctx, r.choices)[0]) / (2 * h)
        analytic = r.grad[params.mask()]
        rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), 1e-12)
        worst_grad = max(worst_grad, rel)
    worst_sum = 0.0
    for _ in range(10_000):
        g = int(rng.integers(1, 17))
        rewards = rng.uniform(0, 3, size=g) if rng.random() < 0.8 else rng.integers(0, 4, size=g).astype(float)
        worst_sum = max(worst_sum, abs(sum(group_advantages(list(rewards)))) / g)
    hand = group_advantages([3, 1, 1, 1])
    hand_ok = np.allclose(hand, [1.732, -0.577, -0.577, -0.577], atol=1e-3)
    elapsed = time.perf_counter() - t0
    ok = worst_grad <= 1e-4 and worst_sum < 1e-9 and hand_ok
    detail = (f"max grad rel err={worst_grad:.1e}; max |sum adv|/G={worst_sum:.1e}; "
              f"[3,1,1,1] -> {[round(a, 3) for a in hand]}")
    report(8, "simulator numerics", ok, detail, elapsed, 30)
