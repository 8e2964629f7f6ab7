"""Pure-Python kernels. Arithmetic order mirrors ``_core.pyx`` exactly."""

from __future__ import annotations

import math

import numpy as np


def _row_softmax(table, bias, r, d, w):
    z = [table[r, j] + bias[d, j] for j in range(w)]
    m = max(z)
    e = [math.exp(v - m) for v in z]
    s = 0.0
    for v in e:
        s += v
    return z, m, s, [v / s for v in e]


def sample_decisions(table, widths, rows, bias, uniforms):
    n = len(rows)
    choices = np.zeros(n, dtype=np.int64)
    grad = np.zeros_like(table)
    logp = 0.0
    for d in range(n):
        r = int(rows[d])
        w = int(widths[r])
        z, m, s, p = _row_softmax(table, bias, r, d, w)
        u = uniforms[d]
        k = w - 1
        c = 0.0
        for j in range(w):
            c += p[j]
            if u < c:
                k = j
                break
        choices[d] = k
        logp += z[k] - m - math.log(s)
        for j in range(w):
            grad[r, j] += (1.0 if j == k else 0.0) - p[j]
    return choices, logp, grad


def decision_log_prob(table, widths, rows, bias, choices):
    grad = np.zeros_like(table)
    logp = 0.0
    for d in range(len(rows)):
        r = int(rows[d])
        w = int(widths[r])
        k = int(choices[d])
        z, m, s, p = _row_softmax(table, bias, r, d, w)
        logp += z[k] - m - math.log(s)
        for j in range(w):
            grad[r, j] += (1.0 if j == k else 0.0) - p[j]
    return logp, grad


def group_advantages(rewards, eps):
    n = len(rewards)
    out = np.zeros(n, dtype=np.float64)
    lo = hi = rewards[0]
    total = 0.0
    for v in rewards:
        total += v
        lo = min(lo, v)
        hi = max(hi, v)
    if lo == hi:
        return out
    mean = total / n
    var = 0.0
    for v in rewards:
        var += (v - mean) * (v - mean)
    std = math.sqrt(var / n)
    for i in range(n):
        out[i] = (rewards[i] - mean) / (std + eps)
    return out


def tally(targets, preds, reasons, n_classes):
    """Confusion counts (column ``n_classes`` holds absent predictions) and indicator sums.

    ``counts`` = [correct, reasoning==target, reasoning==prediction, both]; -1 encodes absent.
    """
    confusion = np.zeros((n_classes, n_classes + 1), dtype=np.int64)
    counts = np.zeros(4, dtype=np.int64)
    for i in range(len(targets)):
        y, p, e = int(targets[i]), int(preds[i]), int(reasons[i])
        confusion[y, n_classes if p < 0 else p] += 1
        ok = p >= 0 and p == y
        eea = e >= 0 and e == y
        if ok:
            counts[0] += 1
        if eea:
            counts[1] += 1
        if e >= 0 and e == p:
            counts[2] += 1
        if ok and eea:
            counts[3] += 1
    return confusion, counts
