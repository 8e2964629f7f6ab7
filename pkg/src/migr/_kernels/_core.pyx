# cython: language_level=3
"""Compiled kernels; see ``_fallback.py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

cdef enum:
    MAXW = 16


cdef inline double _softmax(const double[:, ::1] table, const double[:, ::1] bias, Py_ssize_t r,
                            Py_ssize_t d, Py_ssize_t w, double* z, double* p, double* m_out) noexcept nogil:
    cdef Py_ssize_t j
    cdef double m, s = 0.0
    for j in range(w):
        z[j] = table[r, j] + bias[d, j]
    m = z[0]
    for j in range(1, w):
        if z[j] > m:
            m = z[j]
    for j in range(w):
        p[j] = exp(z[j] - m)
    for j in range(w):
        s += p[j]
    for j in range(w):
        p[j] = p[j] / s
    m_out[0] = m
    return s


def sample_decisions(const double[:, ::1] table, const cnp.int64_t[::1] widths, const cnp.int64_t[::1] rows,
                     const double[:, ::1] bias, const double[::1] uniforms):
    cdef Py_ssize_t n = rows.shape[0], d, j, r, w, k
    cdef double z[MAXW]
    cdef double p[MAXW]
    cdef double m, s, c, logp = 0.0
    if table.shape[1] > MAXW:
        raise ValueError("row width exceeds kernel limit")
    choices_arr = np.zeros(n, dtype=np.int64)
    grad_arr = np.zeros((table.shape[0], table.shape[1]), dtype=np.float64)
    cdef cnp.int64_t[::1] choices = choices_arr
    cdef double[:, ::1] grad = grad_arr
    with nogil:
        for d in range(n):
            r = rows[d]
            w = widths[r]
            s = _softmax(table, bias, r, d, w, z, p, &m)
            k = w - 1
            c = 0.0
            for j in range(w):
                c += p[j]
                if uniforms[d] < c:
                    k = j
                    break
            choices[d] = k
            logp += z[k] - m - log(s)
            for j in range(w):
                grad[r, j] += (1.0 if j == k else 0.0) - p[j]
    return choices_arr, logp, grad_arr


def decision_log_prob(const double[:, ::1] table, const cnp.int64_t[::1] widths, const cnp.int64_t[::1] rows,
                      const double[:, ::1] bias, const cnp.int64_t[::1] choices):
    cdef Py_ssize_t n = rows.shape[0], d, j, r, w, k
    cdef double z[MAXW]
    cdef double p[MAXW]
    cdef double m, s, logp = 0.0
    if table.shape[1] > MAXW:
        raise ValueError("row width exceeds kernel limit")
    grad_arr = np.zeros((table.shape[0], table.shape[1]), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    with nogil:
        for d in range(n):
            r = rows[d]
            w = widths[r]
            k = choices[d]
            s = _softmax(table, bias, r, d, w, z, p, &m)
            logp += z[k] - m - log(s)
            for j in range(w):
                grad[r, j] += (1.0 if j == k else 0.0) - p[j]
    return logp, grad_arr


def group_advantages(const double[::1] rewards, double eps):
    cdef Py_ssize_t n = rewards.shape[0], i
    cdef double lo, hi, total = 0.0, mean, var = 0.0, std, v
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    lo = rewards[0]
    hi = rewards[0]
    for i in range(n):
        v = rewards[i]
        total += v
        if v < lo:
            lo = v
        if v > hi:
            hi = v
    if lo == hi:
        return out_arr
    mean = total / n
    for i in range(n):
        var += (rewards[i] - mean) * (rewards[i] - mean)
    std = sqrt(var / n)
    for i in range(n):
        out[i] = (rewards[i] - mean) / (std + eps)
    return out_arr


def tally(const cnp.int64_t[::1] targets, const cnp.int64_t[::1] preds, const cnp.int64_t[::1] reasons,
          Py_ssize_t n_classes):
    cdef Py_ssize_t n = targets.shape[0], i
    cdef cnp.int64_t y, p, e
    cdef bint ok, eea
    confusion_arr = np.zeros((n_classes, n_classes + 1), dtype=np.int64)
    counts_arr = np.zeros(4, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] confusion = confusion_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    with nogil:
        for i in range(n):
            y = targets[i]
            p = preds[i]
            e = reasons[i]
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
    return confusion_arr, counts_arr
