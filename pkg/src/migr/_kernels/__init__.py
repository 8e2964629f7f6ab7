"""Hot numeric kernels with a compiled core and a pure-Python fallback.

The compiled extension is used when importable; set ``MIGR_PURE_PYTHON=1`` to
force the fallback. ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback
if not os.environ.get("MIGR_PURE_PYTHON"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def sample_decisions(table, widths, rows, bias, uniforms, impl=None):
    """Draw one categorical choice per decision by inverse CDF.

    Decision ``d`` samples from ``softmax(table[rows[d], :w] + bias[d, :w])`` with
    ``w = widths[rows[d]]``. Returns ``(choices, log_prob, grad)`` where ``grad`` is
    the gradient of the joint log-probability with respect to ``table``.
    """
    impl = impl or _impl
    return impl.sample_decisions(_f64(table), _i64(widths), _i64(rows), _f64(bias), _f64(uniforms))


def decision_log_prob(table, widths, rows, bias, choices, impl=None):
    impl = impl or _impl
    return impl.decision_log_prob(_f64(table), _i64(widths), _i64(rows), _f64(bias), _i64(choices))


def group_advantages(rewards, eps, impl=None):
    impl = impl or _impl
    return impl.group_advantages(_f64(rewards), float(eps))


def tally(targets, preds, reasons, n_classes, impl=None):
    impl = impl or _impl
    return impl.tally(_i64(targets), _i64(preds), _i64(reasons), int(n_classes))


def implementations() -> dict:
    """Every importable backend, keyed by name."""
    out = {"python": _fallback}
    try:
        from . import _core

        out["cython"] = _core
    except ImportError:
        pass
    return out
