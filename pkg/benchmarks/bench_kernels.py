"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--no-train]

Kernel timings call both backends in-process; the end-to-end training timing
runs the simulator in a subprocess per backend since the backend is chosen at
import time.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from migr import _kernels
from migr.grposim import WIDTHS

TRAIN_SNIPPET = (
    "import time; from migr.grposim import SimConfig, train; from migr import _kernels;"
    "t = time.perf_counter(); train(SimConfig(steps={steps}, eval_rollouts=256));"
    "print(_kernels.BACKEND, time.perf_counter() - t)"
)


def workloads(rng):
    widths = np.array(WIDTHS, dtype=np.int64)
    table = rng.normal(size=(len(WIDTHS), 3))
    rows = np.array([0] + [2, 3, 4] * 3 + [8], dtype=np.int64)
    bias = rng.normal(size=(rows.size, 3))
    uniforms = rng.random(rows.size)
    choices = np.minimum((uniforms * widths[rows]).astype(np.int64), widths[rows] - 1)
    rewards = rng.uniform(0, 3, size=16)
    n = 10_000
    y = rng.integers(0, 7, n)
    p = rng.integers(-1, 7, n)
    e = rng.integers(-1, 7, n)
    return {
        "sample_decisions": lambda impl: _kernels.sample_decisions(table, widths, rows, bias, uniforms, impl),
        "decision_log_prob": lambda impl: _kernels.decision_log_prob(table, widths, rows, bias, choices, impl),
        "group_advantages(G=16)": lambda impl: _kernels.group_advantages(rewards, 1e-4, impl),
        "tally(n=10k)": lambda impl: _kernels.tally(y, p, e, 7, impl),
    }


def bench(fn, repeat):
    number, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=300)
    ap.add_argument("--no-train", action="store_true")
    args = ap.parse_args(argv)

    impls = _kernels.implementations()
    print(f"backends available: {', '.join(impls)}")
    print(f"{'kernel':<24}" + "".join(f"{name + ' (us)':>16}" for name in impls) + f"{'speedup':>10}")
    for name, fn in workloads(np.random.default_rng(0)).items():
        times = {b: bench(lambda: fn(mod), args.repeat) for b, mod in impls.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<24}" + "".join(f"{1e6 * t:>16.2f}" for t in times.values()) + f"{speed:>9.1f}x")

    if args.no_train:
        return
    print(f"\nend-to-end train(steps={args.steps})")
    for backend in impls:
        env = dict(os.environ)
        env.pop("MIGR_PURE_PYTHON", None)
        if backend == "python":
            env["MIGR_PURE_PYTHON"] = "1"
        out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET.format(steps=args.steps)],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:<8} {float(out[1]):.3f} s")


if __name__ == "__main__":
    main()
