"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.  Each case is
timed with both backends on identical inputs, and the outputs are checked
for equality before the timings are reported.
"""

import argparse
import time

import numpy as np

from perclab import _purepy, rng
from perclab.graphs import GraphSpec

try:
    from perclab import _kernels
except ImportError:
    _kernels = None


def _cases():
    empty = np.empty(0, dtype=np.int64)
    q14 = GraphSpec.hypercube(14)
    q12 = GraphSpec.hypercube(12)
    t = GraphSpec.torus(16, 3)
    key = rng.sample_key(11)
    near_pc = rng.threshold(1.0 / 13)

    def census_q12(k):
        return k.census(q12.kernel_params, key, rng.threshold(0.09), empty)

    labels, sizes, ou, ov = _purepy.census(q12.kernel_params, key, rng.threshold(0.09), empty)

    return {
        "explore Q14 p=0.2": lambda k: k.explore(
            q14.kernel_params, key, rng.threshold(0.2), 0, -1, -1, empty, True),
        "batch_trials Q14 x2000": lambda k: k.batch_trials(
            q14.kernel_params, 5, 0, 2000, near_pc, -1, -1, empty),
        "batch_trials T16^3 r<=8 x2000": lambda k: k.batch_trials(
            t.kernel_params, 5, 0, 2000, rng.threshold(0.15), 8, -1, empty),
        "census Q12": census_q12,
        "eccentricities Q12": lambda k: k.eccentricities(q12.V, ou, ov, labels, sizes, 2),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return a is None and b is None or np.array_equal(np.asarray(a), np.asarray(b))
    return a == b


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
        return 1
    print(f"{'case':32s} {'compiled':>11s} {'python':>11s} {'speed-up':>9s}")
    for name, case in _cases().items():
        tc, oc = _time(lambda: case(_kernels), args.repeat)
        tp, op = _time(lambda: case(_purepy), 1)
        flag = "" if _same(oc, op) else "  OUTPUT MISMATCH"
        print(f"{name:32s} {tc * 1e3:9.2f}ms {tp * 1e3:9.2f}ms {tp / tc:8.1f}x{flag}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
