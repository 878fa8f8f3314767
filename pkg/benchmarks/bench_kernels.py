"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times ``kernel_sums`` on ladder sizes typical of operator evaluation and
checks that both backends agree, then times one full operator evaluation
per backend in a subprocess (the backend is fixed at import).
"""
import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from pqlab import _kernels_py
from pqlab.calculus import PqPair, log_pq_factorials
from pqlab.operators import log_kernel_normalizer

try:
    from pqlab import _kernels as _compiled
except ImportError:
    _compiled = None

CASES = [
    # n, kmax, p, q, nodes
    (8, 40, 0.9375, 0.875, 513),
    (16, 80, 0.96875, 0.9375, 1025),
    (64, 250, 0.9921875, 0.984375, 2049),
]

_OPERATOR_SNIPPET = """
import time
from pqlab.calculus import PqPair
from pqlab.operators import OperatorConfig, operator_apply_many
import numpy as np
cfg = OperatorConfig(32, PqPair(0.984375, 0.96875))
xs = np.linspace(0, 10, 401)
operator_apply_many(lambda t: t * t, xs, cfg)
t0 = time.perf_counter()
for _ in range({repeat}):
    operator_apply_many(lambda t: t * t, xs, cfg)
print((time.perf_counter() - t0) / {repeat})
"""


def make_inputs(n, kmax, p, q, nodes):
    half = nodes // 2
    t = (q / p) ** np.arange(half, -half - 1, -1, dtype=float) / p
    values = np.broadcast_to((t * t)[None, :], (kmax + 1, t.size))
    pq = PqPair(p, q)
    k = np.arange(kmax + 1)
    lf = log_pq_factorials(n + kmax, pq)
    log_coef = math.log(p - q) + lf[n - 1 + k] - lf[k] - lf[n - 1] + log_kernel_normalizer(n, k, pq)
    return n, kmax, p, q, t, values, log_coef, 3


def operator_time(pure, repeat):
    env = dict(os.environ)
    env.pop("PQLAB_PURE", None)
    if pure:
        env["PQLAB_PURE"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", _OPERATOR_SNIPPET.format(repeat=repeat)], env=env, capture_output=True, text=True
    )
    return float(out.stdout) if out.returncode == 0 else float("nan")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _compiled is None:
        print("compiled backend not built; only the numpy timings are shown")
    print(f"{'n':>4} {'kmax':>5} {'nodes':>6} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8} {'max rel diff':>13}")
    for case in CASES:
        inputs = make_inputs(*case)
        py_t = min(timeit.repeat(lambda: _kernels_py.kernel_sums(*inputs), number=1, repeat=args.repeat))
        ref = _kernels_py.kernel_sums(*inputs)[0]
        if _compiled is not None:
            cy_t = min(timeit.repeat(lambda: _compiled.kernel_sums(*inputs), number=1, repeat=args.repeat))
            got = np.asarray(_compiled.kernel_sums(*inputs)[0])
            diff = float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300)))
            print(f"{case[0]:>4} {case[1]:>5} {case[4]:>6} {py_t * 1e3:>10.2f} {cy_t * 1e3:>10.2f} "
                  f"{py_t / cy_t:>8.1f} {diff:>13.2e}")
        else:
            print(f"{case[0]:>4} {case[1]:>5} {case[4]:>6} {py_t * 1e3:>10.2f} {'-':>10} {'-':>8} {'-':>13}")
    print()
    print("operator_apply_many(t^2, 401 points, n=32), seconds per call:")
    print(f"  numpy  {operator_time(True, args.repeat):.4f}")
    if _compiled is not None:
        print(f"  cython {operator_time(False, args.repeat):.4f}")


if __name__ == "__main__":
    main()
