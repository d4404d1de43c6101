"""Compare the numba kernels against the numpy / plain-Python fallback.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``SORTNET_NO_NUMBA``.  Usage::

    python bench/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from sortnet import _accel, cdcl, figures, kernels
from sortnet.encodings import ProblemSpec, build
from sortnet.network import certify

repeat = int(sys.argv[1])
rng = np.random.default_rng(7)

def best(fn):
    fn()  # warm-up (includes JIT compilation)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)

rows = []
for n in (12, 16, 20):
    pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)])
    lo, hi = pairs[rng.integers(0, len(pairs), 64)].T
    rows.append({"task": f"eval_all n={n} (64 comparators)",
                 "seconds": best(lambda: kernels.eval_all(n, lo, hi))})
fig = figures.load("halver_18")
rows.append({"task": "certify 1/4-halver n=18", "seconds": best(lambda: certify(fig.network, fig.cls, fig.eps))})
for spec in (ProblemSpec(4, "sorting", "size", 4, "sfwd"), ProblemSpec(4, "sorting", "depth", 2, "dfwd")):
    f = build(spec)
    flat, lens = f.csr()
    rows.append({"task": f"cdcl {spec.encoding} n={spec.n} bound={spec.bound} ({f.num_clauses} clauses)",
                 "seconds": best(lambda: cdcl.solve_csr(f.num_vars, flat, lens))})
print(json.dumps({"numba": _accel.USE_NUMBA, "rows": rows}))
"""


def run_backend(no_numba: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if no_numba:
        env["SORTNET_NO_NUMBA"] = "1"
    else:
        env.pop("SORTNET_NO_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    t0 = time.perf_counter()
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    print("| task | numba (s) | fallback (s) | speedup |")
    print("|---|---|---|---|")
    for a, b in zip(fast["rows"], slow["rows"]):
        print(f"| {a['task']} | {a['seconds']:.4f} | {b['seconds']:.4f} | {b['seconds'] / max(a['seconds'], 1e-9):.1f}x |")
    print(f"\nnumba active: {fast['numba']}; fallback active: {not slow['numba']}; "
          f"total {time.perf_counter() - t0:.1f}s", file=sys.stderr)


if __name__ == "__main__":
    main()
