"""Compiled vs pure-Python classification kernel.

    python3 benchmarks/bench_kernel.py [--repeat 3]

Times on-the-fly synthesis with a fixed expansion order (BFS, or a seeded
random order under an expansion budget) so both kernels see the same
sequence, and checks they agree. Random orders build large undecided regions,
which is where the incremental classification cost shows.
"""

import argparse
import statistics
import sys
import time

from otfsynth import kernel
from otfsynth.domains import generate_instance
from otfsynth.engine import run_synthesis

CASES = [  # domain, n, k, policy, budget
    ("TransferLine", 3, 3, "bfs", None),
    ("DiningPhilosophers", 3, 2, "bfs", None),
    ("CraftedGate", 4, 3, "bfs", None),
    ("DiningPhilosophers", 3, 2, "random", None),
    ("TransferLine", 4, 4, "random", 1000),
    ("TransferLine", 4, 4, "random", 3000),
]


def bench(p, kernel_cls, policy, budget, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        r = run_synthesis(p, policy, budget=budget, kernel_cls=kernel_cls, with_controller=False)
        times.append(time.perf_counter() - t0)
    return r, statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernel.CClassifier is None:
        print("compiled kernel not built; only the Python kernel is available", file=sys.stderr)
        return 1
    print(f"{'instance':24s} {'order':7s} {'expanded':>8s} {'python s':>9s} {'cython s':>9s} {'speedup':>8s}")
    for dom, n, k, policy, budget in CASES:
        p = generate_instance(dom, n, k)
        rp, tp = bench(p, kernel.PyClassifier, policy, budget, args.repeat)
        rc, tc = bench(p, kernel.CClassifier, policy, budget, args.repeat)
        if (rp.verdict, rp.expanded) != (rc.verdict, rc.expanded):
            print(f"{p.name}: kernels disagree ({rp.verdict}/{rp.expanded} vs {rc.verdict}/{rc.expanded})")
            return 2
        print(f"{p.name:24s} {policy:7s} {rp.expanded:8d} {tp:9.3f} {tc:9.3f} {tp / tc:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
