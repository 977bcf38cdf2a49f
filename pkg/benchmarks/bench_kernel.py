"""Compare the compiled and pure-Python iteration kernels.

    python3 benchmarks/bench_kernel.py [--nodes 50] [--starts 200] [--repeat 3]
"""

import argparse
import random
import time

import numpy as np

from narrative import kernel
from narrative.mapping import AveragingSystem
from narrative.means import PowerMean, WeightedArithmetic


def ring_system(p: int, seed: int) -> AveragingSystem:
    """Ergodic system: every node reads itself, its ring neighbour and one random node."""
    rng = random.Random(seed)
    means, alpha = [], []
    for i in range(p):
        a = (i, (i - 1) % p, rng.randrange(p))
        alpha.append(a)
        if i % 3 == 0:
            means.append(WeightedArithmetic((0.5, 0.3, 0.2)))
        else:
            means.append(PowerMean(rng.choice([-1.0, 0.0, 2.0]), 3))
    return AveragingSystem(tuple(means), tuple(alpha))


def bench(backend, sys_, starts, tol, max_iter, repeat):
    c = sys_.compiled
    tols = np.full(len(starts), tol)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        status, steps, final = backend.run_batch(c.kind, c.param, c.ptr, c.idx, c.weight,
                                                 starts.copy(), tols, max_iter)
        best = min(best, time.perf_counter() - t0)
    return best, status, steps, final


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=50)
    ap.add_argument("--starts", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    sys_ = ring_system(args.nodes, 0)
    starts = np.random.default_rng(0).uniform(0.1, 10.0, (args.starts, args.nodes))
    py = kernel.load_backend("python")
    try:
        cy = kernel.load_backend("cython")
    except ImportError:
        print("compiled kernel not built; only the fallback is available")
        cy = None
    t_py, s_py, n_py, x_py = bench(py, sys_, starts, 1e-12, 10**5, args.repeat)
    steps = int(n_py.sum())
    print(f"system: {args.nodes} nodes, {args.starts} starts, {steps} total steps")
    print(f"python  {t_py * 1e3:9.1f} ms  {steps / t_py:12.0f} steps/s")
    if cy is not None:
        t_cy, s_cy, n_cy, x_cy = bench(cy, sys_, starts, 1e-12, 10**5, args.repeat)
        print(f"cython  {t_cy * 1e3:9.1f} ms  {int(n_cy.sum()) / t_cy:12.0f} steps/s")
        print(f"speedup {t_py / t_cy:9.1f}x")
        agree = np.array_equal(s_py, s_cy) and np.allclose(x_py, x_cy, rtol=1e-10, atol=1e-12)
        print(f"backends agree: {agree}")


if __name__ == "__main__":
    main()
