"""Time the compiled kernels against their fallbacks on a desk-scale network.

    python benchmarks/bench_kernels.py [--iterations 10] [--edges 1875] [--repeat 5]
"""

import argparse
import time

import numpy as np

from diffsample import _kernels
from diffsample._accel import HAVE_NUMBA
from diffsample.cascade import DiffusionParams, generate_cascade_set
from diffsample.netgen import KRONECKER_INITIATORS, KroneckerParams, gen_kronecker
from diffsample.sampling import LocalView


def best_of(fn, repeat):
    fn()  # warm-up, includes compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iterations", type=int, default=10)
    ap.add_argument("--edges", type=int, default=1875)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    g = gen_kronecker(KroneckerParams(KRONECKER_INITIATORS["random"], args.iterations, args.edges), rng)
    cs, _ = generate_cascade_set(g, DiffusionParams(0.4, 0.4, 0.5), rng)
    ptr, casc, times = cs.node_major()
    weights = np.array(LocalView.from_cascades(g, cs).edge_probs(0.4))
    fires = rng.random(g.m) < 0.4
    wait = rng.exponential(0.4, g.m)
    uniforms = rng.random(20 * g.m)

    def cascades(fn):
        def run():
            for s in range(0, g.n, max(1, g.n // 200)):
                fn(g.indptr, g.dst, s, fires, wait, np.inf)
        return run

    def walk(fn):
        def run():
            state = np.array([0, 0, 0, 1, 1], dtype=np.int64)
            visited = np.zeros(g.n, dtype=np.bool_)
            visited[0] = True
            out = [np.empty(uniforms.size, dtype=np.int64) for _ in range(3)]
            fn(g.indptr, g.dst, weights, True, False, uniforms, state, np.zeros(g.m, dtype=np.bool_),
               visited, np.zeros(g.n, dtype=np.int64), g.m + 1, 0, *out)
        return run

    cases = [
        ("cascade (200 seeds)", cascades(_kernels._cascade_jit), cascades(_kernels._cascade_numpy)),
        ("edge probabilities", lambda: _kernels._edge_prob_jit(g.src, g.dst, ptr, casc, times, 0.4),
         lambda: _kernels._edge_prob_numpy(g.src, g.dst, ptr, casc, times, 0.4)),
        (f"walk ({uniforms.size} steps)", walk(_kernels._walk_jit), walk(_kernels._walk_loop)),
    ]
    print(f"n={g.n} m={g.m} cascades={len(cs)}")
    print(f"{'kernel':<24}{'numba [ms]':>12}{'fallback [ms]':>15}{'speed-up':>10}")
    for name, fast, slow in cases:
        a = best_of(fast, args.repeat) * 1e3
        b = best_of(slow, args.repeat) * 1e3
        print(f"{name:<24}{a:>12.2f}{b:>15.2f}{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
