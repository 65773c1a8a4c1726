"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py --n 65536 --repeat 5
"""

import argparse
import time

import numpy as np

from blochsep import kernels, measures, stats
from blochsep.harness.runner import BLOCK


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, seed):
    rng = np.random.default_rng(seed)
    a = np.ascontiguousarray(measures.ginibre(4, 4, False, rng, size=n))
    z = np.ascontiguousarray(measures.ginibre(4, 4, False, rng, size=n))
    rho = measures.sample_batch(measures.MeasureSpec.parse("hs"), rng, n)

    def accumulate(mod):
        r_a, r_b, det_rho, det_pt, mzz, pd = mod.analyze(rho)
        cls = mod.classify_codes(det_rho, det_pt)
        grids = [np.zeros((100, 100), np.int64) for _ in range(3)]
        curves = [np.zeros((100, 2), np.int64) for _ in range(2)]
        mod.accumulate(*grids, *curves, r_a, r_b, cls, mzz, pd, stats.PD_MAX)

    return {
        "gram_density": lambda mod: mod.gram_density(a),
        "haar_unitary": lambda mod: mod.haar_unitary(z),
        "bures_density": lambda mod: mod.bures_density(a, z),
        "analyze": lambda mod: mod.analyze(rho),
        "analyze+accumulate": accumulate,
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=BLOCK, help="states per call (default: one sampling block)")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    backends = kernels.available_backends()
    names = sorted(backends)
    print(f"n={args.n} repeat={args.repeat} default backend={kernels.BACKEND}")
    print(f"{'kernel':<20}" + "".join(f"{b + ' [ms]':>16}" for b in names) + f"{'speedup':>10}")
    for kernel, fn in cases(args.n, args.seed).items():
        ms = {b: 1e3 * best_of(lambda: fn(backends[b]), args.repeat) for b in names}
        speedup = ms["python"] / ms["compiled"] if "compiled" in ms else float("nan")
        print(f"{kernel:<20}" + "".join(f"{ms[b]:>16.2f}" for b in names) + f"{speedup:>10.2f}")


if __name__ == "__main__":
    main()
