"""Time the numba kernels against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py --batch 2000 --repeat 3
"""
import argparse
import time

import numpy as np

from conetree import kernels
from conetree.recursion import default_seed


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(batch, levels, rng):
    M = np.array([[2.0, 1.0], [1.0, 1.0]])
    z = rng.uniform(-3.5, 3.5, batch) + 1j * 10 ** rng.uniform(-4, -1, batch)
    zeta = np.ascontiguousarray(np.repeat(z[:, None], 2, axis=1))
    g0 = np.ascontiguousarray(np.broadcast_to(default_seed(M), zeta.shape))
    zetas = np.ascontiguousarray(np.repeat(zeta[:, None, :], levels, axis=1))
    return {
        "picard": lambda k: k.picard(zeta, M, g0, 1e-12, 2000),
        "newton": lambda k: k.newton(zeta, M, g0, 50),
        "compose": lambda k: k.compose(zetas, M, g0),
        "dirichlet_table": lambda k: k.dirichlet_table(z, M, levels),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--batch", type=int, default=2000, help="independent rows per call")
    p.add_argument("--levels", type=int, default=1000, help="depth for compose / dirichlet_table")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    work = cases(args.batch, args.levels, rng)
    backends = kernels.available_backends()
    for name in backends:       # compile outside the timed region
        impl = kernels.get_backend(name)
        for fn in cases(4, 4, np.random.default_rng(1)).values():
            fn(impl)

    print(f"batch={args.batch} levels={args.levels} best of {args.repeat}")
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for kernel, fn in work.items():
        times = {b: _best(lambda: fn(kernels.get_backend(b)), args.repeat) for b in backends}
        speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        print(f"{kernel:<16}" + "".join(f"{times[b]:>11.4f}s" for b in backends) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
