"""Time the numba and numpy forms of each hot kernel on the same inputs.

    python benchmarks/bench_backends.py [--repeats 7]
"""
import argparse
import statistics
import time

import numpy as np

from locsketch._kernels import KERNELS
from locsketch.measures import uniform_allocation
from locsketch.rng import RandomSource
from locsketch.sketch import build_block_diagonal


def _median_time(fn, args, repeats):
    fn(*args)  # compile / warm caches
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cases(gen):
    for n, j, m in [(2**14, 2**6, 600), (2**16, 2**8, 1400), (2**16, 2**8, 3000)]:
        rows = tuple([n // j] * j)
        s = build_block_diagonal(uniform_allocation(m, j), rows, RandomSource(1))
        x = gen.standard_normal((n, 40))
        yield f"block_apply N={n} J={j} M={m}", "block_apply", (*s.payload, x)
    for d in (50, 200, 500):
        a = gen.standard_normal((2 * d, d))
        yield f"cholesky d={d}", "cholesky", (a.T @ a + np.eye(d),)
    for m, d in [(2050, 50), (1200, 20), (4000, 100)]:
        yield f"householder_qr {m}x{d}", "householder_qr", (gen.standard_normal((m, d)),)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()
    gen = np.random.default_rng(0)
    print(f"{'case':<36}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for label, name, inputs in cases(gen):
        t_nb = _median_time(KERNELS["numba"][name], inputs, args.repeats)
        t_np = _median_time(KERNELS["numpy"][name], inputs, args.repeats)
        print(f"{label:<36}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
