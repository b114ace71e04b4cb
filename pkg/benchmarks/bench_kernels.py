"""Time the numba kernels against their pure-numpy counterparts.

    python3 benchmarks/bench_kernels.py [--repeat 5]

With numba unavailable (or SECSCORE_DISABLE_NUMBA=1) only the numpy
column is reported.
"""

import argparse
import timeit

import numpy as np

from secscore import _accel, kernels


def cases(rng):
    t = rng.uniform(-200, 200, 1_000_000)
    x = rng.laplace(0.0, 20.0, 1_000_000)
    n = 2000
    scores = np.round(rng.uniform(5, 9, n), 2)
    days = rng.integers(0, 700, n).astype(np.int64)
    active = rng.random(n) < 0.8
    yield "al_cdf (1e6 points)", kernels._al_cdf_np, kernels._al_cdf_loop, (t, -0.3, 0.046, 0.9)
    yield "al_loglik (1e6 samples)", kernels._al_loglik_np, kernels._al_loglik_loop, (x, -0.3, 0.046, 0.9)
    yield "concordance (2000 items)", kernels._concordance_np, kernels._concordance_loop, (scores, days, active)


def best_of(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    opts = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"backend: {_accel.backend_name()}")
    print(f"{'kernel':<26}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}")
    for name, np_fn, jit_fn, args in cases(rng):
        t_np = best_of(np_fn, args, opts.repeat) * 1e3
        if _accel.HAVE_NUMBA:
            jit_fn(*args)  # compile outside the timed region
            t_jit = best_of(jit_fn, args, opts.repeat) * 1e3
            print(f"{name:<26}{t_np:>12.2f}{t_jit:>12.2f}{t_np / t_jit:>8.1f}x")
        else:
            print(f"{name:<26}{t_np:>12.2f}{'n/a':>12}{'':>9}")


if __name__ == "__main__":
    main()
