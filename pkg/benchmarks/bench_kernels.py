"""Compare the compiled and pure-Python event loops.

Runs the same uniform block through both backends for each native profile,
reports nanoseconds per event and checks that the outputs are bit-identical.

    python3 benchmarks/bench_kernels.py --events 200000
"""
import argparse
import time

import numpy as np

from hlcompete import kernel
from hlcompete.profiles import builtin_profile


def run_block(profile, c, u, backend):
    n = len(u) // 2
    ev_t, ev_x = np.empty(n), np.empty(n)
    start = time.perf_counter()
    x, t, _, m, status = kernel.run_events(
        profile, u, 1.0, 0.0, np.inf, c, profile.r(c), 1e-12, ev_t, ev_x, backend=backend
    )
    elapsed = time.perf_counter() - start
    return elapsed, m, ev_t[:m].copy(), ev_x[:m].copy()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=200_000)
    ap.add_argument("--c", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    if not kernel.compiled_available():
        print("compiled kernel not built; only the Python loop is available")
    u = np.random.default_rng(args.seed).random(2 * args.events)
    print(f"{'profile':<18}{'events':>9}{'python ns/ev':>15}{'cython ns/ev':>15}{'speedup':>10}  identical")
    for name in ("hl0", "section4", "ode-fixed-point"):
        profile = builtin_profile(name)
        tp, mp, tt_p, xx_p = run_block(profile, args.c, u, "python")
        if kernel.compiled_available():
            tc, mc, tt_c, xx_c = run_block(profile, args.c, u, "cython")
            same = mp == mc and np.array_equal(tt_p, tt_c) and np.array_equal(xx_p, xx_c)
            print(f"{name:<18}{mp:>9}{1e9 * tp / mp:>15.1f}{1e9 * tc / mc:>15.1f}{tp / tc:>10.1f}  {same}")
        else:
            print(f"{name:<18}{mp:>9}{1e9 * tp / mp:>15.1f}{'-':>15}{'-':>10}  -")


if __name__ == "__main__":
    main()
