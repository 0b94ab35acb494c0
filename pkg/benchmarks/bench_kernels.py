"""Time each hot kernel under the numba and the pure-numpy backend.

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]

Numba timings exclude the first (compiling) call. Results are checked for
agreement before timing is reported.
"""

import argparse
import math
import time

import numpy as np

from dkho import kernels
from dkho.fockspace import coherent_state, floquet


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(quick):
    theta = math.pi / 3
    amp = 2 * math.sqrt(2) * 0.2 / math.pi
    rng = np.random.default_rng(0)
    n_orb = 2000 if quick else 11000
    ics = np.array([1.0, 0.0]) + 1e-3 * rng.uniform(-1, 1, size=(64, 2))
    bounds = ((-2.5, 2.5), (-2.5, 2.5))
    betas = (rng.normal(size=4096) + 1j * rng.normal(size=4096)) * 3
    dim = 200 if quick else 400
    F1, F2 = floquet(0.2, 0.5, theta, dim), floquet(0.225, 0.5, theta, dim)
    psi = coherent_state(math.pi, dim)
    n_ev = 200 if quick else 1000
    top = dim - dim // 10
    return {
        f"orbits 64 x {n_orb}": lambda b: kernels.orbits(ics, amp, 2 * math.pi, theta, n_orb, backend=b),
        f"web_histogram 64 x {n_orb}, 256^2": lambda b: kernels.web_histogram(
            ics, amp, 2 * math.pi, theta, n_orb, bounds, (256, 256), backend=b),
        f"coherent_amplitudes 4096 x {dim}": lambda b: kernels.coherent_amplitudes(betas, dim, backend=b),
        f"evolve_pair N={dim}, {n_ev} kicks": lambda b: kernels.evolve_pair(
            F1.matrix, F2.matrix, psi, n_ev, top, backend=b)[0],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()
    if not kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<40} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8}")
    for name, fn in cases(args.quick).items():
        fn("numba")  # compile
        t_np, a = best_of(lambda: fn("numpy"), args.repeat)
        t_nb, b = best_of(lambda: fn("numba"), args.repeat)
        if not np.allclose(a, b, rtol=0, atol=1e-9):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<40} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
