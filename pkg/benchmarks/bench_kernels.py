"""Numba vs numpy timings for the Fock-basis kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are called directly, so SYMPRANK_DISABLE_NUMBA has no effect here.
The first numba call (compilation or cache load) is timed separately.
"""
import argparse
import time

import numpy as np

from symprank import _kernels as kn
from symprank import fock as fk
from symprank import gaussian as gs


def best_of(fn, repeat):
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        ts.append(time.perf_counter() - t0)
    return min(ts), out


def cases(rng):
    b = fk.get_basis(3, 24)
    st = gs.stellar_of_desc(gs.random_gaussian_unitary(3, rng, 0.3, 0.3))
    A, w, f0 = st.A.astype(complex), st.w.astype(complex), complex(st.amplitude_at_zero)
    yield (f"stellar_recursion (3 modes, cutoff 24, D={len(b)})",
           lambda: kn.stellar_recursion_numpy(b.tuples, b.lower, b.layers, A, w, f0),
           lambda: kn._stellar_recursion_nb(b.tuples, b.lower, A, w, f0))

    N = 2_000_000
    psi = rng.normal(size=N) + 1j * rng.normal(size=N)
    src, dst = rng.integers(0, 300, N), rng.integers(0, 5000, N)
    coef = rng.normal(size=300) + 1j * rng.normal(size=300)
    yield (f"heterodyne_accumulate (N={N})",
           lambda: kn.heterodyne_accumulate_numpy(psi, src, dst, coef, 5000),
           lambda: kn._heterodyne_accumulate_nb(psi, src, dst, coef, 5000))

    s = fk.random_state(2, 20, rng)
    a = rng.normal(size=(2000, 2)) + 1j * rng.normal(size=(2000, 2))
    isf = np.exp(-kn._log_sqrt_fact(20))
    yield (f"coherent_overlaps (2 modes, cutoff 20, {len(a)} points)",
           lambda: kn.coherent_overlaps_numpy(s.basis.tuples, s.vec, a, 20),
           lambda: kn._coherent_overlaps_nb(s.basis.tuples, s.vec, a, isf))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not kn.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':55s} {'numpy':>10s} {'numba':>10s} {'first':>10s} {'speedup':>8s}")
    for name, f_np, f_nb in cases(rng):
        t0 = time.perf_counter()
        f_nb()
        first = time.perf_counter() - t0
        t_np, r_np = best_of(f_np, args.repeat)
        t_nb, r_nb = best_of(f_nb, args.repeat)
        err = float(np.max(np.abs(r_np - r_nb)) / max(np.max(np.abs(r_np)), 1e-300))
        if err > 1e-10:
            raise SystemExit(f"{name}: backends disagree (relative error {err:.2e})")
        print(f"{name:55s} {t_np * 1e3:8.2f}ms {t_nb * 1e3:8.2f}ms {first * 1e3:8.1f}ms {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
