"""Compare the two tensor-contraction backends on realistic workloads.

Times Tr(rho * O_1 (x) ... (x) O_n) for the damped multimode states the Bell
evaluations actually use (sparse after loss) and for dense random matrices
(worst case), on both the compiled kernel and the pure-numpy fallback.

Run:  python benchmarks/bench_contraction.py [--repeats 200]
"""

import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from cvbell import _accel
from cvbell.model import StateSpec, density_matrix
from cvbell.oracle import orthogonal_angles, _site_correlator_matrix


def site_matrices(n, r):
    cfg = orthogonal_angles(n, r)
    return np.stack([
        _site_correlator_matrix(0.5, 0.5, cfg.theta[k], cfg.theta_prime[k])
        for k in range(n)
    ])


def bench(fn, rho, mats, repeats):
    fn(rho, mats)  # warm-up (and JIT compile for the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(rho, mats)
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    if not _accel.HAS_NUMBA:
        print("numba not installed: only the numpy path is timed")

    rng = np.random.default_rng(0)
    rows = []
    for n in range(4, 11):
        mats = site_matrices(n, n // 2)
        sparse_rho = np.ascontiguousarray(
            density_matrix(StateSpec(n, n // 2, 0.9, 0.9)).matrix)
        d = 2 ** n
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        dense_rho = np.ascontiguousarray(a + a.conj().T)

        for label, rho in (("damped-state", sparse_rho), ("dense-random", dense_rho)):
            t_np = bench(_accel._contract_numpy, rho, mats, args.repeats)
            if _accel.HAS_NUMBA:
                t_nb = bench(_accel._contract_numba, rho, mats, args.repeats)
                check_np = _accel._contract_numpy(rho, mats)
                check_nb = _accel._contract_numba(rho, mats)
                assert abs(check_np - check_nb) <= 1e-10 * max(1.0, abs(check_np))
                rows.append((n, label, t_np, t_nb, t_np / t_nb))
            else:
                rows.append((n, label, t_np, float("nan"), float("nan")))

    print(f"{'N':>3} {'rho':>14} {'numpy [us]':>12} {'numba [us]':>12} {'speedup':>8}")
    for n, label, t_np, t_nb, speedup in rows:
        print(f"{n:>3} {label:>14} {t_np * 1e6:>12.2f} {t_nb * 1e6:>12.2f} {speedup:>8.2f}")


if __name__ == "__main__":
    main()
