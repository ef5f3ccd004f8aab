"""Benchmark the JIT-compiled kernels against the pure-Python/numpy fallback.

Runs the two hot kernels (simplex game solver, Monte Carlo attack sampling)
on identical inputs through both backends, asserts bit-identical outputs,
and reports wall-clock timings.  Needs numba importable; the env flag
``OST_NUMBA`` is irrelevant here because both variants are built explicitly.

Usage::

    python benchmarks/bench_backends.py [--lp-matrices N] [--attacks N] [--runs N]
"""

import argparse
import time

import numpy as np
from numba import njit

from ost._kernels import _sample_run_means_py, _simplex_game_py

simplex_numba = njit(cache=True)(_simplex_game_py)
sampling_numba = njit(cache=True)(_sample_run_means_py)


def time_call(fn, *args, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_simplex(n_matrices):
    rng = np.random.default_rng(1)
    batch = [rng.uniform(0.5, 400.0, size=(rng.integers(2, 5), rng.integers(2, 4)))
             for _ in range(n_matrices)]
    simplex_numba(batch[0], 1e-12, 10_000)  # compile outside the timer

    def run(kernel):
        out = []
        for m in batch:
            out.append(kernel(m, 1e-12, 10_000))
        return out

    t_py, r_py = time_call(lambda: run(_simplex_game_py))
    t_nb, r_nb = time_call(lambda: run(simplex_numba))
    for a, b in zip(r_py, r_nb):
        assert a[0] == b[0] and a[1] == b[1]
        assert np.array_equal(a[2], b[2]) and np.array_equal(a[3], b[3])
    return t_py, t_nb


def bench_sampling(runs, attacks):
    rng = np.random.default_rng(2)
    values = rng.uniform(-400.0, 0.0, size=(4, 3))
    cum_d = np.cumsum(np.full(4, 0.25))
    cum_a = np.cumsum(np.array([0.5, 0.3, 0.2]))
    cum_d[-1] = cum_a[-1] = 1.0
    u_d = rng.random((runs, attacks))
    u_a = rng.random((runs, attacks))
    sampling_numba(values, cum_d, cum_a, u_d[:1, :8], u_a[:1, :8])  # compile

    t_py, r_py = time_call(_sample_run_means_py, values, cum_d, cum_a, u_d, u_a)
    t_nb, r_nb = time_call(sampling_numba, values, cum_d, cum_a, u_d, u_a)
    assert np.array_equal(r_py, r_nb)
    return t_py, t_nb


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lp-matrices", type=int, default=2000)
    parser.add_argument("--runs", type=int, default=25)
    parser.add_argument("--attacks", type=int, default=200_000)
    args = parser.parse_args()

    print(f"{'kernel':<28}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}")
    t_py, t_nb = bench_simplex(args.lp_matrices)
    print(f"{'simplex x ' + str(args.lp_matrices):<28}{t_py:>12.4f}{t_nb:>12.4f}{t_py / t_nb:>9.1f}x")
    t_py, t_nb = bench_sampling(args.runs, args.attacks)
    label = f"sampling {args.runs}x{args.attacks}"
    print(f"{label:<28}{t_py:>12.4f}{t_nb:>12.4f}{t_py / t_nb:>9.1f}x")
    print("outputs bit-identical across backends")


if __name__ == "__main__":
    main()
