"""Compiled kernels vs their numpy twins.

    python benchmarks/bench_accel.py [--runs 100] [--T 10000] [--repeat 3]

Each kernel is called once to compile (not timed), then timed ``--repeat``
times per backend; the best time is reported together with the largest
disagreement between the two backends.  With ``ARTIFACT_DISABLE_NUMBA=1`` the
"numba" column runs the same loops as plain Python.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from artifact import bandit
from artifact._accel import use_numba
from artifact.parameter_free import kt_log_wealth, shifted_log_wealth


def best_time(fn, repeat: int):
    out, best = None, float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def cases(runs: int, T: int):
    rng = np.random.default_rng(0)
    bern = [bandit.Bernoulli(p) for p in [0.5] + [0.6] * 9]
    gauss = [bandit.Gaussian(m, 1.0) for m in (0.0, 0.2, 0.5)]
    tb = bandit.draw_tables(rng, runs, T, bern)
    tg = bandit.draw_tables(rng, runs, T, gauss)
    coins = np.clip(rng.uniform(-1, 1, (runs * 10, 1024)) + 0.3 * rng.standard_normal((runs * 10, 1024)), -1, 1)
    eta = float(np.sqrt(2 * np.log(10) / (10 * T)))
    m = bandit.etc_m(T, 0.2)
    return {
        "exp3": lambda a: bandit.simulate_exp3(bern, tb, eta, accel=a).losses,
        "tsallis_inf": lambda a: bandit.simulate_tsallis(bern, tb, 1.0 / np.sqrt(T), accel=a).losses,
        "ucb": lambda a: bandit.simulate_ucb(gauss, tg, 3.0, accel=a).losses,
        "etc": lambda a: bandit.simulate_etc(gauss[:2], tg, m, accel=a).losses,
        "kt_log_wealth": lambda a: kt_log_wealth(coins, accel=a),
        "shifted_log_wealth": lambda a: shifted_log_wealth(coins, accel=a),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--T", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"numba active: {use_numba()}  runs={args.runs}  T={args.T}")
    print(f"{'kernel':20s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'identical':>10s} {'max |diff|':>11s}")
    for name, fn in cases(args.runs, args.T).items():
        fn(True)  # compile
        t_fast, a = best_time(lambda: fn(True), args.repeat)
        t_np, b = best_time(lambda: fn(False), args.repeat)
        a, b = np.asarray(a, float), np.asarray(b, float)
        same = float(np.mean(a == b))
        diff = float(np.max(np.abs(a - b)))
        print(f"{name:20s} {t_fast:10.4f} {t_np:10.4f} {t_np / t_fast:8.2f} {same:10.2%} {diff:11.2e}")


if __name__ == "__main__":
    main()
