"""Timing comparison of the numba and pure-numpy kernel backends.

Run:  python3 benchmarks/bench_kernels.py [--repeats 5]

Both backends are always importable regardless of the RANKMIX_NO_NUMBA flag,
so this script times them side by side on representative problem shapes and
checks they agree numerically on each workload before trusting the numbers.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rankmix import _kernels as K


def time_call(fn, *args, repeats: int) -> float:
    fn(*args)  # warm-up: triggers JIT compilation on the numba side
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(rng: np.random.Generator):
    n_samples, n_modes, dim, k = 100, 3, 13, 6

    weights = rng.normal(size=(n_samples, n_modes, dim))
    mixing = rng.dirichlet(np.ones(n_modes), size=n_samples)
    log_mix = K.log_mixing(mixing)
    feats = rng.normal(size=(k, dim))

    yield ("ranking_loglik_many (100 samples, K=6, M=3, d=13)",
           K.ranking_loglik_many_nb, K.ranking_loglik_many_np,
           (weights, log_mix, feats))

    n_obs = 15
    flat = rng.normal(size=(n_obs * k, dim))
    offsets = np.arange(n_obs + 1, dtype=np.int64) * k
    w1 = weights[0]
    lm1 = log_mix[0]
    yield ("dataset_loglik (15 observations of K=6)",
           K.dataset_loglik_nb, K.dataset_loglik_np,
           (w1, lm1, flat, offsets))

    iters = 200
    noise_w = rng.normal(size=(iters, n_modes, dim)) * 0.15
    noise_z = rng.normal(size=(iters, n_modes)) * 0.15
    log_u = np.log(rng.random(iters))
    w0 = rng.normal(size=(n_modes, dim))
    a0 = np.full(n_modes, 1.0 / n_modes)
    yield ("mh_chain (200 iterations, 15 observations)",
           K.mh_chain_nb, K.mh_chain_np,
           (w0, a0, flat, offsets, noise_w, noise_z, log_u, True))

    u = K.derived_uniforms(7, 99, n_samples * k).reshape(n_samples, k)
    yield ("ig_loss (100 samples, K=6)",
           K.ig_loss_nb, K.ig_loss_np, (feats, weights, log_mix, mixing, u))

    yield ("vr_objective (100 samples, K=6)",
           K.vr_objective_nb, K.vr_objective_np,
           (feats, weights, log_mix, mixing, u))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not K.HAVE_NUMBA:
        print("numba is not importable; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    header = f"{'kernel':<50} {'numba':>10} {'numpy':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, fn_nb, fn_np, call_args in workloads(rng):
        got_nb = fn_nb(*call_args)
        got_np = fn_np(*call_args)
        if not isinstance(got_nb, tuple):
            got_nb, got_np = (got_nb,), (got_np,)
        if not all(np.allclose(a, b, rtol=1e-10, atol=1e-12)
                   for a, b in zip(got_nb, got_np)):
            print(f"{name:<50} BACKEND MISMATCH")
            continue
        t_nb = time_call(fn_nb, *call_args, repeats=args.repeats)
        t_np = time_call(fn_np, *call_args, repeats=args.repeats)
        print(f"{name:<50} {t_nb * 1e3:>8.3f}ms {t_np * 1e3:>8.3f}ms "
              f"{t_np / t_nb:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
