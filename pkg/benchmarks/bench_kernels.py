"""Time the numba and pure-numpy kernel paths on representative sizes.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once before timing so numba compilation is excluded.
Outputs of the two paths are checked for equality before any timing.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from daembed import _kernels as K


def _best(fn, args, repeat):
    fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def cases(rng):
    n_words, n_tok = 2000, 200_000
    ids = rng.integers(-1, n_words, n_tok)
    offsets = np.unique(np.concatenate([[0, n_tok], rng.integers(1, n_tok, 10_000)]))
    yield "cooccurrence", "200k tokens, window 5, |V|=2000", (ids, offsets, 5, n_words)

    B, T, F = 64, 60, 100
    z = rng.random((B, T, F))
    n_valid = rng.integers(1, T + 1, B)
    yield "max_over_time", f"B={B} T={T} F={F}", (z, n_valid)

    _, arg = K.max_over_time_numpy(z, n_valid)
    yield "scatter_max_grad", f"B={B} T={T} F={F}", (rng.random((B, F)), arg, T)

    k, d = 5, 300
    yield "fold_windows", f"B={B} T={T} k={k} d={d}", (rng.random((B, T - k + 1, k, d)), T)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18} {'case':<34} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, label, inputs in cases(rng):
        f_np = getattr(K, f"{name}_numpy")
        f_nb = getattr(K, f"{name}_numba")
        a, b = f_np(*inputs), f_nb(*inputs)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)
        t_np = _best(f_np, inputs, args.repeat)
        t_nb = _best(f_nb, inputs, args.repeat)
        print(f"{name:<18} {label:<34} {1e3 * t_np:>10.2f} {1e3 * t_nb:>10.2f} {t_np / t_nb:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
