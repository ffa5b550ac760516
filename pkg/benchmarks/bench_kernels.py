"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 20000] [--repeats 5]

Each row reports the best-of-``repeats`` wall time per call for both backends
and the speedup. Numba compilation happens in a warm-up call and is not timed.
"""

import argparse
import time

import numpy as np

from tkm import kernels
from tkm.featmap import SYNTH_SIGMA, FeatureMapConfig
from tkm.solver import TrainConfig, fit_tkrr


def best_of(fn, repeats):
    fn()
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(n, rng):
    M, R, D = 14, 4, 6
    x = rng.uniform(-1, 1, n)
    freqs, amps = rng.uniform(0, 10, M), rng.uniform(0, 1, M)
    phi, z = rng.standard_normal((n, M)), rng.standard_normal((n, R))
    G, c = rng.standard_normal((n, M * R)), rng.uniform(0.5, 2, n)
    projs, gamma = rng.standard_normal((D, n, R)), rng.standard_normal(R)
    feats = rng.standard_normal((D, min(n, 2000), M))
    fm = FeatureMapConfig(M=M, U=1.75, sigma=SYNTH_SIGMA, D=2)
    X = rng.uniform(-1, 1, (n, 2))
    y = np.where(X[:, 0] * X[:, 1] > 0, 1.0, -1.0)
    cfg = TrainConfig(rank=R, n_max=10, loss_trace=False)
    return {
        "sinusoid_features": lambda: kernels.sinusoid_features(x, freqs, amps, 1.75),
        "row_khatri_rao": lambda: kernels.row_khatri_rao(phi, z),
        "weighted_gram": lambda: kernels.weighted_gram(G, c),
        "cp_scores": lambda: kernels.cp_scores(projs, gamma),
        "product_gram": lambda: kernels.product_gram(feats),
        "fit_tkrr (10 updates)": lambda: fit_tkrr(X, y, cfg, fm),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="number of samples")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    backends = kernels.available_backends()
    if "numba" not in backends:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    timings = {}
    for name in backends:
        prev = kernels.set_backend(name)
        try:
            for case, fn in cases(args.n, rng).items():
                timings.setdefault(case, {})[name] = best_of(fn, args.repeats)
        finally:
            kernels.set_backend(prev)

    print(f"N={args.n}, best of {args.repeats}")
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for case, t in timings.items():
        print(f"{case:<24}{1e3 * t['numpy']:>12.3f}{1e3 * t['numba']:>12.3f}"
              f"{t['numpy'] / t['numba']:>9.1f}x")


if __name__ == "__main__":
    main()
