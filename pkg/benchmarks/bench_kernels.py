#!/usr/bin/env python3
"""Time the hot kernels with numba acceleration on vs the pure-Python fallback.

Runs itself twice: once as-is (numba) and once re-executed with
GENTNOW_DISABLE_NUMBA=1 (fallback), then prints a side-by-side table. The two
modes produce bit-identical numbers (see tests/test_accel.py); this script
only measures the speed gap.

Usage: python benchmarks/bench_kernels.py [--scale N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def build_inputs(scale):
    rng = np.random.default_rng(0)
    vocab_a = [f"a{i}" for i in range(30)]
    vocab_b = [f"b{i}" for i in range(30)]
    docs = [
        [(vocab_a if i % 2 == 0 else vocab_b)[rng.integers(30)] for _ in range(20)]
        for i in range(40 * scale)
    ]
    X = rng.normal(size=(60 * scale, 10))
    y = X[:, 0] * 2 + rng.normal(size=X.shape[0])
    return docs, X, y


def run_benchmarks(scale):
    from gentnow import embeddings, models, topics
    from gentnow.accel import JIT_ENABLED

    docs, X, y = build_inputs(scale)
    results = {"jit_enabled": JIT_ENABLED}

    # warm-up triggers compilation so timings measure steady state
    topics.fit_lda(docs[:10], 2, iterations=3, burn_in=1, min_count=1, seed=0)
    t0 = time.perf_counter()
    topics.fit_lda(docs, 3, alpha=0.1, iterations=150, burn_in=50, min_count=1, seed=1)
    results["lda_gibbs_s"] = time.perf_counter() - t0

    embeddings.fit_embeddings(docs[:10], dim=8, epochs=1, min_count=1, seed=0)
    t0 = time.perf_counter()
    embeddings.fit_embeddings(docs, dim=25, epochs=10, min_count=1, seed=1)
    results["pvdbow_train_s"] = time.perf_counter() - t0

    models.rf_fit(X[:20], y[:20], n_trees=2, seed=0)
    t0 = time.perf_counter()
    forest = models.rf_fit(X, y, n_trees=50, seed=1)
    models.rf_predict(forest, X)
    results["rf_fit_predict_s"] = time.perf_counter() - t0

    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=int, default=1,
                        help="input size multiplier (default 1)")
    parser.add_argument("--emit-json", action="store_true",
                        help="print raw results as JSON (used by the re-exec)")
    args = parser.parse_args()

    if args.emit_json:
        print(json.dumps(run_benchmarks(args.scale)))
        return

    here = run_benchmarks(args.scale)
    env = dict(os.environ)
    env["GENTNOW_DISABLE_NUMBA"] = "1" if here["jit_enabled"] else "0"
    other = json.loads(subprocess.run(
        [sys.executable, __file__, "--scale", str(args.scale), "--emit-json"],
        env=env, capture_output=True, text=True, check=True,
    ).stdout)

    jit, plain = (here, other) if here["jit_enabled"] else (other, here)
    print(f"{'kernel':<22} {'numba':>10} {'fallback':>10} {'speedup':>9}")
    for key, label in (("lda_gibbs_s", "lda collapsed gibbs"),
                       ("pvdbow_train_s", "pv-dbow training"),
                       ("rf_fit_predict_s", "random forest")):
        ratio = plain[key] / jit[key] if jit[key] > 0 else float("inf")
        print(f"{label:<22} {jit[key]:>9.3f}s {plain[key]:>9.3f}s {ratio:>8.1f}x")


if __name__ == "__main__":
    main()
