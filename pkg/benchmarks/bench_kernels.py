"""Benchmark the compiled kernels against the pure-Python/numpy fallback.

Usage: python benchmarks/bench_kernels.py [--texts 2000] [--entries 5000] [--dims 256]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from ontorag._kernels import fallback

try:
    from ontorag._kernels import _ckern
except ImportError:
    _ckern = None


def make_texts(count: int, seed: int = 7) -> list[str]:
    rng = random.Random(seed)
    words = [f"w{i}" for i in range(400)]
    return [
        " " + " ".join(rng.choice(words) for _ in range(rng.randint(10, 60))) + " "
        for _ in range(count)
    ]


def time_call(fn, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_trigram(texts: list[str], dims: int) -> dict[str, float]:
    results = {}
    results["fallback"] = time_call(
        lambda: [fallback.trigram_bucket_counts(t, dims) for t in texts]
    )
    if _ckern is not None:
        results["compiled"] = time_call(
            lambda: [_ckern.trigram_bucket_counts(t, dims) for t in texts]
        )
    return results


def bench_scores(entries: int, dims: int, queries: int = 200) -> dict[str, float]:
    rng = np.random.default_rng(11)
    mat = rng.random((entries, dims))
    qs = rng.random((queries, dims))
    results = {}
    results["fallback"] = time_call(lambda: [fallback.rowwise_dot(mat, q) for q in qs])
    if _ckern is not None:
        results["compiled"] = time_call(lambda: [_ckern.rowwise_dot(mat, q) for q in qs])
    return results


def report(label: str, results: dict[str, float], unit_count: int) -> None:
    print(f"\n{label}")
    for backend, seconds in results.items():
        rate = unit_count / seconds
        print(f"  {backend:9s} {seconds * 1e3:9.2f} ms   ({rate:,.0f}/s)")
    if "compiled" in results and "fallback" in results:
        print(f"  speedup   {results['fallback'] / results['compiled']:9.1f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--texts", type=int, default=2000)
    parser.add_argument("--entries", type=int, default=5000)
    parser.add_argument("--dims", type=int, default=256)
    args = parser.parse_args()

    if _ckern is None:
        print("compiled kernel unavailable; benchmarking fallback only")

    texts = make_texts(args.texts)
    report(
        f"trigram hashing ({args.texts} texts, {args.dims} buckets)",
        bench_trigram(texts, args.dims),
        args.texts,
    )
    report(
        f"row-wise scores ({args.entries} entries x {args.dims} dims, 200 queries)",
        bench_scores(args.entries, args.dims),
        200,
    )

    # agreement spot-check
    sample = texts[:50]
    for text in sample:
        a = fallback.trigram_bucket_counts(text, args.dims)
        if _ckern is not None:
            b = _ckern.trigram_bucket_counts(text, args.dims)
            assert np.array_equal(a, b), "backend disagreement on trigram counts"
    print("\nbackend agreement: OK (bitwise on trigram counts)")


if __name__ == "__main__":
    main()
