#!/usr/bin/env python3
# Query latency grows linearly with database size: the reason to shrink.
#
# Brute-force cosine scan over growing prefixes of one random corpus, then a
# least-squares fit of mean per-query time against index size.

import numpy as np

from embshrink import EmbeddingSet, timing_curve
from embshrink.evaluate import fit_time_vs_size

rng = np.random.default_rng(0)
n, d = 2**16, 32
corpus = EmbeddingSet(
    rng.normal(size=(n, d)),
    np.arange(n, dtype=np.uint64),
    rng.integers(12, size=n),
    np.full(n, 2),
    [f"class_{i}" for i in range(12)],
)
queries = corpus.take(np.arange(64))

sizes = [2**p for p in range(10, 17)]
points = timing_curve(corpus, sizes, queries, repetitions=3)

print(f"{'index size':>10}{'mean us':>10}{'median us':>11}{'stddev':>9}")
for p in points:
    print(f"{p.size:>10}{p.mean_query_micros:>10.1f}{p.median_query_micros:>11.1f}{p.stddev_micros:>9.2f}")

slope, r2 = fit_time_vs_size(points)
print(f"\nleast-squares: {slope * 1000:.3f} ns per added record, R^2 = {r2:.3f}")
print("halving the database halves the marginal query cost; accuracy is the question.")
