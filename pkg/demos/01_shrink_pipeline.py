#!/usr/bin/env python3
# End-to-end database shrinking on noisy synthetic data.
#
# Generates a labeled embedding corpus where 20% of the records are "noise"
# (kept label, vector re-drawn inside another class's region), then compares
# three databases against the same untouched test queries:
#   1. the full training set,
#   2. a uniform sample matched in size to (3),
#   3. consistency-filtered density clustering with medoid representatives.

import numpy as np

from embshrink import (
    FilterParams,
    SyntheticConfig,
    build_index,
    evaluate_topk,
    filter_by_threshold,
    generate_synthetic,
    homogeneity_scores,
    select_clustered,
    select_uniform,
    split_per_class,
)

config = SyntheticConfig(
    class_count=30,
    views_per_class=4,
    points_per_view=25,
    dimension=64,
    view_spread=0.1,
    class_spread=1.0,
    noise_fraction=0.2,
    seed=7,
)
dataset = generate_synthetic(config)
train, test = split_per_class(dataset, test_fraction=0.2, seed=1)
print(f"corpus: {len(train)} train / {len(test)} test, d={train.dimension}")

# full database baseline
full_report = evaluate_topk(build_index(train), test, ks=(1, 5, 20))

# consistency scoring: low score = surrounded by other classes
table = homogeneity_scores(train, n_neighbors=10)
scores = table.aligned_to(train)
print(f"homogeneity: mean={scores.mean():.3f}, below 0.5: {(scores < 0.5).sum()} records")

filtered = filter_by_threshold(train, table, FilterParams(n_neighbors=10, threshold=0.5))
subset = select_clustered(filtered, "density", "medoid", min_cluster_size=3)
cs_report = evaluate_topk(build_index(subset), test, ks=(1, 5, 20))

# uniform sample at the same database size
matched = select_uniform(train, len(subset) / len(train), balanced=False, seed=2)
uniform_report = evaluate_topk(build_index(matched.to_embedding_set()), test, ks=(1, 5, 20))

print()
print(f"{'database':<22}{'size':>6}{'top1':>8}{'top5':>8}{'top20':>8}{'us/query':>10}")
for name, report in (
    ("full train set", full_report),
    ("uniform (matched)", uniform_report),
    ("cs-density medoids", cs_report),
):
    m = report.metrics
    print(
        f"{name:<22}{report.db_size:>6}{m['top1']:>8.3f}{m['top5']:>8.3f}"
        f"{m['top20']:>8.3f}{report.mean_query_micros:>10.1f}"
    )

shrink = len(subset) / len(train)
print(f"\ncs-density keeps {shrink:.1%} of the records "
      f"({len(subset)} representatives for {len(np.unique(subset.labels))} classes)")
