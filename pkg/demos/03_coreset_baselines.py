#!/usr/bin/env python3
# Coreset baselines across selection budgets.
#
# Uniform sampling vs k-Center Greedy vs Herding vs Uncertainty-Entropy
# (linear probe), each at 10%..90% of the training records, evaluated by
# top-1 hit rate on held-out queries. Uses a moderately noisy corpus so the
# curves actually separate.

from embshrink import (
    MethodConfig,
    SweepSpec,
    SyntheticConfig,
    generate_synthetic,
    run_sweep,
    split_per_class,
)

config = SyntheticConfig(
    class_count=12,
    views_per_class=3,
    points_per_view=30,
    dimension=32,
    view_spread=0.25,
    class_spread=1.0,
    noise_fraction=0.1,
    seed=3,
)
train, test = split_per_class(generate_synthetic(config), test_fraction=0.25, seed=4)
print(f"{len(train)} train / {len(test)} test")

spec = SweepSpec(
    methods=(
        MethodConfig(kind="uniform"),
        MethodConfig(kind="kcenter"),
        MethodConfig(kind="herding"),
        MethodConfig(kind="entropy", probe_epochs=40, probe_lr=0.2),
    ),
    fractions=tuple(round(0.1 * i, 1) for i in range(1, 10)),
    ks=(1,),
    seeds=(0, 1, 2),
)
result = run_sweep(spec, train, test, jobs=4)

by_method: dict[str, dict[float, list[float]]] = {}
for report in result.reports:
    cfg = report.config
    by_method.setdefault(cfg["method"], {}).setdefault(cfg["fraction"], []).append(
        report.metrics["top1"]
    )

fractions = spec.fractions
header = "fraction " + "".join(f"{f:>8.0%}" for f in fractions)
print("\nmean top-1 over 3 seeds")
print(header)
for name, rows in sorted(by_method.items()):
    cells = "".join(f"{sum(rows[f]) / len(rows[f]):>8.3f}" for f in fractions)
    print(f"{name:<9}{cells}")

print("\nbest observed per method:")
for name, report in sorted(result.best_per_method.items()):
    print(
        f"  {name:<9} top1={report.metrics['top1']:.3f} at "
        f"fraction={report.config['fraction']}, db={report.db_size}"
    )
