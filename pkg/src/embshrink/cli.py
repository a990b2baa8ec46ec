"""Command-line surface for batch pipelines.

Commands: ingest, export, synth, score, filter, select, eval, sweep, bench.
Exit codes: 0 success, 1 runtime error, 2 usage/validation error. Stochastic
commands refuse to run without an explicit --seed; outputs always go to files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coreset import (
    CoresetBudget,
    EntropyDirection,
    select_herding,
    select_kcenter_greedy,
    select_uncertainty_entropy,
)
from .cscore import (
    FilterParams,
    filter_by_threshold,
    homogeneity_scores,
    read_scores_csv,
    write_scores_csv,
)
from .data import (
    EmbeddingSet,
    SyntheticConfig,
    ValidationError,
    export_csv,
    generate_synthetic_detailed,
    import_csv,
    load_embeddings,
    save_embeddings,
    split_per_class,
)
from .dimred import fit_projection, transform
from .evaluate import (
    MethodConfig,
    SweepSpec,
    evaluate_topk,
    reports_to_csv,
    reports_to_json,
    run_sweep,
    timing_curve,
)
from .index import build_index
from .probe import train_probe
from .selection import save_subset, select_clustered, select_uniform

log = logging.getLogger("embshrink")

STOCHASTIC_SELECT_METHODS = {"uniform", "kcenter", "kmeans", "entropy"}


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _require_seed(args, parser: argparse.ArgumentParser) -> int:
    if args.seed is None:
        parser.error("--seed is required for this command")
    return args.seed


def cmd_ingest(args, parser) -> int:
    dataset = import_csv(args.input)
    save_embeddings(dataset, args.out)
    classes = len(np.unique(dataset.labels)) if len(dataset) else 0
    print(f"{len(dataset)} records, {classes} classes")
    return 0


def cmd_export(args, parser) -> int:
    dataset = load_embeddings(args.input)
    export_csv(dataset, args.out)
    print(f"{len(dataset)} records written to {args.out}")
    return 0


def cmd_synth(args, parser) -> int:
    seed = _require_seed(args, parser)
    config = SyntheticConfig(
        class_count=args.classes,
        views_per_class=args.views,
        points_per_view=args.points,
        dimension=args.dim,
        view_spread=args.view_spread,
        class_spread=args.class_spread,
        noise_fraction=args.noise_fraction,
        seed=seed,
    )
    dataset, sidecar = generate_synthetic_detailed(config)
    save_embeddings(dataset, args.out)
    Path(str(args.out) + ".noise.json").write_text(
        json.dumps({"noise_ids": [int(i) for i in sidecar.noise_ids]})
    )
    print(f"{len(dataset)} records, {args.classes} classes -> {args.out}")
    if args.test_fraction is not None:
        if args.split_seed is None:
            parser.error("--split-seed is required together with --test-fraction")
        train, test = split_per_class(dataset, args.test_fraction, args.split_seed)
        stem = Path(args.out)
        train_path = stem.with_suffix(".train.emb")
        test_path = stem.with_suffix(".test.emb")
        save_embeddings(train, train_path)
        save_embeddings(test, test_path)
        print(f"split: {len(train)} train -> {train_path}, {len(test)} test -> {test_path}")
    return 0


def cmd_score(args, parser) -> int:
    dataset = load_embeddings(args.input)
    scored_space = dataset
    if args.components is not None:
        projection = fit_projection(dataset, args.components)
        scored_space = transform(projection, dataset)
        log.info("scoring in a %d-component projection", args.components)
    table = homogeneity_scores(scored_space, args.neighbors)
    write_scores_csv(table, args.out)
    print(f"{len(table.scores)} scores -> {args.out}")
    return 0


def cmd_filter(args, parser) -> int:
    dataset = load_embeddings(args.input)
    table = read_scores_csv(args.scores, n_neighbors=args.neighbors)
    params = FilterParams(
        n_neighbors=args.neighbors, threshold=args.threshold, min_keep_per_class=args.min_keep
    )
    filtered = filter_by_threshold(dataset, table, params)
    save_embeddings(filtered, args.out)
    print(f"kept {len(filtered)}/{len(dataset)} records -> {args.out}")
    return 0


def _cs_filtered(dataset: EmbeddingSet, args, parser):
    """Optional reduce + consistency filter ahead of a select method."""
    scored_space = dataset
    if args.components is not None:
        projection = fit_projection(dataset, args.components)
        scored_space = transform(projection, dataset)
    table = homogeneity_scores(scored_space, args.neighbors)
    params = FilterParams(
        n_neighbors=args.neighbors, threshold=args.threshold, min_keep_per_class=args.min_keep
    )
    from .cscore import surviving_positions

    positions = surviving_positions(dataset, table, params)
    filtered = dataset.take(positions)
    cluster_space = scored_space.take(positions) if args.components is not None else None
    return filtered, cluster_space


def cmd_select(args, parser) -> int:
    dataset = load_embeddings(args.input)
    method = args.method
    use_cscore = method.startswith("cs-")
    kind = method[3:] if use_cscore else method
    if kind in STOCHASTIC_SELECT_METHODS:
        _require_seed(args, parser)
    seed = args.seed if args.seed is not None else 0

    work, cluster_space = (dataset, None)
    if use_cscore:
        work, cluster_space = _cs_filtered(dataset, args, parser)
        log.info("consistency filter kept %d/%d records", len(work), len(dataset))

    if kind == "uniform":
        subset = select_uniform(work, args.fraction, args.balanced, seed)
    elif kind == "kcenter":
        subset = select_kcenter_greedy(work, CoresetBudget(args.fraction, args.balanced), seed)
    elif kind == "herding":
        subset = select_herding(work, CoresetBudget(args.fraction, args.balanced))
    elif kind == "entropy":
        from .evaluate import _normalized_copy

        probe = train_probe(
            _normalized_copy(work), epochs=args.probe_epochs, learning_rate=args.probe_lr, seed=seed
        )
        subset = select_uncertainty_entropy(
            work,
            CoresetBudget(args.fraction, args.balanced),
            probe,
            EntropyDirection(args.entropy_direction),
        )
    elif kind in ("kmeans", "density"):
        subset = select_clustered(
            work,
            kind,
            args.representative,
            k_per_class=args.k_per_class,
            min_cluster_size=args.min_cluster,
            max_iters=args.max_iters,
            seed=seed,
            assign_on=cluster_space,
        )
    else:
        parser.error(f"--method {method!r} is not a known selection method")
        return 2
    if use_cscore:
        subset.method = "cs-" + subset.method
        subset.params.update(
            {
                "cscore_neighbors": args.neighbors,
                "cscore_threshold": args.threshold,
                "cscore_min_keep": args.min_keep,
                "components": args.components,
            }
        )
    save_subset(subset, args.out, source=dataset)
    print(f"{len(subset)} representatives ({subset.method}) -> {args.out}")
    return 0


def cmd_eval(args, parser) -> int:
    db = load_embeddings(args.db)
    test = load_embeddings(args.test)
    index = build_index(db)
    report = evaluate_topk(
        index,
        test,
        ks=_int_list(args.ks),
        config={"db": str(args.db), "test": str(args.test)},
        repetitions=args.repetitions,
    )
    Path(args.out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    metrics = ", ".join(f"{k}={v:.4f}" for k, v in sorted(report.metrics.items()))
    print(f"db_size={report.db_size} {metrics} -> {args.out}")
    return 0


_SWEEP_KEYS = {
    "train",
    "test",
    "data",
    "test_fraction",
    "split_seed",
    "fractions",
    "cscore_neighbors",
    "thresholds",
    "components",
    "ks",
    "repetitions",
    "seeds",
    "methods",
}


def _load_sweep_config(path: str) -> tuple[SweepSpec, EmbeddingSet, EmbeddingSet]:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"--config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError("--config must hold a JSON object")
    unknown = set(raw) - _SWEEP_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if "methods" not in raw or not raw["methods"]:
        raise ValidationError("config requires a non-empty 'methods' array")
    if "seeds" not in raw or not raw["seeds"]:
        raise ValidationError("config requires an explicit 'seeds' array")
    methods = tuple(MethodConfig.from_dict(m) for m in raw["methods"])
    spec_kwargs = {}
    for key in ("fractions", "cscore_neighbors", "thresholds", "ks", "seeds"):
        if key in raw:
            spec_kwargs[key] = tuple(raw[key])
    if "components" in raw:
        spec_kwargs["components"] = tuple(raw["components"])
    if "repetitions" in raw:
        spec_kwargs["repetitions"] = int(raw["repetitions"])
    spec = SweepSpec(methods=methods, **spec_kwargs)

    if "train" in raw and "test" in raw:
        train = load_embeddings(raw["train"])
        test = load_embeddings(raw["test"])
    elif "data" in raw:
        if "test_fraction" not in raw or "split_seed" not in raw:
            raise ValidationError("'data' requires 'test_fraction' and 'split_seed'")
        dataset = load_embeddings(raw["data"])
        train, test = split_per_class(dataset, float(raw["test_fraction"]), int(raw["split_seed"]))
    else:
        raise ValidationError("config requires either 'train'+'test' or 'data' paths")
    return spec, train, test


def cmd_sweep(args, parser) -> int:
    spec, train, test = _load_sweep_config(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log.info("sweep over %d cells (jobs=%d)", len(spec.cells()), args.jobs)
    result = run_sweep(spec, train, test, jobs=args.jobs)
    reports_to_json(result, out_dir / "reports.json")
    reports_to_csv(result.reports, out_dir / "reports.csv")
    print(f"{len(result.reports)} cells -> {out_dir / 'reports.csv'}")
    for name, report in sorted(result.best_per_method.items()):
        metrics = ", ".join(f"{k}={v:.4f}" for k, v in sorted(report.metrics.items()))
        print(f"best[{name}]: db_size={report.db_size} {metrics}")
    return 0


def cmd_bench(args, parser) -> int:
    dataset = load_embeddings(args.input)
    sizes = _int_list(args.sizes)
    if args.queries:
        batch = load_embeddings(args.queries)
    else:
        seed = _require_seed(args, parser)
        rng = np.random.default_rng(seed)
        count = min(args.batch, len(dataset))
        batch = dataset.take(np.sort(rng.choice(len(dataset), size=count, replace=False)))
    points = timing_curve(dataset, sizes, batch, repetitions=args.repetitions, k=args.k)
    with open(args.out, "w") as fh:
        fh.write("size,mean_query_micros,median_query_micros,stddev_micros\n")
        for p in points:
            fh.write(
                f"{p.size},{p.mean_query_micros:.3f},{p.median_query_micros:.3f},"
                f"{p.stddev_micros:.3f}\n"
            )
    print(f"{len(points)} sizes -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embshrink",
        description="Shrink labeled embedding databases and measure the retrieval trade-off.",
    )
    parser.add_argument("--version", action="version", version=f"embshrink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_in=True, needs_out=True):
        if needs_in:
            p.add_argument("--in", dest="input", required=True, help="input file")
        if needs_out:
            p.add_argument("--out", required=True, help="output file")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (required when stochastic)")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.add_argument("--verbose", action="store_true", help="log progress to stderr")

    p = sub.add_parser("ingest", help="convert a CSV fixture to the binary embedding format")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("export", help="convert a binary embedding file to CSV")
    common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("synth", help="generate a synthetic labeled embedding set")
    common(p, needs_in=False)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--views", type=int, default=1)
    p.add_argument("--points", type=int, required=True, help="points per view")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--view-spread", type=float, default=0.1)
    p.add_argument("--class-spread", type=float, default=1.0)
    p.add_argument("--noise-fraction", type=float, default=0.0)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--split-seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("score", help="compute neighbor-homogeneity consistency scores")
    common(p)
    p.add_argument("--neighbors", type=int, required=True)
    p.add_argument("--components", type=int, default=None, help="score in a PCA projection")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("filter", help="drop records scoring below a threshold")
    common(p)
    p.add_argument("--scores", required=True, help="scores CSV from the score command")
    p.add_argument("--neighbors", type=int, required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--min-keep", type=int, default=1)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("select", help="build a representative subset")
    common(p)
    p.add_argument(
        "--method",
        required=True,
        help="uniform|kcenter|herding|entropy|kmeans|density, or cs-<method> to filter first",
    )
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--representative", choices=("centroid", "medoid"), default="medoid")
    p.add_argument("--k-per-class", type=int, default=20)
    p.add_argument("--min-cluster", type=int, default=3)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--neighbors", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--min-keep", type=int, default=1)
    p.add_argument("--components", type=int, default=None)
    p.add_argument("--probe-epochs", type=int, default=30)
    p.add_argument("--probe-lr", type=float, default=0.1)
    p.add_argument(
        "--entropy-direction",
        choices=tuple(d.value for d in EntropyDirection),
        default=EntropyDirection.KEEP_LOW_ENTROPY.value,
    )
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="evaluate top-k retrieval of a database against a test set")
    common(p, needs_in=False)
    p.add_argument("--db", required=True, help="embedding file to index")
    p.add_argument("--test", required=True, help="embedding file of test queries")
    p.add_argument("--ks", default="1,5,20")
    p.add_argument("--repetitions", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run a configured hyperparameter sweep")
    common(p, needs_in=False, needs_out=False)
    p.add_argument("--config", required=True, help="JSON sweep configuration")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="measure query latency against index size")
    common(p)
    p.add_argument("--sizes", required=True, help="comma-separated index sizes")
    p.add_argument("--batch", type=int, default=64, help="query batch size sampled from --in")
    p.add_argument("--queries", default=None, help="embedding file of queries (overrides --batch)")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args, parser)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
