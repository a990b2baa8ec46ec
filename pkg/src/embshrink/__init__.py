"""Shrink labeled embedding databases to representative subsets and measure
the retrieval accuracy/latency trade-off."""

__version__ = "0.1.0"

from .coreset import (
    CoresetBudget,
    EntropyDirection,
    select_herding,
    select_kcenter_greedy,
    select_uncertainty_entropy,
    shannon_entropy,
)
from .cscore import (
    FilterParams,
    ScoreTable,
    filter_by_threshold,
    homogeneity_scores,
    read_scores_csv,
    write_scores_csv,
)
from .data import (
    EmbeddingRecord,
    EmbeddingSet,
    FormatError,
    Split,
    SyntheticConfig,
    SyntheticSidecar,
    ValidationError,
    export_csv,
    generate_synthetic,
    generate_synthetic_detailed,
    import_csv,
    load_embeddings,
    save_embeddings,
    set_digest,
    split_per_class,
    unit_normalized,
)
from .dimred import Projection, fit_projection, load_projection, save_projection, transform
from .evaluate import (
    EvalReport,
    MethodConfig,
    SweepSpec,
    SweepResult,
    TimingPoint,
    evaluate_topk,
    fit_time_vs_size,
    reports_to_csv,
    reports_to_json,
    run_cell,
    run_sweep,
    select_for_cell,
    timing_curve,
)
from .index import (
    Neighbor,
    RetrievalResult,
    VectorIndex,
    build_index,
    classify_top1,
    query_topk,
)
from .probe import (
    Classifier,
    load_classifier,
    predict_proba,
    probe_accuracy,
    save_classifier,
    train_probe,
)
from .selection import (
    ClusterAssignment,
    ClusterInfo,
    Subset,
    centroids_of,
    density_cluster_per_class,
    kmeans_per_class,
    medoids_of,
    save_subset,
    select_clustered,
    select_uniform,
)
