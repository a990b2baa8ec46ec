import numpy as np
import pytest

from embshrink import EmbeddingSet


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {status}: {report.nodeid.split('::')[-1]}")


def random_set(
    n: int,
    dimension: int,
    classes: int,
    seed: int,
    scale: float = 1.0,
    ids: np.ndarray | None = None,
) -> EmbeddingSet:
    """Random labeled set used across tests; ids default to 0..n-1."""
    rng = np.random.default_rng(seed)
    vectors = rng.normal(size=(n, dimension)) * scale
    labels = rng.integers(classes, size=n)
    if ids is None:
        ids = np.arange(n, dtype=np.uint64)
    return EmbeddingSet(
        vectors,
        ids,
        labels,
        np.full(n, 2),
        [f"class_{i}" for i in range(classes)],
    )


@pytest.fixture
def make_random_set():
    return random_set
