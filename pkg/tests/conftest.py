"""Shared session fixtures: the synthetic population, the trained decision
classifier, and the trained amortized recourse model.

Training is deterministic under fixed seeds, so the artifacts are cached on
disk (tests/.artifact_cache, git-ignored) and reused across test runs; delete
the cache directory to force a full retrain.
"""

import pathlib
import time

import pytest

from causalrecourse import amortized, classifier, scm
from causalrecourse.amortized import ICarmaModel, TrainConfig
from causalrecourse.classifier import Classifier, ClassifierConfig

CACHE = pathlib.Path(__file__).parent / ".artifact_cache"

# one line per acceptance criterion, echoed after the run so the verdicts
# survive output capturing
ACCEPTANCE_REPORT = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)

DATASET_N = 20000
DATASET_SEED = 0


@pytest.fixture(scope="session")
def dataset():
    data, noise = CACHE / "data.csv", CACHE / "noise.csv"
    if data.exists() and noise.exists():
        return scm.Dataset.from_csv(str(data), str(noise), seed=DATASET_SEED)
    ds = scm.sample_population(DATASET_N, seed=DATASET_SEED)
    CACHE.mkdir(exist_ok=True)
    ds.to_csv(str(data), str(noise))
    return ds


@pytest.fixture(scope="session")
def clf(dataset):
    path = CACHE / "classifier.json"
    if path.exists():
        return Classifier.load(str(path))
    model, _ = classifier.train(dataset, ClassifierConfig())
    CACHE.mkdir(exist_ok=True)
    model.save(str(path))
    return model


@pytest.fixture(scope="session")
def icarma_model(dataset, clf):
    path = CACHE / "icarma_rank.json"
    if path.exists():
        return ICarmaModel.load(str(path))
    start = time.perf_counter()
    model, _ = amortized.train(dataset, clf, config=TrainConfig.rank_mode())
    elapsed = time.perf_counter() - start
    CACHE.mkdir(exist_ok=True)
    model.save(str(path))
    (CACHE / "icarma_rank.time").write_text(repr(elapsed))
    return model


@pytest.fixture(scope="session")
def icarma_train_seconds(icarma_model):
    """Wall-clock seconds the cached model took to train (inf if the cache
    predates the timing file)."""
    path = CACHE / "icarma_rank.time"
    return float(path.read_text()) if path.exists() else float("inf")


@pytest.fixture(scope="session")
def small_dataset():
    """A quick 2,000-individual population for training-speed-bound tests."""
    return scm.sample_population(2000, seed=0)
