"""Desk-scale engine for individualized causal algorithmic recourse on a
known structural causal model: exact counterfactuals, an exhaustive-search
reference solver, and an amortized mask/action network trained against a
frozen classifier under per-user actionability constraints."""

from . import (amortized, autodiff, classifier, experiments, metrics, oracle,
               preferences, results, scm)
from .amortized import ICarmaModel, TrainConfig, recommend, recommend_population
from .classifier import Classifier, ClassifierConfig
from .oracle import OracleConfig, solve, solve_population
from .preferences import (CostProfileParams, PreferenceDistribution,
                          PreferenceProfile, binary_profile, sample_ranking,
                          sample_scores)
from .results import RecourseResult
from .scm import ACTIONABLE, FEATURES, Dataset, sample_population

__all__ = [
    "ACTIONABLE", "FEATURES", "Classifier", "ClassifierConfig",
    "CostProfileParams", "Dataset", "ICarmaModel", "OracleConfig",
    "PreferenceDistribution", "PreferenceProfile", "RecourseResult",
    "TrainConfig", "amortized", "autodiff", "binary_profile", "classifier",
    "experiments", "metrics", "oracle", "preferences", "recommend",
    "recommend_population", "results", "sample_population", "sample_ranking",
    "sample_scores", "scm", "solve", "solve_population",
]

__version__ = "0.1.0"
