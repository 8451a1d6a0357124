"""Individual actionability: scores, hard/soft constraints, sampling schemes,
and the score -> weight / score -> prior mappings.

Scores follow the convention: globally non-actionable features carry the
sentinel 0, individually non-actionable features carry s_max, and actionable
features carry values in [1, s_max - 1]. For the four actionable loan
features s_max = 5.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .scm import ACTIONABLE

S_MAX = len(ACTIONABLE) + 1  # 5

# All 24 orderings of (LA, Dur, Inc, Sav); a row (a, b, c, d) means feature a
# is ranked 1 (easiest), d is ranked 4 (hardest). Row order matches the
# published probability table.
PERMUTATIONS = (
    ("LA", "Dur", "Inc", "Sav"),
    ("LA", "Dur", "Sav", "Inc"),
    ("LA", "Inc", "Dur", "Sav"),
    ("LA", "Sav", "Dur", "Inc"),
    ("LA", "Inc", "Sav", "Dur"),
    ("LA", "Sav", "Inc", "Dur"),
    ("Dur", "LA", "Inc", "Sav"),
    ("Dur", "LA", "Sav", "Inc"),
    ("Inc", "LA", "Dur", "Sav"),
    ("Sav", "LA", "Dur", "Inc"),
    ("Inc", "LA", "Sav", "Dur"),
    ("Sav", "LA", "Inc", "Dur"),
    ("Dur", "Inc", "LA", "Sav"),
    ("Dur", "Sav", "LA", "Inc"),
    ("Inc", "Dur", "LA", "Sav"),
    ("Sav", "Dur", "LA", "Inc"),
    ("Inc", "Sav", "LA", "Dur"),
    ("Sav", "Inc", "LA", "Dur"),
    ("Dur", "Inc", "Sav", "LA"),
    ("Dur", "Sav", "Inc", "LA"),
    ("Inc", "Dur", "Sav", "LA"),
    ("Sav", "Dur", "Inc", "LA"),
    ("Inc", "Sav", "Dur", "LA"),
    ("Sav", "Inc", "Dur", "LA"),
)

_1_24 = 1.0 / 24.0
_1_6 = 1.0 / 6.0

_TABLE = {
    # name: per-row probabilities, aligned with PERMUTATIONS
    "uniform": [_1_24] * 24,
    "co": [_1_24, _1_24, _1_6, _1_24, _1_6, _1_24,
           0, 0, _1_6, 0, _1_6, 0,
           0, 0, _1_24, 0, _1_24, 0,
           0, 0, _1_24, 0, _1_24, 0],
    "rco": [0, 0, 0, 0, 0, 0,
            _1_24, _1_24, 0, _1_24, 0, _1_24,
            _1_24, _1_6, 0, _1_6, 0, _1_24,
            _1_24, _1_6, 0, _1_6, 0, _1_24],
    "privileged": [0, 0, 0, 0, 0, 0,
                   0, 0, _1_24, _1_24, _1_24, _1_24,
                   0, 0, _1_24, _1_24, _1_6, _1_6,
                   0, 0, _1_24, _1_24, _1_6, _1_6],
    "non-privileged": [_1_6, _1_6, _1_24, _1_24, _1_24, _1_24,
                       _1_6, _1_6, 0, 0, 0, 0,
                       _1_24, _1_24, 0, 0, 0, 0,
                       _1_24, _1_24, 0, 0, 0, 0],
}


@dataclass(frozen=True)
class PreferenceDistribution:
    """Named categorical distribution over the 24 rank orderings."""

    name: str
    probs: tuple

    def __post_init__(self):
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities of {self.name!r} do not sum to 1")
        if len(self.probs) != 24:
            raise ValueError("need one probability per permutation")


DISTRIBUTIONS = {name: PreferenceDistribution(name, tuple(p))
                 for name, p in _TABLE.items()}


def load_distribution_json(path):
    """Custom distribution file: {"permutation": {"LA,Dur,Inc,Sav": p, ...}}."""
    with open(path) as fh:
        d = json.load(fh)
    table = d["permutation"] if "permutation" in d else d
    probs = []
    for perm in PERMUTATIONS:
        probs.append(float(table.get(",".join(perm), 0.0)))
    return PreferenceDistribution(d.get("name", "custom"), tuple(probs))


@dataclass
class PreferenceProfile:
    scores: dict
    scheme: str = "ranking"
    s_max: int = S_MAX

    @property
    def actionable_set(self):
        return tuple(f for f in ACTIONABLE
                     if 0 < self.scores.get(f, 0) < self.s_max)

    @property
    def s_u_max(self):
        """max(2, max actionable score) so the weight mapping never divides
        by zero when every actionable score is 1."""
        act = self.actionable_set
        if not act:
            return 2
        return max(2, max(self.scores[f] for f in act))

    def hard_feature_set(self):
        """Least-preferred yet still actionable features (ties included).
        Under all-equal scores every actionable feature counts as hard."""
        act = self.actionable_set
        if not act:
            return frozenset()
        top = max(self.scores[f] for f in act)
        return frozenset(f for f in act if self.scores[f] == top)

    def score_row(self):
        return [self.scores.get(f, 0) for f in ACTIONABLE]


@dataclass
class CostProfileParams:
    tag: str = "linear"  # constant | concave | linear | convex
    w_min: float = 1.0
    w_max: float = 7.0
    pi_min: float = 0.05
    pi_max: float = 0.5
    alpha: float = 1.0

    def __post_init__(self):
        if self.w_min > self.w_max:
            raise ValueError("w_min must not exceed w_max")
        if not (0.0 < self.pi_min <= self.pi_max < 1.0):
            raise ValueError("need 0 < pi_min <= pi_max < 1")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")

    @classmethod
    def from_tag(cls, tag, **kw):
        alphas = {"constant": 1.0, "concave": 0.5, "linear": 1.0, "convex": 2.0}
        if tag not in alphas:
            raise ValueError(f"unknown cost profile {tag!r}")
        return cls(tag=tag, alpha=kw.pop("alpha", alphas[tag]), **kw)


def weight(s, s_u_max, params):
    """Actionability weight; non-decreasing in s with exact endpoints."""
    if params.tag == "constant":
        return params.w_min
    t = min((s - 1.0) / (s_u_max - 1.0), 1.0)
    return params.w_max - (params.w_max - params.w_min) * (1.0 - t ** params.alpha)


def prior(s, s_u_max, params):
    """Mask-selection prior; non-increasing in s with exact endpoints."""
    if params.tag == "constant":
        return params.pi_max
    t = min((s - 1.0) / (s_u_max - 1.0), 1.0)
    return params.pi_min + (params.pi_max - params.pi_min) * (1.0 - t ** params.alpha)


def profile_weights(profile, params):
    """Per-feature weights over the globally actionable features."""
    sm = profile.s_u_max
    return np.array([weight(min(profile.scores.get(f, profile.s_max),
                                profile.s_max), sm, params)
                     for f in ACTIONABLE])


def profile_priors(profile, params):
    sm = profile.s_u_max
    return np.array([prior(min(profile.scores.get(f, profile.s_max),
                               profile.s_max), sm, params)
                     for f in ACTIONABLE])


def actionable_mask(profile):
    act = set(profile.actionable_set)
    return np.array([1.0 if f in act else 0.0 for f in ACTIONABLE])


def sample_ranking(dist, rng, threshold_mode="uniform", threshold_value=None):
    """Two-step ranking sampler: draw an ordering, then a non-actionability
    cut-off; ranks at or above the cut-off become s_max.

    threshold_mode: "uniform" (cut-off uniform over {2..5}), "fixed"
    (deterministic `threshold_value`), or "none" (pure ranking).
    """
    if isinstance(dist, str):
        dist = DISTRIBUTIONS[dist]
    row = PERMUTATIONS[rng.choice(24, p=np.asarray(dist.probs))]
    scores = {f: r + 1 for r, f in enumerate(row)}
    if threshold_mode == "uniform":
        thr = int(rng.integers(2, S_MAX + 1))
    elif threshold_mode == "fixed":
        if threshold_value is None:
            raise ValueError("fixed threshold mode needs threshold_value")
        thr = int(threshold_value)
    elif threshold_mode == "none":
        thr = None
    else:
        raise ValueError(f"unknown threshold mode {threshold_mode!r}")
    if thr is not None:
        scores = {f: (S_MAX if s >= thr else s) for f, s in scores.items()}
    return PreferenceProfile(scores=scores, scheme="ranking")


def sample_scores(rng, with_hard=False):
    """Independent uniform Likert scores: [1,4] soft-only, or [1,5] where a
    5 marks the feature individually non-actionable."""
    hi = S_MAX if with_hard else S_MAX - 1
    scores = {f: int(rng.integers(1, hi + 1)) for f in ACTIONABLE}
    return PreferenceProfile(scores=scores, scheme="likert")


def binary_profile(actionable_set):
    """Score 1 on the given features, s_max elsewhere; an empty set is
    allowed (recourse will come back invalid)."""
    act = set(actionable_set)
    if not act <= set(ACTIONABLE):
        raise ValueError("actionable_set must be within the global set")
    scores = {f: (1 if f in act else S_MAX) for f in ACTIONABLE}
    return PreferenceProfile(scores=scores, scheme="binary")


def profiles_to_csv(profiles, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"s_{f}" for f in ACTIONABLE] + ["scheme"])
        for p in profiles:
            w.writerow(p.score_row() + [p.scheme])


def profiles_from_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    out = []
    for r in rows[1:]:
        scores = {f: int(v) for f, v in zip(ACTIONABLE, r[:4])}
        out.append(PreferenceProfile(scores=scores, scheme=r[4]))
    return out
