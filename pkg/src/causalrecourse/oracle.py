"""Non-amortized gold-standard solver: exhaustive grid search over the
individually actionable interventions, validity required, plausibility
optionally enforced as a hard constraint, minimizing the individualized
weighted cost."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import scm
from .preferences import CostProfileParams, profile_weights
from .results import RecourseResult
from .scm import ACTIONABLE, F_IDX


@dataclass
class OracleConfig:
    bins: int = 25
    plausibility_hard: bool = True
    cost_params: CostProfileParams = field(default_factory=CostProfileParams)
    feasible_lo: np.ndarray = None
    feasible_hi: np.ndarray = None
    mean: np.ndarray = None
    std: np.ndarray = None

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError("need at least 2 bins")

    @classmethod
    def from_dataset(cls, dataset, **kw):
        lo, hi = dataset.feasible_range()
        return cls(feasible_lo=lo, feasible_hi=hi,
                   mean=dataset.mean, std=dataset.std, **kw)


def build_grid(x_f, feature, config):
    """Candidate intervention values for one feature: `bins` points over
    [-2 x_f, 2 x_f] clipped to the feasible range, plus the factual value as
    the no-intervention sentinel. A zero factual collapses the interval, in
    which case the grid spans the whole feasible range instead."""
    j = F_IDX[feature]
    lo_r, hi_r = config.feasible_lo[j], config.feasible_hi[j]
    if x_f == 0.0:
        grid = np.linspace(lo_r, hi_r, config.bins)
    else:
        lo, hi = sorted((-2.0 * x_f, 2.0 * x_f))
        grid = np.clip(np.linspace(lo, hi, config.bins), lo_r, hi_r)
    return np.concatenate([grid, [x_f]])


def _counterfactual_grid(x, u, af, cand):
    """Vectorized abduction-intervention-prediction for a joint candidate
    grid; `cand` maps feature name -> (M,) candidate values for f in af.

    A candidate equal to the factual value means "no intervention" (the
    sentinel), so the feature follows its structural equation and upstream
    interventions propagate through it."""
    ge, ag, ed = x[0], x[1], x[2]

    def pick(f, struct):
        if f not in af:
            return struct
        hit = cand[f] != x[F_IDX[f]]
        return np.where(hit, cand[f], struct)

    la = pick("LA", x[3])
    dur = pick("Dur", -1.0 + 0.1 * ag + 2.0 * (1.0 - ge) + la + u[4])
    inc = pick("Inc", x[5])
    sav = pick("Sav", -4.0 + 1.5 * (np.asarray(inc) > 0.0) * inc + u[6])
    m = len(next(iter(cand.values())))
    X = np.empty((m, 7))
    X[:, 0], X[:, 1], X[:, 2] = ge, ag, ed
    X[:, 3], X[:, 4], X[:, 5], X[:, 6] = la, dur, inc, sav
    return X


def _invalid_result(user_id, x, logp_f):
    return RecourseResult(user_id=user_id, solver="oracle", action={},
                          x_cf=np.array(x, dtype=np.float64), valid=False,
                          cost_unweighted=float("nan"),
                          cost_weighted=float("nan"),
                          logp_f=logp_f, logp_cf=logp_f, hard_action=False)


def solve(x, profile, clf, config, user_id=0):
    """Enumerate the joint grid over the individually actionable features and
    return the minimum weighted-cost candidate that flips the classifier
    (and, if configured, does not lose log-density). No survivor, or an empty
    actionable set, yields an invalid result rather than an exception."""
    x = np.asarray(x, dtype=np.float64)
    logp_f = scm.log_density(x)
    af = profile.actionable_set
    if not af:
        return _invalid_result(user_id, x, logp_f)

    u = scm.abduct(x)
    grids = [build_grid(x[F_IDX[f]], f, config) for f in af]
    mesh = np.meshgrid(*grids, indexing="ij")
    cand = {f: m.ravel() for f, m in zip(af, mesh)}
    X_cf = _counterfactual_grid(x, u, set(af), cand)

    valid = clf.predict_proba(X_cf) >= 0.5
    if config.plausibility_hard:
        valid &= scm.log_density(X_cf) >= logp_f
    if not np.any(valid):
        return _invalid_result(user_id, x, logp_f)

    w = profile_weights(profile, config.cost_params)
    idx = np.flatnonzero(valid)
    cost_w = np.zeros(len(idx))
    cost_u = np.zeros(len(idx))
    keys = [cost_w]
    n_int = np.zeros(len(idx))
    for f in af:
        delta = (cand[f][idx] - x[F_IDX[f]]) / config.std[F_IDX[f]]
        hit = cand[f][idx] != x[F_IDX[f]]
        n_int += hit
        cost_w += w[ACTIONABLE.index(f)] * delta * delta * hit
        cost_u += delta * delta * hit
    keys = [cost_w, n_int]
    for f in af:  # deterministic tie-breaking
        keys.append((cand[f][idx] != x[F_IDX[f]]).astype(float))
        keys.append(cand[f][idx])
    best = idx[np.lexsort(tuple(keys[::-1]))[0]]
    pos = np.flatnonzero(idx == best)[0]

    action = {f: float(cand[f][best]) for f in af
              if cand[f][best] != x[F_IDX[f]]}
    hard = bool(set(action) & profile.hard_feature_set())
    return RecourseResult(
        user_id=user_id, solver="oracle", action=action,
        x_cf=X_cf[best], valid=True,
        cost_unweighted=float(np.sqrt(cost_u[pos])),
        cost_weighted=float(cost_w[pos]),
        logp_f=logp_f, logp_cf=float(scm.log_density(X_cf[best])),
        hard_action=hard)


def solve_population(X, profiles, clf, config, user_ids=None):
    """Independent per-user solves, collected in deterministic user order."""
    if user_ids is None:
        user_ids = range(len(X))
    return [solve(X[i], profiles[i], clf, config, user_id=uid)
            for i, uid in enumerate(user_ids)]
