"""Recourse result records and their CSV schema (shared by both solvers)."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .scm import FEATURES


@dataclass
class RecourseResult:
    user_id: int
    solver: str
    action: dict
    x_cf: np.ndarray
    valid: bool
    cost_unweighted: float
    cost_weighted: float
    logp_f: float
    logp_cf: float
    hard_action: bool

    def __post_init__(self):
        if self.cost_unweighted is not None and not np.isnan(self.cost_unweighted):
            assert self.cost_unweighted >= 0.0


def action_cost(x, x_cf_or_action, action_keys, std, weights=None):
    """Cost over the intervened actionable coordinates in normalized units.

    Returns (unweighted_l2, weighted_sq): the l2 norm of the normalized
    deltas and the weighted sum of their squares.
    """
    from .scm import ACTIONABLE, F_IDX

    un = 0.0
    wsum = 0.0
    for f, target in action_keys.items():
        j = F_IDX[f]
        d = (target - x[j]) / std[j]
        un += d * d
        w = 1.0 if weights is None else weights[ACTIONABLE.index(f)]
        wsum += w * d * d
    return float(np.sqrt(un)), float(wsum)


def results_to_csv(results, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id", "solver", "valid", "cost", "logp_f", "logp_cf",
                    "hard_action", "action_json"])
        for r in results:
            w.writerow([r.user_id, r.solver, int(r.valid),
                        repr(float(r.cost_unweighted)),
                        repr(float(r.logp_f)), repr(float(r.logp_cf)),
                        int(r.hard_action),
                        json.dumps({k: float(v) for k, v in sorted(r.action.items())})])


def results_from_csv(path):
    out = []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    for r in rows[1:]:
        out.append(RecourseResult(
            user_id=int(r[0]), solver=r[1], valid=bool(int(r[2])),
            cost_unweighted=float(r[3]), cost_weighted=float("nan"),
            logp_f=float(r[4]), logp_cf=float(r[5]),
            hard_action=bool(int(r[6])), action=json.loads(r[7]),
            x_cf=np.full(len(FEATURES), np.nan)))
    return out
