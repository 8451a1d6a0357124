"""Population-level evaluation: validity, unweighted cost, plausibility,
hard-actions probability, and group-wise breakdowns."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict

import numpy as np

from .scm import F_IDX


@dataclass
class MetricsReport:
    validity: float
    plausibility: float
    cost_mean: float
    cost_std: float
    hap: float
    n_total: int
    n_valid: int
    group: str = ""


def validity(results):
    if not results:
        raise ValueError("no results")
    return float(np.mean([r.valid for r in results]))


def cost_stats(results):
    """Mean/std of the unweighted l2 cost over valid results only; the
    (nan, nan) sentinel when nothing is valid."""
    costs = [r.cost_unweighted for r in results if r.valid]
    if not costs:
        return float("nan"), float("nan")
    return float(np.mean(costs)), float(np.std(costs))


def plausibility(results, over_valid_only=True):
    """Fraction of users whose counterfactual is at least as likely as the
    factual (equality counts). Defaults to the valid-result denominator."""
    if not results:
        raise ValueError("no results")
    pool = [r for r in results if r.valid] if over_valid_only else results
    if not pool:
        return float("nan")
    return float(np.mean([r.logp_cf >= r.logp_f for r in pool]))


def hap(results, profiles):
    """Fraction of users whose recommendation touches at least one
    least-preferred (yet actionable) feature."""
    if len(results) != len(profiles):
        raise ValueError("results and profiles are misaligned")
    hits = [bool(set(r.action) & p.hard_feature_set())
            for r, p in zip(results, profiles)]
    return float(np.mean(hits)) if hits else 0.0


def report(results, profiles, group=""):
    m, s = cost_stats(results)
    return MetricsReport(
        validity=validity(results),
        plausibility=plausibility(results),
        cost_mean=m, cost_std=s,
        hap=hap(results, profiles),
        n_total=len(results),
        n_valid=sum(r.valid for r in results),
        group=group)


GROUP_KEYS = ("gender", "race", "income-quartile")


def _group_values(key, results, dataset, user_ids):
    if key == "gender":
        return [int(dataset.X[i, F_IDX["Ge"]]) for i in user_ids]
    if key == "race":
        return [int(dataset.race[i]) for i in user_ids]
    if key == "income-quartile":
        edges = np.quantile(dataset.X[dataset.split == "train", F_IDX["Inc"]],
                            [0.25, 0.5, 0.75])
        return [int(np.searchsorted(edges, dataset.X[i, F_IDX["Inc"]]))
                for i in user_ids]
    raise ValueError(f"unknown group key {key!r}")


def group_breakdown(results, profiles, dataset, user_ids, keys):
    """One report per group-value combination plus per-group log-density
    summaries; groups ordered deterministically by value tuple."""
    for k in keys:
        if k not in GROUP_KEYS:
            raise ValueError(f"unknown group key {k!r}")
    cols = [_group_values(k, results, dataset, user_ids) for k in keys]
    labels = [tuple(c[i] for c in cols) for i in range(len(results))]
    out = {}
    for lab in sorted(set(labels)):
        sel = [i for i, l in enumerate(labels) if l == lab]
        rs = [results[i] for i in sel]
        ps = [profiles[i] for i in sel]
        name = ",".join(f"{k}={v}" for k, v in zip(keys, lab))
        rep = report(rs, ps, group=name)
        logp_cf = [r.logp_cf for r in rs if r.valid]
        logp_f = [r.logp_f for r in rs]
        out[name] = {
            "report": rep,
            "logp_cf_mean": float(np.mean(logp_cf)) if logp_cf else float("nan"),
            "logp_f_mean": float(np.mean(logp_f)),
        }
    return out


def reports_to_csv(rows, path):
    """rows: list of (scenario, solver, MetricsReport)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "solver", "group", "validity", "plausibility",
                    "cost_mean", "cost_std", "hap", "n_total", "n_valid"])
        for scenario, solver, rep in rows:
            w.writerow([scenario, solver, rep.group,
                        repr(rep.validity), repr(rep.plausibility),
                        repr(rep.cost_mean), repr(rep.cost_std),
                        repr(rep.hap), rep.n_total, rep.n_valid])


def reports_to_json(rows, path):
    data = [{"scenario": sc, "solver": so, **asdict(rep)}
            for sc, so, rep in rows]
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
