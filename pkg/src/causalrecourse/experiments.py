"""Scenario runner: wires the dataset, classifier, preference sampling, both
solvers, and the metrics into the three study questions (hard constraints,
soft cost profiles, group fairness) and emits deterministic CSV artifacts."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, asdict

import numpy as np

from . import amortized, metrics, scm
from .oracle import OracleConfig, solve_population
from .preferences import (DISTRIBUTIONS, PERMUTATIONS, CostProfileParams,
                          binary_profile, profiles_to_csv, sample_ranking,
                          sample_scores)
from .results import results_to_csv
from .scm import ACTIONABLE, F_IDX

SOLVERS = ("oracle", "icarma")
FAIRNESS_MODES = ("none", "random", "race-correlated", "income-dependent")


@dataclass
class ScenarioConfig:
    scenario: str
    solver: str = "oracle"
    scheme: str = "binary"  # binary | ranking | scores
    distribution: str = "uniform"
    threshold_mode: str = "none"
    threshold_value: int = None
    n_actionable: int = None  # binary scheme: None = all four, -1 = random
    score_with_hard: bool = False
    cost_profile: str = "constant"
    plausibility_hard: bool = True
    users: int = 200
    seed: int = 7
    fairness_mode: str = "none"
    race_privileged_rates: tuple = (0.9, 0.05)

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.scheme not in ("binary", "ranking", "scores"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.fairness_mode not in FAIRNESS_MODES:
            raise ValueError(f"unknown fairness mode {self.fairness_mode!r}")
        if self.cost_profile not in ("constant", "concave", "linear", "convex"):
            raise ValueError(f"unknown cost profile {self.cost_profile!r}")

    def fingerprint(self):
        d = asdict(self)
        d["race_privileged_rates"] = list(self.race_privileged_rates)
        return d


def _binary_from_ordering(dist, k, rng):
    """Actionable subset = the k easiest features of an ordering drawn from
    the named distribution; uniform ordering means a uniform size-k subset."""
    row = PERMUTATIONS[rng.choice(24, p=np.asarray(DISTRIBUTIONS[dist].probs))]
    return binary_profile(row[:k])


def sample_profiles(cfg, dataset, idx, rng):
    """One preference profile per selected user, per the scenario config."""
    if cfg.fairness_mode != "none":
        profiles = []
        p_priv, p_non = cfg.race_privileged_rates
        inc_cut = np.quantile(
            dataset.X[dataset.split == "train", F_IDX["Inc"]], 0.75)
        for i in idx:
            if cfg.fairness_mode == "random":
                priv = rng.random() < 0.5
            elif cfg.fairness_mode == "race-correlated":
                priv = rng.random() < (p_priv if dataset.race[i] else p_non)
            else:  # income-dependent
                priv = dataset.X[i, F_IDX["Inc"]] >= inc_cut
            dist = "privileged" if priv else "non-privileged"
            profiles.append(sample_ranking(dist, rng, threshold_mode="fixed",
                                           threshold_value=cfg.threshold_value or 3))
        return profiles
    if cfg.scheme == "binary":
        if cfg.n_actionable is None:
            return [binary_profile(ACTIONABLE) for _ in idx]
        if cfg.n_actionable == -1:
            return [_binary_from_ordering(cfg.distribution,
                                          int(rng.integers(1, 5)), rng)
                    for _ in idx]
        return [_binary_from_ordering(cfg.distribution, cfg.n_actionable, rng)
                for _ in idx]
    if cfg.scheme == "ranking":
        return [sample_ranking(cfg.distribution, rng,
                               threshold_mode=cfg.threshold_mode,
                               threshold_value=cfg.threshold_value)
                for _ in idx]
    return [sample_scores(rng, with_hard=cfg.score_with_hard) for _ in idx]


def deployment_pool(dataset, clf, users=None):
    """Deploy-split individuals the classifier rejects, capped in index
    order so caps are reproducible."""
    idx = dataset.indices("deploy")
    idx = idx[clf.predict(dataset.X[idx]) == 0]
    return idx if users is None else idx[:users]


def run_scenario(cfg, dataset, clf, model=None, out_dir=None):
    """Run one scenario end to end; returns (results, profiles, user_ids,
    report) and, when out_dir is given, writes the per-user results CSV."""
    idx = deployment_pool(dataset, clf, cfg.users)
    rng = np.random.default_rng(cfg.seed)
    profiles = sample_profiles(cfg, dataset, idx, rng)
    params = CostProfileParams.from_tag(cfg.cost_profile)
    if cfg.solver == "oracle":
        ocfg = OracleConfig.from_dataset(
            dataset, plausibility_hard=cfg.plausibility_hard,
            cost_params=params)
        results = solve_population(dataset.X[idx], profiles, clf, ocfg,
                                   user_ids=idx)
    else:
        if model is None:
            raise ValueError("the icarma solver needs a trained model")
        results = amortized.recommend_population(
            model, dataset.X[idx], profiles, clf, params, user_ids=idx)
    rep = metrics.report(results, profiles)
    if out_dir is not None:
        results_to_csv(results, os.path.join(out_dir, f"{cfg.scenario}.csv"))
        profiles_to_csv(profiles,
                        os.path.join(out_dir, f"{cfg.scenario}_prefs.csv"))
    return results, profiles, idx, rep


_SUMMARY_HEADER = ["scenario", "solver", "seed", "scheme", "distribution",
                   "threshold_mode", "threshold_value", "n_actionable",
                   "cost_profile", "plausibility_hard", "fairness_mode",
                   "users", "validity", "plausibility", "cost_mean",
                   "cost_std", "hap", "n_total", "n_valid"]


def _summary_row(cfg, rep):
    return [cfg.scenario, cfg.solver, cfg.seed, cfg.scheme, cfg.distribution,
            cfg.threshold_mode,
            "" if cfg.threshold_value is None else cfg.threshold_value,
            "" if cfg.n_actionable is None else cfg.n_actionable,
            cfg.cost_profile, int(cfg.plausibility_hard), cfg.fairness_mode,
            "" if cfg.users is None else cfg.users,
            repr(rep.validity), repr(rep.plausibility), repr(rep.cost_mean),
            repr(rep.cost_std), repr(rep.hap), rep.n_total, rep.n_valid]


def write_summary(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_SUMMARY_HEADER)
        for cfg, rep in rows:
            w.writerow(_summary_row(cfg, rep))


def write_manifest(out_dir, configs):
    """Hash every artifact in the run directory for reproducibility audits."""
    artifacts = {}
    for name in sorted(os.listdir(out_dir)):
        if name == "manifest.json":
            continue
        p = os.path.join(out_dir, name)
        if os.path.isfile(p):
            with open(p, "rb") as fh:
                artifacts[name] = hashlib.sha256(fh.read()).hexdigest()
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump({"artifacts": artifacts,
                   "scenarios": [c.fingerprint() for c in configs]},
                  fh, indent=1, sort_keys=True)


def run_rq1(dataset, clf, model=None, out_dir=None, users=200, seed=7,
            solvers=("oracle", "icarma"), distribution="uniform",
            ablation=False):
    """Hard-constraint sweep: all four actionable, then fixed counts 3/2/1,
    then a random count, per solver; optionally the plausibility-off
    ablation rows for the 1- and 2-feature oracle settings."""
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    rows = []
    for solver in solvers:
        for n_act, label in ((None, "all4"), (3, "act3"), (2, "act2"),
                             (1, "act1"), (-1, "random")):
            cfg = ScenarioConfig(
                scenario=f"rq1_{solver}_{label}", solver=solver,
                scheme="binary", distribution=distribution,
                n_actionable=n_act, users=users, seed=seed)
            _, _, _, rep = run_scenario(cfg, dataset, clf, model, out_dir)
            rows.append((cfg, rep))
    if ablation:
        for n_act in (1, 2):
            cfg = ScenarioConfig(
                scenario=f"rq1_oracle_act{n_act}_noplaus", solver="oracle",
                scheme="binary", distribution=distribution,
                n_actionable=n_act, plausibility_hard=False,
                users=users, seed=seed)
            _, _, _, rep = run_scenario(cfg, dataset, clf, model, out_dir)
            rows.append((cfg, rep))
    if out_dir:
        write_summary(rows, os.path.join(out_dir, "summary.csv"))
        write_manifest(out_dir, [c for c, _ in rows])
    return rows


def run_rq2(dataset, clf, model=None, model_score=None, out_dir=None,
            users=200, seed=7, solvers=("icarma",)):
    """Soft-preference sweep: rankings (soft-only and hard+soft) and, when a
    score-mode model is available, Likert scores, each crossed with the four
    cost profiles."""
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    rows = []
    settings = [("soft", "ranking", "none", False),
                ("hardsoft", "ranking", "uniform", False)]
    if model_score is not None or "oracle" in solvers:
        settings += [("score_soft", "scores", "none", False),
                     ("score_hard", "scores", "none", True)]
    for solver in solvers:
        for label, scheme, thr, with_hard in settings:
            m = model
            if scheme == "scores" and solver == "icarma":
                if model_score is None:
                    continue
                m = model_score
            for tag in ("constant", "concave", "linear", "convex"):
                cfg = ScenarioConfig(
                    scenario=f"rq2_{solver}_{label}_{tag}", solver=solver,
                    scheme=scheme, threshold_mode=thr, score_with_hard=with_hard,
                    cost_profile=tag, users=users, seed=seed)
                _, _, _, rep = run_scenario(cfg, dataset, clf, m, out_dir)
                rows.append((cfg, rep))
    if out_dir:
        write_summary(rows, os.path.join(out_dir, "summary.csv"))
        write_manifest(out_dir, [c for c, _ in rows])
    return rows


_GROUP_HEADER = ["scenario", "solver", "group", "validity", "plausibility",
                 "cost_mean", "cost_std", "hap", "n_total", "n_valid",
                 "logp_cf_mean", "logp_f_mean"]

RQ3_SCENARIOS = ("non-personalized", "random", "race-correlated",
                 "income-dependent")


def run_rq3(dataset, clf, model=None, out_dir=None, users=200, seed=7,
            solver="oracle", threshold=3):
    """Fairness case study: four actionability-assignment scenarios solved
    with a constant cost profile, reported per gender and race group."""
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    rows, grouped = [], []
    for name in RQ3_SCENARIOS:
        if name == "non-personalized":
            cfg = ScenarioConfig(scenario=f"rq3_{solver}_{name}",
                                 solver=solver, scheme="binary",
                                 n_actionable=None, users=users, seed=seed)
        else:
            cfg = ScenarioConfig(scenario=f"rq3_{solver}_{name}",
                                 solver=solver, scheme="ranking",
                                 fairness_mode=name,
                                 threshold_mode="fixed",
                                 threshold_value=threshold,
                                 users=users, seed=seed)
        results, profiles, idx, rep = run_scenario(cfg, dataset, clf, model,
                                                   out_dir)
        rows.append((cfg, rep))
        breakdown = {}
        for keys in (("gender",), ("race",), ("gender", "race")):
            breakdown.update(metrics.group_breakdown(results, profiles,
                                                     dataset, idx, keys=keys))
        for gname, entry in breakdown.items():
            r = entry["report"]
            grouped.append([cfg.scenario, cfg.solver, gname,
                            repr(r.validity), repr(r.plausibility),
                            repr(r.cost_mean), repr(r.cost_std), repr(r.hap),
                            r.n_total, r.n_valid,
                            repr(entry["logp_cf_mean"]),
                            repr(entry["logp_f_mean"])])
    if out_dir:
        write_summary(rows, os.path.join(out_dir, "summary.csv"))
        with open(os.path.join(out_dir, "groups.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(_GROUP_HEADER)
            w.writerows(grouped)
        write_manifest(out_dir, [c for c, _ in rows])
    return rows, grouped


def group_gap(results_by_group, axis_value_a, axis_value_b, field="cost"):
    """Absolute difference of a per-group statistic between two groups."""
    return abs(results_by_group[axis_value_a][field]
               - results_by_group[axis_value_b][field])


def marginal_group_stats(results, profiles, dataset, idx, key):
    """Mean cost and mean counterfactual log-density per value of one group
    axis, computed over valid results."""
    breakdown = metrics.group_breakdown(results, profiles, dataset, idx,
                                        keys=(key,))
    out = {}
    for name, entry in breakdown.items():
        value = int(name.split("=")[1])
        out[value] = {"cost": entry["report"].cost_mean,
                      "logp_cf": entry["logp_cf_mean"],
                      "validity": entry["report"].validity}
    return out
