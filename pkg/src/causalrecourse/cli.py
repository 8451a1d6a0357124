"""Command-line entry points for the full pipeline: data generation, model
training, preference sampling, solving, reporting, and the three study
runners. Every command is deterministic under its seed and writes plain CSV
and JSON artifacts."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import amortized, classifier, experiments, metrics, scm
from .classifier import Classifier, ClassifierConfig
from .oracle import OracleConfig
from .preferences import (DISTRIBUTIONS, CostProfileParams, binary_profile,
                          profiles_from_csv, profiles_to_csv, sample_ranking,
                          sample_scores)
from .results import results_from_csv, results_to_csv
from .scm import ACTIONABLE


class CliError(Exception):
    pass


def _load_config(path):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise CliError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as e:
            raise CliError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(cfg, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    return cfg


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _load_dataset(args):
    data = os.path.join(args.data, "data.csv") if os.path.isdir(args.data) \
        else args.data
    noise = os.path.splitext(data)[0].replace("data", "noise") + ".csv"
    if not os.path.exists(data):
        raise CliError(f"dataset file not found: {data}")
    if not os.path.exists(noise):
        raise CliError(f"noise file not found: {noise}")
    return scm.Dataset.from_csv(data, noise)


def _load_classifier(args):
    if not os.path.exists(args.classifier):
        raise CliError(f"classifier file not found: {args.classifier}")
    return Classifier.load(args.classifier)


def _load_model(path):
    if not os.path.exists(path):
        raise CliError(f"model file not found: {path}")
    return amortized.ICarmaModel.load(path)


def cmd_gen_data(args):
    cfg = _load_config(args.config)
    n = int(cfg.get("n", args.n))
    ds = scm.sample_population(n, seed=args.seed)
    out = _outdir(args)
    ds.to_csv(os.path.join(out, "data.csv"), os.path.join(out, "noise.csv"))
    experiments.write_manifest(out, [])
    return 0


def cmd_train_classifier(args):
    cfg = _load_config(args.config)
    ds = _load_dataset(args)
    ccfg = ClassifierConfig(seed=args.seed, **{
        k: cfg[k] for k in ("epochs", "batch", "lr") if k in cfg})
    clf, history = classifier.train(ds, ccfg)
    out = _outdir(args)
    clf.save(os.path.join(out, "classifier.json"))
    with open(os.path.join(out, "history.csv"), "w") as fh:
        fh.write("epoch,loss,train_acc,val_acc\n")
        for h in history:
            fh.write("%d,%s,%s,%s\n" % (h["epoch"], repr(float(h["loss"])),
                                        repr(float(h["train_acc"])),
                                        repr(float(h["val_acc"]))))
    return 0


def cmd_train_icarma(args):
    cfg = _load_config(args.config)
    ds = _load_dataset(args)
    clf = _load_classifier(args)
    maker = (amortized.TrainConfig.score_mode if args.mode == "score"
             else amortized.TrainConfig.rank_mode)
    allowed = ("epochs", "batch", "lr", "hinge_margin", "tau", "w_cost",
               "w_kl", "w_plaus", "w_feas", "w_hinge", "eval_every",
               "val_users", "checkpoint_cost_weight")
    tcfg = maker(seed=args.seed, **{k: cfg[k] for k in allowed if k in cfg})
    model, history = amortized.train(ds, clf, config=tcfg)
    out = _outdir(args)
    model.save(os.path.join(out, f"icarma_{args.mode}.json"))
    with open(os.path.join(out, f"icarma_{args.mode}_history.csv"), "w") as fh:
        fh.write("epoch,loss,val_validity,val_cost,score\n")
        for h in history:
            fh.write("%d,%s,%s,%s,%s\n" % (
                h["epoch"], repr(float(h["loss"])), repr(float(h["val_validity"])),
                repr(float(h["val_cost"])), repr(float(h["score"]))))
    return 0


def cmd_sample_prefs(args):
    cfg = _load_config(args.config)
    scheme = cfg.get("scheme", args.scheme)
    rng = np.random.default_rng(args.seed)
    profiles = []
    for _ in range(args.users):
        if scheme == "binary":
            profiles.append(binary_profile(ACTIONABLE))
        elif scheme == "ranking":
            profiles.append(sample_ranking(
                cfg.get("distribution", args.distribution), rng,
                threshold_mode=cfg.get("threshold_mode", args.threshold_mode),
                threshold_value=cfg.get("threshold_value", args.threshold)))
        elif scheme == "scores":
            profiles.append(sample_scores(
                rng, with_hard=bool(cfg.get("with_hard", args.with_hard))))
        else:
            raise CliError(f"unknown preference scheme: {scheme}")
    out = _outdir(args)
    profiles_to_csv(profiles, os.path.join(out, "prefs.csv"))
    _write_weight_curves(os.path.join(out, "weight_curves.csv"))
    return 0


def _write_weight_curves(path, s_max=5):
    """Tabulate the score -> (weight, prior) mapping for every cost profile
    so downstream tooling can render the curve family without importing this
    package."""
    from .preferences import prior, weight
    with open(path, "w") as fh:
        fh.write("profile,alpha,s,s_max,weight,prior\n")
        for tag in ("constant", "concave", "linear", "convex"):
            params = CostProfileParams.from_tag(tag)
            for s in range(1, s_max + 1):
                fh.write("%s,%s,%d,%d,%s,%s\n" % (
                    tag, repr(float(params.alpha)), s, s_max,
                    repr(float(weight(s, s_max, params))),
                    repr(float(prior(s, s_max, params)))))


def cmd_solve(args):
    ds = _load_dataset(args)
    clf = _load_classifier(args)
    if not os.path.exists(args.prefs):
        raise CliError(f"preference file not found: {args.prefs}")
    profiles = profiles_from_csv(args.prefs)
    idx = experiments.deployment_pool(ds, clf, args.users)
    if len(profiles) < len(idx):
        raise CliError(
            f"need {len(idx)} preference profiles, file has {len(profiles)}")
    profiles = profiles[:len(idx)]
    params = CostProfileParams.from_tag(args.cost_profile)
    if args.solver == "oracle":
        ocfg = OracleConfig.from_dataset(
            ds, plausibility_hard=not args.no_plausibility,
            cost_params=params)
        from .oracle import solve_population
        results = solve_population(ds.X[idx], profiles, clf, ocfg,
                                   user_ids=idx)
    else:
        model = _load_model(args.model)
        results = amortized.recommend_population(model, ds.X[idx], profiles,
                                                 clf, params, user_ids=idx)
    out = _outdir(args)
    results_to_csv(results, os.path.join(out, "results.csv"))
    profiles_to_csv(profiles, os.path.join(out, "prefs_used.csv"))
    return 0


def cmd_report(args):
    if not os.path.exists(args.results):
        raise CliError(f"results file not found: {args.results}")
    if not os.path.exists(args.prefs):
        raise CliError(f"preference file not found: {args.prefs}")
    results = results_from_csv(args.results)
    profiles = profiles_from_csv(args.prefs)
    if len(results) != len(profiles):
        raise CliError("results and preference files have different lengths")
    rep = metrics.report(results, profiles)
    out = _outdir(args)
    metrics.reports_to_csv([("report", results[0].solver if results else "",
                             rep)],
                           os.path.join(out, "report.csv"))
    return 0


def _rq_common(args, need_model):
    ds = _load_dataset(args)
    clf = _load_classifier(args)
    model = None
    if args.model:
        model = _load_model(args.model)
    elif need_model:
        raise CliError("this runner needs --model (a trained icarma file)")
    return ds, clf, model


def cmd_rq1(args):
    solvers = (args.solver,) if args.solver else ("oracle", "icarma")
    ds, clf, model = _rq_common(args, need_model="icarma" in solvers)
    experiments.run_rq1(ds, clf, model, _outdir(args), users=args.users,
                        seed=args.seed, solvers=solvers,
                        ablation=args.ablation)
    return 0


def cmd_rq2(args):
    solvers = (args.solver,) if args.solver else ("icarma",)
    ds, clf, model = _rq_common(args, need_model="icarma" in solvers)
    model_score = _load_model(args.model_score) if args.model_score else None
    experiments.run_rq2(ds, clf, model, model_score, _outdir(args),
                        users=args.users, seed=args.seed, solvers=solvers)
    return 0


def cmd_rq3(args):
    solver = args.solver or "oracle"
    ds, clf, model = _rq_common(args, need_model=solver == "icarma")
    experiments.run_rq3(ds, clf, model, _outdir(args), users=args.users,
                        seed=args.seed, solver=solver)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="causalrecourse",
        description="individualized causal recourse pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(fn=fn)
        sp.add_argument("--config", default=None,
                        help="JSON file overriding command defaults")
        sp.add_argument("--seed", type=int, default=7)
        sp.add_argument("--out", default="out")
        return sp

    sp = add("gen-data", cmd_gen_data, help="sample the synthetic population")
    sp.add_argument("--n", type=int, default=20000)

    sp = add("train-classifier", cmd_train_classifier,
             help="train the decision classifier")
    sp.add_argument("--data", required=True)

    sp = add("train-icarma", cmd_train_icarma,
             help="train the amortized recourse model")
    sp.add_argument("--data", required=True)
    sp.add_argument("--classifier", required=True)
    sp.add_argument("--mode", choices=("rank", "score"), default="rank")

    sp = add("sample-prefs", cmd_sample_prefs,
             help="sample preference profiles")
    sp.add_argument("--scheme", choices=("binary", "ranking", "scores"),
                    default="ranking")
    sp.add_argument("--distribution", choices=tuple(DISTRIBUTIONS),
                    default="uniform")
    sp.add_argument("--threshold-mode", choices=("none", "uniform", "fixed"),
                    default="none")
    sp.add_argument("--threshold", type=int, default=None)
    sp.add_argument("--with-hard", action="store_true")
    sp.add_argument("--users", type=int, default=200)

    sp = add("solve", cmd_solve, help="solve recourse for rejected users")
    sp.add_argument("--data", required=True)
    sp.add_argument("--classifier", required=True)
    sp.add_argument("--model", default=None)
    sp.add_argument("--prefs", required=True)
    sp.add_argument("--solver", choices=("oracle", "icarma"),
                    default="oracle")
    sp.add_argument("--cost-profile", default="linear",
                    choices=("constant", "concave", "linear", "convex"))
    sp.add_argument("--no-plausibility", action="store_true")
    sp.add_argument("--users", type=int, default=None)

    sp = add("report", cmd_report, help="summarize a results file")
    sp.add_argument("--results", required=True)
    sp.add_argument("--prefs", required=True)

    for name, fn in (("rq1", cmd_rq1), ("rq2", cmd_rq2), ("rq3", cmd_rq3)):
        sp = add(name, fn, help=f"run the {name} study")
        sp.add_argument("--data", required=True)
        sp.add_argument("--classifier", required=True)
        sp.add_argument("--model", default=None)
        sp.add_argument("--solver", choices=("oracle", "icarma"),
                        default=None)
        sp.add_argument("--users", type=int, default=200)
        if name == "rq1":
            sp.add_argument("--ablation", action="store_true")
        if name == "rq2":
            sp.add_argument("--model-score", default=None)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else 0
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
