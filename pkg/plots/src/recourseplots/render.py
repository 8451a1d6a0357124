"""Render publication-style figures from the recourse pipeline's CSV
artifacts: cost-profile weight curves, factual/counterfactual log-density
distributions, and grouped fairness summaries.

Rendering is read-only and deterministic: identical input CSVs produce
byte-identical image files. Styling defaults favor grayscale readability."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

KINDS = ("weight-curves", "logdensity-dist", "fairness-box")

_WEIGHT_COLUMNS = ("profile", "alpha", "s", "s_max", "weight", "prior")
_RESULT_COLUMNS = ("user_id", "solver", "valid", "cost", "logp_f", "logp_cf")
_GROUP_COLUMNS = ("scenario", "solver", "group", "cost_mean", "cost_std",
                  "logp_cf_mean", "n_valid")

# grayscale-friendly line styles, cycled per series
_STYLES = (("0.0", "-"), ("0.35", "--"), ("0.6", "-."), ("0.15", ":"),
           ("0.5", "-"), ("0.75", "--"))


class SchemaError(ValueError):
    """An input CSV lacks columns the figure kind needs."""


@dataclass
class PlotSpec:
    kind: str
    inputs: tuple[str, ...]
    out: str
    title: str | None = None
    dpi: int = 150
    figsize: tuple[float, float] = (9.0, 4.0)
    styling: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {', '.join(KINDS)}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


def _load(path, required):
    if not os.path.exists(path):
        raise FileNotFoundError(f"input CSV not found: {path}")
    df = pd.read_csv(path)
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SchemaError(
            f"{path} is missing required columns: {', '.join(missing)}")
    return df


def _empty_panel(ax, message):
    ax.text(0.5, 0.5, message, ha="center", va="center",
            transform=ax.transAxes, fontsize=11, color="0.4")
    ax.set_xticks([])
    ax.set_yticks([])


def _render_weight_curves(spec, fig):
    """One curve per cost profile: weight vs score (left) and mask prior vs
    score (right), the concave/linear/convex family."""
    df = _load(spec.inputs[0], _WEIGHT_COLUMNS)
    axes = fig.subplots(1, 2)
    profiles = sorted(df["profile"].unique())
    for ax, col, label in ((axes[0], "weight", "actionability weight w(s)"),
                           (axes[1], "prior", "mask prior π(s)")):
        if df.empty:
            _empty_panel(ax, "no rows in input")
            continue
        for k, tag in enumerate(profiles):
            sub = df[df["profile"] == tag].sort_values("s")
            color, ls = _STYLES[k % len(_STYLES)]
            alpha = sub["alpha"].iloc[0]
            ax.plot(sub["s"], sub[col], color=color, linestyle=ls,
                    marker="o", markersize=3,
                    label=f"{tag} (α={alpha:g})")
        ax.set_xlabel("actionability score s")
        ax.set_ylabel(label)
        ax.legend(fontsize=8)
        ax.grid(True, color="0.9")


def _render_logdensity_dist(spec, fig):
    """Overlaid counterfactual log-density histograms, one per results CSV,
    with the factual distribution of the first file as reference."""
    frames = [(os.path.splitext(os.path.basename(p))[0],
               _load(p, _RESULT_COLUMNS)) for p in spec.inputs]
    ax = fig.subplots(1, 1)
    series = []
    for name, df in frames:
        sub = df[df["valid"] == 1]
        if not sub.empty:
            series.append((name, sub["logp_cf"].to_numpy()))
    if not series:
        _empty_panel(ax, "no valid results in any input")
        return
    ref = frames[0][1]["logp_f"].to_numpy()
    lo = min(min(v.min() for _, v in series), ref.min())
    hi = max(max(v.max() for _, v in series), ref.max())
    bins = 30
    ax.hist(ref, bins=bins, range=(lo, hi), density=True, color="0.85",
            label="factual log p(x)")
    for k, (name, v) in enumerate(series):
        color, ls = _STYLES[k % len(_STYLES)]
        ax.hist(v, bins=bins, range=(lo, hi), density=True,
                histtype="step", color=color, linestyle=ls,
                label=f"{name} (counterfactual)")
    ax.set_xlabel("log density")
    ax.set_ylabel("relative frequency")
    ax.legend(fontsize=8)


def _render_fairness_box(spec, fig):
    """Per-group recourse cost (left, mean with one-standard-deviation
    whiskers) and counterfactual log-density (right), grouped by scenario.
    Intersectional rows (comma-joined group labels) are skipped; pass a
    filtered CSV to plot them instead."""
    df = _load(spec.inputs[0], _GROUP_COLUMNS)
    df = df[~df["group"].str.contains(",")]
    axes = fig.subplots(1, 2)
    if df.empty:
        for ax in axes:
            _empty_panel(ax, "no marginal group rows in input")
        return
    scenarios = list(dict.fromkeys(df["scenario"]))
    groups = sorted(df["group"].unique())
    width = 0.8 / max(len(groups), 1)
    for ax, col, err, label in (
            (axes[0], "cost_mean", "cost_std", "recourse cost"),
            (axes[1], "logp_cf_mean", None, "counterfactual log density")):
        for k, g in enumerate(groups):
            xs, ys, es = [], [], []
            for i, scen in enumerate(scenarios):
                row = df[(df["scenario"] == scen) & (df["group"] == g)]
                if row.empty:
                    continue
                xs.append(i + (k - (len(groups) - 1) / 2) * width)
                ys.append(float(row[col].iloc[0]))
                es.append(float(row[err].iloc[0]) if err else 0.0)
            color, _ = _STYLES[k % len(_STYLES)]
            ax.bar(xs, ys, width=width * 0.9, color=color,
                   edgecolor="black", linewidth=0.5,
                   yerr=es if err else None, ecolor="0.3", capsize=2,
                   label=g)
        ax.set_xticks(range(len(scenarios)))
        ax.set_xticklabels([s.split("_")[-1] for s in scenarios],
                           rotation=20, ha="right", fontsize=8)
        ax.set_ylabel(label)
        ax.legend(fontsize=8)
        ax.grid(True, axis="y", color="0.9")


_RENDERERS = {"weight-curves": _render_weight_curves,
              "logdensity-dist": _render_logdensity_dist,
              "fairness-box": _render_fairness_box}


def render(spec: PlotSpec) -> str:
    """Render the figure described by `spec` and return the output path."""
    fig = plt.figure(figsize=spec.figsize)
    try:
        _RENDERERS[spec.kind](spec, fig)
        if spec.title:
            fig.suptitle(spec.title)
        fig.tight_layout()
        out_dir = os.path.dirname(os.path.abspath(spec.out))
        os.makedirs(out_dir, exist_ok=True)
        fig.savefig(spec.out, dpi=spec.dpi,
                    metadata=_stable_metadata(spec.out))
    finally:
        plt.close(fig)
    return spec.out


def _stable_metadata(path):
    """Strip run-time metadata (timestamps, tool versions) so identical
    inputs yield byte-identical files."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        return {"Software": ""}
    if ext == ".pdf":
        return {"CreationDate": None, "Producer": "", "Creator": ""}
    if ext in (".svg", ".svgz"):
        return {"Date": None}
    return None
