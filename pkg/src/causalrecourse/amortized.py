"""Amortized individualized recourse: a Mask Network choosing which features
to act on (binary Gumbel relaxation, straight-through) and an Action Network
choosing the intervention values, trained jointly through the exact SCM
against the frozen classifier.

The mask network is conditioned on the per-feature selection priors and the
individual actionability mask in addition to the latent noise vector, so one
trained model adapts its recommendations to each user's stated preferences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np
from scipy.special import expit

from . import autodiff as ad
from . import scm
from .nn import MLP, Adam
from .preferences import (CostProfileParams, actionable_mask, profile_priors,
                          profile_weights, sample_ranking, sample_scores)
from .results import RecourseResult, action_cost
from .scm import ACTIONABLE, ACTIONABLE_IDX, NOISE_STD

_LOG_2PI = float(np.log(2.0 * np.pi))
_SIGMA = np.array([NOISE_STD[f] for f in ACTIONABLE])  # LA, Dur, Inc, Sav


@dataclass
class TrainConfig:
    mode: str = "rank"
    epochs: int = 450
    batch: int = 128
    lr: float = 0.005
    hinge_margin: float = 0.013
    tau: float = 0.36
    w_cost: float = 1.1
    w_kl: float = 1.5
    w_plaus: float = 0.225
    w_feas: float = 0.1
    # the validity term's coefficient is a free parameter; at z-score cost
    # scale the hinge needs this much weight to balance the cost pull
    w_hinge: float = 70.0
    mask_hidden: tuple = (32, 32)
    action_hidden: tuple = (32, 32, 32)
    eval_every: int = 10
    checkpoint_cost_weight: float = 0.1
    val_users: int = 512
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "batch", "lr", "hinge_margin", "tau", "w_cost",
                     "w_kl", "w_plaus", "w_feas"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def rank_mode(cls, **kw):
        return cls(mode="rank", **kw)

    @classmethod
    def score_mode(cls, **kw):
        kw.setdefault("action_hidden", (32, 32))
        return cls(mode="score", epochs=900, lr=0.001, hinge_margin=0.004,
                   tau=0.49, w_cost=1.3, w_kl=0.9, w_plaus=0.125, w_feas=0.1,
                   **kw)


class TrainingSampler:
    """On-the-fly preference augmentation: uniform rankings (or scores) with
    a uniform non-actionability threshold, and a cost profile drawn per batch
    so the prior-conditioned mask network sees the whole range."""

    COST_TAGS = ("constant", "concave", "linear", "convex")

    def __init__(self, mode="rank"):
        if mode not in ("rank", "score"):
            raise ValueError("mode must be 'rank' or 'score'")
        self.mode = mode

    def __call__(self, rng, n):
        params = CostProfileParams.from_tag(self.COST_TAGS[rng.integers(4)])
        if self.mode == "rank":
            profiles = [sample_ranking("uniform", rng, threshold_mode="uniform")
                        for _ in range(n)]
        else:
            profiles = [sample_scores(rng, with_hard=True) for _ in range(n)]
        return profiles, params


def profile_arrays(profiles, params):
    """(weights, priors, actionability mask) as (n, 4) arrays."""
    w = np.stack([profile_weights(p, params) for p in profiles])
    pi = np.stack([profile_priors(p, params) for p in profiles])
    A = np.stack([actionable_mask(p) for p in profiles])
    return w, pi, A


class ICarmaModel:
    def __init__(self, mask_net, action_net, z_mean, z_std, x_mean, x_std,
                 feasible_lo, feasible_hi, config):
        self.mask_net = mask_net
        self.action_net = action_net
        self.z_mean = np.asarray(z_mean, dtype=np.float64)
        self.z_std = np.asarray(z_std, dtype=np.float64)
        self.x_mean = np.asarray(x_mean, dtype=np.float64)
        self.x_std = np.asarray(x_std, dtype=np.float64)
        self.feasible_lo = np.asarray(feasible_lo, dtype=np.float64)
        self.feasible_hi = np.asarray(feasible_hi, dtype=np.float64)
        self.config = config

    def normalize_z(self, u):
        return (np.asarray(u, dtype=np.float64) - self.z_mean) / self.z_std

    def mask_probs(self, u, pi, A):
        """Deterministic per-feature selection probabilities."""
        zin = np.concatenate([np.atleast_2d(self.normalize_z(u)),
                              np.atleast_2d(pi), np.atleast_2d(A)], axis=1)
        return expit(self.mask_net.forward_np(zin))

    def action_values(self, u, mask):
        an = self.action_net.forward_np(
            np.concatenate([np.atleast_2d(self.normalize_z(u)),
                            np.atleast_2d(mask)], axis=1))
        return an * self.x_std[list(ACTIONABLE_IDX)] + self.x_mean[list(ACTIONABLE_IDX)]

    def save(self, path):
        d = {"mask_net": self.mask_net.to_json_dict(),
             "action_net": self.action_net.to_json_dict(),
             "z_mean": self.z_mean.tolist(), "z_std": self.z_std.tolist(),
             "x_mean": self.x_mean.tolist(), "x_std": self.x_std.tolist(),
             "feasible_lo": self.feasible_lo.tolist(),
             "feasible_hi": self.feasible_hi.tolist(),
             "config": asdict(self.config)}
        d["config"]["mask_hidden"] = list(self.config.mask_hidden)
        d["config"]["action_hidden"] = list(self.config.action_hidden)
        with open(path, "w") as fh:
            json.dump(d, fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            d = json.load(fh)
        cfgd = dict(d["config"])
        cfgd["mask_hidden"] = tuple(cfgd["mask_hidden"])
        cfgd["action_hidden"] = tuple(cfgd["action_hidden"])
        return cls(MLP.from_json_dict(d["mask_net"]),
                   MLP.from_json_dict(d["action_net"]),
                   d["z_mean"], d["z_std"], d["x_mean"], d["x_std"],
                   d["feasible_lo"], d["feasible_hi"],
                   TrainConfig(**cfgd))


def _gauss_logpdf_const(u, sigma):
    return -0.5 * _LOG_2PI - np.log(sigma) - 0.5 * (u / sigma) ** 2


def _gauss_logpdf_var(u_var, sigma):
    return (-0.5 * _LOG_2PI - np.log(sigma)) + u_var * u_var * (-0.5 / sigma ** 2)


def combined_loss(tape, model, clf, batch, cfg, gumbel_noise=None,
                  straight_through=True):
    """Build the full training loss on a tape for one batch.

    batch: dict with x (B,7), u (B,7), logp_f (B,), w/pi/A (B,4) arrays.
    gumbel_noise: (B,4) logistic noise for the relaxed mask, or None for the
    deterministic hard mask (test-time behavior).
    Returns (loss Var, trainable param Vars, diagnostics dict).
    """
    x, u = batch["x"], batch["u"]
    w, pi, A = batch["w"], batch["pi"], batch["A"]
    B = x.shape[0]
    mean, std = model.x_mean, model.x_std
    ge, ag, ed = x[:, 0], x[:, 1], x[:, 2]

    zn = model.normalize_z(u)
    mask_in = tape.lift(np.concatenate([zn, pi, A], axis=1))
    logits, mask_params = model.mask_net.tape_forward(tape, mask_in,
                                                      trainable=True)

    mu, m = [], []
    for i in range(4):
        li = ad.col(logits, i)
        mu_i = ad.sigmoid(li)
        if gumbel_noise is not None:
            p_i = ad.sigmoid((li + tape.lift(gumbel_noise[:, i])) * (1.0 / cfg.tau))
        else:
            p_i = mu_i
        if straight_through:
            # hard forward, relaxed backward
            hard = (np.asarray(p_i.value) >= 0.5).astype(np.float64)
            p_i = p_i + tape.lift(hard - np.asarray(p_i.value))
        m.append(p_i * tape.lift(A[:, i]))
        mu.append(mu_i)

    act_cols = [tape.lift(zn[:, j]) for j in range(7)] + m
    act_in = ad.stack(act_cols)
    a_norm, action_params = model.action_net.tape_forward(tape, act_in,
                                                          trainable=True)
    a_raw = [ad.col(a_norm, i) * std[ACTIONABLE_IDX[i]] + mean[ACTIONABLE_IDX[i]]
             for i in range(4)]

    # differentiable abduction-intervention-prediction with mask blending
    la_f, inc_f = x[:, 3], x[:, 5]
    la_cf = m[0] * a_raw[0] + (1.0 - m[0]) * tape.lift(la_f)
    dur_base = -1.0 + 0.1 * ag + 2.0 * (1.0 - ge)
    dur_struct = tape.lift(dur_base) + la_cf + tape.lift(u[:, 4])
    dur_cf = m[1] * a_raw[1] + (1.0 - m[1]) * dur_struct
    inc_cf = m[2] * a_raw[2] + (1.0 - m[2]) * tape.lift(inc_f)
    sav_struct = (ad.indicator_stopgrad(inc_cf) * inc_cf * 1.5
                  + tape.lift(-4.0 + u[:, 6]))
    sav_cf = m[3] * a_raw[3] + (1.0 - m[3]) * sav_struct
    cf = [la_cf, dur_cf, inc_cf, sav_cf]

    # classifier on the normalized counterfactual
    cols = [tape.lift((x[:, j] - mean[j]) / std[j]) for j in range(3)]
    cols += [(v - mean[j]) * (1.0 / std[j]) for v, j in zip(cf, ACTIONABLE_IDX)]
    p_cf = ad.sigmoid(clf.tape_logit(tape, ad.stack(cols)))
    hinge = ad.relu((0.5 + cfg.hinge_margin) - p_cf)

    # individualized weighted squared cost over selected features
    cost = None
    for i, (v, j) in enumerate(zip(cf, ACTIONABLE_IDX)):
        dn = (v - tape.lift(x[:, j])) * (1.0 / std[j])
        term = m[i] * tape.lift(w[:, i]) * dn * dn
        cost = term if cost is None else cost + term

    # KL(Bernoulli(mu) || Bernoulli(pi)), logit-stable
    kl = None
    for i in range(4):
        li = ad.col(logits, i)
        log_mu = -ad.softplus(-li)
        log_1mu = -ad.softplus(li)
        pc = np.clip(pi[:, i], 1e-12, 1 - 1e-12)
        term = (mu[i] * (log_mu - tape.lift(np.log(pc)))
                + (1.0 - mu[i]) * (log_1mu - tape.lift(np.log(1.0 - pc))))
        kl = term if kl is None else kl + term

    # exact counterfactual log-density; only the four actionable noise terms
    # can move, the rest is carried over from the factual
    fixed = batch["logp_f"].copy()
    for i, j in enumerate(ACTIONABLE_IDX):
        fixed -= _gauss_logpdf_const(u[:, j], _SIGMA[i])
    u_cf = [
        la_cf - tape.lift(0.01 * (ag - 5.0) ** 2 + (1.0 - ge)),
        dur_cf - (tape.lift(dur_base) + la_cf),
        inc_cf - tape.lift(-4.0 + 0.1 * (ag + 35.0) + 2.0 * ge + ge * ed),
        sav_cf - (ad.indicator_stopgrad(inc_cf) * inc_cf * 1.5
                  + tape.lift(-4.0)),
    ]
    logp_cf = tape.lift(fixed)
    for i in range(4):
        logp_cf = logp_cf + _gauss_logpdf_var(u_cf[i], _SIGMA[i])
    plaus = ad.relu(tape.lift(batch["logp_f"]) - logp_cf)

    # linear penalty on leaving the train-split feasible interval
    feas = None
    for v, j in zip(cf, ACTIONABLE_IDX):
        hi, lo = model.feasible_hi[j], model.feasible_lo[j]
        term = (ad.relu(v - hi) + ad.relu(lo - v)) * (1.0 / hi)
        feas = term if feas is None else feas + term

    per_sample = (cfg.w_cost * cost + cfg.w_kl * kl + cfg.w_hinge * hinge
                  + cfg.w_plaus * plaus + cfg.w_feas * feas)
    loss = ad.vmean(per_sample)
    diag = {
        "p_cf": np.asarray(p_cf.value),
        "logp_cf": np.asarray(logp_cf.value),
        "mask": np.stack([np.asarray(mi.value) for mi in m], axis=1),
    }
    return loss, mask_params + action_params, diag


def _make_batch(dataset, model, idx, profiles, params):
    x = dataset.X[idx]
    u = dataset.U[idx]
    w, pi, A = profile_arrays(profiles, params)
    return {"x": x, "u": u, "logp_f": scm.log_density(x),
            "w": w, "pi": pi, "A": A}


def recommend(model, x, profile, clf, cost_params=None, user_id=0):
    """Deterministic inference: hard mask (selection prob >= 0.5, restricted
    to the individually actionable set), pinned action values, exact SCM
    counterfactual."""
    params = cost_params or CostProfileParams.from_tag("linear")
    x = np.asarray(x, dtype=np.float64)
    u = scm.abduct(x)
    pi = profile_priors(profile, params)
    A = actionable_mask(profile)
    probs = model.mask_probs(u, pi, A)[0]
    mask = ((probs >= 0.5) & (A > 0)).astype(np.float64)
    vals = model.action_values(u, mask)[0]
    action = {f: float(vals[i]) for i, f in enumerate(ACTIONABLE) if mask[i]}
    x_cf = scm.predict(u, action)
    valid = bool(clf.predict(x_cf) == 1)
    w = profile_weights(profile, params)
    cu, cw = action_cost(x, x_cf, action, model.x_std, weights=w)
    if not action and not valid:
        cu = cw = float("nan")
    logp_f = scm.log_density(x)
    return RecourseResult(
        user_id=user_id, solver="icarma", action=action, x_cf=x_cf,
        valid=valid, cost_unweighted=cu, cost_weighted=cw,
        logp_f=logp_f, logp_cf=scm.log_density(x_cf),
        hard_action=bool(set(action) & profile.hard_feature_set()))


def recommend_population(model, X, profiles, clf, cost_params=None,
                         user_ids=None):
    if user_ids is None:
        user_ids = range(len(X))
    return [recommend(model, X[i], profiles[i], clf, cost_params,
                      user_id=uid)
            for i, uid in enumerate(user_ids)]


def _validation_score(model, dataset, clf, idx, profiles, params, cfg):
    res = recommend_population(model, dataset.X[idx], profiles, clf, params,
                               user_ids=idx)
    val = np.mean([r.valid for r in res])
    costs = [r.cost_unweighted for r in res if r.valid]
    cmean = float(np.mean(costs)) if costs else 0.0
    return float(val) - cfg.checkpoint_cost_weight * cmean, float(val), cmean


def train(dataset, clf, sampler=None, config=None):
    """Joint training of the mask and action networks on the classifier's
    train-split rejects, with preferences resampled every batch. Deterministic
    under the config seed; the checkpoint with the best validation
    validity-vs-cost balance is returned."""
    cfg = config or TrainConfig.rank_mode()
    sampler = sampler or TrainingSampler(cfg.mode)
    rng = np.random.default_rng(cfg.seed)

    tr = dataset.indices("train")
    tr = tr[clf.predict(dataset.X[tr]) == 0]
    va = dataset.indices("val")
    va = va[clf.predict(dataset.X[va]) == 0][:cfg.val_users]
    if len(tr) == 0:
        raise ValueError("no classifier-negative training individuals")

    z = dataset.U[dataset.indices("train")]
    z_mean, z_std = z.mean(axis=0), z.std(axis=0)
    lo, hi = dataset.feasible_range()
    mask_net = MLP((15,) + tuple(cfg.mask_hidden) + (4,), seed=cfg.seed)
    action_net = MLP((11,) + tuple(cfg.action_hidden) + (4,), seed=cfg.seed + 1)
    model = ICarmaModel(mask_net, action_net, z_mean, z_std,
                        dataset.mean, dataset.std, lo, hi, cfg)

    n_params_mask = len(mask_net.param_arrays())
    all_shapes = [p.shape for p in mask_net.param_arrays()] + \
                 [p.shape for p in action_net.param_arrays()]
    opt = Adam(all_shapes, lr=cfg.lr)

    # fixed validation draw so checkpoint scores are comparable
    val_rng = np.random.default_rng(cfg.seed + 1)
    val_profiles, val_params = sampler(val_rng, len(va))

    best = None
    history = []
    n = len(tr)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch):
            idx = tr[order[start:start + cfg.batch]]
            profiles, params = sampler(rng, len(idx))
            batch = _make_batch(dataset, model, idx, profiles, params)
            un = rng.uniform(1e-9, 1 - 1e-9, size=(len(idx), 4))
            gnoise = np.log(un) - np.log1p(-un)
            tape = ad.Tape()
            loss, pvars, _ = combined_loss(tape, model, clf, batch, cfg,
                                           gumbel_noise=gnoise)
            lval = float(loss.value)
            if not np.isfinite(lval):
                raise RuntimeError(
                    f"training diverged at epoch {epoch}: loss={lval}")
            grads = tape.backward(loss)
            new = opt.step([p.value for p in pvars],
                           [grads.wrt(p) for p in pvars])
            mask_net.set_param_arrays(new[:n_params_mask])
            action_net.set_param_arrays(new[n_params_mask:])
        if (epoch + 1) % cfg.eval_every == 0 or epoch == cfg.epochs - 1:
            score, val, cmean = _validation_score(model, dataset, clf, va,
                                                  val_profiles, val_params, cfg)
            history.append({"epoch": epoch, "loss": lval, "val_validity": val,
                            "val_cost": cmean, "score": score})
            if best is None or score > best[0]:
                best = (score, [p.copy() for p in mask_net.param_arrays()],
                        [p.copy() for p in action_net.param_arrays()])
    if best is not None:
        mask_net.set_param_arrays(best[1])
        action_net.set_param_arrays(best[2])
    return model, history
