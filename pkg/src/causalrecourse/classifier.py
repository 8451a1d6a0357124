"""The deployed decision model: a 32x32 ReLU network trained with Adam on
binary cross-entropy over z-scored features. White-box: the amortized solver
differentiates through it via the tape."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import autodiff as ad
from .nn import MLP, Adam


@dataclass
class ClassifierConfig:
    epochs: int = 500
    batch: int = 256
    lr: float = 1e-3
    hidden: tuple = (32, 32)
    seed: int = 0


class Classifier:
    def __init__(self, net, mean, std, seed=0):
        self.net = net
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)
        self.seed = seed

    def normalize(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def logits(self, x):
        xn = np.atleast_2d(self.normalize(x))
        return self.net.forward_np(xn)[:, 0]

    def predict_proba(self, x):
        p = expit(self.logits(x))
        return float(p[0]) if np.asarray(x).ndim == 1 else p

    def predict(self, x):
        p = self.predict_proba(x)
        if np.ndim(p) == 0:
            return int(p >= 0.5)
        return (p >= 0.5).astype(np.int64)

    def tape_logit(self, tape, xn_matrix_var):
        """Differentiable logit from an already-normalized (batch, 7) node;
        classifier weights enter as constants (the model stays fixed)."""
        out = self.net.tape_forward(tape, xn_matrix_var, trainable=False)
        return ad.col(out, 0)

    def save(self, path):
        d = self.net.to_json_dict()
        d["norm_stats"] = {"mean": self.mean.tolist(), "std": self.std.tolist()}
        d["seed"] = self.seed
        with open(path, "w") as fh:
            json.dump(d, fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            d = json.load(fh)
        net = MLP.from_json_dict(d)
        return cls(net, d["norm_stats"]["mean"], d["norm_stats"]["std"],
                   seed=d.get("seed", 0))


def train(dataset, config=None):
    """Train the decision model on the train split; returns the classifier
    and a per-epoch history of train/val accuracy."""
    cfg = config or ClassifierConfig()
    tr = dataset.indices("train")
    va = dataset.indices("val")
    y_tr = dataset.y[tr].astype(np.float64)
    if len(np.unique(y_tr)) < 2:
        raise ValueError("training split contains a single class")
    Xn_tr = dataset.normalize(dataset.X[tr])
    Xn_va = dataset.normalize(dataset.X[va])
    y_va = dataset.y[va]

    net = MLP((7,) + tuple(cfg.hidden) + (1,), seed=cfg.seed)
    opt = Adam([p.shape for p in net.param_arrays()], lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    n = len(tr)
    history = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch):
            idx = order[start:start + cfg.batch]
            xb, yb = Xn_tr[idx], y_tr[idx]
            tape = ad.Tape()
            xv = tape.lift(xb)
            logit, params = net.tape_forward(tape, xv, trainable=True)
            l = ad.col(logit, 0)
            yv = tape.lift(yb)
            # stable BCE: y*softplus(-l) + (1-y)*softplus(l)
            loss = ad.vmean(yv * ad.softplus(-l) + (1.0 - yv) * ad.softplus(l))
            grads = tape.backward(loss)
            new = opt.step([p.value for p in params],
                           [grads.wrt(p) for p in params])
            net.set_param_arrays(new)
        acc_tr = np.mean((net.forward_np(Xn_tr)[:, 0] >= 0.0) == (y_tr == 1))
        acc_va = np.mean((net.forward_np(Xn_va)[:, 0] >= 0.0) == (y_va == 1))
        history.append({"epoch": epoch, "loss": float(loss.value),
                        "train_acc": float(acc_tr), "val_acc": float(acc_va)})

    clf = Classifier(net, dataset.mean, dataset.std, seed=cfg.seed)
    return clf, history


def deployment_pool(dataset, clf):
    """Indices of deploy-split individuals the classifier rejects."""
    dep = dataset.indices("deploy")
    preds = clf.predict(dataset.X[dep])
    return dep[preds == 0]
