"""Ground-truth loan SCM: sampling, abduction, intervention, counterfactuals,
labels, and exact log-density.

Feature order (also the topological evaluation order of the causal graph):
Ge (gender), Ag (age offset), Ed (education), LA (loan amount),
Dur (duration), Inc (income), Sav (savings). LA, Dur, Inc and Sav are the
globally actionable features.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit
from scipy.stats import gamma as gamma_dist
from scipy.stats import norm as norm_dist

FEATURES = ("Ge", "Ag", "Ed", "LA", "Dur", "Inc", "Sav")
ACTIONABLE = ("LA", "Dur", "Inc", "Sav")
F_IDX = {name: i for i, name in enumerate(FEATURES)}
ACTIONABLE_IDX = tuple(F_IDX[f] for f in ACTIONABLE)

AG_GAMMA_SHAPE = 10.0
AG_GAMMA_SCALE = 3.5

# Std-devs of the Gaussian noise terms (the source distributions are stated
# as variances: 0.25, 4, 9, 4, 0.25).
NOISE_STD = {"Ed": 0.5, "LA": 2.0, "Dur": 3.0, "Inc": 2.0, "Sav": 0.5}


class ScmDomainError(ValueError):
    """Input outside the invertible / supported region of the SCM."""


def _f_ed(ge, ag, u_ed):
    return -0.5 + expit(-1.0 + 0.5 * ge + expit(0.1 * ag) + u_ed)


def _f_la(ge, ag, u_la):
    return 0.01 * (ag - 5.0) * (ag - 5.0) + (1.0 - ge) + u_la


def _f_dur(ge, ag, la, u_dur):
    return -1.0 + 0.1 * ag + 2.0 * (1.0 - ge) + la + u_dur


def _f_inc(ge, ag, ed, u_inc):
    return -4.0 + 0.1 * (ag + 35.0) + 2.0 * ge + ge * ed + u_inc


def _f_sav(inc, u_sav):
    return -4.0 + 1.5 * (np.asarray(inc) > 0.0) * inc + u_sav


def forward(u):
    """Structural equations: exogenous vector(s) -> feature vector(s)."""
    u = np.asarray(u, dtype=np.float64)
    x = np.empty_like(u)
    ge = u[..., 0]
    ag = -35.0 + u[..., 1]
    x[..., 0] = ge
    x[..., 1] = ag
    x[..., 2] = _f_ed(ge, ag, u[..., 2])
    x[..., 3] = _f_la(ge, ag, u[..., 3])
    x[..., 4] = _f_dur(ge, ag, x[..., 3], u[..., 4])
    x[..., 5] = _f_inc(ge, ag, x[..., 2], u[..., 5])
    x[..., 6] = _f_sav(x[..., 5], u[..., 6])
    return x


def abduct(x):
    """Recover the exogenous vector(s) from feature vector(s).

    Requires Ed strictly inside (-0.5, 0.5) so the education logit exists.
    """
    x = np.asarray(x, dtype=np.float64)
    ge, ag, ed = x[..., 0], x[..., 1], x[..., 2]
    la, dur, inc, sav = x[..., 3], x[..., 4], x[..., 5], x[..., 6]
    if np.any(ed <= -0.5) or np.any(ed >= 0.5):
        raise ScmDomainError("Ed must lie strictly inside (-0.5, 0.5)")
    u = np.empty_like(x)
    u[..., 0] = ge
    u[..., 1] = ag + 35.0
    u[..., 2] = logit(ed + 0.5) - (-1.0 + 0.5 * ge + expit(0.1 * ag))
    u[..., 3] = la - 0.01 * (ag - 5.0) * (ag - 5.0) - (1.0 - ge)
    u[..., 4] = dur + 1.0 - 0.1 * ag - 2.0 * (1.0 - ge) - la
    u[..., 5] = inc + 4.0 - 0.1 * (ag + 35.0) - 2.0 * ge - ge * ed
    u[..., 6] = sav + 4.0 - 1.5 * (inc > 0.0) * inc
    return u


def predict(u, action):
    """Evaluate the intervened SCM: do(feature := value) for each entry of
    `action` (a mapping over actionable feature names), everything else from
    the structural equations given `u`. Downstream effects propagate."""
    for name in action:
        if name not in ACTIONABLE:
            raise ValueError(f"feature {name!r} is not globally actionable")
    u = np.asarray(u, dtype=np.float64)
    x = np.empty_like(u)
    ge = u[..., 0]
    ag = -35.0 + u[..., 1]
    x[..., 0] = ge
    x[..., 1] = ag
    x[..., 2] = _f_ed(ge, ag, u[..., 2])
    x[..., 3] = action["LA"] if "LA" in action else _f_la(ge, ag, u[..., 3])
    x[..., 4] = action["Dur"] if "Dur" in action else _f_dur(ge, ag, x[..., 3], u[..., 4])
    x[..., 5] = action["Inc"] if "Inc" in action else _f_inc(ge, ag, x[..., 2], u[..., 5])
    x[..., 6] = action["Sav"] if "Sav" in action else _f_sav(x[..., 5], u[..., 6])
    return x


def counterfactual(x, action):
    """Abduction - intervention - prediction in one call."""
    return predict(abduct(x), action)


def in_support(x):
    """True where x lies in the support of the observational density."""
    x = np.asarray(x, dtype=np.float64)
    ed, ag = x[..., 2], x[..., 1]
    return (ed > -0.5) & (ed < 0.5) & (ag > -35.0)


def log_density(x):
    """Exact observational log-density via change of variables.

    Continuous coordinates contribute log p_noise(u_i) + log|du_i/dx_i|;
    Ge contributes log(1/2). Points outside the support get the -inf
    sentinel instead of an exception.
    """
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 1
    xb = np.atleast_2d(x)
    ok = in_support(xb)
    out = np.full(xb.shape[0], -np.inf)
    if np.any(ok):
        xs = xb[ok]
        u = abduct(xs)
        lp = np.full(xs.shape[0], np.log(0.5))
        lp += gamma_dist.logpdf(u[:, 1], a=AG_GAMMA_SHAPE, scale=AG_GAMMA_SCALE)
        t = xs[:, 2] + 0.5  # Ed Jacobian: d logit(t)/dt = 1/(t(1-t))
        lp += norm_dist.logpdf(u[:, 2], scale=NOISE_STD["Ed"]) - np.log(t * (1.0 - t))
        for j, name in zip(range(3, 7), ("LA", "Dur", "Inc", "Sav")):
            lp += norm_dist.logpdf(u[:, j], scale=NOISE_STD[name])
        out[ok] = lp
    return float(out[0]) if scalar else out


def ground_truth_label(x):
    """Deterministic label: 1 iff the latent credit score argument is >= 0.

    Thresholding sigma(score) at 0 would be vacuous (sigma is positive
    everywhere), so the rule thresholds sigma(score) at 0.5, i.e. score >= 0.
    """
    x = np.asarray(x, dtype=np.float64)
    la, dur, inc, sav = x[..., 3], x[..., 4], x[..., 5], x[..., 6]
    alpha = np.where((inc > 0.0) & (sav > 0.0), 1.0, -1.0)
    inner = 0.3 * (-la - dur + inc + sav + alpha * inc * sav)
    lab = (inner >= 0.0).astype(np.int64)
    return int(lab) if x.ndim == 1 else lab


def sample_noise(n, rng):
    u = np.empty((n, 7))
    u[:, 0] = rng.integers(0, 2, size=n).astype(np.float64)
    u[:, 1] = rng.gamma(AG_GAMMA_SHAPE, AG_GAMMA_SCALE, size=n)
    for j, name in zip((2, 3, 4, 5, 6), ("Ed", "LA", "Dur", "Inc", "Sav")):
        u[:, j] = rng.normal(0.0, NOISE_STD[name], size=n)
    return u


@dataclass
class Dataset:
    """Sampled population with noise, labels, a stylized race attribute,
    split tags, and train-split normalization statistics."""

    X: np.ndarray
    U: np.ndarray
    y: np.ndarray
    race: np.ndarray
    split: np.ndarray
    mean: np.ndarray = field(default=None)
    std: np.ndarray = field(default=None)
    seed: int = 0

    def __post_init__(self):
        if self.mean is None:
            train = self.X[self.split == "train"]
            self.mean = train.mean(axis=0)
            self.std = train.std(axis=0)

    @property
    def n(self):
        return self.X.shape[0]

    def normalize(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def denormalize(self, xn):
        return np.asarray(xn, dtype=np.float64) * self.std + self.mean

    def feasible_range(self):
        """Per-feature (min, max) over the train split."""
        train = self.X[self.split == "train"]
        return train.min(axis=0), train.max(axis=0)

    def indices(self, split):
        return np.flatnonzero(self.split == split)

    def to_csv(self, path, noise_path=None):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(FEATURES) + ["label", "race", "split"])
            for i in range(self.n):
                w.writerow([repr(float(v)) for v in self.X[i]]
                           + [int(self.y[i]), int(self.race[i]), self.split[i]])
        if noise_path is not None:
            with open(noise_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow([f"U_{f}" for f in FEATURES])
                for i in range(self.n):
                    w.writerow([repr(float(v)) for v in self.U[i]])

    @classmethod
    def from_csv(cls, path, noise_path, seed=0):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        X = np.array([[float(v) for v in r[:7]] for r in rows[1:]])
        y = np.array([int(r[7]) for r in rows[1:]])
        race = np.array([int(r[8]) for r in rows[1:]])
        split = np.array([r[9] for r in rows[1:]])
        with open(noise_path, newline="") as fh:
            urows = list(csv.reader(fh))
        U = np.array([[float(v) for v in r] for r in urows[1:]])
        return cls(X=X, U=U, y=y, race=race, split=split, seed=seed)


def sample_population(n, seed, split_fracs=(0.5, 0.25, 0.25)):
    """Draw a population of size n from the SCM, label it, attach a stylized
    race attribute balanced within gender, and tag train/val/deploy splits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    U = sample_noise(n, rng)
    X = forward(U)
    y = ground_truth_label(X)

    # race independent of everything else, equal cell sizes per gender group
    race = np.zeros(n, dtype=np.int64)
    for g in (0.0, 1.0):
        idx = np.flatnonzero(X[:, 0] == g)
        half = len(idx) // 2
        flags = np.concatenate([np.ones(half, dtype=np.int64),
                                np.zeros(len(idx) - half, dtype=np.int64)])
        race[idx] = flags[rng.permutation(len(idx))]

    n_train = int(round(split_fracs[0] * n))
    n_val = int(round(split_fracs[1] * n))
    split = np.array(["train"] * n_train + ["val"] * n_val
                     + ["deploy"] * (n - n_train - n_val))
    return Dataset(X=X, U=U, y=y, race=race, split=split, seed=seed)
