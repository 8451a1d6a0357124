"""Small feed-forward networks on the autodiff tape, plus Adam."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad


class MLP:
    """Fully connected net with ReLU hidden layers and a linear output."""

    def __init__(self, layer_sizes, seed=0):
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    def forward_np(self, x):
        """Plain numpy forward; returns the linear output (logits)."""
        h = np.asarray(x, dtype=np.float64)
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W + b
            if i < len(self.weights) - 1:
                h = np.maximum(h, 0.0)
        return h

    def tape_forward(self, tape, x_var, trainable=False):
        """Tape forward from a (batch, d_in) node; returns the output node
        and, when trainable, the parameter Vars in flat order."""
        params = []
        h = x_var
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            mk = tape.var if trainable else tape.lift
            Wv, bv = mk(W), mk(b)
            if trainable:
                params.extend([Wv, bv])
            h = ad.matmul(h, Wv) + bv
            if i < len(self.weights) - 1:
                h = ad.relu(h)
        return (h, params) if trainable else h

    def param_arrays(self):
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend([W, b])
        return out

    def set_param_arrays(self, arrays):
        it = iter(arrays)
        for i in range(len(self.weights)):
            self.weights[i] = np.asarray(next(it), dtype=np.float64)
            self.biases[i] = np.asarray(next(it), dtype=np.float64)

    def to_json_dict(self):
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [W.ravel().tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d):
        net = cls(d["layer_sizes"], seed=d.get("seed", 0))
        for i, (fan_in, fan_out) in enumerate(zip(net.layer_sizes[:-1],
                                                  net.layer_sizes[1:])):
            net.weights[i] = np.array(d["weights"][i]).reshape(fan_in, fan_out)
            net.biases[i] = np.array(d["biases"][i])
        return net


class Adam:
    """Adaptive moment estimation over a list of parameter arrays."""

    def __init__(self, shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            mhat = self.m[i] / (1 - b1 ** self.t)
            vhat = self.v[i] / (1 - b2 ** self.t)
            out.append(p - self.lr * mhat / (np.sqrt(vhat) + self.eps))
        return out
