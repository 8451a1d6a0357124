"""Minimal reverse-mode automatic differentiation on an append-only tape.

Nodes hold float64 scalars or arrays with elementwise semantics, so a single
graph can evaluate a whole training batch at once; gradients are exact either
way. A few structural ops (stack / matmul / col / sum) exist so that the small
feed-forward networks used elsewhere run at numpy speed instead of one Python
node per weight.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


class EvalError(ValueError):
    """Domain violation during forward evaluation; carries the node kind."""

    def __init__(self, kind, message):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


def _as_value(x):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        return float(a)
    return a


def _check_finite(kind, value):
    if not np.all(np.isfinite(value)):
        raise EvalError(kind, "non-finite forward value")
    return value


# Forward rules: kind -> fn(parent_values, aux) -> (value, local_partials).
# Partials are None for leaves and for the structural ops, whose backward is
# handled specially from the stored parent values.

def _fwd_add(p, aux):
    return p[0] + p[1], (1.0, 1.0)


def _fwd_sub(p, aux):
    return p[0] - p[1], (1.0, -1.0)


def _fwd_mul(p, aux):
    return p[0] * p[1], (p[1], p[0])


def _fwd_div(p, aux):
    if np.any(p[1] == 0.0):
        raise EvalError("div", "division by zero")
    inv = 1.0 / p[1]
    return p[0] * inv, (inv, -p[0] * inv * inv)


def _fwd_pow(p, aux):
    c = aux
    base = p[0]
    if c != int(c) and np.any(base < 0.0):
        raise EvalError("pow", "negative base with non-integer exponent")
    if c < 0 and np.any(base == 0.0):
        raise EvalError("pow", "zero base with negative exponent")
    val = base ** c
    if c == 0:
        grad = np.zeros_like(np.asarray(base, dtype=np.float64))
        if np.ndim(base) == 0:
            grad = 0.0
    else:
        grad = c * base ** (c - 1.0)
    return val, (grad,)


def _fwd_exp(p, aux):
    return _check_finite("exp", np.exp(p[0])), None  # partial = value itself


def _fwd_log(p, aux):
    if np.any(p[0] <= 0.0):
        raise EvalError("log", "argument must be positive")
    return np.log(p[0]), (1.0 / p[0],)


def _fwd_sigmoid(p, aux):
    s = expit(p[0])
    return s, (s * (1.0 - s),)


def _fwd_softplus(p, aux):
    x = p[0]
    # log(1 + e^x), stable for large |x|
    val = np.logaddexp(0.0, x)
    return val, (expit(x),)


def _fwd_relu(p, aux):
    x = p[0]
    return np.maximum(x, 0.0), (np.where(np.asarray(x) > 0.0, 1.0, 0.0),)


def _fwd_neg(p, aux):
    return -p[0], (-1.0,)


def _fwd_indicator(p, aux):
    # Exact 0/1 indicator of x > 0; contributes zero gradient everywhere.
    x = np.asarray(p[0])
    val = np.where(x > 0.0, 1.0, 0.0)
    if x.ndim == 0:
        val = float(val)
    return val, (0.0,)


def _fwd_sum(p, aux):
    return float(np.sum(p[0])), None


def _fwd_matmul(p, aux):
    return _check_finite("matmul", p[0] @ p[1]), None


def _fwd_stack(p, aux):
    cols = np.broadcast_arrays(*[np.asarray(v, dtype=np.float64) for v in p])
    return np.stack(cols, axis=-1), None


def _fwd_col(p, aux):
    return np.asarray(p[0])[..., aux], None


_FORWARD = {
    "add": _fwd_add,
    "sub": _fwd_sub,
    "mul": _fwd_mul,
    "div": _fwd_div,
    "pow": _fwd_pow,
    "exp": _fwd_exp,
    "log": _fwd_log,
    "sigmoid": _fwd_sigmoid,
    "softplus": _fwd_softplus,
    "relu": _fwd_relu,
    "neg": _fwd_neg,
    "indicator_stopgrad": _fwd_indicator,
    "sum": _fwd_sum,
    "matmul": _fwd_matmul,
    "stack": _fwd_stack,
    "col": _fwd_col,
}


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    g = np.asarray(grad, dtype=np.float64)
    if g.shape == tuple(shape):
        return g
    if shape == ():
        return np.sum(g)
    while g.ndim > len(shape):
        g = np.sum(g, axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = np.sum(g, axis=ax, keepdims=True)
    return g


class Tape:
    """Append-only expression tape; parents always precede their children."""

    def __init__(self):
        self.kinds = []
        self.parents = []
        self.values = []
        self.partials = []
        self.aux = []

    def __len__(self):
        return len(self.kinds)

    def _append(self, kind, parents, value, partials, aux=None):
        idx = len(self.kinds)
        self.kinds.append(kind)
        self.parents.append(parents)
        self.values.append(value)
        self.partials.append(partials)
        self.aux.append(aux)
        return Var(self, idx)

    def var(self, value):
        """New differentiable leaf."""
        return self._append("var", (), _check_finite("var", _as_value(value)), None)

    def lift(self, value):
        """Constant leaf; its gradient is tracked as exactly zero."""
        return self._append("const", (), _check_finite("const", _as_value(value)), None)

    def _op(self, kind, parent_vars, aux=None):
        for v in parent_vars:
            if v.tape is not self:
                raise ValueError("Var belongs to a different tape")
        idxs = tuple(v.idx for v in parent_vars)
        value, partials = _FORWARD[kind]([self.values[i] for i in idxs], aux)
        return self._append(kind, idxs, value, partials, aux)

    def recompute(self):
        """Re-evaluate every node from the leaves in tape order."""
        for i, kind in enumerate(self.kinds):
            if kind in ("var", "const"):
                continue
            pvals = [self.values[j] for j in self.parents[i]]
            self.values[i], self.partials[i] = _FORWARD[kind](pvals, self.aux[i])

    def backward(self, output):
        """Reverse pass from a scalar output; returns a Gradients view."""
        if output.tape is not self:
            raise ValueError("output Var belongs to a different tape")
        out_val = self.values[output.idx]
        if np.ndim(out_val) != 0:
            raise ValueError("backward requires a scalar output")
        adj = [None] * len(self.kinds)
        adj[output.idx] = 1.0

        def _shape(i):
            return np.shape(self.values[i])

        for i in range(output.idx, -1, -1):
            a = adj[i]
            if a is None:
                continue
            kind = self.kinds[i]
            par = self.parents[i]
            if not par:
                continue
            if kind == "sum":
                (j,) = par
                g = a * np.ones(_shape(j))
                adj[j] = g if adj[j] is None else adj[j] + g
            elif kind == "matmul":
                j, k = par
                A, B = np.asarray(self.values[j]), np.asarray(self.values[k])
                ga = np.asarray(a) @ B.T
                gb = A.T @ np.asarray(a)
                adj[j] = ga if adj[j] is None else adj[j] + ga
                adj[k] = gb if adj[k] is None else adj[k] + gb
            elif kind == "stack":
                for c, j in enumerate(par):
                    g = _unbroadcast(np.asarray(a)[..., c], _shape(j))
                    adj[j] = g if adj[j] is None else adj[j] + g
            elif kind == "col":
                (j,) = par
                g = np.zeros(_shape(j))
                g[..., self.aux[i]] = a
                adj[j] = g if adj[j] is None else adj[j] + g
            elif kind == "exp":
                (j,) = par
                g = _unbroadcast(a * self.values[i], _shape(j))
                adj[j] = g if adj[j] is None else adj[j] + g
            else:
                for j, d in zip(par, self.partials[i]):
                    g = _unbroadcast(a * d, _shape(j))
                    adj[j] = g if adj[j] is None else adj[j] + g
        return Gradients(self, adj)


class Gradients:
    """Read-only view of the adjoints produced by one backward pass."""

    def __init__(self, tape, adjoints):
        self._tape = tape
        self._adj = adjoints

    def wrt(self, var):
        if var.tape is not self._tape:
            raise ValueError("Var belongs to a different tape")
        g = self._adj[var.idx]
        if g is None or self._tape.kinds[var.idx] == "const":
            v = self._tape.values[var.idx]
            return 0.0 if np.ndim(v) == 0 else np.zeros(np.shape(v))
        return g

    __getitem__ = wrt


class Var:
    """Handle to one tape node."""

    __slots__ = ("tape", "idx")

    def __init__(self, tape, idx):
        self.tape = tape
        self.idx = idx

    @property
    def value(self):
        return self.tape.values[self.idx]

    def _coerce(self, other):
        if isinstance(other, Var):
            return other
        return self.tape.lift(other)

    def __add__(self, other):
        return self.tape._op("add", (self, self._coerce(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return self.tape._op("sub", (self, self._coerce(other)))

    def __rsub__(self, other):
        return self.tape._op("sub", (self._coerce(other), self))

    def __mul__(self, other):
        return self.tape._op("mul", (self, self._coerce(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.tape._op("div", (self, self._coerce(other)))

    def __rtruediv__(self, other):
        return self.tape._op("div", (self._coerce(other), self))

    def __pow__(self, exponent):
        return self.tape._op("pow", (self,), aux=float(exponent))

    def __neg__(self):
        return self.tape._op("neg", (self,))


def exp(x):
    return x.tape._op("exp", (x,))


def log(x):
    return x.tape._op("log", (x,))


def sigmoid(x):
    return x.tape._op("sigmoid", (x,))


def softplus(x):
    return x.tape._op("softplus", (x,))


def relu(x):
    return x.tape._op("relu", (x,))


def indicator_stopgrad(x):
    """0/1 indicator of x > 0 with a straight-zero subgradient."""
    return x.tape._op("indicator_stopgrad", (x,))


def vsum(x):
    """Sum all entries of x down to a scalar."""
    return x.tape._op("sum", (x,))


def vmean(x):
    n = np.size(x.value)
    return vsum(x) * (1.0 / n)


def matmul(a, b):
    return a.tape._op("matmul", (a, b))


def stack(vars_):
    """Stack same-shape vars along a new last axis."""
    vars_ = list(vars_)
    return vars_[0].tape._op("stack", tuple(vars_))


def col(x, i):
    """Select column i of a 2-d (or last-axis of an n-d) node."""
    return x.tape._op("col", (x,), aux=int(i))
