"""
Reverse-Mode Differentiation
============================
An append-only tape of array operations. Each node stores its operation
tag, the indices of its inputs and a vector-Jacobian product closure;
``backward`` walks the tape once in reverse order.

Every primitive also accepts plain numpy arrays and floats, in which case
it simply evaluates, so the geometry kernels and classifier heads are
written once and serve both inference and training.

The module also holds the parameter container, the SGD step and the
finite-difference gradient checker.
"""

import logging

import numpy as np

from curvednet.errors import NonScalarOutput, NonFiniteGradient
from curvednet.oracles import central_difference

logger = logging.getLogger(__name__)


class Tape:
    """
    Append-only record of a computation.

    Inputs always precede their consumers, so a single reverse sweep over
    node indices visits every node after all of its consumers.
    """

    def __init__(self):
        self.ops = []
        self.inputs = []
        self.vjps = []
        self.values = []
        # smallest distance of any clamp/clip input from its kink
        self.kink_margin = np.inf

    def __len__(self):
        return len(self.values)

    def variable(self, value):
        """Register a leaf (a parameter or an input we differentiate against)."""
        return self.record("leaf", np.array(value, dtype=np.float64), (), None)

    def record(self, op, value, inputs, vjp):
        self.ops.append(op)
        self.inputs.append(tuple(inputs))
        self.vjps.append(vjp)
        self.values.append(value)
        return Var(self, len(self.values) - 1)

    def note_kink(self, distance):
        distance = np.asarray(distance)
        if distance.size:
            self.kink_margin = min(self.kink_margin, float(np.min(distance)))


class Var:
    """Handle to one node of a Tape."""

    # numpy must defer to our reflected operators instead of broadcasting
    # element-wise over an object array
    __array_ufunc__ = None

    def __init__(self, tape, index):
        self.tape = tape
        self.index = index

    def __repr__(self):
        return f"Var(#{self.index} {self.tape.ops[self.index]} shape={self.shape})"

    @property
    def value(self):
        return self.tape.values[self.index]

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def T(self):
        return transpose(self)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __pow__(self, exponent):
        return power(self, exponent)


# ── Helpers ──────────────────────────────────────────────


def value(x):
    """Underlying numpy value of a Var, array or float."""
    if isinstance(x, Var):
        return x.value
    return np.asarray(x, dtype=np.float64)


def is_var(x):
    return isinstance(x, Var)


def _tape_of(*args):
    for a in args:
        if isinstance(a, Var):
            return a.tape
    return None


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    if grad.shape == tuple(shape):
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _binary(op, a, b, fn, grad_a, grad_b):
    tape = _tape_of(a, b)
    if tape is None:
        return fn(a, b)
    av, bv = value(a), value(b)
    out = fn(av, bv)
    inputs, partials = [], []
    if isinstance(a, Var):
        inputs.append(a.index)
        partials.append(lambda g: _unbroadcast(grad_a(g, av, bv, out), av.shape))
    if isinstance(b, Var):
        inputs.append(b.index)
        partials.append(lambda g: _unbroadcast(grad_b(g, av, bv, out), bv.shape))
    return tape.record(op, out, inputs, lambda g: tuple(p(g) for p in partials))


def _unary(op, x, fn, dfn):
    if not isinstance(x, Var):
        return fn(x)
    xv = x.value
    out = fn(xv)
    return x.tape.record(op, out, (x.index,), lambda g: (g * dfn(xv, out),))


# ── Arithmetic ───────────────────────────────────────────


def add(a, b):
    return _binary("add", a, b, np.add,
                   lambda g, a, b, o: g,
                   lambda g, a, b, o: g)


def sub(a, b):
    return _binary("sub", a, b, np.subtract,
                   lambda g, a, b, o: g,
                   lambda g, a, b, o: -g)


def mul(a, b):
    return _binary("mul", a, b, np.multiply,
                   lambda g, a, b, o: g * b,
                   lambda g, a, b, o: g * a)


def div(a, b):
    return _binary("div", a, b, np.divide,
                   lambda g, a, b, o: g / b,
                   lambda g, a, b, o: -g * a / (b * b))


def neg(x):
    return _unary("neg", x, np.negative, lambda x, o: -1.0)


def power(x, exponent):
    exponent = float(exponent)
    return _unary("pow", x, lambda v: np.power(v, exponent),
                  lambda v, o: exponent * np.power(v, exponent - 1.0))


def matmul(a, b):
    """Matrix product of two 2-D operands."""
    tape = _tape_of(a, b)
    if tape is None:
        return np.matmul(a, b)
    av, bv = value(a), value(b)
    if av.ndim != 2 or bv.ndim != 2:
        raise ValueError(f"matmul on the tape needs 2-D operands, got {av.shape} @ {bv.shape}")
    out = av @ bv
    inputs, partials = [], []
    if isinstance(a, Var):
        inputs.append(a.index)
        partials.append(lambda g: g @ bv.T)
    if isinstance(b, Var):
        inputs.append(b.index)
        partials.append(lambda g: av.T @ g)
    return tape.record("matmul", out, inputs, lambda g: tuple(p(g) for p in partials))


def transpose(x):
    if not isinstance(x, Var):
        return np.transpose(x)
    return x.tape.record("transpose", x.value.T, (x.index,), lambda g: (g.T,))


def reshape(x, shape):
    if not isinstance(x, Var):
        return np.reshape(x, shape)
    original = x.value.shape
    out = np.reshape(x.value, shape)
    return x.tape.record("reshape", out, (x.index,), lambda g: (np.reshape(g, original),))


# ── Reductions ───────────────────────────────────────────


def sum(x, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy
    if not isinstance(x, Var):
        return np.sum(x, axis=axis, keepdims=keepdims)
    xv = x.value
    out = np.sum(xv, axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, xv.shape).copy(),)

    return x.tape.record("sum", np.asarray(out), (x.index,), vjp)


def mean(x, axis=None, keepdims=False):
    count = value(x).size if axis is None else value(x).shape[axis]
    return sum(x, axis=axis, keepdims=keepdims) / float(count)


def inner(x, y):
    """Inner product over the last axis, keeping that axis (size 1)."""
    return sum(x * y, axis=-1, keepdims=True)


def norm(x, axis=-1):
    """Euclidean norm over ``axis``, keeping that axis."""
    if not isinstance(x, Var):
        return np.linalg.norm(x, axis=axis, keepdims=True)
    xv = x.value
    out = np.linalg.norm(xv, axis=axis, keepdims=True)
    # the zero vector gets a zero subgradient
    safe = np.where(out > 0.0, out, 1.0)
    return x.tape.record("norm", out, (x.index,), lambda g: (g * xv / safe,))


def max(x, axis=-1):  # noqa: A001 - mirrors numpy
    """Maximum over ``axis``; the adjoint flows to the first arg-max entry."""
    if not isinstance(x, Var):
        return np.max(x, axis=axis)
    xv = x.value
    idx = np.argmax(xv, axis=axis)
    out = np.take_along_axis(xv, np.expand_dims(idx, axis), axis=axis).squeeze(axis)

    def vjp(g):
        grad = np.zeros_like(xv)
        np.put_along_axis(grad, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return x.tape.record("max", out, (x.index,), vjp)


def select(x, indices):
    """Pick ``x[i, indices[i]]`` from a 2-D operand (label selection)."""
    indices = np.asarray(indices, dtype=np.int64)
    rows = np.arange(len(indices))
    if not isinstance(x, Var):
        return np.asarray(x)[rows, indices]
    xv = x.value

    def vjp(g):
        grad = np.zeros_like(xv)
        np.add.at(grad, (rows, indices), g)
        return (grad,)

    return x.tape.record("select", xv[rows, indices], (x.index,), vjp)


# ── Elementwise functions ───────────────────────────────


def exp(x):
    return _unary("exp", x, np.exp, lambda v, o: o)


def log(x):
    return _unary("log", x, np.log, lambda v, o: 1.0 / v)


def sqrt(x):
    return _unary("sqrt", x, np.sqrt, lambda v, o: 0.5 / o)


def tanh(x):
    return _unary("tanh", x, np.tanh, lambda v, o: 1.0 - o * o)


def atanh(x):
    return _unary("atanh", x, np.arctanh, lambda v, o: 1.0 / (1.0 - v * v))


def asinh(x):
    return _unary("asinh", x, np.arcsinh, lambda v, o: 1.0 / np.sqrt(v * v + 1.0))


def relu(x):
    return _unary("relu", x, lambda v: np.maximum(v, 0.0),
                  lambda v, o: (v > 0.0).astype(np.float64))


def clip(x, lo=-np.inf, hi=np.inf):
    """Clamp into [lo, hi]; the adjoint is zero where the clamp is active."""
    if not isinstance(x, Var):
        return np.clip(x, lo, hi)
    xv = x.value
    x.tape.note_kink(np.minimum(np.abs(xv - lo), np.abs(xv - hi)))
    passing = ((xv >= lo) & (xv <= hi)).astype(np.float64)
    return x.tape.record("clip", np.clip(xv, lo, hi), (x.index,), lambda g: (g * passing,))


def where(mask, a, b):
    """Select ``a`` where ``mask`` holds, else ``b``; ``mask`` is a plain array."""
    mask = np.asarray(mask, dtype=bool)
    tape = _tape_of(a, b)
    if tape is None:
        return np.where(mask, a, b)
    av, bv = value(a), value(b)
    out = np.where(mask, av, bv)
    inputs, partials = [], []
    if isinstance(a, Var):
        inputs.append(a.index)
        partials.append(lambda g: _unbroadcast(np.where(mask, g, 0.0), av.shape))
    if isinstance(b, Var):
        inputs.append(b.index)
        partials.append(lambda g: _unbroadcast(np.where(mask, 0.0, g), bv.shape))
    return tape.record("where", out, inputs, lambda g: tuple(p(g) for p in partials))


def note_kink(x, boundary):
    """Record how far ``x`` sits from a piecewise boundary (no-op off the tape)."""
    if isinstance(x, Var):
        x.tape.note_kink(np.abs(x.value - boundary))


# ── Softmax family ──────────────────────────────────────


def logsumexp(x, axis=-1):
    if not isinstance(x, Var):
        xv = np.asarray(x, dtype=np.float64)
        m = np.max(xv, axis=axis, keepdims=True)
        return (m + np.log(np.sum(np.exp(xv - m), axis=axis, keepdims=True))).squeeze(axis)
    xv = x.value
    m = np.max(xv, axis=axis, keepdims=True)
    e = np.exp(xv - m)
    s = np.sum(e, axis=axis, keepdims=True)
    out = (m + np.log(s)).squeeze(axis)
    soft = e / s
    return x.tape.record("logsumexp", out, (x.index,),
                         lambda g: (np.expand_dims(g, axis) * soft,))


def softmax(x, axis=-1):
    """Shift-stabilized softmax."""
    xv = value(x)
    m = np.max(xv, axis=axis, keepdims=True)
    e = np.exp(xv - m)
    out = e / np.sum(e, axis=axis, keepdims=True)
    if not isinstance(x, Var):
        return out

    def vjp(g):
        return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

    return x.tape.record("softmax", out, (x.index,), vjp)


def log_softmax(x, axis=-1):
    xv = value(x)
    m = np.max(xv, axis=axis, keepdims=True)
    shifted = xv - m
    lse = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    out = shifted - lse
    if not isinstance(x, Var):
        return out
    soft = np.exp(out)

    def vjp(g):
        return (g - soft * np.sum(g, axis=axis, keepdims=True),)

    return x.tape.record("log_softmax", out, (x.index,), vjp)


# ── Reverse pass ─────────────────────────────────────────


def backward(tape, output):
    """
    Accumulate adjoints of ``output`` (a scalar node) into every node.

    Returns a list aligned with the tape; entries for nodes that do not
    influence the output are None.
    """
    index = output.index if isinstance(output, Var) else int(output)
    if tape.values[index].size != 1:
        raise NonScalarOutput(
            f"backward needs a scalar output, node #{index} has shape {tape.values[index].shape}"
        )
    adjoints = [None] * len(tape)
    adjoints[index] = np.ones_like(tape.values[index])
    for i in range(index, -1, -1):
        g = adjoints[i]
        vjp = tape.vjps[i]
        if g is None or vjp is None:
            continue
        for j, gj in zip(tape.inputs[i], vjp(g)):
            adjoints[j] = gj if adjoints[j] is None else adjoints[j] + gj
    return adjoints


# ── Parameters & optimizer ──────────────────────────────


class ParamSet:
    """
    Named parameter arrays with gradient buffers of identical shape.

    A parameter may carry a projection applied after every update
    (re-projection onto the sphere, re-clipping into the ball).
    """

    def __init__(self):
        self.values = {}
        self.grads = {}
        self.projections = {}

    def add(self, name, array, projection=None):
        array = np.array(array, dtype=np.float64)
        self.values[name] = array
        self.grads[name] = np.zeros_like(array)
        if projection is not None:
            self.projections[name] = projection
        return array

    def __getitem__(self, name):
        return self.values[name]

    def __contains__(self, name):
        return name in self.values

    def __iter__(self):
        return iter(self.values)

    def names(self):
        return list(self.values)

    def shapes(self):
        return {name: arr.shape for name, arr in self.values.items()}

    def size(self):
        return int(np.sum([arr.size for arr in self.values.values()]))

    def attach(self, tape, overrides=None):
        """Register every parameter as a tape leaf; returns name -> Var."""
        overrides = overrides or {}
        return {
            name: tape.variable(overrides.get(name, arr))
            for name, arr in self.values.items()
        }

    def accumulate(self, adjoints, bound):
        for name, var in bound.items():
            g = adjoints[var.index]
            if g is not None:
                self.grads[name] = self.grads[name] + g

    def zero_grad(self):
        for name in self.grads:
            self.grads[name] = np.zeros_like(self.values[name])

    def project(self):
        for name, projection in self.projections.items():
            self.values[name] = np.asarray(projection(self.values[name]), dtype=np.float64)

    def copy(self):
        clone = ParamSet()
        for name, arr in self.values.items():
            clone.add(name, arr.copy(), self.projections.get(name))
            clone.grads[name] = self.grads[name].copy()
        return clone


def sgd_step(params, lr, clip_norm=None):
    """
    One plain SGD update ``p <- p - lr * g``.

    With ``clip_norm`` the global gradient norm is first capped. Constrained
    parameters are re-projected afterwards and all gradients are zeroed.
    """
    for name, g in params.grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"Gradient of '{name}' is not finite")

    scale = 1.0
    if clip_norm:
        total = float(np.sqrt(np.sum([np.sum(g * g) for g in params.grads.values()])))
        if total > clip_norm:
            scale = clip_norm / total
            logger.debug("Gradient norm %.4g clipped to %.4g", total, clip_norm)

    if lr != 0.0:
        for name in params.values:
            params.values[name] = params.values[name] - (lr * scale) * params.grads[name]
        params.project()
    params.zero_grad()
    return params


# ── Gradient checking ───────────────────────────────────


def _evaluate(loss_fn, params, overrides):
    tape = Tape()
    bound = params.attach(tape, overrides)
    return float(value(loss_fn(tape, bound)))


def grad_check(loss_fn, params, seed=0, eps=1e-5, n_coords=50):
    """
    Compare reverse-mode gradients against central differences.

    ``loss_fn(tape, bound)`` builds the scalar loss from the bound
    parameter Vars. A seeded subsample of ``n_coords`` coordinates (all of
    them when there are fewer) is checked; returns the maximum relative
    error with denominator max(|analytic|, |numeric|, 1e-8).
    """
    tape = Tape()
    bound = params.attach(tape)
    loss = loss_fn(tape, bound)
    adjoints = backward(tape, loss)
    analytic = {
        name: (adjoints[var.index] if adjoints[var.index] is not None
               else np.zeros_like(params[name]))
        for name, var in bound.items()
    }

    coords = [(name, k) for name in params.names() for k in range(params[name].size)]
    rng = np.random.default_rng(seed)
    if len(coords) > n_coords:
        picks = np.sort(rng.choice(len(coords), size=n_coords, replace=False))
        coords = [coords[i] for i in picks]

    worst = 0.0
    for name, k in coords:
        def f(arr, name=name):
            return _evaluate(loss_fn, params, {name: arr})

        numeric = central_difference(f, params[name], k, eps)
        exact = float(analytic[name].flat[k])
        denom = np.max([abs(exact), abs(numeric), 1e-8])
        worst = np.max([worst, abs(exact - numeric) / denom])
    logger.debug("grad_check over %d coordinates: max relative error %.3g", len(coords), worst)
    return float(worst)
