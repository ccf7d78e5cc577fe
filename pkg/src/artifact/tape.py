"""Reverse-mode differentiation over numpy arrays.

A :class:`Tape` records every operation applied to :class:`Var` objects in
creation order, which is a valid topological order. :func:`backward` replays
the adjoints in reverse.

Complex values follow the real-pair convention: for a real loss ``L`` and a
complex variable ``z = x + iy`` the stored gradient is ``dL/dx + i dL/dy``.
With that convention the adjoint of a linear map ``A`` is ``A^H``, so the
adjoint of the unitary forward DFT is the unitary inverse DFT.

The free functions in this module (``fft``, ``gelu``, ``matmul`` ...) accept
either plain arrays or ``Var`` objects, so numerical code written against them
runs unchanged with or without a tape.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

__all__ = [
    "Tape", "Var", "Gradients", "backward", "value_of", "is_var",
    "fft", "ifft", "conj", "real", "imag", "abs2", "absolute", "sqrt", "log",
    "exp", "phi1", "gelu", "softplus", "matmul", "sum_", "mean", "amax",
    "reshape", "concatenate", "stack", "where_const", "square",
]


class TapeError(RuntimeError):
    """Internal bug-class failure of the differentiation machinery."""


class _Node:
    __slots__ = ("op", "inputs", "vjp", "shape", "is_real", "name")

    def __init__(self, op, inputs, vjp, shape, is_real, name=None):
        self.op = op
        self.inputs = inputs
        self.vjp = vjp
        self.shape = shape
        self.is_real = is_real
        self.name = name


class Tape:
    """Record of operations; nodes are stored in topological order."""

    def __init__(self):
        self.nodes: list[_Node] = []
        self.leaves: dict[str, int] = {}

    def __len__(self):
        return len(self.nodes)

    def variable(self, value, name: str) -> "Var":
        """Register a leaf (a trainable parameter or differentiable input)."""
        if name in self.leaves:
            raise TapeError(f"duplicate leaf name {name!r}")
        value = np.asarray(value)
        if value.dtype.kind not in "fc":
            value = value.astype(float)
        idx = len(self.nodes)
        self.nodes.append(_Node("leaf", (), None, value.shape,
                                value.dtype.kind == "f", name))
        self.leaves[name] = idx
        return Var(self, idx, value)

    def record(self, op, value, inputs, vjp) -> "Var":
        for v in inputs:
            if v.tape is not self:
                raise TapeError("operands belong to different tapes")
        value = np.asarray(value)
        idx = len(self.nodes)
        self.nodes.append(_Node(op, tuple(v.idx for v in inputs), vjp,
                                value.shape, value.dtype.kind != "c"))
        return Var(self, idx, value)


class Var:
    """An array value tracked by a tape."""

    __slots__ = ("tape", "idx", "value")
    __array_priority__ = 1000

    def __init__(self, tape, idx, value):
        self.tape = tape
        self.idx = idx
        self.value = value

    shape = property(lambda self: self.value.shape)
    ndim = property(lambda self: self.value.ndim)
    dtype = property(lambda self: self.value.dtype)

    def __repr__(self):
        return f"Var(op={self.tape.nodes[self.idx].op}, shape={self.shape})"

    def __len__(self):
        return len(self.value)

    def __add__(self, o):
        return _add(self, o)

    __radd__ = __add__

    def __sub__(self, o):
        return _add(self, _neg(o))

    def __rsub__(self, o):
        return _add(_neg(self), o)

    def __neg__(self):
        return _neg(self)

    def __mul__(self, o):
        return _mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return _div(self, o)

    def __rtruediv__(self, o):
        return _div(o, self)

    def __matmul__(self, o):
        return matmul(self, o)

    def __rmatmul__(self, o):
        return matmul(o, self)

    def __getitem__(self, idx):
        return _getitem(self, idx)

    def __pow__(self, p):
        return power(self, p)

    def conj(self):
        return conj(self)

    @property
    def real(self):
        return real(self)

    @property
    def imag(self):
        return imag(self)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return reshape(self, shape)


def is_var(x) -> bool:
    return isinstance(x, Var)


def value_of(x):
    """Underlying array of a Var, or the input unchanged."""
    return x.value if isinstance(x, Var) else x


def _tape_of(*xs):
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    return None


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------- arithmetic

def _add(a, b):
    if not isinstance(a, Var):
        a, b = b, a
    if not isinstance(b, Var):
        return a.tape.record("add_const", a.value + b, (a,), lambda g: (g,))
    return a.tape.record("add", a.value + b.value, (a, b), lambda g: (g, g))


def _neg(a):
    if not isinstance(a, Var):
        return -np.asarray(a)
    return a.tape.record("neg", -a.value, (a,), lambda g: (-g,))


def _mul(a, b):
    if not isinstance(a, Var):
        a, b = b, a
    if not isinstance(b, Var):
        cb = np.conj(b)
        return a.tape.record("mul_const", a.value * b, (a,), lambda g: (g * cb,))
    av, bv = a.value, b.value
    return a.tape.record("mul", av * bv, (a, b),
                         lambda g: (g * np.conj(bv), g * np.conj(av)))


def _div(a, b):
    if not isinstance(b, Var):
        return _mul(a, 1.0 / np.asarray(b))
    bv = b.value
    av = value_of(a)
    out = av / bv
    if not isinstance(a, Var):
        return b.tape.record("rdiv", out, (b,),
                             lambda g: (-g * np.conj(out / bv),))
    return a.tape.record("div", out, (a, b),
                         lambda g: (g / np.conj(bv), -g * np.conj(out / bv)))


def power(a, p: float):
    """Real power of a positive real array."""
    if not isinstance(a, Var):
        return np.power(a, p)
    av = a.value
    return a.tape.record("pow", av ** p, (a,), lambda g: (g * p * av ** (p - 1),))


def square(a):
    return _mul(a, a) if isinstance(a, Var) else a * a


# ---------------------------------------------------------------- transforms

def fft(x):
    """Unitary forward DFT along the last axis."""
    if not isinstance(x, Var):
        return np.fft.fft(x, norm="ortho")
    return x.tape.record("fft", np.fft.fft(x.value, norm="ortho"), (x,),
                         lambda g: (np.fft.ifft(g, norm="ortho"),))


def ifft(x):
    """Unitary inverse DFT along the last axis."""
    if not isinstance(x, Var):
        return np.fft.ifft(x, norm="ortho")
    return x.tape.record("ifft", np.fft.ifft(x.value, norm="ortho"), (x,),
                         lambda g: (np.fft.fft(g, norm="ortho"),))


# ---------------------------------------------------------------- complex parts

def conj(x):
    if not isinstance(x, Var):
        return np.conj(x)
    return x.tape.record("conj", np.conj(x.value), (x,), lambda g: (np.conj(g),))


def real(x):
    if not isinstance(x, Var):
        return np.real(x)
    return x.tape.record("real", np.real(x.value), (x,), lambda g: (np.real(g),))


def imag(x):
    if not isinstance(x, Var):
        return np.imag(x)
    return x.tape.record("imag", np.imag(x.value), (x,), lambda g: (1j * np.real(g),))


def abs2(x):
    """|x|^2 as a real array."""
    if not isinstance(x, Var):
        return x.real ** 2 + x.imag ** 2 if np.iscomplexobj(x) else x * x
    xv = x.value
    out = xv.real ** 2 + xv.imag ** 2 if np.iscomplexobj(xv) else xv * xv
    return x.tape.record("abs2", out, (x,), lambda g: (2.0 * np.real(g) * xv,))


def absolute(x, floor: float = 1e-300):
    """|x|; the gradient at 0 is taken as 0."""
    if not isinstance(x, Var):
        return np.abs(x)
    xv = x.value
    out = np.abs(xv)
    safe = np.where(out > floor, out, 1.0)

    def vjp(g):
        return (np.where(out > floor, np.real(g) * xv / safe, 0.0),)
    return x.tape.record("abs", out, (x,), vjp)


# ---------------------------------------------------------------- elementwise

def sqrt(x):
    if not isinstance(x, Var):
        return np.sqrt(x)
    out = np.sqrt(x.value)
    return x.tape.record("sqrt", out, (x,), lambda g: (g * 0.5 / np.conj(out),))


def log(x):
    if not isinstance(x, Var):
        return np.log(x)
    xv = x.value
    return x.tape.record("log", np.log(xv), (x,), lambda g: (g / np.conj(xv),))


def exp(x):
    if not isinstance(x, Var):
        return np.exp(x)
    out = np.exp(x.value)
    return x.tape.record("exp", out, (x,), lambda g: (g * np.conj(out),))


PHI1_SERIES_RADIUS = 1e-4


def _phi1_value(z):
    z = np.asarray(z)
    small = np.abs(z) < PHI1_SERIES_RADIUS
    zs = np.where(small, 1.0, z)
    series = 1 + z / 2 + z ** 2 / 6 + z ** 3 / 24
    return np.where(small, series, np.expm1(zs) / zs)


def _phi1_deriv(z):
    z = np.asarray(z)
    small = np.abs(z) < PHI1_SERIES_RADIUS
    zs = np.where(small, 1.0, z)
    series = 0.5 + z / 3 + z ** 2 / 8 + z ** 3 / 30
    return np.where(small, series, (zs * np.exp(zs) - np.expm1(zs)) / zs ** 2)


def phi1(z):
    """(e^z - 1)/z with a series guard near zero."""
    if not isinstance(z, Var):
        out = _phi1_value(z)
        return out[()] if out.ndim == 0 else out
    zv = z.value
    d = _phi1_deriv(zv)
    return z.tape.record("phi1", _phi1_value(zv), (z,), lambda g: (g * np.conj(d),))


_SQRT1_2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x * _SQRT1_2))


def _gelu_deriv(x):
    return 0.5 * (1.0 + erf(x * _SQRT1_2)) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def gelu(x):
    """Exact (erf) GELU."""
    if not isinstance(x, Var):
        return _gelu(x)
    xv = x.value
    return x.tape.record("gelu", _gelu(xv), (x,), lambda g: (g * _gelu_deriv(xv),))


def _softplus(x):
    return np.logaddexp(0.0, x)


def softplus(x):
    if not isinstance(x, Var):
        return _softplus(x)
    xv = x.value
    sig = 0.5 * (1.0 + np.tanh(0.5 * xv))
    return x.tape.record("softplus", _softplus(xv), (x,), lambda g: (g * sig,))


# ---------------------------------------------------------------- linear algebra

def matmul(a, b):
    """a @ b with a of shape (..., n) and b of shape (n, m)."""
    if not isinstance(a, Var) and not isinstance(b, Var):
        return a @ b
    tape = _tape_of(a, b)
    av, bv = value_of(a), value_of(b)
    out = av @ bv
    ins, pos = [], []
    if isinstance(a, Var):
        ins.append(a)
        pos.append("a")
    if isinstance(b, Var):
        ins.append(b)
        pos.append("b")

    def vjp(g):
        res = []
        for p in pos:
            if p == "a":
                res.append(g @ np.conj(bv).T)
            else:
                a2 = av.reshape(-1, av.shape[-1])
                g2 = g.reshape(-1, g.shape[-1])
                res.append(np.conj(a2).T @ g2)
        return tuple(res)
    return tape.record("matmul", out, tuple(ins), vjp)


# ---------------------------------------------------------------- reductions / shape

def sum_(x, axis=None, keepdims=False):
    if not isinstance(x, Var):
        return np.sum(x, axis=axis, keepdims=keepdims)
    shape = x.shape

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)
    return x.tape.record("sum", np.sum(x.value, axis=axis, keepdims=keepdims), (x,), vjp)


def mean(x, axis=None, keepdims=False):
    if not isinstance(x, Var):
        return np.mean(x, axis=axis, keepdims=keepdims)
    n = x.value.size if axis is None else x.value.shape[axis]
    return _mul(sum_(x, axis=axis, keepdims=keepdims), 1.0 / n)


def amax(x, axis=-1, keepdims=False):
    """Maximum of a real array; the gradient flows to the first argmax."""
    if not isinstance(x, Var):
        return np.max(x, axis=axis, keepdims=keepdims)
    xv = x.value
    arg = np.argmax(xv, axis=axis)
    out = np.take_along_axis(xv, np.expand_dims(arg, axis), axis)
    if not keepdims:
        out = np.squeeze(out, axis)

    def vjp(g):
        gi = np.zeros(xv.shape, dtype=np.result_type(g, float))
        gk = g if keepdims else np.expand_dims(g, axis)
        np.put_along_axis(gi, np.expand_dims(arg, axis), gk, axis)
        return (gi,)
    return x.tape.record("amax", out, (x,), vjp)


def reshape(x, shape):
    if not isinstance(x, Var):
        return np.reshape(x, shape)
    old = x.shape
    return x.tape.record("reshape", np.reshape(x.value, shape), (x,),
                         lambda g: (np.reshape(g, old),))


def _getitem(x, idx):
    xv = x.value
    shape = xv.shape

    def vjp(g):
        out = np.zeros(shape, dtype=np.result_type(g, xv.dtype))
        np.add.at(out, idx, g)
        return (out,)
    return x.tape.record("getitem", xv[idx], (x,), vjp)


def concatenate(xs, axis=-1):
    if not any(isinstance(x, Var) for x in xs):
        return np.concatenate(xs, axis=axis)
    tape = _tape_of(*xs)
    vals = [np.asarray(value_of(x)) for x in xs]
    sizes = np.cumsum([v.shape[axis] for v in vals])[:-1]
    flags = [isinstance(x, Var) for x in xs]
    ins = tuple(x for x in xs if isinstance(x, Var))

    def vjp(g):
        parts = np.split(g, sizes, axis=axis)
        return tuple(p for p, f in zip(parts, flags) if f)
    return tape.record("concat", np.concatenate(vals, axis=axis), ins, vjp)


def stack(xs, axis=-1):
    if not any(isinstance(x, Var) for x in xs):
        return np.stack(xs, axis=axis)
    tape = _tape_of(*xs)
    vals = [np.asarray(value_of(x)) for x in xs]
    flags = [isinstance(x, Var) for x in xs]
    ins = tuple(x for x in xs if isinstance(x, Var))

    def vjp(g):
        parts = [np.take(g, i, axis=axis) for i in range(len(vals))]
        return tuple(p for p, f in zip(parts, flags) if f)
    return tape.record("stack", np.stack(vals, axis=axis), ins, vjp)


def where_const(mask, x, fill=0.0):
    """Select ``x`` where ``mask`` (a constant boolean array) holds, else ``fill``."""
    if not isinstance(x, Var):
        return np.where(mask, x, fill)
    return x.tape.record("where", np.where(mask, x.value, fill), (x,),
                         lambda g: (np.where(mask, g, 0.0),))


# ---------------------------------------------------------------- backward pass

class Gradients(dict):
    """Mapping from leaf name to gradient array (real-pair convention)."""


def backward(tape: Tape, loss: Var) -> Gradients:
    """Replay adjoints in reverse topological order from a real scalar loss."""
    if not isinstance(loss, Var) or loss.tape is not tape:
        raise TapeError("loss is not a node of this tape")
    if loss.value.size != 1 or np.iscomplexobj(loss.value):
        raise TapeError("loss must be a real scalar")
    nodes = tape.nodes
    grads: list = [None] * (loss.idx + 1)
    grads[loss.idx] = np.ones(nodes[loss.idx].shape)
    for i in range(loss.idx, -1, -1):
        g = grads[i]
        node = nodes[i]
        if g is None or node.vjp is None:
            continue
        in_grads = node.vjp(g)
        if len(in_grads) != len(node.inputs):
            raise TapeError(f"adjoint of {node.op} returned wrong arity")
        for j, gj in zip(node.inputs, in_grads):
            if j >= i:
                raise TapeError("graph is not topologically ordered")
            target = nodes[j]
            gj = _unbroadcast(np.asarray(gj), target.shape)
            if target.is_real and np.iscomplexobj(gj):
                gj = gj.real
            grads[j] = gj if grads[j] is None else grads[j] + gj
    out = Gradients()
    for name, idx in tape.leaves.items():
        if idx <= loss.idx and grads[idx] is not None:
            out[name] = grads[idx]
        else:
            out[name] = np.zeros(nodes[idx].shape)
    return out
