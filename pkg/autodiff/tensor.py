"""Dense 64-bit tensors with define-by-run reverse-mode differentiation.

A ``Tape`` records every primitive evaluated while it is active; ``grad``
walks the recorded nodes once, in reverse, accumulating vector-Jacobian
products into the leaves.
"""
import threading

import numpy as np
from scipy.special import expit

from errors import ContractError, DimensionError, SegmentIndexError

_local = threading.local()


def _tape_stack():
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def current_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class _Node:
    __slots__ = ("out", "parents", "vjp", "op")

    def __init__(self, out, parents, vjp, op):
        self.out = out
        self.parents = parents
        self.vjp = vjp
        self.op = op


class Tape:
    """Ordered record of primitive operations; confined to one thread."""

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        _tape_stack().remove(self)
        return False

    def record(self, out, parents, vjp, op):
        self.nodes.append(_Node(out, parents, vjp, op))

    def gradient(self, output, wrt=None):
        return grad(self, output, wrt)


class Tensor:
    __slots__ = ("data", "requires_grad", "name", "__weakref__")

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.array(data, dtype=np.float64)
        arr.flags.writeable = False
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def _wrap(cls, arr):
        out = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        arr.flags.writeable = False
        out.data = arr
        out.requires_grad = False
        out.name = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

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

    def __getitem__(self, key):
        return index(self, key)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor._wrap(np.asarray(value, dtype=np.float64))


def _result(value, parents, vjp, op):
    out = Tensor._wrap(value)
    tape = current_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        tape.record(out, parents, vjp, op)
    return out


def unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _normalize_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


# ---------------------------
# Elementwise arithmetic
# ---------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _result(a.data + b.data, (a, b),
                   lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)), "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _result(a.data - b.data, (a, b),
                   lambda g: (unbroadcast(g, a.shape), unbroadcast(-g, b.shape)), "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _result(a.data * b.data, (a, b),
                   lambda g: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)), "mul")


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def vjp(g):
        return unbroadcast(g / b.data, a.shape), unbroadcast(-g * out / b.data, b.shape)

    return _result(out, (a, b), vjp, "div")


def neg(a):
    a = as_tensor(a)
    return _result(-a.data, (a,), lambda g: (-g,), "neg")


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)
    return _result(out, (a,), lambda g: (g * out,), "exp")


def abs_(a):
    a = as_tensor(a)
    return _result(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),), "abs")


def silu(a):
    a = as_tensor(a)
    s = expit(a.data)
    return _result(a.data * s, (a,), lambda g: (g * (s + a.data * s * (1.0 - s)),), "silu")


def clamp_min(a, floor):
    a = as_tensor(a)
    keep = a.data > floor
    return _result(np.maximum(a.data, floor), (a,), lambda g: (g * keep,), "clamp_min")


# ---------------------------
# Linear algebra
# ---------------------------

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} x {b.shape}")

    def vjp(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return _result(np.matmul(a.data, b.data), (a, b), vjp, "matmul")


def cross(a, b):
    """Cross product over the trailing axis of length 3."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[-1] != 3 or b.shape[-1] != 3:
        raise DimensionError(f"cross needs trailing axis 3: {a.shape} x {b.shape}")

    def vjp(g):
        return unbroadcast(np.cross(b.data, g), a.shape), unbroadcast(np.cross(g, a.data), b.shape)

    return _result(np.cross(a.data, b.data), (a, b), vjp, "cross")


# ---------------------------
# Reductions and shape
# ---------------------------

def sum_(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _result(out, (a,), vjp, "sum")


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return sum_(a, axes, keepdims) / float(max(count, 1))


def norm(a, axis=-1, keepdims=False):
    """Euclidean norm; the gradient at a zero vector is taken as zero."""
    a = as_tensor(a)
    n = np.sqrt((a.data * a.data).sum(axis=axis, keepdims=True))

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        scale = np.divide(g, n, out=np.zeros(np.broadcast_shapes(g.shape, n.shape)), where=n > 0)
        return (scale * a.data,)

    out = n if keepdims else np.squeeze(n, axis=axis)
    return _result(out, (a,), vjp, "norm")


def reshape(a, shape):
    a = as_tensor(a)
    return _result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes):
    a = as_tensor(a)
    inverse = np.argsort(axes)
    return _result(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),), "transpose")


def index(a, key):
    a = as_tensor(a)
    parts = key if isinstance(key, tuple) else (key,)
    fancy = any(isinstance(p, (list, np.ndarray)) for p in parts)

    def vjp(g):
        out = np.zeros(a.shape)
        if fancy:
            np.add.at(out, key, g)
        else:
            out[key] = g
        return (out,)

    return _result(a.data[key], (a,), vjp, "index")


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors),
                   lambda g: tuple(np.split(g, splits, axis=axis)), "concat")


def take(a, indices, axis=0):
    """Gather slices of ``a`` along ``axis``; repeated indices accumulate."""
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)
    axis = axis % a.ndim

    def vjp(g):
        out = np.zeros(a.shape)
        np.add.at(np.moveaxis(out, axis, 0), indices, np.moveaxis(g, axis, 0))
        return (out,)

    return _result(np.take(a.data, indices, axis=axis), (a,), vjp, "take")


def segment_sum(values, segment_ids, num_segments):
    """Row ``m`` of the result sums the rows of ``values`` whose id is ``m``."""
    values = as_tensor(values)
    ids = np.asarray(segment_ids, dtype=np.int64)
    if ids.shape != values.shape[:1]:
        raise DimensionError(f"segment ids of shape {ids.shape} do not match values {values.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= num_segments):
        bad = int(ids[(ids < 0) | (ids >= num_segments)][0])
        raise SegmentIndexError(f"segment id {bad} outside [0, {num_segments})")
    out = np.zeros((num_segments,) + values.shape[1:])
    np.add.at(out, ids, values.data)
    return _result(out, (values,), lambda g: (g[ids],), "segment_sum")


# ---------------------------
# Normalisations
# ---------------------------

def softmax_rows(x):
    """Softmax over the trailing axis; rows that are entirely -inf give zeros."""
    x = as_tensor(x)
    peak = x.data.max(axis=-1, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    e = np.exp(x.data - peak)
    total = e.sum(axis=-1, keepdims=True)
    y = np.divide(e, total, out=np.zeros_like(e), where=total > 0)

    def vjp(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _result(y, (x,), vjp, "softmax_rows")


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalise the trailing axis to zero mean and unit variance, then scale and shift."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv

    def vjp(g):
        gx_hat = g * gamma.data
        gx = inv * (gx_hat - gx_hat.mean(axis=-1, keepdims=True)
                    - xhat * (gx_hat * xhat).mean(axis=-1, keepdims=True))
        return gx, unbroadcast(g * xhat, gamma.shape), unbroadcast(g, beta.shape)

    return _result(xhat * gamma.data + beta.data, (x, gamma, beta), vjp, "layer_norm")


# ---------------------------
# Reverse pass
# ---------------------------

def grad(tape, output, wrt=None):
    """Gradients of the scalar ``output`` with respect to the tape's leaves.

    Returns ``{leaf: ndarray}`` for every leaf reached, or a list aligned with
    ``wrt`` (zeros for leaves the output does not depend on).
    """
    if output.size != 1:
        raise ContractError(f"grad needs a scalar output, got shape {output.shape}")
    if not output.requires_grad:
        raise ContractError("output was not produced on the tape from any differentiable leaf")

    produced = {id(node.out) for node in tape.nodes}
    grads = {id(output): np.ones(output.shape)}
    leaves = {}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.out), None)
        if g is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg
            if key not in produced:
                leaves[key] = parent

    if wrt is None:
        return {leaves[key]: grads[key] for key in leaves}
    return [grads.get(id(t), np.zeros(t.shape)) if id(t) in leaves else np.zeros(t.shape) for t in wrt]
