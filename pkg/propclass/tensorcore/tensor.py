# -*- coding: utf-8 -*-

"""
propclass.tensorcore.tensor
~~~~~~~~~~~~~~~~~~~~~~~~~~~

A dense float64 tensor with reverse-mode automatic differentiation. Operations are recorded on the active Tape
when any input requires gradients; outside a tape they only compute values.
"""

import threading

import numpy as np

from ..exceptions import NotRecorded, NotScalar, ShapeMismatch

_local = threading.local()


class Tape(object):
    """An ordered record of operations. Use as a context manager; tapes are confined to the recording thread."""

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        _stack().pop()
        return False

    def __len__(self):
        return len(self.nodes)

    @staticmethod
    def current():
        """The innermost active tape of this thread, or None."""
        stack = _stack()
        return stack[-1] if stack else None

    def record(self, op, output, parents, backward):
        node = _Node(len(self.nodes), op, output, parents, backward, self)
        self.nodes.append(node)
        output.node = node


def _stack():
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


class _Node(object):
    __slots__ = ("index", "op", "output", "parents", "backward", "tape")

    def __init__(self, index, op, output, parents, backward, tape):
        self.index = index
        self.op = op
        self.output = output
        self.parents = parents
        self.backward = backward
        self.tape = tape


class Tensor(object):
    """A row-major float64 array with an optional gradient buffer."""

    def __init__(self, data, requires_grad=False, name=None):
        """Initialize the Tensor object.

        :param data: The values. Copied into a float64 array.
        :param requires_grad: Whether gradients flow into this tensor.
        :type requires_grad: bool
        :param name: An optional name, used in error messages and checkpoints.
        :type name: str or None
        """
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.node = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data.copy()

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        label = " name={0!r}".format(self.name) if self.name else ""
        return "Tensor(shape={0}{1})".format(self.shape, label)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(op, data, parents, backward):
    output = Tensor.__new__(Tensor)
    output.data = data
    output.grad = None
    output.node = None
    output.name = None
    output.requires_grad = False
    tape = Tape.current()
    if tape is not None and any(p.requires_grad for p in parents):
        output.requires_grad = True
        tape.record(op, output, parents, backward)
    return output


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(op, a.shape, b.shape)


def matmul(a, b):
    """Matrix product over the last two axes, broadcasting leading axes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch("matmul", a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeMismatch("matmul", a.shape, b.shape)

    def backward(grad):
        return (
            _unbroadcast(grad @ np.swapaxes(b.data, -1, -2), a.shape),
            _unbroadcast(np.swapaxes(a.data, -1, -2) @ grad, b.shape),
        )

    return _result("matmul", a.data @ b.data, (a, b), backward)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def backward(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    return _result("add", a.data + b.data, (a, b), backward)


def mul(a, b):
    """Element-wise product with broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)

    def backward(grad):
        return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)

    return _result("mul", a.data * b.data, (a, b), backward)


def scale(a, factor):
    a = as_tensor(a)
    factor = float(factor)

    def backward(grad):
        return (grad * factor,)

    return _result("scale", a.data * factor, (a,), backward)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeMismatch("concat", tensors[0].shape, tensors[-1].shape)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(grad):
        return tuple(np.split(grad, bounds, axis=axis))

    return _result("concat", data, tuple(tensors), backward)


def reshape(a, shape):
    a = as_tensor(a)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatch("reshape", a.shape, shape)

    def backward(grad):
        return (grad.reshape(a.shape),)

    return _result("reshape", data, (a,), backward)


def flatten(a):
    """Merges the last two axes: a (..., m, n) tensor becomes (..., m * n)."""
    a = as_tensor(a)
    return reshape(a, a.shape[:-2] + (a.shape[-2] * a.shape[-1],))


def swapaxes(a, axis1=-1, axis2=-2):
    a = as_tensor(a)

    def backward(grad):
        return (np.swapaxes(grad, axis1, axis2),)

    return _result("swapaxes", np.swapaxes(a.data, axis1, axis2), (a,), backward)


def total(a):
    """The sum of all elements, as a scalar tensor."""
    a = as_tensor(a)

    def backward(grad):
        return (np.broadcast_to(grad, a.shape).copy(),)

    return _result("sum", np.array(a.data.sum()), (a,), backward)


def mean_pool(a, axis=0):
    """Mean over `axis`, keeping it with size 1."""
    a = as_tensor(a)
    count = a.shape[axis]

    def backward(grad):
        return (np.broadcast_to(grad / count, a.shape).copy(),)

    return _result("mean_pool", a.data.mean(axis=axis, keepdims=True), (a,), backward)


def relu(a):
    a = as_tensor(a)
    mask = a.data > 0

    def backward(grad):
        return (grad * mask,)

    return _result("relu", a.data * mask, (a,), backward)


def sigmoid(a):
    a = as_tensor(a)
    x = a.data
    positive = x >= 0
    exp_neg = np.exp(-np.abs(x))
    out = np.where(positive, 1.0 / (1.0 + exp_neg), exp_neg / (1.0 + exp_neg))

    def backward(grad):
        return (grad * out * (1.0 - out),)

    return _result("sigmoid", out, (a,), backward)


def softmax(a):
    """Softmax over the last axis."""
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=-1, keepdims=True)

    def backward(grad):
        return (out * (grad - (grad * out).sum(axis=-1, keepdims=True)),)

    return _result("softmax", out, (a,), backward)


def layer_norm(a, gain, bias, eps=1e-5):
    """Normalizes the last axis to zero mean and unit variance, then applies a learnable gain and bias."""
    a, gain, bias = as_tensor(a), as_tensor(gain), as_tensor(bias)
    width = a.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise ShapeMismatch("layer_norm", a.shape, gain.shape)
    mean = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mean
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std

    def backward(grad):
        grad_normed = grad * gain.data
        grad_a = (
            inv_std
            / width
            * (
                width * grad_normed
                - grad_normed.sum(axis=-1, keepdims=True)
                - normed * (grad_normed * normed).sum(axis=-1, keepdims=True)
            )
        )
        axes = tuple(range(grad.ndim - 1))
        return grad_a, (grad * normed).sum(axis=axes), grad.sum(axis=axes)

    return _result("layer_norm", normed * gain.data + bias.data, (a, gain, bias), backward)


def dropout(a, rate, train, rng):
    """Zeroes each element with probability `rate` and rescales the rest. The identity when not training.

    :param rng: The seeded generator that draws the mask.
    :type rng: numpy.random.Generator
    """
    a = as_tensor(a)
    if not train or rate <= 0.0:
        return a
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)

    def backward(grad):
        return (grad * mask,)

    return _result("dropout", a.data * mask, (a,), backward)


def embedding_gather(table, ids):
    """Gathers rows of `table` by integer ids; the result has shape ids.shape + table.shape[1:]."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeMismatch("embedding_gather", table.shape, ids.shape)

    def backward(grad):
        grad_table = np.zeros_like(table.data)
        np.add.at(grad_table, ids, grad)
        return (grad_table,)

    return _result("embedding_gather", table.data[ids], (table,), backward)


def binary_cross_entropy(probs, targets, eps=1e-12):
    """-sum(Y log y + (1 - Y) log(1 - y)), with y clamped into [eps, 1 - eps].

    :param probs: Probabilities y.
    :param targets: 0/1 targets Y of the same shape.
    :type targets: numpy.ndarray
    """
    probs = as_tensor(probs)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise ShapeMismatch("binary_cross_entropy", probs.shape, targets.shape)
    clamped = np.clip(probs.data, eps, 1.0 - eps)
    loss = -(targets * np.log(clamped) + (1.0 - targets) * np.log(1.0 - clamped)).sum()
    inside = (probs.data > eps) & (probs.data < 1.0 - eps)

    def backward(grad):
        return (grad * inside * (-(targets / clamped) + (1.0 - targets) / (1.0 - clamped)),)

    return _result("binary_cross_entropy", np.array(loss), (probs,), backward)


def constant(data):
    """A tensor that never requires gradients."""
    return Tensor(data)


def backward(loss):
    """Accumulates d(loss)/d(leaf) into the `grad` of every leaf tensor reachable from `loss` on its tape.

    Nodes are visited in exact reverse recording order. Repeated calls accumulate.

    :param loss: A recorded scalar.
    :type loss: Tensor
    :raise NotScalar: Raises if `loss` has more than one element.
    :raise NotRecorded: Raises if `loss` was not recorded on a tape.
    """
    if loss.size != 1:
        raise NotScalar(loss.shape)
    if loss.node is None:
        raise NotRecorded()
    tape = loss.node.tape
    pending = {loss.node.index: np.ones_like(loss.data)}
    for node in reversed(tape.nodes[: loss.node.index + 1]):
        grad = pending.pop(node.index, None)
        if grad is None:
            continue
        for parent, parent_grad in zip(node.parents, node.backward(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            if parent.node is not None and parent.node.tape is tape:
                index = parent.node.index
                pending[index] = parent_grad if index not in pending else pending[index] + parent_grad
            elif parent.grad is None:
                parent.grad = np.array(parent_grad, dtype=np.float64)
            else:
                parent.grad = parent.grad + parent_grad
