"""Small reverse-mode differentiation engine over dense float64 numpy arrays.

Every operation on a :class:`Tensor` that depends on a trainable input is
appended to the owning :class:`Tape`; :meth:`Tape.backward` walks the records
in reverse and accumulates gradients by the chain rule. Operations whose
inputs are all constants are evaluated eagerly and not recorded.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError


class Tensor:
    __slots__ = ("value", "grad", "tape", "requires_grad", "name")

    def __init__(self, value, tape=None, requires_grad=False, name=None):
        self.value = value if sp.issparse(value) else np.asarray(value, dtype=np.float64)
        self.grad = None
        self.tape = tape
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return len(self.value.shape)

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return divide(self, other)

    def __rtruediv__(self, other):
        return divide(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


class Tape:
    """Ordered record of primitive operations.

    ``records`` holds ``(output, inputs, backward)`` triples in execution
    order, which is a topological order by construction.
    """

    def __init__(self, check_finite=False):
        self.records = []
        self.check_finite = check_finite

    def param(self, value, name=None) -> Tensor:
        return Tensor(np.array(value, dtype=np.float64), self, requires_grad=True, name=name)

    def constant(self, value) -> Tensor:
        return Tensor(value, self)

    def record(self, value, inputs, backward) -> Tensor:
        if self.check_finite and not np.all(np.isfinite(value)):
            raise FloatingPointError(f"non-finite value produced by {backward.__qualname__}")
        needs = any(t.requires_grad for t in inputs)
        out = Tensor(value, self, requires_grad=needs)
        if needs:
            self.records.append((out, inputs, backward))
        return out

    def backward(self, loss: Tensor, seed=None, retain=False):
        """Accumulate d(loss)/d(x) into ``x.grad`` for every recorded tensor.

        Records are dropped afterwards unless ``retain`` is set; tensors and
        the tape reference each other, so keeping them would defer freeing
        every intermediate array to the cyclic garbage collector.
        """
        if seed is None:
            if loss.value.size != 1:
                raise ShapeError("backward needs a scalar loss or an explicit seed gradient")
            seed = np.ones_like(loss.value)
        loss.grad = np.asarray(seed, dtype=np.float64) + (0.0 if loss.grad is None else loss.grad)
        for out, inputs, backward in reversed(self.records):
            if out.grad is None:
                continue
            grads = backward(out.grad)
            for t, g in zip(inputs, grads):
                if g is None or not t.requires_grad:
                    continue
                t.grad = g if t.grad is None else t.grad + g
        if not retain:
            self.records.clear()

    def zero_grad(self):
        for out, inputs, _ in self.records:
            out.grad = None
            for t in inputs:
                t.grad = None


def _tape_of(*xs):
    for x in xs:
        if isinstance(x, Tensor) and x.tape is not None:
            return x.tape
    return None


def _lift(x, tape):
    return x if isinstance(x, Tensor) else Tensor(x, tape)


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _emit(value, inputs, backward):
    tape = _tape_of(*inputs)
    if tape is None:
        return Tensor(value)
    return tape.record(value, inputs, backward)


def _binary(a, b):
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"incompatible shapes {a.shape} and {b.shape}") from None
    return a, b


def add(a, b) -> Tensor:
    a, b = _binary(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit(a.value + b.value, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _binary(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return _emit(a.value - b.value, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _binary(a, b)

    def backward(g):
        return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

    return _emit(a.value * b.value, (a, b), backward)


def divide(a, b) -> Tensor:
    a, b = _binary(a, b)
    out = a.value / b.value

    def backward(g):
        ga = g / b.value
        return _unbroadcast(ga, a.shape), _unbroadcast(-ga * out, b.shape)

    return _emit(out, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    a = _lift(a, None)
    c = float(c)
    return _emit(a.value * c, (a,), lambda g: (g * c,))


def matmul(a, b) -> Tensor:
    """2-D matrix product. A constant left operand may be a scipy sparse matrix."""
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes {a.shape} and {b.shape} do not align")
    if sp.issparse(b.value) or (sp.issparse(a.value) and a.requires_grad):
        raise ShapeError("only a constant left operand may be sparse")
    out = a.value @ b.value
    out = np.asarray(out)

    def backward(g):
        ga = g @ b.value.T if a.requires_grad else None
        gb = np.asarray(a.value.T @ g) if b.requires_grad else None
        return ga, gb

    return _emit(out, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    a = _lift(a, None)
    if a.ndim != 2:
        raise ShapeError(f"transpose needs a 2-D tensor, got {a.shape}")
    return _emit(a.value.T, (a,), lambda g: (g.T,))


def relu(a: Tensor) -> Tensor:
    a = _lift(a, None)
    mask = a.value > 0
    return _emit(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def exp(a: Tensor) -> Tensor:
    a = _lift(a, None)
    out = np.exp(a.value)
    return _emit(out, (a,), lambda g: (g * out,))


def sigmoid(a: Tensor) -> Tensor:
    a = _lift(a, None)
    x = a.value
    # split by sign to avoid overflow in exp
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _emit(out, (a,), lambda g: (g * out * (1.0 - out),))


def square(a: Tensor) -> Tensor:
    a = _lift(a, None)
    return _emit(a.value * a.value, (a,), lambda g: (2.0 * g * a.value,))


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp to ``[lo, hi]``; gradient is passed only where no clamping occurred."""
    a = _lift(a, None)
    inside = (a.value >= lo) & (a.value <= hi)
    return _emit(np.clip(a.value, lo, hi), (a,), lambda g: (g * inside,))


def sum(a: Tensor, axis=None, keepdims=False) -> Tensor:  # noqa: A001
    a = _lift(a, None)
    shape = a.shape
    out = a.value.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _emit(out, (a,), backward)


def dot(a: Tensor, b: Tensor, axis=-1) -> Tensor:
    """Inner product along ``axis`` (a full vector dot for 1-D inputs)."""
    a, b = _binary(a, b)
    if a.shape != b.shape:
        raise ShapeError(f"dot needs equal shapes, got {a.shape} and {b.shape}")
    out = np.einsum("...i,...i->...", np.moveaxis(a.value, axis, -1), np.moveaxis(b.value, axis, -1))

    def backward(g):
        g = np.expand_dims(g, axis)
        return g * b.value, g * a.value

    return _emit(out, (a, b), backward)


def reshape(a: Tensor, shape) -> Tensor:
    a = _lift(a, None)
    old = a.shape
    return _emit(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def concat(xs, axis=0) -> Tensor:
    tape = _tape_of(*xs)
    xs = [_lift(x, tape) for x in xs]
    sizes = [x.shape[axis] for x in xs]
    cuts = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _emit(np.concatenate([x.value for x in xs], axis=axis), tuple(xs), backward)


def _scatter_rows(values: np.ndarray, index: np.ndarray, n: int) -> np.ndarray:
    """Sum rows of ``values`` into ``n`` buckets by ``index`` (fixed summation order)."""
    flat = values.reshape(len(index), -1)
    m = sp.csr_matrix(
        (np.ones(len(index)), (index, np.arange(len(index)))), shape=(n, len(index))
    )
    return np.asarray(m @ flat).reshape((n,) + values.shape[1:])


def gather(a: Tensor, index) -> Tensor:
    """Rows ``a[index]`` along the first axis."""
    a = _lift(a, None)
    index = np.asarray(index, dtype=np.int64)
    n = a.shape[0]
    return _emit(a.value[index], (a,), lambda g: (_scatter_rows(g, index, n),))


def segment_sum(a: Tensor, index, num_segments: int) -> Tensor:
    """``out[j] = sum of a[i] over i with index[i] == j`` (first axis)."""
    a = _lift(a, None)
    index = np.asarray(index, dtype=np.int64)
    if len(index) != a.shape[0]:
        raise ShapeError(f"segment index length {len(index)} != rows {a.shape[0]}")
    return _emit(_scatter_rows(a.value, index, num_segments), (a,), lambda g: (g[index],))


def softmax(a: Tensor, axis=-1) -> Tensor:
    """Softmax built from primitives; the max shift is a constant and leaves gradients exact."""
    a = _lift(a, None)
    shift = np.max(a.value, axis=axis, keepdims=True)
    e = exp(sub(a, shift))
    return divide(e, sum(e, axis=axis, keepdims=True))


def glorot_init(shape, seed=None, rng=None) -> np.ndarray:
    """Uniform Glorot/Xavier initialisation on ``[-a, a]``, ``a = sqrt(6 / (fan_in + fan_out))``."""
    if len(shape) != 2 or min(shape) < 1:
        raise ShapeError(f"glorot_init needs two positive dimensions, got {shape}")
    fan_out, fan_in = shape
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    rng = rng if rng is not None else np.random.default_rng(seed)
    return rng.uniform(-bound, bound, size=shape)


def finite_difference_check(loss_fn, params: dict, h: float = 1e-5) -> float:
    """Compare tape gradients with central differences over every parameter entry.

    ``loss_fn(tape, tensors)`` must build a scalar loss on ``tape`` from the
    dict of parameter tensors. Returns the largest relative error, using
    ``max(|analytic|, |numeric|, 1e-8)`` as denominator.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}

    def value_at(arrays):
        tape = Tape()
        tensors = {k: tape.param(v, name=k) for k, v in arrays.items()}
        return float(loss_fn(tape, tensors).value)

    tape = Tape()
    tensors = {k: tape.param(v, name=k) for k, v in params.items()}
    loss = loss_fn(tape, tensors)
    tape.backward(loss)

    worst = 0.0
    for name, base in params.items():
        analytic = tensors[name].grad
        if analytic is None:
            analytic = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            orig = base[idx]
            base[idx] = orig + h
            f_plus = value_at(params)
            base[idx] = orig - h
            f_minus = value_at(params)
            base[idx] = orig
            numeric = (f_plus - f_minus) / (2 * h)
            a = analytic[idx]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
