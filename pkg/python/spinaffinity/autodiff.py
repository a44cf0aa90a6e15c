# @license
# Copyright 2024 The spinaffinity Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Dense float64 tensors with tape-based reverse-mode differentiation.

Typical use:

    tape = Tape()
    w = tape.watch(weight_parameter)
    loss = sum(square(matmul(x, w)))
    grads = tape.backward(loss)   # {parameter name: ndarray}

Operations on tensors that are not recorded on any tape are evaluated eagerly
and are not differentiable.  Each tape is independent: combining tensors
recorded on two different tapes is an error.
"""

import collections

import numpy as np

# NaN/Inf tripwire evaluated after every primitive.
check_finite = True

LAYER_NORM_VARIANCE_FLOOR = 1e-5


class AutodiffError(Exception):
    pass


class ShapeError(AutodiffError, ValueError):
    pass


class NonFiniteError(AutodiffError, FloatingPointError):
    pass


class DetachedTapeError(AutodiffError, RuntimeError):
    pass


class Parameter(object):
    """A named trainable array."""

    __slots__ = ('name', 'value', 'requires_grad')

    def __init__(self, name, value, requires_grad=True):
        self.name = name
        self.value = np.array(value, dtype=np.float64)
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return 'Parameter(%r, shape=%r)' % (self.name, self.value.shape)


class Tensor(object):
    __slots__ = ('data', 'tape', 'node_id')

    def __init__(self, data, tape=None, node_id=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.tape = tape
        self.node_id = node_id

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def T(self):
        return transpose(self)

    def item(self):
        if self.data.size != 1:
            raise ShapeError('item() requires a single-element tensor, shape is %r' %
                             (self.data.shape, ))
        return float(self.data.reshape(()))

    def numpy(self):
        return self.data

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scalar_mul(self, other)
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return scalar_mul(self, 1.0 / other)
        return divide(self, other)

    def __rtruediv__(self, other):
        return divide(other, self)

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return 'Tensor(shape=%r, recorded=%s)' % (self.data.shape, self.tape is not None)


_Node = collections.namedtuple('_Node', ['parents', 'backward'])


class Tape(object):
    """Ordered record of primitive applications.

    Node ids increase in recording order, so reverse id order is a valid reverse
    topological order.
    """

    def __init__(self):
        self._nodes = []
        self._watched = collections.OrderedDict()

    def __len__(self):
        return len(self._nodes)

    def watch(self, parameter):
        """Records `parameter` as a differentiable leaf and returns its tensor."""
        if not parameter.requires_grad:
            return Tensor(parameter.value)
        entry = self._watched.get(parameter.name)
        if entry is not None:
            if entry[0] is not parameter:
                raise AutodiffError('duplicate parameter name %r' % (parameter.name, ))
            return Tensor(parameter.value, self, entry[1])
        node_id = len(self._nodes)
        self._nodes.append(_Node((), None))
        self._watched[parameter.name] = (parameter, node_id)
        return Tensor(parameter.value, self, node_id)

    def _record(self, data, parents, backward):
        node_id = len(self._nodes)
        self._nodes.append(_Node(parents, backward))
        return Tensor(data, self, node_id)

    def backward(self, loss):
        """Returns {parameter name: gradient} for every watched parameter."""
        if not isinstance(loss, Tensor) or loss.tape is None:
            raise DetachedTapeError('loss is not recorded on a tape')
        if loss.tape is not self:
            raise DetachedTapeError('loss was recorded on a different tape')
        if loss.data.size != 1:
            raise ShapeError('backward requires a scalar loss, shape is %r' % (loss.data.shape, ))
        grads = [None] * (loss.node_id + 1)
        grads[loss.node_id] = np.ones_like(loss.data)
        for node_id in range(loss.node_id, -1, -1):
            g = grads[node_id]
            if g is None:
                continue
            node = self._nodes[node_id]
            if node.backward is None:
                continue
            parent_grads = node.backward(g)
            for parent, pg in zip(node.parents, parent_grads):
                if parent is None or pg is None:
                    continue
                grads[parent] = pg if grads[parent] is None else grads[parent] + pg
            grads[node_id] = None if node_id != loss.node_id else g
        result = collections.OrderedDict()
        for name, (parameter, node_id) in self._watched.items():
            g = grads[node_id] if node_id < len(grads) else None
            if g is None:
                g = np.zeros_like(parameter.value)
            result[name] = np.array(g, dtype=np.float64).reshape(parameter.value.shape)
        return result


def backward(loss):
    if not isinstance(loss, Tensor) or loss.tape is None:
        raise DetachedTapeError('loss is not recorded on a tape')
    return loss.tape.backward(loss)


def as_tensor(x):
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _common_tape(inputs):
    tape = None
    for t in inputs:
        if t.tape is not None:
            if tape is not None and t.tape is not tape:
                raise AutodiffError('operands are recorded on different tapes')
            tape = t.tape
    return tape


def _apply(name, data, inputs, backward):
    if check_finite and not np.all(np.isfinite(data)):
        raise NonFiniteError('%s produced a non-finite value' % (name, ))
    tape = _common_tape(inputs)
    if tape is None:
        return Tensor(data)
    parents = tuple(t.node_id if t.tape is tape else None for t in inputs)
    return tape._record(data, parents, backward)


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(name, a, b):
    try:
        return np.broadcast(a.data, b.data).shape
    except ValueError:
        raise ShapeError('%s: incompatible shapes %r and %r' % (name, a.shape, b.shape))


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('add', a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _apply('add', a.data + b.data, (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('sub', a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _apply('sub', a.data - b.data, (a, b), backward)


def mul(a, b):
    """Elementwise product."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('mul', a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _apply('mul', a.data * b.data, (a, b), backward)


elementwise_mul = mul


def scalar_mul(a, s):
    a = as_tensor(a)
    s = float(s)

    def backward(g):
        return (g * s, )

    return _apply('scalar_mul', a.data * s, (a, ), backward)


def divide(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('divide', a, b)
    if np.any(b.data == 0):
        raise ZeroDivisionError('divide: denominator contains zero')
    out = a.data / b.data

    def backward(g):
        return (_unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape))

    return _apply('divide', out, (a, b), backward)


def power(a, exponent):
    """Elementwise a**exponent for a constant exponent."""
    a = as_tensor(a)
    exponent = float(exponent)
    out = np.power(a.data, exponent)

    def backward(g):
        return (g * exponent * np.power(a.data, exponent - 1), )

    return _apply('power', out, (a, ), backward)


def square(a):
    a = as_tensor(a)

    def backward(g):
        return (2 * g * a.data, )

    return _apply('square', a.data * a.data, (a, ), backward)


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)

    def backward(g):
        return (g * out, )

    return _apply('exp', out, (a, ), backward)


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)

    def backward(g):
        return (g * (1 - out * out), )

    return _apply('tanh', out, (a, ), backward)


def relu(a):
    a = as_tensor(a)
    mask = (a.data > 0).astype(np.float64)

    def backward(g):
        return (g * mask, )

    return _apply('relu', a.data * mask, (a, ), backward)


def _sigmoid(x):
    return 0.5 * (1 + np.tanh(0.5 * x))


def swish(a):
    """x * sigmoid(x)."""
    a = as_tensor(a)
    s = _sigmoid(a.data)

    def backward(g):
        return (g * (s + a.data * s * (1 - s)), )

    return _apply('swish', a.data * s, (a, ), backward)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError('matmul: incompatible shapes %r and %r' % (a.shape, b.shape))

    def backward(g):
        return g.dot(b.data.T), a.data.T.dot(g)

    return _apply('matmul', a.data.dot(b.data), (a, b), backward)


def transpose(a):
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError('transpose requires a matrix, shape is %r' % (a.shape, ))

    def backward(g):
        return (g.T, )

    return _apply('transpose', a.data.T, (a, ), backward)


def reshape(a, shape):
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError('reshape: cannot reshape %r into %r' % (a.shape, shape))

    def backward(g):
        return (g.reshape(a.shape), )

    return _apply('reshape', out, (a, ), backward)


def sum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    if axis is not None and not -a.ndim <= axis < a.ndim:
        raise ShapeError('sum: axis %r out of range for shape %r' % (axis, a.shape))
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(), )

    return _apply('sum', out, (a, ), backward)


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    count = a.data.size if axis is None else a.shape[axis]
    return scalar_mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError('concat: incompatible shapes %r' % ([t.shape for t in tensors], ))
    boundaries = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, boundaries, axis=axis))

    return _apply('concat', out, tensors, backward)


def gather_rows(a, indices):
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= a.shape[0]):
        raise ShapeError('gather_rows: index out of range for %d rows' % (a.shape[0], ))

    def backward(g):
        out = np.zeros_like(a.data)
        np.add.at(out, indices, g)
        return (out, )

    return _apply('gather_rows', a.data[indices], (a, ), backward)


def segment_sum(a, segment_ids, num_segments):
    """Sums rows of `a` that share a segment id; the inverse of gather_rows."""
    a = as_tensor(a)
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    if segment_ids.shape != a.shape[:1]:
        raise ShapeError('segment_sum: %d ids for %d rows' % (segment_ids.shape[0], a.shape[0]))
    out = np.zeros((num_segments, ) + a.shape[1:], dtype=np.float64)
    np.add.at(out, segment_ids, a.data)

    def backward(g):
        return (g[segment_ids], )

    return _apply('segment_sum', out, (a, ), backward)


def softmax(a, axis=-1):
    """Softmax with max-subtraction."""
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)), )

    return _apply('softmax', out, (a, ), backward)


def segment_softmax(a, segment_ids, num_segments):
    """Softmax over the rows of `a` that share a segment id, column by column."""
    a = as_tensor(a)
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    if segment_ids.shape != a.shape[:1]:
        raise ShapeError('segment_softmax: %d ids for %d rows' %
                         (segment_ids.shape[0], a.shape[0]))
    maxima = np.full((num_segments, ) + a.shape[1:], -np.inf)
    np.maximum.at(maxima, segment_ids, a.data)
    e = np.exp(a.data - maxima[segment_ids])
    totals = np.zeros((num_segments, ) + a.shape[1:])
    np.add.at(totals, segment_ids, e)
    out = e / totals[segment_ids]

    def backward(g):
        weighted = np.zeros((num_segments, ) + a.shape[1:])
        np.add.at(weighted, segment_ids, g * out)
        return (out * (g - weighted[segment_ids]), )

    return _apply('segment_softmax', out, (a, ), backward)


def normalize_rows(a, floor=LAYER_NORM_VARIANCE_FLOOR):
    """(x - mean) / sqrt(max(var, floor)) over the last axis."""
    a = as_tensor(a)
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    floored = var < floor
    inv_std = 1.0 / np.sqrt(np.maximum(var, floor))
    out = centered * inv_std

    def backward(g):
        g_mean = g.mean(axis=-1, keepdims=True)
        gx_mean = (g * out).mean(axis=-1, keepdims=True)
        gx_mean = np.where(floored, 0.0, gx_mean)
        return (inv_std * (g - g_mean - out * gx_mean), )

    return _apply('normalize_rows', out, (a, ), backward)


def layer_norm(a, gain, bias, floor=LAYER_NORM_VARIANCE_FLOOR):
    return add(mul(normalize_rows(a, floor), gain), bias)


def linear(x, weight, bias=None):
    """x W + b with W of shape (in, out)."""
    out = matmul(x, weight)
    if bias is not None:
        out = add(out, bias)
    return out


GradCheckReport = collections.namedtuple(
    'GradCheckReport',
    ['max_rel_error', 'max_abs_error', 'num_checked', 'passed', 'analytic', 'numeric'])


def grad_check(f, x, step=1e-5, tol=1e-4, abs_floor=1e-6, max_entries=None, rng=None):
    """Compares tape gradients of scalar `f` at `x` against central differences.

    An entry passes when |analytic - numeric| <= tol * max(|analytic|, |numeric|) +
    abs_floor.  The reported relative error is normalized so that the check
    passes exactly when `max_rel_error <= tol`.

    @param f: function mapping a Tensor to a scalar Tensor.
    @param max_entries: if given, check only this many randomly chosen entries.
    """
    x = np.array(x, dtype=np.float64)
    parameter = Parameter('x', x)
    tape = Tape()
    out = f(tape.watch(parameter))
    if not isinstance(out, Tensor) or out.tape is None:
        analytic = np.zeros_like(x)
    else:
        analytic = tape.backward(out)['x']

    flat_indices = np.arange(x.size)
    if max_entries is not None and max_entries < x.size:
        if rng is None:
            rng = np.random.default_rng(0)
        flat_indices = np.sort(rng.choice(x.size, size=max_entries, replace=False))

    numeric = np.full(x.shape, np.nan)
    for flat in flat_indices:
        index = np.unravel_index(flat, x.shape)
        plus = x.copy()
        plus[index] += step
        minus = x.copy()
        minus[index] -= step
        f_plus = as_tensor(f(Tensor(plus))).item()
        f_minus = as_tensor(f(Tensor(minus))).item()
        numeric[index] = (f_plus - f_minus) / (2 * step)

    checked_analytic = analytic.reshape(-1)[flat_indices]
    checked_numeric = numeric.reshape(-1)[flat_indices]
    abs_error = np.abs(checked_analytic - checked_numeric)
    scale = np.maximum(np.abs(checked_analytic), np.abs(checked_numeric)) + abs_floor / tol
    rel_error = abs_error / scale
    max_rel = float(rel_error.max()) if rel_error.size else 0.0
    max_abs = float(abs_error.max()) if abs_error.size else 0.0
    return GradCheckReport(max_rel_error=max_rel,
                           max_abs_error=max_abs,
                           num_checked=int(len(flat_indices)),
                           passed=bool(max_rel <= tol),
                           analytic=analytic,
                           numeric=numeric)
