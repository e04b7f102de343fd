"""Dense double precision tensors with reverse-mode automatic differentiation.

Every operation is dispatched through :func:`forward_op`, which looks the op up in a
registry of small op classes. Each op class knows how to compute its value and how
to push an incoming gradient back to its inputs. When at least one input is tracked
the output records a graph node; :func:`backward` walks that graph in reverse
topological order and accumulates gradients into the tracked leaves.

The graph of a single computation belongs to one thread. Untracked computations
build no graph at all, which is how frozen networks are evaluated.
"""
import itertools
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

__all__ = (
    'Tensor', 'ShapeError', 'DomainError', 'GraphError', 'forward_op', 'backward',
    'matmul', 'add', 'subtract', 'multiply', 'sigmoid', 'tanh', 'log', 'square',
    'reduce_sum', 'reduce_mean', 'concat', 'stack', 'take', 'reshape', 'clip'
)

_node_ids = itertools.count(1)


class ShapeError(ValueError):
    """Input shapes do not conform to an op's shape rule."""

    def __init__(self, op: str, shapes: Sequence[Tuple[int, ...]], reason: str = ''):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        msg = f'{op}: incompatible input shapes ' \
            f'{", ".join(str(s) for s in self.shapes)}'
        if reason:
            msg = f'{msg} ({reason})'
        super().__init__(msg)


class DomainError(ValueError):
    """An op was evaluated outside its mathematical domain."""


class GraphError(RuntimeError):
    """Misuse of the differentiation graph."""


class _Node:
    __slots__ = ('id', 'op', 'inputs', 'attrs', 'output', 'consumed')

    def __init__(self, op: str, inputs: List['Tensor'], attrs: Dict[str, Any],
                 output: np.ndarray):
        self.id = next(_node_ids)
        self.op = op
        self.inputs = inputs
        self.attrs = attrs
        self.output = output
        self.consumed = False


class Tensor:
    """A dense n-dimensional array of doubles.

    Args:
        values: Anything ``numpy.array`` accepts. Values are copied.
        tracked: Set to True for parameters that should receive gradients.

    """
    __slots__ = ('values', 'grad', 'tracked', '_node')
    __array_ufunc__ = None

    def __init__(self, values, tracked: bool = False):
        if isinstance(values, Tensor):
            values = values.values
        values = np.array(values, dtype=np.float64)
        if any(d <= 0 for d in values.shape):
            raise ValueError(f'Tensor dimensions must be positive: {values.shape}')
        self.values = values
        self.grad: Optional[np.ndarray] = None
        self.tracked = bool(tracked)
        self._node: Optional[_Node] = None

    @classmethod
    def _wrap(cls, values: np.ndarray, node: Optional[_Node]) -> 'Tensor':
        out = cls.__new__(cls)
        out.values = values
        out.grad = None
        out.tracked = node is not None
        out._node = node
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def node_id(self) -> Optional[int]:
        """Opaque graph handle for tensors produced by a tracked op."""
        return self._node.id if self._node is not None else None

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        if self.values.size != 1:
            raise ValueError(f'item() needs a single value, got shape {self.shape}')
        return float(self.values.reshape(-1)[0])

    def detach(self) -> 'Tensor':
        """Return an untracked tensor sharing the same values."""
        return Tensor._wrap(self.values, None)

    def zero_grad(self) -> None:
        if self.tracked:
            self.grad = np.zeros_like(self.values)

    def __repr__(self):
        flag = ', tracked' if self.tracked else ''
        return f'Tensor(shape={self.shape}{flag})'

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return subtract(self, other)

    def __rsub__(self, other):
        return subtract(other, self)

    def __mul__(self, other):
        return multiply(self, other)

    def __rmul__(self, other):
        return multiply(other, self)

    def __neg__(self):
        return multiply(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor._wrap(np.asarray(value, dtype=np.float64), None)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _index(ndim: int, axis: int, index) -> tuple:
    return (slice(None),) * axis + (index,) + (slice(None),) * (ndim - axis - 1)


# op registry ----------------------------------------------------------------------

_OPS: Dict[str, type] = {}


def _register(name: str):
    def decorator(cls):
        cls.name = name
        _OPS[name] = cls
        return cls
    return decorator


class _Op:
    """Base class for registered ops.

    ``forward`` receives raw arrays and returns the output array. ``backward``
    receives the output gradient, the output array and the input arrays and returns
    one gradient (or None) per input.
    """
    name = ''
    arity: Optional[int] = 1

    @classmethod
    def forward(cls, values: List[np.ndarray], **attrs) -> np.ndarray:
        raise NotImplementedError

    @classmethod
    def backward(cls, grad, out, values, **attrs) -> List[Optional[np.ndarray]]:
        raise NotImplementedError


@_register('matmul')
class _MatMul(_Op):
    arity = 2

    @classmethod
    def forward(cls, values, **attrs):
        a, b = values
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError('matmul', [a.shape, b.shape], 'expected [n x k] @ [k x m]')
        return a @ b

    @classmethod
    def backward(cls, grad, out, values, **attrs):
        a, b = values
        return [grad @ b.T, a.T @ grad]


class _Elementwise2(_Op):
    arity = 2

    @classmethod
    def _check(cls, a, b):
        try:
            np.broadcast_shapes(a.shape, b.shape)
        except ValueError:
            raise ShapeError(cls.name, [a.shape, b.shape], 'not broadcastable')


@_register('add')
class _Add(_Elementwise2):

    @classmethod
    def forward(cls, values, **attrs):
        a, b = values
        cls._check(a, b)
        return a + b

    @classmethod
    def backward(cls, grad, out, values, **attrs):
        a, b = values
        return [_unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)]


@_register('subtract')
class _Subtract(_Elementwise2):

    @classmethod
    def forward(cls, values, **attrs):
        a, b = values
        cls._check(a, b)
        return a - b

    @classmethod
    def backward(cls, grad, out, values, **attrs):
        a, b = values
        return [_unbroadcast(grad, a.shape), _unbroadcast(-grad, b.shape)]


@_register('multiply')
class _Multiply(_Elementwise2):

    @classmethod
    def forward(cls, values, **attrs):
        a, b = values
        cls._check(a, b)
        return a * b

    @classmethod
    def backward(cls, grad, out, values, **attrs):
        a, b = values
        return [_unbroadcast(grad * b, a.shape), _unbroadcast(grad * a, b.shape)]


@_register('sigmoid')
class _Sigmoid(_Op):

    @classmethod
    def forward(cls, values, **attrs):
        return expit(values[0])

    @classmethod
    def backward(cls, grad, out, values, **attrs):
        return [grad * out * (1.0 - out)]


@_register('tanh')
class _Tanh(_Op):

    @classmethod
    def forward(cls, values, **attrs):
        return np.tanh(values[0])

    @classmethod
    def backward(cls, grad, out, values, **attrs):
        return [grad * (1.0 - out * out)]


@_register('log')
class _Log(_Op):

    @classmethod
    def forward(cls, values, **attrs):
        a = values[0]
        if np.any(a <= 0):
            raise DomainError(
                f'log: {int(np.sum(a <= 0))} non-positive value(s), smallest '
                f'{a.min()!r}. Clamp probabilities before taking the log.'
            )
        return np.log(a)

    @classmethod
    def backward(cls, grad, out, values, **attrs):
        return [grad / values[0]]


@_register('square')
class _Square(_Op):

    @classmethod
    def forward(cls, values, **attrs):
        return values[0] * values[0]

    @classmethod
    def backward(cls, grad, out, values, **attrs):
        return [2.0 * values[0] * grad]


@_register('sum')
class _Sum(_Op):

    @classmethod
    def forward(cls, values, axis=None, **attrs):
        a = values[0]
        if axis is not None and not -a.ndim <= axis < a.ndim:
            raise ShapeError('sum', [a.shape], f'axis {axis} out of range')
        return np.asarray(a.sum(axis=axis))

    @classmethod
    def backward(cls, grad, out, values, axis=None, **attrs):
        a = values[0]
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return [np.broadcast_to(grad, a.shape).copy()]


@_register('mean')
class _Mean(_Op):

    @classmethod
    def forward(cls, values, axis=None, **attrs):
        a = values[0]
        if axis is not None and not -a.ndim <= axis < a.ndim:
            raise ShapeError('mean', [a.shape], f'axis {axis} out of range')
        return np.asarray(a.mean(axis=axis))

    @classmethod
    def backward(cls, grad, out, values, axis=None, **attrs):
        a = values[0]
        count = a.size if axis is None else a.shape[axis]
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return [np.broadcast_to(grad / count, a.shape).copy()]


@_register('concat')
class _Concat(_Op):
    arity = None

    @classmethod
    def forward(cls, values, axis=0, **attrs):
        try:
            return np.concatenate(values, axis=axis)
        except ValueError:
            raise ShapeError('concat', [v.shape for v in values], f'axis {axis}')

    @classmethod
    def backward(cls, grad, out, values, axis=0, **attrs):
        cuts = np.cumsum([v.shape[axis] for v in values])[:-1]
        return np.split(grad, cuts, axis=axis)


@_register('stack')
class _Stack(_Op):
    arity = None

    @classmethod
    def forward(cls, values, axis=0, **attrs):
        try:
            return np.stack(values, axis=axis)
        except ValueError:
            raise ShapeError('stack', [v.shape for v in values], f'axis {axis}')

    @classmethod
    def backward(cls, grad, out, values, axis=0, **attrs):
        return [np.take(grad, i, axis=axis) for i in range(len(values))]


@_register('slice')
class _Slice(_Op):

    @classmethod
    def forward(cls, values, index=0, axis=0, **attrs):
        a = values[0]
        if not 0 <= axis < a.ndim:
            raise ShapeError('slice', [a.shape], f'axis {axis} out of range')
        try:
            out = a[_index(a.ndim, axis, index)]
        except IndexError:
            raise ShapeError('slice', [a.shape], f'index {index} on axis {axis}')
        if out.size == 0:
            raise ShapeError('slice', [a.shape], f'empty selection {index}')
        return out.copy()

    @classmethod
    def backward(cls, grad, out, values, index=0, axis=0, **attrs):
        a = values[0]
        full = np.zeros_like(a)
        full[_index(a.ndim, axis, index)] = grad
        return [full]


@_register('reshape')
class _Reshape(_Op):

    @classmethod
    def forward(cls, values, shape=(), **attrs):
        a = values[0]
        try:
            return a.reshape(shape)
        except ValueError:
            raise ShapeError('reshape', [a.shape, tuple(shape)], 'size mismatch')

    @classmethod
    def backward(cls, grad, out, values, **attrs):
        return [grad.reshape(values[0].shape)]


@_register('clip')
class _Clip(_Op):

    @classmethod
    def forward(cls, values, low=-np.inf, high=np.inf, **attrs):
        return np.clip(values[0], low, high)

    @classmethod
    def backward(cls, grad, out, values, low=-np.inf, high=np.inf, **attrs):
        a = values[0]
        return [grad * ((a >= low) & (a <= high))]


def forward_op(kind: str, inputs: Sequence, **attrs) -> Tensor:
    """Evaluate a registered op.

    Args:
        kind: Op name (e.g. matmul, add, sigmoid, slice).
        inputs: Input tensors. Plain numbers and arrays are wrapped as untracked
            constants.
        attrs: Op specific attributes (axis, index, shape, low, high).

    Returns:
        Tensor -- tracked when any input is tracked.
    """
    try:
        op = _OPS[kind]
    except KeyError:
        raise ValueError(f'Unknown op "{kind}". Valid ops are {sorted(_OPS)}.')
    tensors = [_as_tensor(v) for v in inputs]
    if op.arity is not None and len(tensors) != op.arity:
        raise ShapeError(
            kind, [t.shape for t in tensors], f'expected {op.arity} input(s)'
        )
    if not tensors:
        raise ShapeError(kind, [], 'no inputs')
    out = op.forward([t.values for t in tensors], **attrs)
    node = None
    if any(t.tracked for t in tensors):
        node = _Node(kind, tensors, attrs, out)
    return Tensor._wrap(out, node)


def _topological_order(root: Tensor) -> List[Tensor]:
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        tensor, expanded = stack.pop()
        if expanded:
            order.append(tensor)
            continue
        if id(tensor) in seen:
            continue
        seen.add(id(tensor))
        stack.append((tensor, True))
        if tensor._node is not None:
            for parent in tensor._node.inputs:
                if parent.tracked and id(parent) not in seen:
                    stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into the ``grad`` of every tracked leaf.

    Gradients add up across calls; zero them between optimizer steps. A graph can
    only be walked once.
    """
    if loss.values.size != 1:
        raise GraphError(f'backward needs a scalar loss, got shape {loss.shape}')
    if not loss.tracked:
        return
    if loss._node is not None and loss._node.consumed:
        raise GraphError(
            'backward was already called on this loss. Re-run the forward pass '
            'before calling backward again.'
        )

    grads = {id(loss): np.ones_like(loss.values)}
    for tensor in reversed(_topological_order(loss)):
        grad = grads.pop(id(tensor), None)
        if grad is None:
            continue
        node = tensor._node
        if node is None:
            if tensor.grad is None:
                tensor.grad = np.array(grad, dtype=np.float64)
            else:
                tensor.grad += grad
            continue
        op = _OPS[node.op]
        input_grads = op.backward(
            grad, node.output, [t.values for t in node.inputs], **node.attrs
        )
        for parent, parent_grad in zip(node.inputs, input_grads):
            if parent_grad is None or not parent.tracked:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = parent_grad

    if loss._node is not None:
        loss._node.consumed = True


# functional helpers -----------------------------------------------------------

def matmul(a, b) -> Tensor:
    return forward_op('matmul', [a, b])


def add(a, b) -> Tensor:
    return forward_op('add', [a, b])


def subtract(a, b) -> Tensor:
    return forward_op('subtract', [a, b])


def multiply(a, b) -> Tensor:
    return forward_op('multiply', [a, b])


def sigmoid(x) -> Tensor:
    return forward_op('sigmoid', [x])


def tanh(x) -> Tensor:
    return forward_op('tanh', [x])


def log(x) -> Tensor:
    return forward_op('log', [x])


def square(x) -> Tensor:
    return forward_op('square', [x])


def reduce_sum(x, axis: Optional[int] = None) -> Tensor:
    return forward_op('sum', [x], axis=axis)


def reduce_mean(x, axis: Optional[int] = None) -> Tensor:
    return forward_op('mean', [x], axis=axis)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    return forward_op('concat', list(tensors), axis=axis)


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    return forward_op('stack', list(tensors), axis=axis)


def take(x, index: Union[int, slice], axis: int = 0) -> Tensor:
    """Select ``index`` along ``axis``. An integer index drops the axis."""
    return forward_op('slice', [x], index=index, axis=axis)


def reshape(x, shape: Sequence[int]) -> Tensor:
    return forward_op('reshape', [x], shape=tuple(shape))


def clip(x, low: float, high: float) -> Tensor:
    return forward_op('clip', [x], low=low, high=high)
