"""Dense float tensors with tape-based reverse-mode differentiation."""

import contextlib
import contextvars
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import (
    ContractError,
    DomainError,
    InvalidShapeError,
    NonFiniteError,
    ShapeError,
)

Number = Union[int, float]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_COMPUTE_DTYPE: contextvars.ContextVar = contextvars.ContextVar(
    'compute_dtype', default=np.float32
)


@contextlib.contextmanager
def compute_precision(dtype) -> Iterator[None]:
    """
    Store tensors created inside the block with the given float type.

    Parameters
    ----------
    dtype : numpy float type
        ``np.float32`` (the default storage) or ``np.float64``
    """
    token = _COMPUTE_DTYPE.set(np.dtype(dtype).type)
    try:
        yield
    finally:
        _COMPUTE_DTYPE.reset(token)


def current_dtype():
    """Return the storage dtype of the active precision context."""
    return _COMPUTE_DTYPE.get()


def _checked(value: np.ndarray, op: str) -> np.ndarray:
    array = np.asarray(value, dtype=current_dtype())
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f'{op} produced non-finite values')
    return array


class Tensor:
    """
    Dense row-major array of floats that records how it was computed.

    Parameters
    ----------
    data : array-like
        Values; copied and stored in the active precision (32-bit by default)
    requires_grad : bool
        Whether backward() should populate ``grad`` for this leaf
    """

    __slots__ = ('data', 'grad', 'requires_grad', '_parents', '_backward', 'op')

    def __init__(self, data, requires_grad: bool = False):
        array = np.array(data, dtype=current_dtype())
        if any(extent <= 0 for extent in array.shape):
            raise InvalidShapeError(f'Extents must be positive, got {array.shape}')
        self.data = _checked(array, 'construct')
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[BackwardFn] = None
        self.op = 'leaf'

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f'item() needs a single value, tensor has shape {self.shape}')
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self) -> str:
        return f'Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})'

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)


def _result(value: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn, op: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = _checked(value, op)
    out.grad = None
    out.op = op
    out.requires_grad = any(parent.requires_grad for parent in parents)
    out._parents = tuple(parents) if out.requires_grad else ()
    out._backward = backward if out.requires_grad else None
    return out


def as_tensor(value) -> Tensor:
    """Wrap arrays and numbers; pass tensors (and parameter values) through."""
    if isinstance(value, Tensor):
        return value
    if isinstance(value, Parameter):
        return value.value
    return Tensor(value)


def _wide(tensor: Tensor) -> np.ndarray:
    return tensor.data.astype(np.float64)


@dataclass
class Parameter:
    """
    Learnable tensor with a zero-initialized gradient of identical shape.

    Parameters
    ----------
    name : str
        Identifier used in checkpoints and gradient-check reports
    value : Tensor
        Current value; marked as requiring gradients
    """

    name: str
    value: Tensor

    def __post_init__(self):
        self.value.requires_grad = True
        if self.value.grad is None or self.value.grad.shape != self.value.shape:
            self.value.grad = np.zeros_like(self.value.data)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def gradient(self) -> np.ndarray:
        return self.value.grad

    def zero_grad(self) -> None:
        self.value.grad = np.zeros_like(self.value.data)


# --------------------------------------------------------------------------
# construction

@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float
    seed: int


def make_rng(seed: int) -> np.random.Generator:
    """Return the explicit 64-bit seeded generator used by one top-level command."""
    if not 0 <= int(seed) < 2**64:
        raise DomainError(f'Seed must be an unsigned 64-bit integer, got {seed}')
    return np.random.Generator(np.random.PCG64(int(seed)))


def _validate_shape(shape: Sequence[int]) -> Tuple[int, ...]:
    extents = tuple(int(extent) for extent in shape)
    if not extents or any(extent <= 0 for extent in extents):
        raise InvalidShapeError(f'Extents must be a non-empty list of positive integers, got {list(shape)}')
    return extents


def construct(shape: Sequence[int], fill: Union[Constant, Uniform], requires_grad: bool = False) -> Tensor:
    """
    Build a tensor of the given shape from a fill specification.

    Parameters
    ----------
    shape : Sequence[int]
        Positive extents
    fill : Constant or Uniform
        Constant value, or seeded uniform values in [low, high]
    requires_grad : bool
        Whether the result is a differentiable leaf

    Returns
    -------
    Tensor
        Deterministic for a given seed
    """
    extents = _validate_shape(shape)
    if isinstance(fill, Constant):
        values = np.full(extents, fill.value, dtype=np.float64)
    elif isinstance(fill, Uniform):
        if fill.high < fill.low:
            raise DomainError(f'Uniform fill needs low <= high, got [{fill.low}, {fill.high}]')
        values = make_rng(fill.seed).uniform(fill.low, fill.high, size=extents)
    else:
        raise DomainError(f'Unknown fill specification: {fill!r}')
    return Tensor(values, requires_grad=requires_grad)


def fan_in_parameter(name: str, shape: Sequence[int], rng: np.random.Generator) -> Parameter:
    """Kernel initialized uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; fan_in is the last extent."""
    extents = _validate_shape(shape)
    bound = 1.0 / np.sqrt(extents[-1])
    return Parameter(name, Tensor(rng.uniform(-bound, bound, size=extents)))


def zeros_parameter(name: str, shape: Sequence[int]) -> Parameter:
    return Parameter(name, construct(shape, Constant(0.0)))


# --------------------------------------------------------------------------
# elementwise operations

def _binary_operand(a: Tensor, b) -> Tuple[Tensor, bool]:
    b = as_tensor(b)
    if b.shape == a.shape:
        return b, False
    if b.size == 1 and b.ndim <= 1:
        return b, True
    raise ShapeError(f'Shapes {a.shape} and {b.shape} differ and the second operand is not a scalar')


def _reduce_to(grad: np.ndarray, tensor: Tensor, is_scalar: bool) -> np.ndarray:
    return np.full(tensor.shape, grad.sum()) if is_scalar else grad


def add(a, b) -> Tensor:
    a = as_tensor(a)
    b, scalar = _binary_operand(a, b)

    def backward(grad):
        return grad, _reduce_to(grad, b, scalar)

    return _result(_wide(a) + _wide(b), (a, b), backward, 'add')


def sub(a, b) -> Tensor:
    a = as_tensor(a)
    b, scalar = _binary_operand(a, b)

    def backward(grad):
        return grad, -_reduce_to(grad, b, scalar)

    return _result(_wide(a) - _wide(b), (a, b), backward, 'sub')


def mul(a, b) -> Tensor:
    a = as_tensor(a)
    b, scalar = _binary_operand(a, b)
    left, right = _wide(a), _wide(b)

    def backward(grad):
        return grad * right, _reduce_to(grad * left, b, scalar)

    return _result(left * right, (a, b), backward, 'mul')


def div(a, b) -> Tensor:
    a = as_tensor(a)
    b, scalar = _binary_operand(a, b)
    left, right = _wide(a), _wide(b)
    if np.any(right == 0):
        raise DomainError('Division by zero')

    def backward(grad):
        return grad / right, _reduce_to(-grad * left / right**2, b, scalar)

    return _result(left / right, (a, b), backward, 'div')


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _result(-_wide(a), (a,), lambda grad: (-grad,), 'neg')


def relu(a) -> Tensor:
    a = as_tensor(a)
    x = _wide(a)
    # subgradient 0 at the kink
    return _result(np.maximum(x, 0.0), (a,), lambda grad: (grad * (x > 0),), 'relu')


def _open_unit_interval(values: np.ndarray) -> np.ndarray:
    dtype = current_dtype()
    low = np.finfo(dtype).tiny
    high = np.nextafter(dtype(1), dtype(0))
    return np.clip(values, low, high)


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    exp_x = np.exp(x[~positive])
    out[~positive] = exp_x / (1.0 + exp_x)
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = _open_unit_interval(_stable_sigmoid(_wide(a)))
    return _result(s, (a,), lambda grad: (grad * s * (1.0 - s),), 'sigmoid')


def softplus(a) -> Tensor:
    """log(1 + exp(a)) in the overflow-free form max(a, 0) + log1p(exp(-|a|))."""
    a = as_tensor(a)
    x = _wide(a)
    value = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    return _result(value, (a,), lambda grad: (grad * _stable_sigmoid(x),), 'softplus')


def absolute(a) -> Tensor:
    a = as_tensor(a)
    x = _wide(a)
    return _result(np.abs(x), (a,), lambda grad: (grad * np.sign(x),), 'abs')


def sin(a) -> Tensor:
    a = as_tensor(a)
    x = _wide(a)
    return _result(np.sin(x), (a,), lambda grad: (grad * np.cos(x),), 'sin')


def cos(a) -> Tensor:
    a = as_tensor(a)
    x = _wide(a)
    return _result(np.cos(x), (a,), lambda grad: (-grad * np.sin(x),), 'cos')


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    x = _wide(a)
    if np.any(x < 0):
        raise DomainError('sqrt of a negative value')
    root = np.sqrt(x)
    return _result(root, (a,), lambda grad: (grad * 0.5 / root,), 'sqrt')


def exp(a) -> Tensor:
    a = as_tensor(a)
    value = np.exp(_wide(a))
    return _result(value, (a,), lambda grad: (grad * value,), 'exp')


def square(a) -> Tensor:
    a = as_tensor(a)
    x = _wide(a)
    return _result(x * x, (a,), lambda grad: (2.0 * grad * x,), 'square')


_UNARY_OPS: Dict[str, Callable[[Tensor], Tensor]] = {
    'relu': relu,
    'sigmoid': sigmoid,
    'softplus': softplus,
    'abs': absolute,
    'sin': sin,
    'cos': cos,
    'sqrt': sqrt,
    'exp': exp,
    'square': square,
    'neg': neg,
}

_BINARY_OPS: Dict[str, Callable[[Tensor, object], Tensor]] = {
    'add': add,
    'sub': sub,
    'mul': mul,
    'multiply': mul,
    'div': div,
}


def elementwise(op_tag: str, a, b=None) -> Tensor:
    """
    Apply a tagged elementwise operation.

    Parameters
    ----------
    op_tag : str
        One of relu, sigmoid, softplus, abs, sin, cos, sqrt, exp, square, neg
        (unary) or add, sub, mul/multiply, div (binary)
    a : Tensor
        First operand
    b : Tensor or scalar, optional
        Second operand of a binary operation; same shape as ``a`` or a scalar

    Returns
    -------
    Tensor
        Same shape as ``a``
    """
    if op_tag in _UNARY_OPS:
        if b is not None:
            raise ContractError(f'{op_tag} takes a single operand')
        return _UNARY_OPS[op_tag](a)
    if op_tag in _BINARY_OPS:
        if b is None:
            raise ContractError(f'{op_tag} needs a second operand')
        return _BINARY_OPS[op_tag](a, b)
    raise DomainError(f'Unknown elementwise operation: {op_tag}')


# --------------------------------------------------------------------------
# linear maps

def matmul(a, b) -> Tensor:
    """Matrix product of 2-D tensors, accumulated in 64-bit."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f'matmul needs 2-D operands, got {a.shape} and {b.shape}')
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f'Inner extents differ: {a.shape} @ {b.shape}')
    left, right = _wide(a), _wide(b)

    def backward(grad):
        return grad @ right.T, left.T @ grad

    return _result(left @ right, (a, b), backward, 'matmul')


def _channel_map(x, weight, bias, axis: int, op: str) -> Tensor:
    x, weight = as_tensor(x), as_tensor(weight)
    parents = [x, weight]
    if weight.ndim != 2:
        raise ShapeError(f'{op} kernel must be 2-D, got {weight.shape}')
    if x.ndim == 0 or not -x.ndim <= axis < x.ndim:
        raise ShapeError(f'{op} input of shape {x.shape} has no channel axis {axis}')
    axis = axis % x.ndim
    if weight.shape[1] != x.shape[axis]:
        raise ShapeError(
            f'{op} kernel {weight.shape} does not match {x.shape[axis]} input channels'
        )
    xs, ws = _wide(x), _wide(weight)
    value = np.moveaxis(np.tensordot(ws, xs, axes=([1], [axis])), 0, axis)
    expand = [1] * x.ndim
    expand[axis] = weight.shape[0]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[0],):
            raise ShapeError(f'{op} bias {bias.shape} does not match {weight.shape[0]} outputs')
        parents.append(bias)
        value = value + _wide(bias).reshape(expand)
    others = tuple(i for i in range(x.ndim) if i != axis)

    def backward(grad):
        grad_x = np.moveaxis(np.tensordot(ws, grad, axes=([0], [axis])), 0, axis)
        grad_w = np.tensordot(
            np.moveaxis(grad, axis, 0), np.moveaxis(xs, axis, 0),
            axes=(list(range(1, x.ndim)), list(range(1, x.ndim))),
        )
        if bias is None:
            return grad_x, grad_w
        return grad_x, grad_w, grad.sum(axis=others)

    return _result(value, parents, backward, op)


def conv1x1(x, kernel, bias=None) -> Tensor:
    """
    1x1 convolution: out[o,h,w] = sum_i K[o,i] x[i,h,w] (+ bias[o]).

    Parameters
    ----------
    x : Tensor
        C_in x H x W, or N x C_in x H x W
    kernel : Tensor
        C_out x C_in
    bias : Tensor, optional
        Length C_out

    Returns
    -------
    Tensor
        C_out x H x W (with the leading batch axis when given)
    """
    x = as_tensor(x)
    if x.ndim not in (3, 4):
        raise ShapeError(f'conv1x1 expects C x H x W (optionally batched), got {x.shape}')
    return _channel_map(x, kernel, bias, axis=-3, op='conv1x1')


def channel_fc(x, weight, bias=None) -> Tensor:
    """Channel-FC on (..., C_in, L): the same C_out x C_in map at every slot."""
    return _channel_map(x, weight, bias, axis=-2, op='channel_fc')


def linear(x, weight, bias=None) -> Tensor:
    """Linear map on the last axis: (..., C_in) -> (..., C_out)."""
    return _channel_map(x, weight, bias, axis=-1, op='linear')


def _parse_subscripts(subscripts: str) -> Tuple[List[str], str]:
    if '->' not in subscripts or '.' in subscripts:
        raise ContractError(f'einsum needs explicit output subscripts, got {subscripts!r}')
    lhs, output = subscripts.replace(' ', '').split('->')
    inputs = lhs.split(',')
    for spec in inputs + [output]:
        if len(set(spec)) != len(spec):
            raise ContractError(f'Repeated subscripts are not supported: {subscripts!r}')
    return inputs, output


def einsum(subscripts: str, *operands) -> Tensor:
    """
    Differentiable Einstein summation with explicit output subscripts.

    Used wherever a per-row, per-column or per-channel factor multiplies a
    feature map, since elementwise operations only broadcast scalars.
    """
    tensors = [as_tensor(op) for op in operands]
    inputs, output = _parse_subscripts(subscripts)
    if len(inputs) != len(tensors):
        raise ContractError(f'{subscripts!r} names {len(inputs)} operands, got {len(tensors)}')
    sizes: Dict[str, int] = {}
    for spec, tensor in zip(inputs, tensors):
        if len(spec) != tensor.ndim:
            raise ShapeError(f'Subscripts {spec!r} do not match operand shape {tensor.shape}')
        for letter, extent in zip(spec, tensor.shape):
            if sizes.setdefault(letter, extent) != extent:
                raise ShapeError(f'Subscript {letter!r} has extents {sizes[letter]} and {extent}')
    arrays = [_wide(tensor) for tensor in tensors]
    value = np.einsum(subscripts, *arrays, optimize=True)

    def backward(grad):
        grads = []
        for i, spec in enumerate(inputs):
            if not tensors[i].requires_grad:
                grads.append(None)
                continue
            others = [j for j in range(len(inputs)) if j != i]
            available = set(output).union(*(inputs[j] for j in others))
            target = ''.join(letter for letter in spec if letter in available)
            expr = ','.join([output] + [inputs[j] for j in others]) + '->' + target
            partial = np.einsum(expr, grad, *(arrays[j] for j in others), optimize=True)
            missing = tuple(k for k, letter in enumerate(spec) if letter not in available)
            if missing:
                partial = np.broadcast_to(np.expand_dims(partial, missing), tensors[i].shape)
            grads.append(np.array(partial))
        return grads

    return _result(value, tensors, backward, 'einsum')


# --------------------------------------------------------------------------
# reductions and layout

def _expand_reduced(grad: np.ndarray, shape: Tuple[int, ...], axis) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(grad, shape)
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    axes = tuple(a % len(shape) for a in axes)
    return np.broadcast_to(np.expand_dims(grad, axes), shape)


def total(a, axis=None) -> Tensor:
    """Sum (64-bit accumulation) over the given axes, or over everything."""
    a = as_tensor(a)
    value = _wide(a).sum(axis=axis)

    def backward(grad):
        return (np.array(_expand_reduced(grad, a.shape, axis)),)

    return _result(value, (a,), backward, 'sum')


def mean(a, axis=None) -> Tensor:
    a = as_tensor(a)
    value = _wide(a).mean(axis=axis)
    count = a.size / value.size

    def backward(grad):
        return (np.array(_expand_reduced(grad, a.shape, axis)) / count,)

    return _result(value, (a,), backward, 'mean')


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    value = _wide(a).reshape(tuple(shape))
    return _result(value, (a,), lambda grad: (grad.reshape(a.shape),), 'reshape')


def transpose(a, axes: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    value = np.transpose(_wide(a), axes)
    return _result(value, (a,), lambda grad: (np.transpose(grad, inverse),), 'transpose')


def concat(tensors: Sequence, axis: int) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    arrays = [_wide(t) for t in parts]
    try:
        value = np.concatenate(arrays, axis=axis)
    except ValueError as exc:
        raise ShapeError(f'Cannot concatenate shapes {[t.shape for t in parts]}: {exc}')
    bounds = np.cumsum([t.shape[axis] for t in parts])[:-1]

    def backward(grad):
        return np.split(grad, bounds, axis=axis)

    return _result(value, parts, backward, 'concat')


def narrow(a, axis: int, start: int, stop: int) -> Tensor:
    """Slice [start, stop) along one axis."""
    a = as_tensor(a)
    axis = axis % a.ndim
    if not 0 <= start < stop <= a.shape[axis]:
        raise ShapeError(f'Slice [{start}, {stop}) out of range for extent {a.shape[axis]}')
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def backward(grad):
        full = np.zeros(a.shape)
        full[index] = grad
        return (full,)

    return _result(_wide(a)[index], (a,), backward, 'narrow')


def softmax(a, axis: int) -> Tensor:
    a = as_tensor(a)
    x = _wide(a)
    shifted = np.exp(x - x.max(axis=axis, keepdims=True))
    probs = _open_unit_interval(shifted / shifted.sum(axis=axis, keepdims=True))

    def backward(grad):
        inner = (grad * probs).sum(axis=axis, keepdims=True)
        return (probs * (grad - inner),)

    return _result(probs, (a,), backward, 'softmax')


def as_batch(x) -> Tuple[Tensor, bool]:
    """Return an N x C x H x W view of x and whether a batch axis was added."""
    x = as_tensor(x)
    if x.ndim == 3:
        return reshape(x, (1,) + x.shape), True
    if x.ndim == 4:
        return x, False
    raise ShapeError(f'Expected C x H x W or N x C x H x W, got {x.shape}')


def unbatch(x: Tensor, squeeze: bool) -> Tensor:
    return reshape(x, x.shape[1:]) if squeeze else x


# --------------------------------------------------------------------------
# differentiation and updates

def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(output: Tensor, parameters: Optional[Iterable[Parameter]] = None) -> None:
    """
    Accumulate d(output)/d(leaf) into every leaf that requires gradients.

    Parameters
    ----------
    output : Tensor
        Scalar result of recorded operations
    parameters : Iterable[Parameter], optional
        Parameters whose gradient arrays must exist afterwards; unreachable
        ones keep their current (zero) gradient

    Raises
    ------
    ContractError
        If output holds more than one value
    """
    if output.size != 1:
        raise ContractError(f'backward needs a scalar output, got shape {output.shape}')
    for parameter in parameters or ():
        if parameter.value.grad is None:
            parameter.zero_grad()
    if not output.requires_grad:
        return

    pending: Dict[int, np.ndarray] = {id(output): np.ones(output.shape)}
    for node in reversed(_topological_order(output)):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if node._backward is None:
            if node.requires_grad:
                accumulated = grad if node.grad is None else node.grad + grad
                node.grad = np.asarray(accumulated, dtype=node.data.dtype)
            continue
        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pending[key] + parent_grad if key in pending else parent_grad


def zero_grads(parameters: Iterable[Parameter]) -> None:
    for parameter in parameters:
        parameter.zero_grad()


def sgd_step(parameters: Iterable[Parameter], learning_rate: float) -> None:
    """
    Plain gradient descent: value <- value - lr * gradient, then zero gradients.

    A learning rate of 0 leaves values untouched.
    """
    if learning_rate < 0:
        raise DomainError(f'Learning rate must be non-negative, got {learning_rate}')
    for parameter in parameters:
        value = parameter.value
        updated = value.data.astype(np.float64) - learning_rate * parameter.gradient.astype(np.float64)
        value.data = _checked(updated.astype(value.data.dtype), f'sgd_step({parameter.name})').astype(
            value.data.dtype
        )
        parameter.zero_grad()
