from contextlib import contextmanager
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from tensor_substrate.exceptions import NonFiniteValue, ShapeMismatch

_grad_enabled = True

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


class Tensor:
    """
    An n-dimensional array that records the operations applied to it so that
    gradients can be propagated back with :meth:`backward`.

    :ivar data: the values, a float32 or float64 numpy array.
    :ivar grad: accumulated gradient of the same shape, or ``None``.
    :ivar requires_grad: whether gradients flow into this tensor.
    """

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: Optional[str] = None):
        array = np.asarray(data, dtype=dtype)
        if dtype is None and array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float32)
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def backward(self, grad: Optional[np.ndarray] = None):
        """Accumulate d(self)/d(leaf) into the ``grad`` of every contributing tensor."""
        if not self.requires_grad:
            return
        order: List[Tensor] = []
        visited = set()

        def visit(node: "Tensor"):
            if id(node) in visited:
                return
            visited.add(id(node))
            for parent in node._parents:
                visit(parent)
            order.append(node)

        visit(self)
        seed = np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=self.dtype)
        self.grad = seed if self.grad is None else self.grad + seed
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def zero_grad(self):
        self.grad = None

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

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False):
        return tensor_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return tensor_mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)


def check_finite(array: np.ndarray, op: str):
    if not np.all(np.isfinite(array)):
        raise NonFiniteValue(f"{op} produced non-finite values")


def as_tensor(value: ArrayLike, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    tensor = Tensor(value, dtype=dtype)
    check_finite(tensor.data, "input")
    return tensor


def accumulate(tensor: Tensor, grad: np.ndarray):
    if not tensor.requires_grad:
        return
    grad = np.asarray(grad, dtype=tensor.dtype)
    if grad.shape != tensor.shape:
        raise ShapeMismatch(f"gradient shape {grad.shape} does not match tensor shape {tensor.shape}")
    tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def make_result(data: np.ndarray, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None],
                op: str) -> Tensor:
    check_finite(data, op)
    requires_grad = _grad_enabled and any(parent.requires_grad for parent in parents)
    out = Tensor(data, requires_grad=requires_grad, dtype=data.dtype)
    if requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _pair(a: ArrayLike, b: ArrayLike) -> Tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def _broadcast_shape(a: Tensor, b: Tensor, op: str):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeMismatch(f"{op}: cannot broadcast {a.shape} with {b.shape}") from e


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "add")

    def backward(grad):
        accumulate(a, unbroadcast(grad, a.shape))
        accumulate(b, unbroadcast(grad, b.shape))

    return make_result(a.data + b.data, (a, b), backward, "add")


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "sub")

    def backward(grad):
        accumulate(a, unbroadcast(grad, a.shape))
        accumulate(b, unbroadcast(-grad, b.shape))

    return make_result(a.data - b.data, (a, b), backward, "sub")


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "mul")

    def backward(grad):
        accumulate(a, unbroadcast(grad * b.data, a.shape))
        accumulate(b, unbroadcast(grad * a.data, b.shape))

    return make_result(a.data * b.data, (a, b), backward, "mul")


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "div")

    def backward(grad):
        accumulate(a, unbroadcast(grad / b.data, a.shape))
        accumulate(b, unbroadcast(-grad * a.data / (b.data * b.data), b.shape))

    return make_result(a.data / b.data, (a, b), backward, "div")


def neg(a: Tensor) -> Tensor:
    def backward(grad):
        accumulate(a, -grad)

    return make_result(-a.data, (a,), backward, "neg")


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Batched matrix product over the last two axes, numpy broadcasting on the rest."""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def backward(grad):
        accumulate(a, unbroadcast(grad @ np.swapaxes(b.data, -1, -2), a.shape))
        accumulate(b, unbroadcast(np.swapaxes(a.data, -1, -2) @ grad, b.shape))

    return make_result(a.data @ b.data, (a, b), backward, "matmul")


def getitem(a: Tensor, index) -> Tensor:
    def backward(grad):
        full = np.zeros_like(a.data)
        np.add.at(full, index, grad)
        accumulate(a, full)

    try:
        data = a.data[index]
    except IndexError as e:
        raise ShapeMismatch(f"index out of range for shape {a.shape}") from e
    return make_result(np.array(data), (a,), backward, "getitem")


def _normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def tensor_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)

    def backward(grad):
        if not keepdims:
            grad = np.expand_dims(grad, axes)
        accumulate(a, np.broadcast_to(grad, a.shape))

    return make_result(np.asarray(a.data.sum(axis=axes, keepdims=keepdims)), (a,), backward, "sum")


def tensor_mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return tensor_sum(a, axes, keepdims) * (1.0 / count)


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    try:
        data = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeMismatch(f"cannot reshape {a.shape} to {shape}") from e

    def backward(grad):
        accumulate(a, grad.reshape(a.shape))

    return make_result(data, (a,), backward, "reshape")


def transpose(a: Tensor, axes: Tuple[int, ...]) -> Tensor:
    inverse = tuple(np.argsort(axes))

    def backward(grad):
        accumulate(a, grad.transpose(inverse))

    return make_result(a.data.transpose(axes), (a,), backward, "transpose")


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def backward(grad):
        accumulate(a, grad * out)

    return make_result(out, (a,), backward, "exp")


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0):
        raise NonFiniteValue("log of a non-positive value")

    def backward(grad):
        accumulate(a, grad / a.data)

    return make_result(np.log(a.data), (a,), backward, "log")


def relu(a: Tensor) -> Tensor:
    def backward(grad):
        accumulate(a, grad * (a.data > 0))

    return make_result(np.maximum(a.data, 0), (a,), backward, "relu")
