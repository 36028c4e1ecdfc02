from typing import Callable, Sequence

import numpy as np

from tensor_substrate.tensor import Tensor


def numerical_gradient(fn: Callable[[], Tensor], tensor: Tensor, h: float = 1e-5) -> np.ndarray:
    """Central-difference estimate of d fn() / d tensor; ``fn`` must return a scalar."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        upper = fn().item()
        flat[i] = original - h
        lower = fn().item()
        flat[i] = original
        out[i] = (upper - lower) / (2 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Error relative to the larger gradient norm; the scale never drops below 1e-6."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-6)
    return float(np.linalg.norm(analytic - numeric) / scale)


def check_gradients(fn: Callable[[], Tensor], inputs: Sequence[Tensor], h: float = 1e-5) -> float:
    """
    Largest relative error between backpropagated and finite-difference gradients
    over ``inputs``. Use float64 inputs.
    """
    for tensor in inputs:
        tensor.grad = None
    fn().backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]
    return max(relative_error(a, numerical_gradient(fn, t, h)) for a, t in zip(analytic, inputs))
