"""
Composite differentiable operations on :class:`Tensor`.

Images are laid out NHWC and convolution kernels as (kh, kw, c_in, c_out).
"""
import math
from typing import Optional, Sequence

import numpy as np

import conf
from tensor_substrate.exceptions import ShapeMismatch
from tensor_substrate.tensor import Tensor, accumulate, as_tensor, make_result, relu  # noqa: F401


def dense(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """``x @ weight + bias`` applied to the last axis of ``x``."""
    if x.shape[-1] != weight.shape[0]:
        raise ShapeMismatch(f"dense: input width {x.shape[-1]} does not match weight {weight.shape}")
    lead = x.shape[:-1]
    flat = x.data.reshape(-1, x.shape[-1])
    out = flat @ weight.data
    if bias is not None:
        out = out + bias.data

    def backward(grad):
        grad = grad.reshape(-1, weight.shape[1])
        accumulate(x, (grad @ weight.data.T).reshape(x.shape))
        accumulate(weight, flat.T @ grad)
        if bias is not None:
            accumulate(bias, grad.sum(axis=0))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_result(out.reshape(lead + (weight.shape[1],)), parents, backward, "dense")


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1) -> Tensor:
    """
    Same-padded 2-D convolution.

    :param x: input of shape (N, H, W, C_in).
    :param weight: kernel of shape (k, k, C_in, C_out), k odd.
    :param bias: optional (C_out,) bias.
    :param stride: 1 or 2.
    :return: output of shape (N, ceil(H/stride), ceil(W/stride), C_out).
    """
    if x.ndim != 4 or weight.ndim != 4 or x.shape[3] != weight.shape[2]:
        raise ShapeMismatch(f"conv2d: input {x.shape} does not fit kernel {weight.shape}")
    k = weight.shape[0]
    pad = k // 2
    n, h, w, _ = x.shape
    out_h, out_w = (h + 2 * pad - k) // stride + 1, (w + 2 * pad - k) // stride + 1
    padded = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad), (0, 0)))

    def window(i: int, j: int):
        return (slice(None), slice(i, i + stride * (out_h - 1) + 1, stride),
                slice(j, j + stride * (out_w - 1) + 1, stride), slice(None))

    out = np.zeros((n, out_h, out_w, weight.shape[3]), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            out += padded[window(i, j)] @ weight.data[i, j]
    if bias is not None:
        out += bias.data

    def backward(grad):
        grad_padded = np.zeros_like(padded)
        grad_weight = np.zeros_like(weight.data)
        for i in range(k):
            for j in range(k):
                patch = padded[window(i, j)]
                grad_weight[i, j] = np.tensordot(patch, grad, axes=([0, 1, 2], [0, 1, 2]))
                grad_padded[window(i, j)] += grad @ weight.data[i, j].T
        accumulate(x, grad_padded[:, pad:pad + h, pad:pad + w, :])
        accumulate(weight, grad_weight)
        if bias is not None:
            accumulate(bias, grad.sum(axis=(0, 1, 2)))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_result(out, parents, backward, "conv2d")


def max_pool2d(x: Tensor) -> Tensor:
    """2×2 max pooling with stride 2; spatial sizes must be even."""
    n, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ShapeMismatch(f"max_pool2d needs even spatial sizes, got {h}x{w}")
    blocks = x.data.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h // 2, w // 2, c, 4)
    winner = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, winner[..., None], axis=-1)[..., 0]

    def backward(grad):
        routed = np.zeros_like(blocks)
        np.put_along_axis(routed, winner[..., None], grad[..., None], axis=-1)
        routed = routed.reshape(n, h // 2, w // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, h, w, c)
        accumulate(x, routed)

    return make_result(out, (x,), backward, "max_pool2d")


def global_avg_pool(x: Tensor) -> Tensor:
    """(N, H, W, C) -> (N, C)."""
    return x.mean(axis=(1, 2))


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = conf.LAYER_NORM_EPS) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    if gamma.shape != (x.shape[-1],) or beta.shape != (x.shape[-1],):
        raise ShapeMismatch(f"layer_norm: parameters {gamma.shape} do not match width {x.shape[-1]}")
    width = x.shape[-1]
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std
    out = normed * gamma.data + beta.data

    def backward(grad):
        lead = tuple(range(grad.ndim - 1))
        accumulate(gamma, (grad * normed).sum(axis=lead))
        accumulate(beta, grad.sum(axis=lead))
        g = grad * gamma.data
        dx = inv_std / width * (width * g - g.sum(axis=-1, keepdims=True)
                                - normed * (g * normed).sum(axis=-1, keepdims=True))
        accumulate(x, dx)

    return make_result(out.astype(x.dtype), (x, gamma, beta), backward, "layer_norm")


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Rows of ``table`` gathered by the integer array ``ids``; output shape ``ids.shape + (D,)``."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeMismatch(f"embedding ids must lie in [0, {table.shape[0]})")

    def backward(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, grad)
        accumulate(table, full)

    return make_result(table.data[ids], (table,), backward, "embedding_lookup")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    axis = axis % tensors[0].ndim
    sizes = [t.shape[axis] for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeMismatch(f"concat: {e}") from e
    bounds = np.cumsum([0] + sizes)

    def backward(grad):
        for tensor, start, stop in zip(tensors, bounds[:-1], bounds[1:]):
            index = [slice(None)] * grad.ndim
            index[axis] = slice(int(start), int(stop))
            accumulate(tensor, grad[tuple(index)])

    return make_result(out, tensors, backward, "concat")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = np.exp(x.data - x.data.max(axis=axis, keepdims=True))
    probs = shifted / shifted.sum(axis=axis, keepdims=True)

    def backward(grad):
        accumulate(x, probs * (grad - (grad * probs).sum(axis=axis, keepdims=True)))

    return make_result(probs, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(grad):
        accumulate(x, grad - np.exp(out) * grad.sum(axis=axis, keepdims=True))

    return make_result(out, (x,), backward, "log_softmax")


def logsumexp(x: Tensor, axis: int = -1, mask: Optional[np.ndarray] = None, keepdims: bool = False) -> Tensor:
    """
    Stable ``log(sum(exp(x)))`` over the entries of ``axis`` where ``mask`` is true.

    Rows without any selected entry evaluate to 0 and pass no gradient.
    """
    mask = np.ones(x.shape, dtype=bool) if mask is None else np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    peak = np.where(mask, x.data, -np.inf).max(axis=axis, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    terms = np.exp(np.where(mask, x.data - peak, -np.inf))
    total = terms.sum(axis=axis, keepdims=True)
    has_any = total > 0
    out = np.where(has_any, peak + np.log(np.where(has_any, total, 1.0)), 0.0).astype(x.dtype)
    weights = np.where(has_any, terms / np.where(has_any, total, 1.0), 0.0)

    def backward(grad):
        if not keepdims:
            grad = np.expand_dims(grad, axis)
        accumulate(x, grad * weights)

    return make_result(out if keepdims else out.squeeze(axis=axis), (x,), backward, "logsumexp")


def l2_normalize(x: Tensor, axis: int = -1, eps: float = 1e-12) -> Tensor:
    """Scale each vector along ``axis`` to unit Euclidean length."""
    norm = np.maximum(np.sqrt((x.data * x.data).sum(axis=axis, keepdims=True)), eps)
    out = x.data / norm

    def backward(grad):
        accumulate(x, (grad - out * (grad * out).sum(axis=axis, keepdims=True)) / norm)

    return make_result(out, (x,), backward, "l2_normalize")


def attention_bias(n: int, q_len: int, k_len: int, causal: bool, key_padding: Optional[np.ndarray],
                   dtype) -> Optional[np.ndarray]:
    """Additive score bias of shape (N, 1, Lq, Lk): 0 where attention is allowed, a large negative elsewhere."""
    if not causal and key_padding is None:
        return None
    bias = np.zeros((n, 1, q_len, k_len), dtype=dtype)
    if causal:
        if q_len != k_len:
            raise ShapeMismatch("causal attention needs equal query and key lengths")
        bias[:, :, np.triu(np.ones((q_len, k_len), dtype=bool), k=1)] = conf.MASK_VALUE
    if key_padding is not None:
        key_padding = np.asarray(key_padding, dtype=bool)
        if key_padding.shape != (n, k_len):
            raise ShapeMismatch(f"key padding mask {key_padding.shape} does not match ({n}, {k_len})")
        bias = np.where(key_padding[:, None, None, :], conf.MASK_VALUE, bias).astype(dtype)
    return bias


def multi_head_attention(query: Tensor, memory: Tensor, q_proj, k_proj, v_proj, o_proj, heads: int,
                         causal: bool = False, key_padding: Optional[np.ndarray] = None) -> Tensor:
    """
    Scaled dot-product attention of ``query`` (N, Lq, D) over ``memory`` (N, Lk, D).

    The projections are ``(weight, bias)`` pairs. With ``causal`` position t only
    sees keys at positions <= t; ``key_padding`` (N, Lk) marks keys to ignore.
    """
    n, q_len, width = query.shape
    k_len = memory.shape[1]
    if width % heads:
        raise ShapeMismatch(f"width {width} is not divisible by {heads} heads")
    head_dim = width // heads

    def split(t: Tensor, length: int) -> Tensor:
        return t.reshape(n, length, heads, head_dim).transpose(0, 2, 1, 3)

    q = split(dense(query, *q_proj), q_len)
    k = split(dense(memory, *k_proj), k_len)
    v = split(dense(memory, *v_proj), k_len)
    scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(head_dim))
    bias = attention_bias(n, q_len, k_len, causal, key_padding, scores.dtype)
    if bias is not None:
        scores = scores + bias
    context = softmax(scores, axis=-1) @ v
    return dense(context.transpose(0, 2, 1, 3).reshape(n, q_len, width), *o_proj)
