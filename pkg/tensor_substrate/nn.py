import logging
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from tensor_substrate import ops
from tensor_substrate.exceptions import CheckpointError, ShapeMismatch
from tensor_substrate.tensor import Tensor, relu

logger = logging.getLogger(__name__)


class Parameter(Tensor):
    """A trainable leaf tensor."""

    def __init__(self, data, dtype=None, name: Optional[str] = None):
        super().__init__(data, requires_grad=True, dtype=dtype, name=name)


def uniform_init(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, dtype=np.float32) -> Parameter:
    """U(-sqrt(1/fan_in), +sqrt(1/fan_in))."""
    bound = float(np.sqrt(1.0 / fan_in))
    return Parameter(rng.uniform(-bound, bound, size=shape).astype(dtype))


class Module:
    """
    Base class for layers. Parameters and sub-modules are discovered from the
    instance attributes (lists of modules included), so the names returned by
    :meth:`named_parameters` follow the attribute path, e.g. ``blocks.0.conv.weight``.
    """

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{name}.{index}.")
                    elif isinstance(item, Parameter):
                        yield f"{prefix}{name}.{index}", item

    def parameters(self) -> Dict[str, Parameter]:
        return dict(self.named_parameters())

    def zero_grad(self):
        for _, parameter in self.named_parameters():
            parameter.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: parameter.data.copy() for name, parameter in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True):
        """
        Copy arrays from ``state`` into the matching parameters.

        :param strict: if true every parameter must be present and no extra key is allowed.
        :raises CheckpointError: on missing or unexpected keys.
        :raises ShapeMismatch: if a stored array has the wrong shape.
        """
        own = self.parameters()
        missing = [name for name in own if name not in state]
        unexpected = [name for name in state if name not in own]
        if strict and (missing or unexpected):
            raise CheckpointError(f"state mismatch: missing {missing[:5]}, unexpected {unexpected[:5]}")
        for name, parameter in own.items():
            if name not in state:
                continue
            value = np.asarray(state[name])
            if value.shape != parameter.shape:
                raise ShapeMismatch(f"{name}: stored shape {value.shape} != parameter shape {parameter.shape}")
            parameter.data = value.astype(parameter.dtype, copy=True)
        logger.debug(f"loaded {len(own) - len(missing)} parameters")

    def parameter_count(self) -> int:
        return sum(parameter.data.size for _, parameter in self.named_parameters())


class Dense(Module):
    def __init__(self, rng: np.random.Generator, d_in: int, d_out: int, bias: bool = True, dtype=np.float32):
        self.weight = uniform_init(rng, (d_in, d_out), d_in, dtype)
        self.bias = uniform_init(rng, (d_out,), d_in, dtype) if bias else None

    @property
    def pair(self):
        return self.weight, self.bias

    def forward(self, x: Tensor) -> Tensor:
        return ops.dense(x, self.weight, self.bias)


class Conv2d(Module):
    def __init__(self, rng: np.random.Generator, c_in: int, c_out: int, kernel: int = 3, stride: int = 1,
                 dtype=np.float32):
        fan_in = kernel * kernel * c_in
        self.weight = uniform_init(rng, (kernel, kernel, c_in, c_out), fan_in, dtype)
        self.bias = uniform_init(rng, (c_out,), fan_in, dtype)
        self.stride = stride

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, self.stride)


class LayerNorm(Module):
    def __init__(self, width: int, dtype=np.float32):
        self.gamma = Parameter(np.ones(width, dtype=dtype))
        self.beta = Parameter(np.zeros(width, dtype=dtype))

    def forward(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta)


class Embedding(Module):
    """Lookup table initialized with fan-in equal to the embedding width."""

    def __init__(self, rng: np.random.Generator, count: int, width: int, dtype=np.float32):
        self.table = uniform_init(rng, (count, width), width, dtype)

    def forward(self, ids: np.ndarray) -> Tensor:
        return ops.embedding_lookup(self.table, ids)


class MultiHeadAttention(Module):
    def __init__(self, rng: np.random.Generator, width: int, heads: int, dtype=np.float32):
        if width % heads:
            raise ShapeMismatch(f"width {width} is not divisible by {heads} heads")
        self.heads = heads
        self.query = Dense(rng, width, width, dtype=dtype)
        self.key = Dense(rng, width, width, dtype=dtype)
        self.value = Dense(rng, width, width, dtype=dtype)
        self.out = Dense(rng, width, width, dtype=dtype)

    def forward(self, query: Tensor, memory: Optional[Tensor] = None, causal: bool = False,
                key_padding: Optional[np.ndarray] = None) -> Tensor:
        memory = query if memory is None else memory
        return ops.multi_head_attention(query, memory, self.query.pair, self.key.pair, self.value.pair,
                                        self.out.pair, self.heads, causal=causal, key_padding=key_padding)


class FeedForward(Module):
    def __init__(self, rng: np.random.Generator, width: int, hidden: Optional[int] = None, dtype=np.float32):
        hidden = hidden or 2 * width
        self.inner = Dense(rng, width, hidden, dtype=dtype)
        self.outer = Dense(rng, hidden, width, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return self.outer(relu(self.inner(x)))


class ConvBlock(Module):
    """3×3 convolution, layer norm over channels, ReLU and an optional 2×2 max pool."""

    def __init__(self, rng: np.random.Generator, c_in: int, c_out: int, pool: bool, dtype=np.float32):
        self.conv = Conv2d(rng, c_in, c_out, dtype=dtype)
        self.norm = LayerNorm(c_out, dtype=dtype)
        self.pool = pool

    def forward(self, x: Tensor) -> Tensor:
        x = relu(self.norm(self.conv(x)))
        return ops.max_pool2d(x) if self.pool else x


class EncoderLayer(Module):
    """Pre-norm transformer layer: self-attention then feed-forward, each with a residual."""

    def __init__(self, rng: np.random.Generator, width: int, heads: int, dtype=np.float32):
        self.attn_norm = LayerNorm(width, dtype=dtype)
        self.attn = MultiHeadAttention(rng, width, heads, dtype=dtype)
        self.ffn_norm = LayerNorm(width, dtype=dtype)
        self.ffn = FeedForward(rng, width, dtype=dtype)

    def forward(self, x: Tensor, key_padding: Optional[np.ndarray] = None) -> Tensor:
        x = x + self.attn(self.attn_norm(x), key_padding=key_padding)
        return x + self.ffn(self.ffn_norm(x))


class DecoderLayer(Module):
    """Pre-norm decoder layer: causal self-attention, cross-attention over an encoded memory, feed-forward."""

    def __init__(self, rng: np.random.Generator, width: int, heads: int, dtype=np.float32):
        self.self_norm = LayerNorm(width, dtype=dtype)
        self.self_attn = MultiHeadAttention(rng, width, heads, dtype=dtype)
        self.cross_norm = LayerNorm(width, dtype=dtype)
        self.cross_attn = MultiHeadAttention(rng, width, heads, dtype=dtype)
        self.ffn_norm = LayerNorm(width, dtype=dtype)
        self.ffn = FeedForward(rng, width, dtype=dtype)

    def forward(self, x: Tensor, memory: Tensor) -> Tensor:
        x = x + self.self_attn(self.self_norm(x), causal=True)
        x = x + self.cross_attn(self.cross_norm(x), memory)
        return x + self.ffn(self.ffn_norm(x))
