from tensor_substrate.checkpoint import load_checkpoint, save_checkpoint
from tensor_substrate.exceptions import CheckpointError, NonFiniteValue, ShapeMismatch, TensorError
from tensor_substrate.gradcheck import check_gradients, numerical_gradient
from tensor_substrate.nn import (ConvBlock, Conv2d, DecoderLayer, Dense, Embedding, EncoderLayer, FeedForward,
                                 LayerNorm, Module, MultiHeadAttention, Parameter)
from tensor_substrate.optim import Adam, AdamState, adam_step
from tensor_substrate.ops import (concat, conv2d, dense, embedding_lookup, global_avg_pool, l2_normalize,
                                  layer_norm, log_softmax, logsumexp, max_pool2d, multi_head_attention, softmax)
from tensor_substrate.tensor import Tensor, as_tensor, exp, log, no_grad, relu
