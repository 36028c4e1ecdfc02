from typing import List, Sequence, Tuple

import numpy as np

import conf
from clip_align.exceptions import SequenceTooLong, UnknownToken
from ids_core import Special, Token, TokenAlphabet
from ids_core import UnknownToken as UnknownAlphabetToken
from tensor_substrate import (ConvBlock, Dense, Embedding, EncoderLayer, LayerNorm, Module, ShapeMismatch, Tensor,
                              global_avg_pool, l2_normalize)


def image_tensor(images: np.ndarray, height: int, width: int, dtype=np.float32) -> Tensor:
    """(N, H, W) grey images to an NHWC tensor, checking the spatial size."""
    images = np.asarray(images)
    if images.ndim == 2:
        images = images[None]
    if images.ndim != 3 or images.shape[1:] != (height, width):
        raise ShapeMismatch(f"expected images of size {height}x{width}, got array of shape {images.shape}")
    return Tensor(images[..., None], dtype=dtype)


class ImageEncoder(Module):
    """
    Convolutional glyph encoder: ``len(widths)`` conv blocks, all but the last
    followed by 2×2 max pooling, global average pooling and a bias-free
    projection to the embedding space. Outputs are unit vectors.
    """

    def __init__(self, rng: np.random.Generator, widths: Sequence[int] = conf.IMAGE_WIDTHS,
                 embed_dim: int = conf.EMBED_DIM, dtype=np.float32):
        channels = (1,) + tuple(widths)
        self.blocks = [ConvBlock(rng, channels[i], channels[i + 1], pool=i < len(widths) - 1, dtype=dtype)
                       for i in range(len(widths))]
        self.projection = Dense(rng, widths[-1], embed_dim, bias=False, dtype=dtype)
        self.dtype = dtype

    def feature_map(self, images: np.ndarray) -> Tensor:
        x = image_tensor(images, conf.GLYPH_SIZE, conf.GLYPH_SIZE, self.dtype)
        for block in self.blocks:
            x = block(x)
        return x

    def forward(self, images: np.ndarray) -> Tensor:
        return l2_normalize(self.projection(global_avg_pool(self.feature_map(images))))


def encode_token_batch(alphabet: TokenAlphabet, sequences: Sequence[Sequence[Token]],
                       max_len: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pack END-terminated token sequences into a PAD-filled id matrix.

    :return: ``(ids, end_positions)`` with ids of shape (N, max_len).
    :raises SequenceTooLong: if a sequence exceeds ``max_len``.
    :raises UnknownToken: if a token is outside the alphabet or a sequence is not END-terminated.
    """
    ids = np.full((len(sequences), max_len), alphabet.pad_id, dtype=np.int64)
    ends: List[int] = []
    for row, tokens in enumerate(sequences):
        tokens = tuple(tokens)
        if not tokens or tokens[-1] != Special.END or Special.END in tokens[:-1]:
            raise UnknownToken("token sequences must contain exactly one END, in last position")
        if len(tokens) > max_len:
            raise SequenceTooLong(f"sequence of {len(tokens)} tokens exceeds the maximum of {max_len}")
        try:
            ids[row, :len(tokens)] = alphabet.encode(tokens)
        except UnknownAlphabetToken as e:
            raise UnknownToken(str(e)) from e
        ends.append(len(tokens) - 1)
    return ids, np.array(ends, dtype=np.int64)


class TextEncoder(Module):
    """
    Transformer encoder over IDS tokens. The embedding is read at the END
    position, projected to the shared space and normalized.
    """

    def __init__(self, rng: np.random.Generator, alphabet: TokenAlphabet, width: int = conf.TEXT_DIM,
                 layers: int = conf.TEXT_LAYERS, heads: int = conf.ATTENTION_HEADS,
                 max_len: int = conf.MAX_SEQUENCE_LENGTH, embed_dim: int = conf.EMBED_DIM, dtype=np.float32):
        self.alphabet = alphabet
        self.max_len = max_len
        self.token_embedding = Embedding(rng, alphabet.size, width, dtype=dtype)
        self.position_embedding = Embedding(rng, max_len, width, dtype=dtype)
        self.layers = [EncoderLayer(rng, width, heads, dtype=dtype) for _ in range(layers)]
        self.final_norm = LayerNorm(width, dtype=dtype)
        self.projection = Dense(rng, width, embed_dim, bias=False, dtype=dtype)

    def forward(self, sequences: Sequence[Sequence[Token]]) -> Tensor:
        ids, ends = encode_token_batch(self.alphabet, sequences, self.max_len)
        x = self.token_embedding(ids) + self.position_embedding(np.arange(self.max_len))
        padding = ids == self.alphabet.pad_id
        for layer in self.layers:
            x = layer(x, key_padding=padding)
        x = self.final_norm(x)
        return l2_normalize(self.projection(x[np.arange(len(ends)), ends]))
