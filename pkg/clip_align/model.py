import logging
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

import conf
from clip_align.candidates import CandidateMatrix
from clip_align.encoders import ImageEncoder, TextEncoder
from ids_core import Lexicon, Token, TokenAlphabet, tokens_for_level
from models import DecompositionLevel, ModelConfig
from seeding import rng_for
from tensor_substrate import CheckpointError, Module, Tensor, load_checkpoint, no_grad, save_checkpoint

logger = logging.getLogger(__name__)

_LEVELS = tuple(DecompositionLevel)
_META_ALPHABET = "meta.alphabet"
_META_LEVEL = "meta.level"


class ClipModel(Module):
    """
    The image and text encoders trained jointly, together with the token
    alphabet and decomposition level the text encoder was trained on.
    """

    def __init__(self, model_config: ModelConfig, alphabet: TokenAlphabet, level: DecompositionLevel,
                 rng: np.random.Generator, dtype=np.float32):
        self.model_config = model_config
        self.alphabet = alphabet
        self.level = DecompositionLevel(level)
        self.image_encoder = ImageEncoder(rng, model_config.image_widths, model_config.embed_dim, dtype)
        self.text_encoder = TextEncoder(rng, alphabet, model_config.text_dim, model_config.text_layers,
                                        model_config.heads, model_config.max_seq_len, model_config.embed_dim, dtype)

    @classmethod
    def create(cls, model_config: ModelConfig, lex: Lexicon, level: DecompositionLevel, seed: int,
               dtype=np.float32) -> "ClipModel":
        return cls(model_config, TokenAlphabet.from_lexicon(lex), level, rng_for(seed, "init"), dtype)

    def class_tokens(self, lex: Lexicon, class_ids: Iterable[int]) -> list:
        return [tokens_for_level(int(c), lex, self.level) for c in class_ids]

    def encode_images(self, images: np.ndarray) -> Tensor:
        return self.image_encoder(images)

    def encode_tokens(self, sequences: Sequence[Sequence[Token]]) -> Tensor:
        return self.text_encoder(sequences)

    def embed_images(self, images: np.ndarray, batch_size: int = conf.BATCH_SIZE) -> np.ndarray:
        """Inference-mode image embeddings, computed in batches."""
        if not len(images):
            return np.zeros((0, self.model_config.embed_dim), dtype=np.float32)
        with no_grad():
            return np.concatenate([self.image_encoder(images[i:i + batch_size]).data
                                   for i in range(0, len(images), batch_size)])

    def embed_tokens(self, sequences: Sequence[Sequence[Token]], batch_size: int = conf.BATCH_SIZE) -> np.ndarray:
        if not len(sequences):
            return np.zeros((0, self.model_config.embed_dim), dtype=np.float32)
        with no_grad():
            return np.concatenate([self.text_encoder(sequences[i:i + batch_size]).data
                                   for i in range(0, len(sequences), batch_size)])

    def save(self, path: Union[str, Path]):
        state = self.state_dict()
        alphabet = self.alphabet
        state[_META_ALPHABET] = np.array([alphabet.n_radicals, alphabet.n_strokes, alphabet.n_classes], dtype=np.float32)
        state[_META_LEVEL] = np.array([_LEVELS.index(self.level)], dtype=np.float32)
        save_checkpoint(path, state)

    @classmethod
    def load(cls, path: Union[str, Path], model_config: ModelConfig) -> "ClipModel":
        """
        Rebuild a model from a checkpoint written by :meth:`save`.

        :raises CheckpointError: if the file lacks the alphabet metadata or does not match ``model_config``.
        """
        state = load_checkpoint(path)
        if _META_ALPHABET not in state or _META_LEVEL not in state:
            raise CheckpointError(f"{path} is not an encoder checkpoint")
        n_radicals, n_strokes, n_classes = (int(v) for v in state.pop(_META_ALPHABET))
        level = _LEVELS[int(state.pop(_META_LEVEL)[0])]
        model = cls(model_config, TokenAlphabet(n_radicals, n_strokes, n_classes), level, np.random.default_rng(0))
        model.load_state_dict(state)
        return model


def export_candidates(model: ClipModel, lex: Lexicon, class_ids: Iterable[int] = None,
                      batch_size: int = conf.BATCH_SIZE) -> CandidateMatrix:
    """
    Canonical representations for ``class_ids`` (all lexicon classes by default),
    one row per class in ascending class order.

    :raises UnknownClass: if a class is not in the lexicon.
    """
    class_ids = sorted(int(c) for c in (lex.class_ids if class_ids is None else class_ids))
    vectors = model.embed_tokens(model.class_tokens(lex, class_ids), batch_size)
    logger.info(f"exported {len(class_ids)} canonical representations at {model.level.value} level")
    return CandidateMatrix(tuple(class_ids), vectors)


def mean_intra_class_cosine(embeddings: np.ndarray, labels: Sequence[int]) -> float:
    """
    Mean cosine similarity between distinct samples of the same class, averaged
    over classes that have at least two samples. Returns 0 when no class does.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    embeddings = embeddings / np.maximum(np.linalg.norm(embeddings, axis=1, keepdims=True), 1e-12)
    per_class = []
    for label in np.unique(labels):
        group = embeddings[labels == label]
        if len(group) < 2:
            continue
        similarity = group @ group.T
        count = len(group)
        per_class.append((similarity.sum() - np.trace(similarity)) / (count * (count - 1)))
    return float(np.mean(per_class)) if per_class else 0.0

