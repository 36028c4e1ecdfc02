import copy
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

import conf
from clip_align import CandidateMatrix, ClipModel
from clip_align.encoders import image_tensor
from ctr_recognizer.exceptions import CandidateMissing, DimensionMismatch, LabelOutOfRange
from ctr_recognizer.heads import match_logits
from models import CtrConfig, HeadMode, ModelConfig
from tensor_substrate import (CheckpointError, ConvBlock, DecoderLayer, Dense, Embedding, LayerNorm, Module, Parameter,
                              Tensor, as_tensor, concat, l2_normalize, load_checkpoint, save_checkpoint)

logger = logging.getLogger(__name__)

# decoder input codes; non-negative codes are output indices of class tokens
BOS_CODE = -2
PAD_CODE = -1

_HEADS = tuple(HeadMode)
_META_HEAD = "meta.head"
_META_OUTPUTS = "meta.outputs"


class CtrEncoder(Module):
    """
    Convolutional text-line encoder: 3×3 first convolution, pooling after the
    first two blocks only, so a 32×256 line becomes an 8×64 grid flattened into a
    sequence of 512 feature vectors with learned positions.
    """

    def __init__(self, rng: np.random.Generator, widths: Sequence[int] = conf.CTR_WIDTHS, dtype=np.float32):
        channels = (1,) + tuple(widths)
        self.blocks = [ConvBlock(rng, channels[i], channels[i + 1], pool=i < 2, dtype=dtype)
                       for i in range(len(widths))]
        self.grid = (conf.GLYPH_SIZE // 4, conf.LINE_WIDTH // 4)
        self.position_embedding = Embedding(rng, self.grid[0] * self.grid[1], widths[-1], dtype=dtype)
        self.dtype = dtype

    def forward(self, images: np.ndarray) -> Tensor:
        x = image_tensor(images, conf.GLYPH_SIZE, conf.LINE_WIDTH, self.dtype)
        for block in self.blocks:
            x = block(x)
        n, height, width, channels = x.shape
        return x.reshape(n, height * width, channels) + self.position_embedding(np.arange(height * width))


class CtrModel(Module):
    """
    Encoder-decoder text-line recognizer.

    In ``match`` mode the decoder's step features are projected to the
    embedding space and scored against the frozen candidate matrix plus one
    learned END row; class tokens fed back into the decoder are embedded from
    their candidate vectors, so classes appended to the matrix later can be
    both emitted and consumed. In ``fc`` mode a linear classifier over the
    training classes plus END replaces the matching head.
    """

    def __init__(self, model_config: ModelConfig, ctr_config: CtrConfig, candidates: CandidateMatrix,
                 rng: np.random.Generator, output_classes: Optional[Sequence[int]] = None, dtype=np.float32):
        width = model_config.ctr_widths[-1]
        if width % model_config.heads:
            raise DimensionMismatch(f"decoder width {width} is not divisible by {model_config.heads} heads")
        self.head_mode = HeadMode(ctr_config.head_mode)
        self.logit_scale = ctr_config.logit_scale
        self.max_decode_len = ctr_config.max_decode_len
        self.candidates = candidates
        self.dtype = dtype
        self.encoder = CtrEncoder(rng, model_config.ctr_widths, dtype)
        self.special_embedding = Embedding(rng, 2, width, dtype=dtype)
        self.position_embedding = Embedding(rng, ctr_config.max_decode_len + 1, width, dtype=dtype)
        if self.head_mode == HeadMode.match:
            if candidates.dim != model_config.embed_dim:
                raise DimensionMismatch(f"candidates of width {candidates.dim} do not match "
                                        f"embed_dim {model_config.embed_dim}")
            self.output_classes = None
            self.class_input = Dense(rng, model_config.embed_dim, width, dtype=dtype)
        else:
            self.output_classes = tuple(sorted(int(c) for c in (output_classes or candidates.class_ids)))
            self.output_lookup = {c: i for i, c in enumerate(self.output_classes)}
            self.class_embedding = Embedding(rng, len(self.output_classes), width, dtype=dtype)
        self.layers = [DecoderLayer(rng, width, model_config.heads, dtype=dtype)
                       for _ in range(model_config.decoder_layers)]
        self.final_norm = LayerNorm(width, dtype=dtype)
        if self.head_mode == HeadMode.match:
            self.output_projection = Dense(rng, width, model_config.embed_dim, bias=False, dtype=dtype)
            bound = float(np.sqrt(1.0 / model_config.embed_dim))
            self.end_row = Parameter(rng.uniform(-bound, bound, size=model_config.embed_dim).astype(dtype))
        else:
            self.classifier = Dense(rng, width, len(self.output_classes) + 1, dtype=dtype)

    @property
    def n_outputs(self) -> int:
        """Number of head outputs, END included."""
        if self.head_mode == HeadMode.match:
            return len(self.candidates) + 1
        return len(self.output_classes) + 1

    @property
    def end_index(self) -> int:
        return self.n_outputs - 1

    @property
    def output_ids(self) -> Tuple[int, ...]:
        return self.candidates.class_ids if self.head_mode == HeadMode.match else self.output_classes

    def output_index(self, class_id: int) -> int:
        """Head output index of ``class_id``."""
        if self.head_mode == HeadMode.match:
            row = self.candidates.rows.get(int(class_id))
        else:
            row = self.output_lookup.get(int(class_id))
        if row is None:
            raise CandidateMissing(f"class {class_id} has no output in the {self.head_mode.value} head")
        return row

    def with_candidates(self, candidates: CandidateMatrix) -> "CtrModel":
        """The same weights matched against another candidate matrix."""
        if self.head_mode != HeadMode.match:
            raise CandidateMissing("a classifier head cannot take new candidates")
        if candidates.dim != self.candidates.dim:
            raise DimensionMismatch(f"candidates of width {candidates.dim} do not match width {self.candidates.dim}")
        clone = copy.copy(self)
        clone.candidates = candidates
        return clone

    def encode(self, images: np.ndarray) -> Tensor:
        return self.encoder(images)

    def embed_inputs(self, codes: np.ndarray) -> Tensor:
        codes = np.asarray(codes, dtype=np.int64)
        steps = codes.shape[1]
        if steps > self.max_decode_len + 1:
            raise LabelOutOfRange(f"{steps} decoder steps exceed the limit of {self.max_decode_len + 1}")
        if np.any((codes < BOS_CODE) | (codes >= self.end_index)):
            raise LabelOutOfRange("decoder input codes must be BOS, PAD or a class output index")
        is_class = codes >= 0
        safe = np.where(is_class, codes, 0)
        special = self.special_embedding(np.where(codes == BOS_CODE, 0, 1))
        if self.head_mode == HeadMode.match:
            classes = self.class_input(Tensor(self.candidates.vectors[safe], dtype=self.dtype))
        else:
            classes = self.class_embedding(safe)
        mask = is_class[..., None].astype(self.dtype)
        return classes * mask + special * (1.0 - mask) + self.position_embedding(np.arange(steps))

    def output_rows(self) -> Tensor:
        """Candidate rows followed by the normalized END row."""
        end = l2_normalize(self.end_row.reshape(1, -1))
        return concat([as_tensor(self.candidates.vectors, like=end), end], axis=0)

    def decode(self, memory: Tensor, codes: np.ndarray) -> Tuple[Tensor, Tensor, Optional[Tensor]]:
        """
        Run the decoder over input codes (N, T).

        :return: ``(features, logits, rows)``; features are unit vectors in match
            mode and the raw decoder states in fc mode, where ``rows`` is ``None``.
        """
        x = self.embed_inputs(codes)
        for layer in self.layers:
            x = layer(x, memory)
        hidden = self.final_norm(x)
        if self.head_mode == HeadMode.fc:
            return hidden, self.classifier(hidden), None
        features = l2_normalize(self.output_projection(hidden))
        rows = self.output_rows()
        return features, match_logits(features, rows, self.logit_scale), rows

    def forward(self, images: np.ndarray, codes: np.ndarray) -> Tuple[Tensor, Tensor, Optional[Tensor]]:
        return self.decode(self.encode(images), codes)

    def init_from_pretrain(self, clip_model: ClipModel, blocks: int = 3):
        """Copy the first ``blocks`` convolution blocks of a pre-trained image encoder."""
        source = clip_model.image_encoder.blocks
        if len(source) < blocks or len(self.encoder.blocks) < blocks:
            raise DimensionMismatch(f"both encoders need at least {blocks} blocks")
        for index in range(blocks):
            self.encoder.blocks[index].load_state_dict(source[index].state_dict())
        logger.info(f"initialized {blocks} text-line encoder blocks from the pre-trained image encoder")

    def save(self, path: Union[str, Path]):
        state = self.state_dict()
        state[_META_HEAD] = np.array([_HEADS.index(self.head_mode)], dtype=np.float32)
        if self.output_classes is not None:
            state[_META_OUTPUTS] = np.array(self.output_classes, dtype=np.float32)
        save_checkpoint(path, state)

    @classmethod
    def load(cls, path: Union[str, Path], model_config: ModelConfig, ctr_config: CtrConfig,
             candidates: CandidateMatrix) -> "CtrModel":
        """
        Rebuild a recognizer from a checkpoint written by :meth:`save`. The head
        mode stored in the checkpoint wins over ``ctr_config.head_mode``.

        :raises CheckpointError: if the file is not a recognizer checkpoint.
        """
        state = load_checkpoint(path)
        if _META_HEAD not in state:
            raise CheckpointError(f"{path} is not a text-line recognizer checkpoint")
        head_mode = _HEADS[int(state.pop(_META_HEAD)[0])]
        outputs = state.pop(_META_OUTPUTS, None)
        output_classes = None if outputs is None else [int(c) for c in outputs]
        config = ctr_config.model_copy(update={"head_mode": head_mode})
        model = cls(model_config, config, candidates, np.random.default_rng(0), output_classes)
        model.load_state_dict(state)
        return model
