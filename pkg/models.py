from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import conf


class Regime(str, Enum):
    printed = "printed"
    scribbled = "scribbled"


class DatasetRegime(str, Enum):
    """
    Style regime of a whole dataset. ``mixed`` alternates printed and scribbled
    draws by sample index, which is how the "additional printed images" training
    setting is produced.
    """
    printed = "printed"
    scribbled = "scribbled"
    mixed = "mixed"


class DecompositionLevel(str, Enum):
    character = "character"
    radical = "radical"
    stroke = "stroke"


class HeadMode(str, Enum):
    match = "match"
    fc = "fc"


class SplitKind(str, Enum):
    char_zero_shot = "char_zero_shot"
    radical_zero_shot = "radical_zero_shot"
    full = "full"


class StyleParams(BaseModel):
    """
    Distortion parameters applied to one composed glyph or text line.

    :ivar stroke_thickness: multiplier on the nominal stroke width.
    :ivar rotation: rotation in radians.
    :ivar scale: isotropic scale factor.
    :ivar shear: horizontal shear factor.
    :ivar noise_sigma: standard deviation of additive gaussian pixel noise.
    """
    model_config = ConfigDict(frozen=True)

    stroke_thickness: float = Field(1.0, ge=0.6, le=1.6)
    rotation: float = Field(0.0, ge=-0.12, le=0.12)
    scale: float = Field(1.0, ge=0.85, le=1.15)
    shear: float = Field(0.0, ge=-0.1, le=0.1)
    noise_sigma: float = Field(0.0, ge=0.0, le=0.15)
    regime: Regime = Regime.printed

    @property
    def is_affine_identity(self) -> bool:
        return self.rotation == 0.0 and self.scale == 1.0 and self.shear == 0.0


class SplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: SplitKind = SplitKind.full
    m: Optional[int] = Field(None, ge=1)
    k: Optional[int] = Field(None, ge=1)
    n: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def check_parameters(self) -> "SplitSpec":
        if self.kind == SplitKind.char_zero_shot and (self.m is None or self.k is None):
            raise ValueError("char_zero_shot split needs m and k")
        if self.kind == SplitKind.radical_zero_shot and self.n is None:
            raise ValueError("radical_zero_shot split needs n")
        return self

    @classmethod
    def parse(cls, text: str) -> "SplitSpec":
        """
        Parse the command-line form of a split, e.g. ``char_zero_shot:m=240,k=60``,
        ``radical_zero_shot:n=3`` or ``full``.

        :raises ValueError: if the text is not a valid split description.
        """
        kind, _, params = text.strip().partition(":")
        values: Dict[str, int] = {}
        for item in filter(None, params.split(",")):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"split parameter {item!r} is not key=value")
            values[key.strip()] = int(value)
        return cls(kind=SplitKind(kind), **values)

    def __str__(self) -> str:
        if self.kind == SplitKind.char_zero_shot:
            return f"{self.kind.value}:m={self.m},k={self.k}"
        if self.kind == SplitKind.radical_zero_shot:
            return f"{self.kind.value}:n={self.n}"
        return self.kind.value


class ModelConfig(BaseModel):
    """Desk-scale architecture sizes."""
    embed_dim: int = Field(conf.EMBED_DIM, ge=1)
    image_widths: Tuple[int, ...] = conf.IMAGE_WIDTHS
    text_dim: int = Field(conf.TEXT_DIM, ge=1)
    text_layers: int = Field(conf.TEXT_LAYERS, ge=1)
    heads: int = Field(conf.ATTENTION_HEADS, ge=1)
    max_seq_len: int = Field(conf.MAX_SEQUENCE_LENGTH, ge=2)
    ctr_widths: Tuple[int, ...] = conf.CTR_WIDTHS
    decoder_layers: int = Field(conf.DECODER_LAYERS, ge=1)

    @field_validator("image_widths", "ctr_widths", mode="before")
    @classmethod
    def parse_widths(cls, value):
        if isinstance(value, str):
            return tuple(int(item) for item in value.split(",") if item.strip())
        return value

    @model_validator(mode="after")
    def check_heads(self) -> "ModelConfig":
        if self.text_dim % self.heads or self.embed_dim % self.heads:
            raise ValueError("text_dim and embed_dim must be divisible by heads")
        if len(self.image_widths) < 2:
            raise ValueError("image encoder needs at least two blocks")
        if len(self.ctr_widths) < 3:
            raise ValueError("text-line encoder needs at least three blocks")
        return self


class PretrainConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(conf.LAMBDA, ge=0.0, alias="lambda")
    batch_size: int = Field(conf.BATCH_SIZE, ge=2)
    lr: float = Field(conf.LEARNING_RATE, gt=0.0)
    beta1: float = Field(conf.ADAM_BETA1, ge=0.0, lt=1.0)
    beta2: float = Field(conf.ADAM_BETA2, ge=0.0, lt=1.0)
    eps: float = Field(conf.ADAM_EPS, gt=0.0)
    epochs: int = Field(10, ge=1)
    level: DecompositionLevel = DecompositionLevel.radical
    normalize: bool = True
    logit_scale: float = Field(conf.LOGIT_SCALE, gt=0.0)

    @field_validator("normalize")
    @classmethod
    def normalization_is_required(cls, value: bool) -> bool:
        if not value:
            raise ValueError("unnormalized embeddings are not supported")
        return value


class CtrConfig(BaseModel):
    beta: float = Field(conf.BETA, ge=0.0)
    head_mode: HeadMode = HeadMode.match
    max_decode_len: int = Field(conf.MAX_DECODE_LENGTH, ge=1)
    batch_size: int = Field(32, ge=1)
    lr: float = Field(conf.LEARNING_RATE, gt=0.0)
    beta1: float = Field(conf.ADAM_BETA1, ge=0.0, lt=1.0)
    beta2: float = Field(conf.ADAM_BETA2, ge=0.0, lt=1.0)
    eps: float = Field(conf.ADAM_EPS, gt=0.0)
    epochs: int = Field(10, ge=1)
    logit_scale: float = Field(conf.LOGIT_SCALE, gt=0.0)
    init_from_pretrain: bool = False


class DataConfig(BaseModel):
    lexicon_dir: Optional[Path] = None
    glyph_train: Optional[Path] = None
    glyph_test: Optional[Path] = None
    line_train: Optional[Path] = None
    line_test: Optional[Path] = None


class RunConfig(BaseModel):
    """Everything a run needs; serialized verbatim into each run directory."""
    seed: Optional[int] = None
    split: SplitSpec = SplitSpec()
    model: ModelConfig = ModelConfig()
    pretrain: PretrainConfig = PretrainConfig()
    ctr: CtrConfig = CtrConfig()
    data: DataConfig = DataConfig()

    @field_validator("split", mode="before")
    @classmethod
    def parse_split(cls, value):
        if isinstance(value, str):
            return SplitSpec.parse(value)
        return value


class MetricsReport(BaseModel):
    cacc: float = Field(ge=0.0, le=1.0)
    lacc: Optional[float] = Field(None, ge=0.0, le=1.0)
    ned: Optional[float] = Field(None, ge=0.0, le=1.0)
    samples: int = Field(ge=0)
    seen_cacc: Optional[float] = Field(None, ge=0.0, le=1.0)
    unseen_cacc: Optional[float] = Field(None, ge=0.0, le=1.0)
    few_shot: Dict[str, float] = {}
    batch_seconds: float = Field(0.0, ge=0.0)
    truncated: int = Field(0, ge=0)


class RunManifest(BaseModel):
    command: str
    config_hash: Optional[str] = None
    lexicon_hash: Optional[str] = None
    checkpoints: List[str] = []
    reports: List[str] = []
    outputs: List[str] = []
    wall_clock_seconds: float = 0.0


class AblationParam(str, Enum):
    lam = "lambda"
    beta = "beta"
    head_mode = "head_mode"
    reg_term = "reg_term"
    level = "level"
