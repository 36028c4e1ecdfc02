"""Loading helpers shared by the commands that consume earlier runs."""
from pathlib import Path
from typing import List, Optional, Tuple

import conf
from app.config import load_config
from app.utils import require_path
from clip_align import CandidateMatrix, ClipModel
from ctr_recognizer import CtrModel
from glyph_forge import Dataset, load_dataset
from ids_core import Lexicon, load_lexicon_dir
from models import RunConfig


def run_config(run: Path) -> RunConfig:
    return load_config(require_path(run / conf.CONFIG_FILE, "run config"))


def resolve_config(config_path: Optional[Path], overrides: List[str], seed: Optional[int] = None,
                   **data) -> RunConfig:
    """Config file plus ``--set`` overrides, with the seed and dataset flags folded in."""
    config = load_config(config_path, overrides)
    if seed is not None:
        config = config.model_copy(update={"seed": seed})
    updates = {key: value for key, value in data.items() if value is not None}
    if updates:
        config = config.model_copy(update={"data": config.data.model_copy(update=updates)})
    return config


def lexicon_for(config: RunConfig, override: Optional[Path] = None) -> Lexicon:
    return load_lexicon_dir(require_path(override or config.data.lexicon_dir, "lexicon directory"))


def dataset(path: Optional[Path], what: str) -> Dataset:
    return load_dataset(require_path(path, what))


def clip_model(run: Path) -> Tuple[RunConfig, ClipModel]:
    config = run_config(run)
    model = ClipModel.load(require_path(run / conf.CHECKPOINT_FILE, "encoder checkpoint"), config.model)
    return config, model


def candidates_for(run: Path, override: Optional[Path] = None) -> CandidateMatrix:
    return CandidateMatrix.load(require_path(override or run / conf.CANDIDATES_FILE, "candidate matrix"))


def ctr_model(run: Path, candidates: Optional[Path] = None) -> Tuple[RunConfig, CtrModel]:
    config = run_config(run)
    model = CtrModel.load(require_path(run / conf.CTR_CHECKPOINT_FILE, "recognizer checkpoint"), config.model,
                          config.ctr, candidates_for(run, candidates))
    return config, model
