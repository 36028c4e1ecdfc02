"""Training and evaluation stages shared by the command line and ablation sweeps."""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

from clip_align import CandidateMatrix, ClipModel, EmptyDataset, PretrainLog, export_candidates, pretrain
from clip_align.evaluate import ccr_evaluate
from ctr_recognizer import CtrLog, CtrModel, train_ctr
from eval_bench.runs import ctr_evaluate, train_counts
from eval_bench.splits import split_classes
from glyph_forge import Dataset
from ids_core import Lexicon
from models import MetricsReport, RunConfig

logger = logging.getLogger(__name__)


@dataclass
class Datasets:
    glyph_train: Optional[Dataset] = None
    glyph_test: Optional[Dataset] = None
    line_train: Optional[Dataset] = None
    line_test: Optional[Dataset] = None


def training_subset(dataset: Dataset, train_classes: List[int], what: str) -> Dataset:
    """Samples made only of training classes."""
    subset = dataset.restrict(train_classes)
    if not len(subset):
        raise EmptyDataset(f"no {what} sample is made only of training classes")
    logger.info(f"{what}: {len(subset)} of {len(dataset)} samples use training classes only")
    return subset


def pretrain_stage(config: RunConfig, lex: Lexicon, glyphs: Dataset, seed: int) -> Tuple[ClipModel, PretrainLog]:
    train_classes, _ = split_classes(lex, config.split)
    return pretrain(config.pretrain, config.model, lex, training_subset(glyphs, train_classes, "glyph"), seed)


def candidates_stage(model: ClipModel, lex: Lexicon) -> CandidateMatrix:
    """Canonical representations of every lexicon class, seen or not."""
    return export_candidates(model, lex)


def ctr_stage(config: RunConfig, lex: Lexicon, candidates: CandidateMatrix, lines: Dataset, seed: int,
              pretrained: Optional[ClipModel] = None) -> Tuple[CtrModel, CtrLog]:
    train_classes, _ = split_classes(lex, config.split)
    subset = training_subset(lines, train_classes, "line")
    return train_ctr(config.ctr, config.model, candidates, subset, seed, pretrained)


def evaluate_glyphs(config: RunConfig, lex: Lexicon, model: ClipModel, candidates: CandidateMatrix,
                    glyphs: Dataset) -> MetricsReport:
    train_classes, _ = split_classes(lex, config.split)
    report, _ = ccr_evaluate(model, glyphs, candidates, seen_classes=train_classes)
    return report


def evaluate_lines(config: RunConfig, lex: Lexicon, model: CtrModel, lines: Dataset,
                   train_lines: Optional[Dataset] = None) -> MetricsReport:
    """Line metrics, with few-shot buckets when the training lines are known."""
    train_classes, _ = split_classes(lex, config.split)
    counts = None
    if train_lines is not None:
        counts = train_counts(train_lines.restrict(train_classes))
    report, _ = ctr_evaluate(model, lines, counts, seen_classes=train_classes)
    return report
