import logging
import time
from typing import Iterable, List, Optional, Tuple

import numpy as np

import conf
from clip_align.candidates import CandidateMatrix, ccr_recognize
from clip_align.exceptions import EmptyDataset
from clip_align.model import ClipModel, mean_intra_class_cosine
from eval_bench.metrics import cacc
from glyph_forge import Dataset
from models import MetricsReport

logger = logging.getLogger(__name__)


def intra_class_cosine(model: ClipModel, dataset: Dataset) -> float:
    """Mean same-class cosine similarity of the image embeddings of ``dataset``."""
    return mean_intra_class_cosine(model.embed_images(dataset.images), dataset.class_labels)


def ccr_predict(model: ClipModel, dataset: Dataset, candidates: CandidateMatrix,
                batch_size: int = conf.TIMING_BATCH_SIZE) -> Tuple[np.ndarray, float]:
    """Predicted class per glyph and the mean wall-clock seconds per batch (encoding plus matching)."""
    predictions: List[np.ndarray] = []
    timings: List[float] = []
    for start in range(0, len(dataset), batch_size):
        began = time.perf_counter()
        embeddings = model.embed_images(dataset.images[start:start + batch_size], batch_size)
        predictions.append(ccr_recognize(embeddings, candidates))
        timings.append(time.perf_counter() - began)
    return np.concatenate(predictions), float(np.mean(timings))


def ccr_evaluate(model: ClipModel, dataset: Dataset, candidates: CandidateMatrix,
                 seen_classes: Optional[Iterable[int]] = None,
                 batch_size: int = conf.TIMING_BATCH_SIZE) -> Tuple[MetricsReport, np.ndarray]:
    """
    Character accuracy of matching ``dataset`` glyphs against ``candidates``.

    :param seen_classes: classes used for training; when given, accuracy is also
        reported separately for seen and unseen classes.
    :return: ``(report, predictions)``.
    :raises EmptyDataset: if the dataset has no samples.
    """
    if not len(dataset):
        raise EmptyDataset("nothing to evaluate")
    predictions, batch_seconds = ccr_predict(model, dataset, candidates, batch_size)
    labels = np.asarray(dataset.class_labels)
    report = {"cacc": cacc(predictions, labels), "samples": len(labels), "batch_seconds": batch_seconds}
    if seen_classes is not None:
        seen = np.isin(labels, list(seen_classes))
        if seen.any():
            report["seen_cacc"] = cacc(predictions[seen], labels[seen])
        if (~seen).any():
            report["unseen_cacc"] = cacc(predictions[~seen], labels[~seen])
    result = MetricsReport(**report)
    logger.info(f"CACC {result.cacc:.4f} over {result.samples} glyphs against {len(candidates)} candidates")
    return result, predictions
