import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from clip_align import CandidateMatrix, ClipModel
from ctr_recognizer.exceptions import LabelOutOfRange
from ctr_recognizer.model import BOS_CODE, PAD_CODE, CtrModel
from ids_core import Token
from tensor_substrate import no_grad

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecodeResult:
    classes: Tuple[int, ...]
    truncated: bool = False


def greedy_decode(model: CtrModel, images: np.ndarray, max_len: Optional[int] = None,
                  batch_size: int = 32) -> List[DecodeResult]:
    """
    Decode text lines one token at a time, always taking the highest-scoring
    output (lowest index on ties).

    Decoding of a line stops when END wins; after ``max_len`` emitted classes
    without END the result is marked truncated.

    :param images: one (32, 256) line or a batch (N, 32, 256).
    :param max_len: emission limit, at most the model's ``max_decode_len``.
    """
    max_len = model.max_decode_len if max_len is None else max_len
    if not 0 <= max_len <= model.max_decode_len:
        raise LabelOutOfRange(f"max_len must lie in [0, {model.max_decode_len}]")
    images = np.asarray(images)
    if images.ndim == 2:
        images = images[None]
    results: List[DecodeResult] = []
    with no_grad():
        for start in range(0, len(images), batch_size):
            results.extend(_decode_batch(model, images[start:start + batch_size], max_len))
    return results


def _decode_batch(model: CtrModel, images: np.ndarray, max_len: int) -> List[DecodeResult]:
    count = len(images)
    memory = model.encode(images)
    codes = np.full((count, 1), BOS_CODE, dtype=np.int64)
    emitted: List[List[int]] = [[] for _ in range(count)]
    truncated = [False] * count
    done = np.zeros(count, dtype=bool)
    output_ids = model.output_ids
    for step in range(max_len + 1):
        _, logits, _ = model.decode(memory, codes)
        choice = np.argmax(logits.data[:, -1], axis=-1)
        for row in np.flatnonzero(~done):
            if choice[row] == model.end_index:
                done[row] = True
            elif step == max_len:
                truncated[row] = True
                done[row] = True
            else:
                emitted[row].append(int(output_ids[choice[row]]))
        if done.all():
            break
        fed = np.where(done | (choice == model.end_index), PAD_CODE, choice)
        codes = np.concatenate([codes, fed[:, None]], axis=1)
    return [DecodeResult(tuple(classes), flag) for classes, flag in zip(emitted, truncated)]


def add_candidate(candidates: CandidateMatrix, class_id: int, tokens: Sequence[Token],
                  clip_model: ClipModel) -> CandidateMatrix:
    """
    Extend the candidate matrix with the canonical representation of a new
    class. No weights change; the first rows are carried over unchanged.

    :raises DuplicateClass: if ``class_id`` is already a candidate.
    """
    vector = clip_model.embed_tokens([tuple(tokens)])[0]
    extended = candidates.append(class_id, vector)
    logger.info(f"added class {class_id}; {len(extended)} candidates")
    return extended


def write_predictions(path: Union[str, Path], sample_ids: Sequence[str], results: Sequence[DecodeResult]):
    with open(path, "w", encoding="utf-8") as f:
        for sample_id, result in zip(sample_ids, results):
            classes = " ".join(str(c) for c in result.classes)
            f.write(f"{sample_id}\t{classes}\t{int(result.truncated)}\n")
