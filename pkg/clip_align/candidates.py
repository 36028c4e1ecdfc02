import hashlib
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from clip_align.exceptions import ClipError, DuplicateClass, EmptyCandidates

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CandidateMatrix:
    """
    Canonical representations of the candidate classes: row ``k`` is the unit
    text embedding of ``class_ids[k]``. Instances are immutable; use
    :meth:`append` to extend.
    """
    class_ids: Tuple[int, ...]
    vectors: np.ndarray

    def __post_init__(self):
        class_ids = tuple(int(c) for c in self.class_ids)
        vectors = np.array(self.vectors, dtype=np.float32, copy=True)
        if vectors.ndim != 2 or vectors.shape[0] != len(class_ids):
            raise ClipError(f"candidate matrix of shape {vectors.shape} does not match {len(class_ids)} class ids")
        if len(set(class_ids)) != len(class_ids):
            raise DuplicateClass("candidate class ids must be unique")
        vectors.setflags(write=False)
        object.__setattr__(self, "class_ids", class_ids)
        object.__setattr__(self, "vectors", vectors)

    def __len__(self) -> int:
        return len(self.class_ids)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @cached_property
    def rows(self) -> Dict[int, int]:
        return {class_id: row for row, class_id in enumerate(self.class_ids)}

    def __contains__(self, class_id: int) -> bool:
        return int(class_id) in self.rows

    def vector(self, class_id: int) -> np.ndarray:
        return self.vectors[self.rows[int(class_id)]]

    def append(self, class_id: int, vector: np.ndarray) -> "CandidateMatrix":
        """New matrix with one more row; the existing rows are copied unchanged."""
        if int(class_id) in self:
            raise DuplicateClass(f"class {class_id} is already a candidate")
        vector = np.asarray(vector, dtype=np.float32).reshape(1, -1)
        if len(self) and vector.shape[1] != self.dim:
            raise ClipError(f"vector of width {vector.shape[1]} does not fit candidates of width {self.dim}")
        stacked = vector if not len(self) else np.concatenate([self.vectors, vector])
        return CandidateMatrix(self.class_ids + (int(class_id),), stacked)

    def digest(self) -> str:
        blob = np.asarray(self.class_ids, dtype=np.int64).tobytes() + self.vectors.tobytes()
        return hashlib.sha256(blob).hexdigest()

    def save(self, path: Union[str, Path]):
        with open(path, "w", encoding="utf-8") as f:
            for class_id, row in zip(self.class_ids, self.vectors):
                f.write(str(class_id) + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")
        logger.info(f"wrote {len(self)} candidates to {path}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CandidateMatrix":
        path = Path(path)
        if not path.exists():
            raise ClipError(f"candidate file {path} does not exist")
        class_ids, rows = [], []
        for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            fields = line.split("\t")
            try:
                class_ids.append(int(fields[0]))
                rows.append([float(v) for v in fields[1:]])
            except ValueError as e:
                raise ClipError(f"{path}: row {number}: {e}") from e
            if rows[-1] and len(rows[-1]) != len(rows[0]):
                raise ClipError(f"{path}: row {number}: expected {len(rows[0])} values, got {len(rows[-1])}")
        if not rows:
            raise EmptyCandidates(f"{path} holds no candidates")
        try:
            return cls(tuple(class_ids), np.array(rows, dtype=np.float32))
        except DuplicateClass as e:
            raise DuplicateClass(f"{path}: {e}") from e


def ccr_recognize(embeddings: np.ndarray, candidates: CandidateMatrix) -> np.ndarray:
    """
    Class ids of the nearest candidates by dot product.

    :param embeddings: one (C',) vector or an (N, C') batch.
    :return: class ids, shape () or (N,). Ties go to the lowest row.
    :raises EmptyCandidates: if there are no candidates.
    """
    if not len(candidates):
        raise EmptyCandidates("cannot recognize against an empty candidate matrix")
    embeddings = np.asarray(embeddings)
    scores = embeddings @ candidates.vectors.T
    best = scores.max(axis=-1, keepdims=True)
    # scores within round-off of the best one are ties
    slack = 8 * np.finfo(candidates.vectors.dtype).eps * np.maximum(np.abs(best), 1.0)
    return np.asarray(candidates.class_ids)[np.argmax(scores >= best - slack, axis=-1)]

