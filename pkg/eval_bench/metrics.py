"""Recognition metrics over class-id sequences."""
import math
from collections import Counter
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

import conf
from eval_bench.exceptions import LengthMismatch

BUCKETS = ("0", f"1-{conf.FEW_SHOT_LIMIT}", f">{conf.FEW_SHOT_LIMIT}")


def edit_table(a: Sequence[int], b: Sequence[int]) -> np.ndarray:
    """
    Levenshtein DP table: cell (i, j) is the distance between ``a[:i]`` and ``b[:j]``
    with unit-cost insertion, deletion and substitution.
    """
    dist = np.zeros((len(a) + 1, len(b) + 1), dtype=np.int64)
    dist[:, 0] = np.arange(len(a) + 1)
    dist[0, :] = np.arange(len(b) + 1)
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dist[i, j] = min(dist[i - 1, j] + 1,
                             dist[i, j - 1] + 1,
                             dist[i - 1, j - 1] + cost)
    return dist


def edit_distance(a: Sequence[int], b: Sequence[int]) -> int:
    return int(edit_table(a, b)[-1, -1])


def align(pred: Sequence[int], truth: Sequence[int]) -> List[bool]:
    """
    For each ground-truth position, whether a minimal edit script keeps it as an
    exact match. Matches are preferred over other operations when backtracking.
    """
    dist = edit_table(pred, truth)
    correct = [False] * len(truth)
    i, j = len(pred), len(truth)
    while i > 0 and j > 0:
        if pred[i - 1] == truth[j - 1] and dist[i, j] == dist[i - 1, j - 1]:
            correct[j - 1] = True
            i, j = i - 1, j - 1
        elif dist[i, j] == dist[i - 1, j - 1] + 1:
            i, j = i - 1, j - 1
        elif dist[i, j] == dist[i - 1, j] + 1:
            i -= 1
        else:
            j -= 1
    return correct


def _check_pairs(preds: Sequence, labels: Sequence):
    if len(preds) != len(labels):
        raise LengthMismatch(f"{len(preds)} predictions for {len(labels)} labels")
    if not len(labels):
        raise LengthMismatch("cannot score an empty set of samples")


def cacc(preds: Sequence[int], labels: Sequence[int]) -> float:
    """Fraction of exact class matches."""
    _check_pairs(preds, labels)
    return float(np.mean(np.asarray(preds) == np.asarray(labels)))


def lacc(pred_lines: Sequence[Sequence[int]], label_lines: Sequence[Sequence[int]]) -> float:
    """Fraction of lines predicted exactly."""
    _check_pairs(pred_lines, label_lines)
    return sum(tuple(p) == tuple(t) for p, t in zip(pred_lines, label_lines)) / len(label_lines)


def normalized_errors(pred_lines: Sequence[Sequence[int]], label_lines: Sequence[Sequence[int]]) -> List[float]:
    """Per-line ``ED / max(len)``; a pair of empty lines scores 0."""
    _check_pairs(pred_lines, label_lines)
    errors = []
    for pred, truth in zip(pred_lines, label_lines):
        longest = max(len(pred), len(truth))
        errors.append(edit_distance(pred, truth) / longest if longest else 0.0)
    return errors


def ned(pred_lines: Sequence[Sequence[int]], label_lines: Sequence[Sequence[int]]) -> float:
    """One minus the mean length-normalized edit distance."""
    errors = normalized_errors(pred_lines, label_lines)
    return 1.0 - math.fsum(errors) / len(errors)


def character_hits(pred_lines: Sequence[Sequence[int]],
                   label_lines: Sequence[Sequence[int]]) -> Tuple[Counter, Counter]:
    """Per class: aligned correct occurrences and total occurrences in the ground truth."""
    _check_pairs(pred_lines, label_lines)
    correct: Counter = Counter()
    total: Counter = Counter()
    for pred, truth in zip(pred_lines, label_lines):
        for class_id, hit in zip(truth, align(pred, truth)):
            total[class_id] += 1
            correct[class_id] += hit
    return correct, total


def character_accuracy(pred_lines: Sequence[Sequence[int]], label_lines: Sequence[Sequence[int]],
                       classes: Optional[Iterable[int]] = None) -> Optional[float]:
    """
    Occurrence-weighted accuracy of ground-truth characters, optionally limited
    to ``classes``. ``None`` when no such character occurs.
    """
    correct, total = character_hits(pred_lines, label_lines)
    keep = set(total) if classes is None else set(classes) & set(total)
    count = sum(total[c] for c in keep)
    return sum(correct[c] for c in keep) / count if count else None


def shot_bucket(shots: int) -> str:
    if shots <= 0:
        return BUCKETS[0]
    return BUCKETS[1] if shots <= conf.FEW_SHOT_LIMIT else BUCKETS[2]


def bucket_classes(train_counts: Mapping[int, int], classes: Iterable[int]) -> Dict[str, List[int]]:
    """Partition ``classes`` by how often each occurs in the training data."""
    buckets: Dict[str, List[int]] = {name: [] for name in BUCKETS}
    for class_id in sorted(set(classes)):
        buckets[shot_bucket(train_counts.get(class_id, 0))].append(class_id)
    return buckets


def few_shot_report(train_counts: Mapping[int, int], pred_lines: Sequence[Sequence[int]],
                    label_lines: Sequence[Sequence[int]]) -> Dict[str, float]:
    """
    Character accuracy per training-frequency bucket (0 shots, 1-50 shots, more
    than 50). Buckets without test characters are omitted.
    """
    correct, total = character_hits(pred_lines, label_lines)
    report = {}
    for name, members in bucket_classes(train_counts, total).items():
        count = sum(total[c] for c in members)
        if count:
            report[name] = sum(correct[c] for c in members) / count
    return report
