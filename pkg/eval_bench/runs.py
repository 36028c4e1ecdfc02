import csv
import logging
import time
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import conf
from clip_align import EmptyDataset
from ctr_recognizer import CtrModel, DecodeResult, greedy_decode
from eval_bench.metrics import (character_accuracy, edit_distance, few_shot_report, lacc, ned)
from glyph_forge import Dataset
from models import MetricsReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def train_counts(dataset: Dataset) -> Counter:
    """Occurrences of every class across the labels of a training set."""
    counts: Counter = Counter()
    for label in dataset.labels:
        counts.update(label)
    return counts


def ctr_decode(model: CtrModel, dataset: Dataset, batch_size: int = conf.TIMING_BATCH_SIZE,
               max_len: Optional[int] = None) -> Tuple[List[DecodeResult], float]:
    """Greedy decoding of every line and the mean wall-clock seconds per batch."""
    results: List[DecodeResult] = []
    timings: List[float] = []
    for start in range(0, len(dataset), batch_size):
        began = time.perf_counter()
        results.extend(greedy_decode(model, dataset.images[start:start + batch_size], max_len, batch_size))
        timings.append(time.perf_counter() - began)
    return results, sum(timings) / len(timings)


def ctr_evaluate(model: CtrModel, dataset: Dataset, counts: Optional[Mapping[int, int]] = None,
                 seen_classes: Optional[Iterable[int]] = None, batch_size: int = conf.TIMING_BATCH_SIZE,
                 max_len: Optional[int] = None) -> Tuple[MetricsReport, List[DecodeResult]]:
    """
    Line accuracy, NED and aligned character accuracy of a recognizer on a line dataset.

    :param counts: training occurrences per class; enables the few-shot buckets.
    :param seen_classes: training classes; enables seen/unseen character accuracy.
    :return: ``(report, decode results)``.
    :raises EmptyDataset: if the dataset has no lines.
    """
    if not len(dataset):
        raise EmptyDataset("nothing to evaluate")
    results, batch_seconds = ctr_decode(model, dataset, batch_size, max_len)
    preds = [result.classes for result in results]
    labels = dataset.labels
    report = {
        "cacc": character_accuracy(preds, labels) or 0.0,
        "lacc": lacc(preds, labels),
        "ned": ned(preds, labels),
        "samples": len(labels),
        "batch_seconds": batch_seconds,
        "truncated": sum(result.truncated for result in results),
    }
    if seen_classes is not None:
        seen = set(seen_classes)
        unseen = {c for label in labels for c in label} - seen
        report["seen_cacc"] = character_accuracy(preds, labels, seen)
        report["unseen_cacc"] = character_accuracy(preds, labels, unseen)
    if counts is not None:
        report["few_shot"] = few_shot_report(counts, preds, labels)
    result = MetricsReport(**report)
    logger.info(f"LACC {result.lacc:.4f} NED {result.ned:.4f} over {result.samples} lines "
                f"({result.truncated} truncated)")
    return result, results


def report_rows(report: MetricsReport) -> List[Tuple[str, str]]:
    rows = []
    for key, value in report.model_dump(exclude={"few_shot"}).items():
        if value is not None:
            rows.append((key, repr(value) if isinstance(value, float) else str(value)))
    for bucket, value in report.few_shot.items():
        rows.append((f"few_shot[{bucket}]", repr(value)))
    return rows


def write_report(path: PathLike, report: MetricsReport):
    """``metric<TAB>value`` rows; absent metrics are omitted."""
    lines = ["metric\tvalue"] + [f"{key}\t{value}" for key, value in report_rows(report)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_report(path: PathLike) -> Dict[str, str]:
    rows = Path(path).read_text(encoding="utf-8").splitlines()[1:]
    return dict(row.split("\t", 1) for row in rows if row)


def summary_text(report: MetricsReport, title: str, notes: Sequence[str] = ()) -> str:
    lines = [title, "=" * len(title), f"samples: {report.samples}", f"CACC: {report.cacc:.2%}"]
    if report.lacc is not None:
        lines.append(f"LACC: {report.lacc:.2%}")
    if report.ned is not None:
        lines.append(f"NED: {report.ned:.4f}")
    if report.seen_cacc is not None:
        lines.append(f"seen classes: {report.seen_cacc:.2%}")
    if report.unseen_cacc is not None:
        lines.append(f"unseen classes: {report.unseen_cacc:.2%}")
    for bucket, value in report.few_shot.items():
        lines.append(f"{bucket} shots: {value:.2%}")
    if report.truncated:
        lines.append(f"truncated lines: {report.truncated}")
    lines.append(f"seconds per batch: {report.batch_seconds:.4f}")
    lines.extend(notes)
    return "\n".join(lines) + "\n"


def write_summary(path: PathLike, report: MetricsReport, title: str, notes: Sequence[str] = ()):
    Path(path).write_text(summary_text(report, title, notes), encoding="utf-8")


def write_samples(path: PathLike, sample_ids: Sequence[str], preds: Sequence[Sequence[int]],
                  labels: Sequence[Sequence[int]]):
    """Per-sample CSV of edit distance, longer length and exact-match flag, by sample id."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["sample_id", "ED", "Maxlen", "correct"])
        for sample_id, pred, truth in sorted(zip(sample_ids, preds, labels), key=lambda row: row[0]):
            correct = int(tuple(pred) == tuple(truth))
            writer.writerow([sample_id, edit_distance(pred, truth), max(len(pred), len(truth)), correct])
