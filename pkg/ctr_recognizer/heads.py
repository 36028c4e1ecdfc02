from typing import Optional, Union

import numpy as np

import conf
from ctr_recognizer.exceptions import DimensionMismatch, LabelOutOfRange
from tensor_substrate import Tensor, as_tensor, log_softmax, softmax

# target value of a padded decoding step
PAD_TARGET = -1


def match_logits(features: Tensor, rows: Union[Tensor, np.ndarray], logit_scale: float = conf.LOGIT_SCALE) -> Tensor:
    """
    Dot products of step features (..., C') with every candidate row (K, C').

    :raises DimensionMismatch: if the widths differ.
    """
    rows = as_tensor(rows, like=features)
    if features.shape[-1] != rows.shape[-1]:
        raise DimensionMismatch(f"step features of width {features.shape[-1]} cannot match "
                                f"candidates of width {rows.shape[-1]}")
    return (features @ rows.transpose(1, 0)) * logit_scale


def matching_head(features: Tensor, rows: Union[Tensor, np.ndarray], logit_scale: float = conf.LOGIT_SCALE) -> Tensor:
    """Probability of each candidate row for each step feature: softmax of the dot products."""
    return softmax(match_logits(features, rows, logit_scale), axis=-1)


def ctr_loss(features: Tensor, targets: np.ndarray, rows: Optional[Union[Tensor, np.ndarray]], beta: float,
             logit_scale: float = conf.LOGIT_SCALE, logits: Optional[Tensor] = None) -> Tensor:
    """
    Mean over non-padded steps of ``-log p(y|f) + beta * ||p_y - f||^2``.

    :param features: unit step features of shape (N, T, C').
    :param targets: row indices into ``rows`` of shape (N, T); ``PAD_TARGET`` marks padding.
    :param rows: candidate rows (K, C'), the END row included; unused when ``logits`` is given.
    :param beta: weight of the regularization term.
    :param logits: precomputed logits (N, T, K') from another head; when given the
        probabilities come from them and only cross-entropy is used.
    :raises LabelOutOfRange: if a target is neither padding nor a valid row.
    """
    targets = np.asarray(targets, dtype=np.int64)
    n_outputs = logits.shape[-1] if logits is not None else rows.shape[0]
    if targets.shape != features.shape[:2]:
        raise LabelOutOfRange(f"targets of shape {targets.shape} do not match features {features.shape[:2]}")
    if np.any((targets < PAD_TARGET) | (targets >= n_outputs)):
        raise LabelOutOfRange(f"targets must lie in [0, {n_outputs}) or be padding")
    valid = targets != PAD_TARGET
    count = max(int(valid.sum()), 1)
    mask = valid.astype(features.dtype)
    safe = np.where(valid, targets, 0)
    batch, steps = np.meshgrid(np.arange(targets.shape[0]), np.arange(targets.shape[1]), indexing="ij")
    if logits is None:
        rows = as_tensor(rows, like=features)
        logits = match_logits(features, rows, logit_scale)
        chosen = rows[safe]
        gap = chosen - features
        regularizer = ((gap * gap).sum(axis=-1) * mask).sum() * (1.0 / count)
    else:
        regularizer = None
    cross_entropy = -((log_softmax(logits, axis=-1)[batch, steps, safe] * mask).sum() * (1.0 / count))
    if regularizer is None or beta == 0:
        return cross_entropy
    return cross_entropy + regularizer * beta
