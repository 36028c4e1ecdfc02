from typing import Sequence

import numpy as np

import conf
from tensor_substrate import ShapeMismatch, Tensor, log_softmax, logsumexp


def _check_rows(image_emb: Tensor, other: Tensor):
    if image_emb.ndim != 2 or image_emb.shape != other.shape:
        raise ShapeMismatch(f"embedding batches must be equal (N, C) matrices, got {image_emb.shape} and {other.shape}")


def loss_lt(image_emb: Tensor, text_emb: Tensor, logit_scale: float = conf.LOGIT_SCALE) -> Tensor:
    """
    Symmetric image-text contrastive loss: the negative log of the matched
    pair's softmax probability, summed over both the image rows and the text
    columns of the N×N similarity matrix.
    """
    _check_rows(image_emb, text_emb)
    logits = (image_emb @ text_emb.transpose(1, 0)) * logit_scale
    diagonal = np.arange(image_emb.shape[0])
    by_row = log_softmax(logits, axis=1)[diagonal, diagonal].sum()
    by_column = log_softmax(logits, axis=0)[diagonal, diagonal].sum()
    return -(by_row + by_column)


def loss_li(image_emb: Tensor, labels: Sequence[int], logit_scale: float = conf.LOGIT_SCALE) -> Tensor:
    """
    Image-image contrastive loss over same-label pairs.

    For sample j the positives are the other samples sharing its label; the
    denominator runs over every sample, j included. Samples without a positive
    contribute nothing.
    """
    labels = np.asarray(labels)
    if labels.shape != (image_emb.shape[0],):
        raise ShapeMismatch(f"{labels.size} labels for {image_emb.shape[0]} embeddings")
    _check_rows(image_emb, image_emb)
    logits = (image_emb @ image_emb.transpose(1, 0)) * logit_scale
    positives = (labels[:, None] == labels[None, :]) & ~np.eye(len(labels), dtype=bool)
    has_positive = positives.any(axis=1).astype(image_emb.dtype)
    per_sample = logsumexp(logits, axis=1) - logsumexp(logits, axis=1, mask=positives)
    return (per_sample * has_positive).sum()


def pretrain_loss(image_emb: Tensor, text_emb: Tensor, labels: Sequence[int], lam: float,
                  logit_scale: float = conf.LOGIT_SCALE):
    """``L_T + lam * L_I``; returns ``(total, l_t, l_i)``. With ``lam == 0`` the total is ``l_t`` itself."""
    l_t = loss_lt(image_emb, text_emb, logit_scale)
    l_i = loss_li(image_emb, labels, logit_scale)
    total = l_t if lam == 0 else l_t + l_i * lam
    return total, l_t, l_i
