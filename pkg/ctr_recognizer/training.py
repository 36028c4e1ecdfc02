import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from clip_align import CandidateMatrix, ClipModel, EmptyDataset
from ctr_recognizer.exceptions import CtrError
from ctr_recognizer.heads import PAD_TARGET, ctr_loss
from ctr_recognizer.model import BOS_CODE, PAD_CODE, CtrModel
from glyph_forge import Dataset
from models import CtrConfig, HeadMode, ModelConfig
from seeding import rng_for
from tensor_substrate import Adam, Tensor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CtrEpoch:
    epoch: int
    loss: float


@dataclass
class CtrLog:
    epochs: List[CtrEpoch] = field(default_factory=list)

    def to_tsv(self) -> str:
        return "epoch\tloss\n" + "".join(f"{row.epoch}\t{row.loss!r}\n" for row in self.epochs)

    def save(self, path: Union[str, Path]):
        Path(path).write_text(self.to_tsv(), encoding="utf-8")


def teacher_forcing(model: CtrModel, labels: Sequence[Sequence[int]]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Decoder inputs ``BOS + label`` and targets ``label + END``, padded to the
    longest line of the batch.

    :raises CandidateMissing: if a label class has no head output.
    """
    steps = max(len(label) for label in labels) + 1
    inputs = np.full((len(labels), steps), PAD_CODE, dtype=np.int64)
    targets = np.full((len(labels), steps), PAD_TARGET, dtype=np.int64)
    for row, label in enumerate(labels):
        indices = [model.output_index(c) for c in label]
        inputs[row, :len(indices) + 1] = [BOS_CODE] + indices
        targets[row, :len(indices) + 1] = indices + [model.end_index]
    return inputs, targets


def batch_loss(model: CtrModel, images: np.ndarray, labels: Sequence[Sequence[int]], beta: float) -> Tensor:
    inputs, targets = teacher_forcing(model, labels)
    features, logits, rows = model(images, inputs)
    if model.head_mode == HeadMode.fc:
        return ctr_loss(features, targets, None, beta, logits=logits)
    return ctr_loss(features, targets, rows, beta, model.logit_scale)


def train_ctr(config: CtrConfig, model_config: ModelConfig, candidates: CandidateMatrix, dataset: Dataset,
              seed: int, pretrained: Optional[ClipModel] = None) -> Tuple[CtrModel, CtrLog]:
    """
    Train the text-line recognizer with teacher forcing and Adam.

    The candidate matrix is only read. In ``fc`` mode the classifier covers the
    classes that occur in ``dataset``.

    :param pretrained: source of the convolution blocks when ``config.init_from_pretrain`` is set.
    :raises EmptyDataset: if the dataset has no lines.
    :raises CandidateMissing: if a label class is missing from the candidates (match mode).
    """
    if not len(dataset):
        raise EmptyDataset("recognizer training needs at least one text line")
    model = CtrModel(model_config, config, candidates, rng_for(seed, "init"), output_classes=dataset.classes())
    if config.init_from_pretrain:
        if pretrained is None:
            raise CtrError("init_from_pretrain needs a pre-trained image encoder")
        model.init_from_pretrain(pretrained)
    for label in dataset.labels:
        for class_id in label:
            model.output_index(class_id)
    optimizer = Adam(model.parameters(), lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps)
    shuffle = rng_for(seed, "shuffle")
    log = CtrLog()
    logger.debug(f"model has {model.parameter_count()} weights")
    logger.info(f"training {config.head_mode.value} head on {len(dataset)} lines over "
                f"{len(dataset.classes())} classes, beta={config.beta}")
    for epoch in range(1, config.epochs + 1):
        order = shuffle.permutation(len(dataset))
        total, steps = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            loss = batch_loss(model, dataset.images[batch], [dataset.labels[i] for i in batch], config.beta)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item()
            steps += 1
        log.epochs.append(CtrEpoch(epoch, total / steps))
        logger.info(f"epoch {epoch}: loss={total / steps:.4f}")
    return model, log
