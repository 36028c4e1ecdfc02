import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np

from clip_align.exceptions import EmptyDataset
from clip_align.losses import pretrain_loss
from clip_align.model import ClipModel
from glyph_forge import Dataset
from ids_core import Lexicon
from models import ModelConfig, PretrainConfig
from seeding import rng_for
from tensor_substrate import Adam

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PretrainEpoch:
    epoch: int
    l_t: float
    l_i: float
    l_pre: float


@dataclass
class PretrainLog:
    epochs: List[PretrainEpoch] = field(default_factory=list)

    def append(self, row: PretrainEpoch):
        self.epochs.append(row)

    def to_tsv(self) -> str:
        lines = ["epoch\tL_T\tL_I\tL_pre"]
        lines += [f"{r.epoch}\t{r.l_t!r}\t{r.l_i!r}\t{r.l_pre!r}" for r in self.epochs]
        return "\n".join(lines) + "\n"

    def save(self, path: Union[str, Path]):
        Path(path).write_text(self.to_tsv(), encoding="utf-8")


def class_batches(labels: List[int], batch_size: int, lam: float, rng: np.random.Generator) -> Iterator[List[int]]:
    """
    Sample indices for one epoch: every class is visited once in shuffled order.

    With ``lam > 0`` each batch takes ``batch_size // 2`` classes and two
    different samples of each (one if the class has a single sample) so that the
    image-image loss has positives; otherwise one sample per class.
    """
    by_class: Dict[int, List[int]] = defaultdict(list)
    for index, label in enumerate(labels):
        by_class[label].append(index)
    classes = sorted(by_class)
    order = [classes[i] for i in rng.permutation(len(classes))]
    per_sample = 2 if lam > 0 else 1
    per_batch = max(1, batch_size // per_sample)
    for start in range(0, len(order), per_batch):
        batch: List[int] = []
        for class_id in order[start:start + per_batch]:
            pool = by_class[class_id]
            take = min(per_sample, len(pool))
            batch.extend(int(i) for i in rng.choice(pool, size=take, replace=False))
        yield batch


def pretrain(config: PretrainConfig, model_config: ModelConfig, lex: Lexicon, dataset: Dataset, seed: int,
             model: ClipModel = None) -> Tuple[ClipModel, PretrainLog]:
    """
    Train the image and text encoders with ``L_T + lambda * L_I`` using Adam.

    Initialization and batch shuffling use the named sub-seeds ``init`` and
    ``shuffle`` of ``seed``, so the same inputs always give the same weights.

    :param config: loss weight, optimizer and schedule settings.
    :param model_config: encoder sizes.
    :param lex: lexicon describing every class in ``dataset``.
    :param dataset: glyph dataset (one class label per sample).
    :param seed: run seed.
    :param model: continue training this model instead of a fresh one.
    :return: ``(model, log)``.
    :raises EmptyDataset: if the dataset has no samples.
    :raises UnknownClass: if a dataset class is missing from the lexicon.
    """
    if not len(dataset):
        raise EmptyDataset("pre-training needs at least one sample")
    labels = dataset.class_labels
    for class_id in set(labels):
        lex.entry(class_id)
    model = model or ClipModel.create(model_config, lex, config.level, seed)
    tokens = {class_id: model.class_tokens(lex, [class_id])[0] for class_id in set(labels)}
    optimizer = Adam(model.parameters(), lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps)
    shuffle = rng_for(seed, "shuffle")
    log = PretrainLog()
    logger.debug(f"model has {model.parameter_count()} weights")
    logger.info(f"pre-training on {len(dataset)} images of {len(tokens)} classes, "
                f"lambda={config.lam}, level={config.level.value}")
    for epoch in range(1, config.epochs + 1):
        totals = np.zeros(3)
        steps = 0
        for batch in class_batches(labels, config.batch_size, config.lam, shuffle):
            batch_labels = [labels[i] for i in batch]
            image_emb = model.encode_images(dataset.images[batch])
            text_emb = model.encode_tokens([tokens[label] for label in batch_labels])
            total, l_t, l_i = pretrain_loss(image_emb, text_emb, batch_labels, config.lam, config.logit_scale)
            optimizer.zero_grad()
            total.backward()
            optimizer.step()
            totals += (l_t.item(), l_i.item(), total.item())
            steps += 1
        row = PretrainEpoch(epoch, *(float(v) for v in totals / steps))
        log.append(row)
        logger.info(f"epoch {epoch}: L_T={row.l_t:.4f} L_I={row.l_i:.4f} L_pre={row.l_pre:.4f}")
    return model, log
