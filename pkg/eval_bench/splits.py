import logging
from typing import List, Tuple

from eval_bench.exceptions import DegenerateSplit, SplitOverflow
from ids_core import Lexicon, leaves, radical_frequencies
from models import SplitKind, SplitSpec

logger = logging.getLogger(__name__)

Split = Tuple[List[int], List[int]]


def make_char_zero_shot_split(lex: Lexicon, m: int, k: int) -> Split:
    """Train on the first ``m`` classes, test on the last ``k``."""
    total = lex.n_classes
    if m < 1 or k < 1:
        raise SplitOverflow("m and k must be at least 1")
    if m + k > total:
        raise SplitOverflow(f"m + k = {m + k} exceeds the {total} classes of the lexicon")
    train, test = list(range(m)), list(range(total - k, total))
    logger.info(f"character zero-shot split: {len(train)} train classes, {len(test)} test classes")
    return train, test


def make_radical_zero_shot_split(lex: Lexicon, n: int) -> Split:
    """
    Test classes are those containing at least one radical that appears in fewer
    than ``n`` classes of the whole lexicon; the rest train.

    :raises DegenerateSplit: if either side is empty.
    """
    if n < 1:
        raise DegenerateSplit("n must be at least 1")
    frequencies = radical_frequencies(lex)
    rare = {radical for radical, count in frequencies.items() if count < n}
    test = [c for c in lex.class_ids if rare.intersection(leaves(lex.tree(c)))]
    held_out = set(test)
    train = [c for c in lex.class_ids if c not in held_out]
    if not test or not train:
        raise DegenerateSplit(f"radical zero-shot split with n={n} leaves {len(train)} train "
                              f"and {len(test)} test classes")
    logger.info(f"radical zero-shot split (n={n}): {len(rare)} rare radicals, "
                f"{len(train)} train classes, {len(test)} test classes")
    return train, test


def split_classes(lex: Lexicon, spec: SplitSpec) -> Split:
    """Dispatch on the split kind; ``full`` trains and tests on every class."""
    if spec.kind == SplitKind.char_zero_shot:
        return make_char_zero_shot_split(lex, spec.m, spec.k)
    if spec.kind == SplitKind.radical_zero_shot:
        return make_radical_zero_shot_split(lex, spec.n)
    return list(lex.class_ids), list(lex.class_ids)
