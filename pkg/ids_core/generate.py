import logging
from typing import Callable, Dict, Hashable, Optional, Set, Tuple

import numpy as np

import conf
from ids_core.decompose import expand_strokes
from ids_core.exceptions import IdsError
from ids_core.lexicon import Lexicon, LexiconEntry, default_radical_names, default_stroke_names
from ids_core.tree import IdsTree, Leaf, Node, StructureOp, Token, serialize_ids
from seeding import rng_for

logger = logging.getLogger(__name__)

OP_WEIGHTS = {
    StructureOp.H2: 0.35,
    StructureOp.V2: 0.35,
    StructureOp.H3: 0.1,
    StructureOp.V3: 0.1,
    StructureOp.ENC: 0.1,
}
# chance that a subtree at a given depth is a bare radical
LEAF_PROBABILITY = (0.05, 0.65, 0.85)


def zipf_weights(count: int) -> np.ndarray:
    weights = 1.0 / np.arange(1, count + 1)
    return weights / weights.sum()


def random_tree(rng: np.random.Generator, n_radicals: int = conf.RADICAL_COUNT,
                max_depth: int = conf.MAX_TREE_DEPTH, radical_weights: Optional[np.ndarray] = None) -> IdsTree:
    """
    Draw a random radical tree of depth at most ``max_depth``.

    :param rng: source of randomness; the tree is a pure function of its state.
    :param n_radicals: radicals are drawn from ``range(n_radicals)``.
    :param max_depth: maximum number of operator levels.
    :param radical_weights: optional sampling weights over radicals (uniform if omitted).
    """
    ops = list(OP_WEIGHTS)
    op_probabilities = np.array([OP_WEIGHTS[op] for op in ops])

    def draw(level: int) -> IdsTree:
        leaf_probability = LEAF_PROBABILITY[min(level, len(LEAF_PROBABILITY) - 1)]
        if level >= max_depth or rng.random() < leaf_probability:
            return Leaf(int(rng.choice(n_radicals, p=radical_weights)))
        op = ops[int(rng.choice(len(ops), p=op_probabilities))]
        return Node(op, tuple(draw(level + 1) for _ in range(op.arity)))

    return draw(0)


def random_stroke_table(rng: np.random.Generator, n_radicals: int, n_strokes: int) -> Dict[int, Tuple[int, ...]]:
    """Give every radical two to four distinct strokes; no two radicals share a stroke set."""
    table: Dict[int, Tuple[int, ...]] = {}
    used: Set[frozenset] = set()
    while len(table) < n_radicals:
        size = int(rng.integers(2, 5))
        strokes = tuple(int(s) for s in rng.choice(n_strokes, size=size, replace=False))
        if frozenset(strokes) in used:
            continue
        used.add(frozenset(strokes))
        table[len(table)] = strokes
    return table


def build_lexicon(n_classes: int, n_radicals: int = conf.RADICAL_COUNT, max_depth: int = conf.MAX_TREE_DEPTH,
                  seed: int = 0, fingerprint: Optional[Callable[[Lexicon, IdsTree], Hashable]] = None,
                  max_attempts_per_class: int = 200, max_tokens: int = conf.MAX_SEQUENCE_LENGTH) -> Lexicon:
    """
    Generate a seeded random lexicon with unique IDS per class.

    Radicals are drawn with Zipf weights so that some radicals are rare, which is
    what the radical zero-shot split needs.

    :param n_classes: number of classes to generate.
    :param n_radicals: size of the radical inventory.
    :param max_depth: maximum tree depth.
    :param seed: root seed; the same seed always yields the same lexicon.
    :param fingerprint: optional rendering fingerprint; candidates whose
        fingerprint collides with an accepted class are rejected, which enforces
        pixel distinctness when the glyph renderer supplies it.
    :param max_attempts_per_class: give up after this many rejected draws per class.
    :param max_tokens: longest allowed token sequence (END included) at the radical and stroke levels.
    :raises IdsError: if the generator cannot find enough distinct classes.
    """
    rng = rng_for(seed, "lexicon")
    stroke_names = default_stroke_names()
    table = random_stroke_table(rng, n_radicals, len(stroke_names))
    shell = Lexicon(radical_names=default_radical_names(n_radicals), entries=(), radical_strokes=table,
                    stroke_names=stroke_names, max_depth=max_depth)
    weights = zipf_weights(n_radicals)
    entries = []
    seen_ids: Set[Tuple[Token, ...]] = set()
    seen_prints: Set[Hashable] = set()
    attempts = 0
    while len(entries) < n_classes:
        attempts += 1
        if attempts > max_attempts_per_class * n_classes:
            raise IdsError(f"could only generate {len(entries)} of {n_classes} distinct classes")
        tree = random_tree(rng, n_radicals, max_depth, weights)
        key = serialize_ids(tree)
        if key in seen_ids or len(key) > max_tokens or len(expand_strokes(tree, shell)) + 1 > max_tokens:
            continue
        if fingerprint is not None:
            print_key = fingerprint(shell, tree)
            if print_key in seen_prints:
                logger.debug("rejected a candidate class whose glyph collides with an accepted one")
                continue
            seen_prints.add(print_key)
        seen_ids.add(key)
        class_id = len(entries)
        entries.append(LexiconEntry(class_id=class_id, name=f"c{class_id:04d}", tree=tree))
    lex = Lexicon(radical_names=shell.radical_names, entries=tuple(entries), radical_strokes=table,
                  stroke_names=stroke_names, max_depth=max_depth)
    logger.info(f"generated lexicon with {n_classes} classes after {attempts} draws")
    return lex
