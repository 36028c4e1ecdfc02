import logging
from collections import Counter, defaultdict
from typing import Dict, Iterable, List, Optional, Tuple

from ids_core.lexicon import Lexicon
from ids_core.tree import ClassToken, IdsTree, Special, Stroke, Token, leaves, serialize_ids
from models import DecompositionLevel

logger = logging.getLogger(__name__)


def expand_strokes(tree: IdsTree, lex: Lexicon) -> List[int]:
    """
    Flatten a radical tree to its stroke sequence: the stroke lists of the leaves
    concatenated in left-to-right leaf order. Structure operators contribute no
    strokes.

    :raises UnknownRadical: if a leaf radical has no stroke decomposition.
    """
    strokes: List[int] = []
    for radical in leaves(tree):
        strokes.extend(lex.strokes_of(radical))
    return strokes


def tokens_for_level(class_id: int, lex: Lexicon, level: DecompositionLevel) -> Tuple[Token, ...]:
    """
    Token sequence describing ``class_id`` at the requested decomposition level,
    always terminated by END.

    :raises UnknownClass: if the class is not in the lexicon.
    """
    tree = lex.tree(class_id)
    level = DecompositionLevel(level)
    if level == DecompositionLevel.character:
        return ClassToken(class_id), Special.END
    if level == DecompositionLevel.radical:
        return serialize_ids(tree)
    return tuple(Stroke(stroke) for stroke in expand_strokes(tree, lex)) + (Special.END,)


def radical_frequencies(lex: Lexicon, class_subset: Optional[Iterable[int]] = None) -> Dict[int, int]:
    """
    For every radical, the number of classes in ``class_subset`` whose tree
    contains it. A class counts once per radical however many times the radical
    occurs in its tree.
    """
    classes = lex.class_ids if class_subset is None else class_subset
    counts: Counter = Counter()
    for class_id in classes:
        counts.update(set(leaves(lex.tree(class_id))))
    return dict(counts)


def stroke_collisions(lex: Lexicon) -> Dict[Tuple[int, ...], List[int]]:
    """Stroke sequences shared by more than one class, mapped to the sharing class ids."""
    groups: Dict[Tuple[int, ...], List[int]] = defaultdict(list)
    for entry in lex.entries:
        groups[tuple(expand_strokes(entry.tree, lex))].append(entry.class_id)
    collisions = {strokes: classes for strokes, classes in groups.items() if len(classes) > 1}
    for strokes, classes in collisions.items():
        logger.warning(f"classes {classes} share stroke sequence "
                       f"{' '.join(lex.stroke_names[s] for s in strokes)}; class {min(classes)} wins")
    return collisions


def resolve_strokes(lex: Lexicon, strokes: Iterable[int]) -> Optional[int]:
    """Class owning a stroke sequence; collisions resolve to the lowest class id."""
    target = tuple(strokes)
    for entry in lex.entries:
        if tuple(expand_strokes(entry.tree, lex)) == target:
            return entry.class_id
    return None
