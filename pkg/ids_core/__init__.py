from ids_core.alphabet import TokenAlphabet
from ids_core.decompose import (expand_strokes, radical_frequencies, resolve_strokes, stroke_collisions,
                                tokens_for_level)
from ids_core.exceptions import IdsError, LexiconError, MalformedIds, UnknownClass, UnknownRadical, UnknownToken
from ids_core.generate import build_lexicon, random_tree
from ids_core.lexicon import Lexicon, LexiconEntry, load_lexicon, load_lexicon_dir, save_lexicon
from ids_core.tree import (ClassToken, IdsTree, Leaf, Node, Radical, Special, Stroke, StructureOp, Token,
                           count_nodes, depth, leaves, parse_ids, serialize_ids, strip_end)
