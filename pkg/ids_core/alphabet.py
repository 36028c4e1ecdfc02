from typing import List, Sequence, Tuple

from ids_core.exceptions import UnknownToken
from ids_core.lexicon import Lexicon
from ids_core.tree import ClassToken, Radical, Special, Stroke, StructureOp, Token

_OPS = tuple(StructureOp)
_SPECIALS = (Special.END, Special.PAD, Special.BOS)


class TokenAlphabet:
    """
    Integer vocabulary shared by all decomposition levels.

    Layout: structure operators, then radicals, then strokes, then class tokens,
    then END, PAD, BOS. Operators keep ids 0..4 regardless of inventory size.
    Stroke ids sit between radicals and classes, so class tokens start at
    ``5 + n_radicals + n_strokes`` even at levels that never emit a stroke.
    """

    def __init__(self, n_radicals: int, n_strokes: int, n_classes: int):
        self.n_radicals = n_radicals
        self.n_strokes = n_strokes
        self.n_classes = n_classes
        self.radical_offset = len(_OPS)
        self.stroke_offset = self.radical_offset + n_radicals
        self.class_offset = self.stroke_offset + n_strokes
        self.special_offset = self.class_offset + n_classes

    @classmethod
    def from_lexicon(cls, lex: Lexicon) -> "TokenAlphabet":
        return cls(lex.n_radicals, lex.n_strokes, lex.n_classes)

    @property
    def size(self) -> int:
        return self.special_offset + len(_SPECIALS)

    @property
    def end_id(self) -> int:
        return self.special_offset + _SPECIALS.index(Special.END)

    @property
    def pad_id(self) -> int:
        return self.special_offset + _SPECIALS.index(Special.PAD)

    @property
    def bos_id(self) -> int:
        return self.special_offset + _SPECIALS.index(Special.BOS)

    def token_id(self, token: Token) -> int:
        if isinstance(token, StructureOp):
            return _OPS.index(token)
        if isinstance(token, Special):
            return self.special_offset + _SPECIALS.index(token)
        if isinstance(token, Radical) and 0 <= token.id < self.n_radicals:
            return self.radical_offset + token.id
        if isinstance(token, Stroke) and 0 <= token.id < self.n_strokes:
            return self.stroke_offset + token.id
        if isinstance(token, ClassToken) and 0 <= token.id < self.n_classes:
            return self.class_offset + token.id
        raise UnknownToken(f"token {token!r} is not in the alphabet")

    def encode(self, tokens: Sequence[Token]) -> List[int]:
        return [self.token_id(token) for token in tokens]

    def decode(self, ids: Sequence[int]) -> Tuple[Token, ...]:
        tokens = []
        for value in ids:
            if not 0 <= value < self.size:
                raise UnknownToken(f"token id {value} is outside the alphabet of size {self.size}")
            if value < self.radical_offset:
                tokens.append(_OPS[value])
            elif value < self.stroke_offset:
                tokens.append(Radical(value - self.radical_offset))
            elif value < self.class_offset:
                tokens.append(Stroke(value - self.stroke_offset))
            elif value < self.special_offset:
                tokens.append(ClassToken(value - self.class_offset))
            else:
                tokens.append(_SPECIALS[value - self.special_offset])
        return tuple(tokens)
