from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from ids_core.exceptions import MalformedIds


class StructureOp(str, Enum):
    """Layout combinators forming the internal nodes of a radical tree."""
    H2 = "H2"
    V2 = "V2"
    H3 = "H3"
    V3 = "V3"
    ENC = "ENC"

    @property
    def arity(self) -> int:
        return 3 if self in (StructureOp.H3, StructureOp.V3) else 2


class Special(str, Enum):
    END = "END"
    PAD = "PAD"
    BOS = "BOS"


@dataclass(frozen=True, order=True)
class Radical:
    id: int


@dataclass(frozen=True, order=True)
class Stroke:
    id: int


@dataclass(frozen=True, order=True)
class ClassToken:
    id: int


Token = Union[StructureOp, Radical, Stroke, ClassToken, Special]


@dataclass(frozen=True)
class Leaf:
    radical: int


@dataclass(frozen=True)
class Node:
    op: StructureOp
    children: Tuple["IdsTree", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) != self.op.arity:
            raise MalformedIds(f"{self.op.value} takes {self.op.arity} children, got {len(self.children)}")


IdsTree = Union[Leaf, Node]


def depth(tree: IdsTree) -> int:
    """Number of operator levels: a bare leaf has depth 0."""
    if isinstance(tree, Leaf):
        return 0
    return 1 + max(depth(child) for child in tree.children)


def count_nodes(tree: IdsTree) -> int:
    if isinstance(tree, Leaf):
        return 0
    return 1 + sum(count_nodes(child) for child in tree.children)


def leaves(tree: IdsTree) -> List[int]:
    """Radical ids of all leaves in left-to-right order."""
    if isinstance(tree, Leaf):
        return [tree.radical]
    return [radical for child in tree.children for radical in leaves(child)]


def parse_ids(tokens: Iterable[Token], n_radicals: Optional[int] = None) -> IdsTree:
    """
    Parse a prefix (preorder) token string, without the trailing END, into the
    unique radical tree it denotes.

    The parse is total-or-error: either every token is consumed into exactly one
    tree or :class:`MalformedIds` is raised.

    :param tokens: structure-operator and radical tokens.
    :param n_radicals: inventory size; radical ids at or beyond it are rejected.
    :return: the parsed tree.
    :raises MalformedIds: on unknown tokens, arity underflow or trailing tokens.
    """
    stack: List[Tuple[StructureOp, List[IdsTree]]] = []
    root: Optional[IdsTree] = None
    for position, token in enumerate(tokens):
        if root is not None:
            raise MalformedIds(f"trailing token {_describe(token)} at position {position}")
        if isinstance(token, StructureOp):
            stack.append((token, []))
            continue
        if not isinstance(token, Radical):
            raise MalformedIds(f"unknown token {_describe(token)} at position {position}")
        if token.id < 0 or (n_radicals is not None and token.id >= n_radicals):
            raise MalformedIds(f"radical id {token.id} outside the inventory at position {position}")
        node: IdsTree = Leaf(token.id)
        while True:
            if not stack:
                root = node
                break
            op, children = stack[-1]
            children.append(node)
            if len(children) < op.arity:
                break
            stack.pop()
            node = Node(op, tuple(children))
    if root is None:
        if stack:
            op, children = stack[-1]
            raise MalformedIds(f"{op.value} is missing {op.arity - len(children)} operand(s)")
        raise MalformedIds("empty token string")
    return root


def serialize_ids(tree: IdsTree) -> Tuple[Token, ...]:
    """Preorder token list of ``tree`` followed by a single END."""
    tokens: List[Token] = []
    pending: List[IdsTree] = [tree]
    while pending:
        current = pending.pop()
        if isinstance(current, Leaf):
            tokens.append(Radical(current.radical))
        else:
            tokens.append(current.op)
            pending.extend(reversed(current.children))
    tokens.append(Special.END)
    return tuple(tokens)


def strip_end(tokens: Sequence[Token]) -> Tuple[Token, ...]:
    """Drop the terminating END, requiring it to be the only END and the last token."""
    if not tokens or tokens[-1] != Special.END:
        raise MalformedIds("token string does not end with END")
    body = tuple(tokens[:-1])
    if Special.END in body:
        raise MalformedIds("END may only appear in final position")
    return body


def _describe(token) -> str:
    if isinstance(token, Enum):
        return token.value
    return repr(token)
