import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import conf
from ids_core.exceptions import LexiconError, MalformedIds, UnknownClass, UnknownRadical, UnknownToken
from ids_core.tree import (ClassToken, IdsTree, Radical, Special, Stroke, StructureOp, Token, depth,
                           leaves, parse_ids, serialize_ids)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def default_stroke_names() -> Tuple[str, ...]:
    """Five stroke categories, each with ``STROKE_INSTANCES`` positional instances."""
    return tuple(f"{category}{index + 1}"
                 for category in conf.STROKE_CATEGORIES
                 for index in range(conf.STROKE_INSTANCES))


def default_radical_names(count: int) -> Tuple[str, ...]:
    if count <= 26:
        return tuple(chr(ord("a") + index) for index in range(count))
    return tuple(f"r{index:03d}" for index in range(count))


@dataclass(frozen=True)
class LexiconEntry:
    class_id: int
    name: str
    tree: IdsTree


@dataclass(frozen=True)
class Lexicon:
    """
    Immutable class inventory: one radical tree per class plus the radical to
    stroke decomposition table.

    Construction validates the whole lexicon: contiguous class ids, trees within
    the radical inventory and depth limit, no two classes sharing an IDS, and
    radical and stroke names that parse back to exactly one token.
    """
    radical_names: Tuple[str, ...]
    entries: Tuple[LexiconEntry, ...]
    radical_strokes: Mapping[int, Tuple[int, ...]]
    stroke_names: Tuple[str, ...] = field(default_factory=default_stroke_names)
    max_depth: int = conf.MAX_TREE_DEPTH

    def __post_init__(self):
        object.__setattr__(self, "radical_names", tuple(self.radical_names))
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "radical_strokes",
                           {int(key): tuple(value) for key, value in self.radical_strokes.items()})
        if len(set(self.radical_names)) != len(self.radical_names):
            raise LexiconError("radical names must be unique")
        reserved = {op.value for op in StructureOp} | {special.value for special in Special}
        clashes = reserved.intersection(self.radical_names) | reserved.intersection(self.stroke_names)
        if clashes:
            raise LexiconError(f"reserved token names used in the inventory: {sorted(clashes)}")
        if len(set(self.stroke_names)) != len(self.stroke_names):
            raise LexiconError("stroke names must be unique")
        shared = set(self.radical_names).intersection(self.stroke_names)
        if shared:
            raise LexiconError(f"names used for both a radical and a stroke: {sorted(shared)}")
        # "#n" is the text form of class tokens
        hashed = [name for name in self.radical_names + tuple(self.stroke_names) if name.startswith("#")]
        if hashed:
            raise LexiconError(f"inventory names may not start with '#': {hashed}")
        for radical, strokes in self.radical_strokes.items():
            if not 0 <= radical < len(self.radical_names):
                raise LexiconError(f"stroke table names unknown radical id {radical}")
            bad = [stroke for stroke in strokes if not 0 <= stroke < len(self.stroke_names)]
            if bad:
                raise LexiconError(f"stroke table row for {self.radical_names[radical]!r} has unknown strokes {bad}")
        seen: Dict[Tuple[Token, ...], int] = {}
        for position, entry in enumerate(self.entries):
            if entry.class_id != position:
                raise LexiconError(f"row {position + 1}: class ids must be contiguous from 0, got {entry.class_id}")
            self._check_tree(position, entry.tree)
            key = serialize_ids(entry.tree)
            if key in seen:
                raise LexiconError(f"row {position + 1}: class {entry.class_id} duplicates the IDS of class {seen[key]}")
            seen[key] = entry.class_id

    def _check_tree(self, position: int, tree: IdsTree):
        if depth(tree) > self.max_depth:
            raise LexiconError(f"row {position + 1}: tree depth {depth(tree)} exceeds {self.max_depth}")
        for radical in leaves(tree):
            if not 0 <= radical < len(self.radical_names):
                raise LexiconError(f"row {position + 1}: radical id {radical} outside the inventory")

    @property
    def n_classes(self) -> int:
        return len(self.entries)

    @property
    def n_radicals(self) -> int:
        return len(self.radical_names)

    @property
    def n_strokes(self) -> int:
        return len(self.stroke_names)

    @property
    def class_ids(self) -> List[int]:
        return [entry.class_id for entry in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, class_id: int) -> LexiconEntry:
        if not 0 <= class_id < len(self.entries):
            raise UnknownClass(f"class {class_id} is not in the lexicon ({len(self.entries)} classes)")
        return self.entries[class_id]

    def tree(self, class_id: int) -> IdsTree:
        return self.entry(class_id).tree

    def name(self, class_id: int) -> str:
        return self.entry(class_id).name

    def strokes_of(self, radical: int) -> Tuple[int, ...]:
        try:
            return self.radical_strokes[radical]
        except KeyError:
            name = self.radical_names[radical] if 0 <= radical < self.n_radicals else str(radical)
            raise UnknownRadical(f"radical {name!r} has no stroke decomposition") from None

    def parse_token(self, text: str) -> Token:
        """Map a token's text form (as written in the lexicon files) to a token."""
        if text in StructureOp.__members__:
            return StructureOp(text)
        if text in Special.__members__:
            return Special(text)
        if text in self._radical_index:
            return Radical(self._radical_index[text])
        if text in self._stroke_index:
            return Stroke(self._stroke_index[text])
        if text.startswith("#") and text[1:].isdigit():
            return ClassToken(int(text[1:]))
        raise UnknownToken(f"unknown token {text!r}")

    def format_token(self, token: Token) -> str:
        if isinstance(token, (StructureOp, Special)):
            return token.value
        if isinstance(token, Radical):
            return self.radical_names[token.id]
        if isinstance(token, Stroke):
            return self.stroke_names[token.id]
        if isinstance(token, ClassToken):
            return f"#{token.id}"
        raise UnknownToken(f"cannot format {token!r}")

    def tokenize(self, text: str) -> Tuple[Token, ...]:
        return tuple(self.parse_token(item) for item in text.split())

    def format_tokens(self, tokens: Sequence[Token]) -> str:
        return " ".join(self.format_token(token) for token in tokens)

    def parse_tree(self, text: str) -> IdsTree:
        """Parse the space-separated IDS form used in lexicon files and on the command line."""
        tokens = self.tokenize(text)
        return parse_ids(tokens, n_radicals=self.n_radicals)

    def with_class(self, name: str, tree: IdsTree) -> "Lexicon":
        """Return a new lexicon with ``tree`` appended as the next class id."""
        entry = LexiconEntry(class_id=len(self.entries), name=name, tree=tree)
        return Lexicon(radical_names=self.radical_names, entries=self.entries + (entry,),
                       radical_strokes=self.radical_strokes, stroke_names=self.stroke_names,
                       max_depth=self.max_depth)

    def digest(self) -> str:
        payload = lexicon_text(self) + "\x00" + strokes_text(self)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @property
    def _radical_index(self) -> Dict[str, int]:
        return {name: index for index, name in enumerate(self.radical_names)}

    @property
    def _stroke_index(self) -> Dict[str, int]:
        return {name: index for index, name in enumerate(self.stroke_names)}


def lexicon_text(lex: Lexicon) -> str:
    rows = []
    for entry in lex.entries:
        ids = lex.format_tokens(serialize_ids(entry.tree)[:-1])
        rows.append(f"{entry.class_id}\t{entry.name}\t{ids}\n")
    return "".join(rows)


def strokes_text(lex: Lexicon) -> str:
    rows = []
    for radical, name in enumerate(lex.radical_names):
        strokes = " ".join(lex.stroke_names[stroke] for stroke in lex.radical_strokes.get(radical, ()))
        rows.append(f"{name}\t{strokes}\n")
    return "".join(rows)


def save_lexicon(lex: Lexicon, directory: PathLike) -> Tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lexicon_path = directory / conf.LEXICON_FILE
    strokes_path = directory / conf.STROKES_FILE
    lexicon_path.write_text(lexicon_text(lex), encoding="utf-8")
    strokes_path.write_text(strokes_text(lex), encoding="utf-8")
    return lexicon_path, strokes_path


def load_strokes(path: PathLike) -> Tuple[Tuple[str, ...], Dict[int, Tuple[int, ...]]]:
    """
    Read the stroke table. Row order defines the radical inventory: the radical
    on row ``i`` gets id ``i - 1``.

    :raises LexiconError: on malformed rows, naming the row number.
    """
    stroke_index = {name: index for index, name in enumerate(default_stroke_names())}
    names: List[str] = []
    table: Dict[int, Tuple[int, ...]] = {}
    for row, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0]:
            raise LexiconError(f"{path}: row {row}: expected radical<TAB>strokes")
        name, strokes = fields
        if name in names:
            raise LexiconError(f"{path}: row {row}: radical {name!r} listed twice")
        try:
            table[len(names)] = tuple(stroke_index[item] for item in strokes.split())
        except KeyError as e:
            raise LexiconError(f"{path}: row {row}: unknown stroke {e.args[0]!r}") from e
        if not table[len(names)]:
            raise LexiconError(f"{path}: row {row}: radical {name!r} has no strokes")
        names.append(name)
    return tuple(names), table


def load_lexicon(lexicon_path: PathLike, strokes_path: PathLike) -> Lexicon:
    """
    Load and validate a lexicon from its two TSV files.

    :param lexicon_path: ``class_id<TAB>name<TAB>prefix IDS tokens`` per row.
    :param strokes_path: ``radical<TAB>stroke tokens`` per row.
    :return: the validated lexicon.
    :raises LexiconError: on the first malformed row, with its row number.
    """
    radical_names, table = load_strokes(strokes_path)
    shell = Lexicon(radical_names=radical_names, entries=(), radical_strokes=table)
    entries: List[LexiconEntry] = []
    seen: Dict[Tuple[Token, ...], int] = {}
    for row, line in enumerate(Path(lexicon_path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise LexiconError(f"{lexicon_path}: row {row}: expected class_id<TAB>name<TAB>ids")
        class_id_text, name, ids_text = fields
        if not class_id_text.isdigit() or int(class_id_text) != len(entries):
            raise LexiconError(f"{lexicon_path}: row {row}: expected class id {len(entries)}, got {class_id_text!r}")
        try:
            tree = shell.parse_tree(ids_text)
        except (MalformedIds, UnknownToken) as e:
            raise LexiconError(f"{lexicon_path}: row {row}: {e}") from e
        key = serialize_ids(tree)
        if key in seen:
            raise LexiconError(f"{lexicon_path}: row {row}: duplicate IDS {ids_text.strip()!r} "
                               f"(already used by class {seen[key]})")
        seen[key] = len(entries)
        if depth(tree) > shell.max_depth:
            raise LexiconError(f"{lexicon_path}: row {row}: tree depth {depth(tree)} exceeds {shell.max_depth}")
        entries.append(LexiconEntry(class_id=len(entries), name=name, tree=tree))
    lex = Lexicon(radical_names=radical_names, entries=tuple(entries), radical_strokes=table)
    logger.info(f"loaded lexicon with {lex.n_classes} classes over {lex.n_radicals} radicals")
    return lex


def load_lexicon_dir(directory: PathLike) -> Lexicon:
    directory = Path(directory)
    return load_lexicon(directory / conf.LEXICON_FILE, directory / conf.STROKES_FILE)
