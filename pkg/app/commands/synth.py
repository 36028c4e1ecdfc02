from enum import Enum
from pathlib import Path
from typing import List, Optional

import typer

import conf
from app.exceptions import ConfigError
from app.utils import RunDirectory, handle_errors, require_path
from glyph_forge import make_dataset, make_line_dataset
from ids_core import Lexicon, load_lexicon_dir
from models import DatasetRegime


class SynthKind(str, Enum):
    glyph = "glyph"
    line = "line"


def parse_classes(text: Optional[str], lex: Lexicon) -> List[int]:
    """
    ``start:stop`` ranges and single ids, comma separated; all classes when empty.

    :raises ConfigError: on malformed text.
    """
    if not text:
        return list(lex.class_ids)
    classes: List[int] = []
    try:
        for item in text.split(","):
            start, sep, stop = item.partition(":")
            classes.extend(range(int(start), int(stop)) if sep else [int(start)])
    except ValueError as e:
        raise ConfigError(f"--classes: cannot parse {text!r}; use e.g. 0:240,250") from e
    return classes


@handle_errors
def synth(lexicon: Path = typer.Option(..., help="Lexicon directory."),
          out: Path = typer.Option(..., help="Dataset directory."),
          seed: int = typer.Option(..., help="Dataset seed."),
          kind: SynthKind = typer.Option(SynthKind.glyph, help="Single glyphs or text lines."),
          classes: Optional[str] = typer.Option(None, help="Class ranges, e.g. 0:240."),
          samples_per_class: int = typer.Option(10, min=1, help="Glyphs per class."),
          lines: int = typer.Option(1000, min=1, help="Number of text lines."),
          min_len: int = typer.Option(1, min=1, help="Shortest line."),
          max_len: int = typer.Option(conf.MAX_LINE_LENGTH, min=1, help="Longest line."),
          regime: DatasetRegime = typer.Option(DatasetRegime.printed, help="Style regime."),
          threads: Optional[int] = typer.Option(None, min=1, help="Worker threads (default RADICALIGN_THREADS).")):
    """Synthesize a glyph or text-line dataset."""
    lex = load_lexicon_dir(require_path(lexicon, "lexicon directory"))
    selected = parse_classes(classes, lex)
    with RunDirectory(out, "synth") as run:
        if kind == SynthKind.glyph:
            make_dataset(lex, selected, samples_per_class, regime, seed, run.path, threads)
        else:
            make_line_dataset(lex, selected, lines, regime, seed, run.path, min_len, max_len, threads)
        run.output(conf.MANIFEST_FILE)
        run.output(conf.META_FILE)
        run.manifest.lexicon_hash = lex.digest()
    typer.echo(f"{kind.value} dataset written to {out}")
