import logging
from pathlib import Path

import typer

import conf
from app.utils import RunDirectory, handle_errors, require_path
from glyph_forge import glyph_fingerprint
from ids_core import build_lexicon, load_lexicon_dir, radical_frequencies, save_lexicon, stroke_collisions

logger = logging.getLogger(__name__)

app = typer.Typer(help="Build or check a radical lexicon.", no_args_is_help=True)


@app.command("build")
@handle_errors
def build(out: Path = typer.Option(..., help="Output directory."),
          seed: int = typer.Option(..., help="Lexicon seed."),
          classes: int = typer.Option(300, min=1, help="Number of classes."),
          radicals: int = typer.Option(conf.RADICAL_COUNT, min=1, help="Radical inventory size."),
          depth: int = typer.Option(conf.MAX_TREE_DEPTH, min=1, help="Maximum tree depth."),
          distinct: bool = typer.Option(True, help="Reject classes whose noise-free glyphs coincide.")):
    """Generate a seeded random lexicon and its stroke table."""
    lex = build_lexicon(classes, radicals, depth, seed, fingerprint=glyph_fingerprint if distinct else None)
    with RunDirectory(out, "lexicon build") as run:
        run.output(conf.LEXICON_FILE)
        run.output(conf.STROKES_FILE)
        save_lexicon(lex, run.path)
        run.manifest.lexicon_hash = lex.digest()
        stroke_collisions(lex)
    typer.echo(f"{lex.n_classes} classes over {lex.n_radicals} radicals written to {out}")


@app.command("lint")
@handle_errors
def lint(lexicon: Path = typer.Argument(..., help="Lexicon directory.")):
    """Validate a lexicon and report rare radicals and stroke-level collisions."""
    lex = load_lexicon_dir(require_path(lexicon, "lexicon directory"))
    frequencies = radical_frequencies(lex)
    unused = [lex.radical_names[r] for r in range(lex.n_radicals) if r not in frequencies]
    collisions = stroke_collisions(lex)
    typer.echo(f"{lex.n_classes} classes, {lex.n_radicals} radicals, digest {lex.digest()}")
    if unused:
        typer.echo(f"unused radicals: {' '.join(unused)}")
    typer.echo(f"stroke-level collisions: {len(collisions)}")
