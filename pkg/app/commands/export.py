from pathlib import Path
from typing import Optional

import typer

import conf
from app.commands.shared import clip_model, lexicon_for
from app.utils import RunDirectory, handle_errors
from eval_bench.pipeline import candidates_stage


@handle_errors
def export_candidates(model: Path = typer.Option(..., help="Pre-training run directory."),
                      out: Path = typer.Option(..., help="Output directory."),
                      lexicon: Optional[Path] = typer.Option(None, help="Lexicon directory.")):
    """Write the canonical representation of every lexicon class."""
    config, clip = clip_model(model)
    lex = lexicon_for(config, lexicon)
    with RunDirectory(out, "export-candidates") as run:
        candidates = candidates_stage(clip, lex)
        candidates.save(run.output(conf.CANDIDATES_FILE))
        run.manifest.lexicon_hash = lex.digest()
    typer.echo(f"{len(candidates)} candidates written to {run.path / conf.CANDIDATES_FILE}")
