from pathlib import Path
from typing import List, Optional

import typer

import conf
from app.commands.shared import dataset, lexicon_for, resolve_config
from app.config import save_config
from app.utils import RunDirectory, handle_errors, require_seed
from eval_bench.pipeline import pretrain_stage


@handle_errors
def pretrain(out: Path = typer.Option(..., help="Run directory."),
             seed: Optional[int] = typer.Option(None, help="Run seed (required)."),
             config: Optional[Path] = typer.Option(None, help="key=value config file."),
             overrides: List[str] = typer.Option([], "--set", help="Override a config key, e.g. pretrain.lambda=0."),
             lexicon: Optional[Path] = typer.Option(None, help="Lexicon directory."),
             train: Optional[Path] = typer.Option(None, help="Glyph training dataset.")):
    """Pre-train the image and text encoders on the training classes of the split."""
    resolved = resolve_config(config, overrides, require_seed(seed), lexicon_dir=lexicon, glyph_train=train)
    lex = lexicon_for(resolved)
    glyphs = dataset(resolved.data.glyph_train, "glyph training dataset")
    with RunDirectory(out, "pretrain") as run:
        run.manifest.config_hash = save_config(resolved, run.output(conf.CONFIG_FILE))
        run.manifest.lexicon_hash = lex.digest()
        model, log = pretrain_stage(resolved, lex, glyphs, resolved.seed)
        model.save(run.checkpoint(conf.CHECKPOINT_FILE))
        log.save(run.report(conf.TRAIN_LOG_FILE))
    typer.echo(f"encoders written to {out / conf.CHECKPOINT_FILE}")
