from pathlib import Path
from typing import List, Optional

import typer

import conf
from app.commands.shared import lexicon_for, resolve_config
from app.config import save_config
from app.utils import RunDirectory, handle_errors, require_seed
from eval_bench.ablation import ablation_sweep
from eval_bench.pipeline import Datasets
from glyph_forge import load_dataset
from models import AblationParam


@handle_errors
def ablate(param: AblationParam = typer.Option(..., help="Setting to vary."),
           values: Optional[str] = typer.Option(None, help="Comma-separated values; default: standard grid."),
           out: Path = typer.Option(..., help="Run directory."),
           seed: Optional[int] = typer.Option(None, help="Shared seed (required)."),
           config: Optional[Path] = typer.Option(None, help="key=value config file."),
           overrides: List[str] = typer.Option([], "--set", help="Override a config key.")):
    """One training and evaluation run per value under a shared seed; datasets come from the config."""
    resolved = resolve_config(config, overrides, require_seed(seed))
    lex = lexicon_for(resolved)
    paths = resolved.data
    data = Datasets(*(load_dataset(path) if path is not None else None
                      for path in (paths.glyph_train, paths.glyph_test, paths.line_train, paths.line_test)))
    with RunDirectory(out, "ablate") as run:
        run.manifest.config_hash = save_config(resolved, run.output(conf.CONFIG_FILE))
        run.manifest.lexicon_hash = lex.digest()
        grid = None if values is None else [v.strip() for v in values.split(",") if v.strip()]
        table = ablation_sweep(param, grid, resolved, lex, data, resolved.seed)
        table.save(run.report(conf.ABLATION_FILE))
    typer.echo(table.to_tsv(), nl=False)
