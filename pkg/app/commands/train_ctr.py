from pathlib import Path
from typing import List, Optional

import typer

import conf
from app.commands.shared import clip_model, dataset, lexicon_for, resolve_config
from app.config import save_config
from app.utils import RunDirectory, handle_errors, require_path, require_seed
from clip_align import CandidateMatrix
from eval_bench.pipeline import ctr_stage


@handle_errors
def train_ctr(out: Path = typer.Option(..., help="Run directory."),
              candidates: Path = typer.Option(..., help="Candidate matrix (candidates.tsv)."),
              seed: Optional[int] = typer.Option(None, help="Run seed (required)."),
              config: Optional[Path] = typer.Option(None, help="key=value config file."),
              overrides: List[str] = typer.Option([], "--set", help="Override a config key, e.g. ctr.beta=0."),
              lexicon: Optional[Path] = typer.Option(None, help="Lexicon directory."),
              train: Optional[Path] = typer.Option(None, help="Text-line training dataset."),
              pretrained: Optional[Path] = typer.Option(None, help="Pre-training run for ctr.init_from_pretrain.")):
    """Train the text-line recognizer against a frozen candidate matrix."""
    resolved = resolve_config(config, overrides, require_seed(seed), lexicon_dir=lexicon, line_train=train)
    lex = lexicon_for(resolved)
    lines = dataset(resolved.data.line_train, "text-line training dataset")
    matrix = CandidateMatrix.load(require_path(candidates, "candidate matrix"))
    clip = clip_model(pretrained)[1] if pretrained is not None else None
    with RunDirectory(out, "train-ctr") as run:
        run.manifest.config_hash = save_config(resolved, run.output(conf.CONFIG_FILE))
        run.manifest.lexicon_hash = lex.digest()
        matrix.save(run.output(conf.CANDIDATES_FILE))
        model, log = ctr_stage(resolved, lex, matrix, lines, resolved.seed, clip)
        model.save(run.checkpoint(conf.CTR_CHECKPOINT_FILE))
        log.save(run.report(conf.TRAIN_LOG_FILE))
    typer.echo(f"recognizer written to {out / conf.CTR_CHECKPOINT_FILE}")
