import logging
from pathlib import Path
from typing import Optional

import typer

import conf
from app.commands.shared import candidates_for, clip_model, ctr_model, dataset, lexicon_for
from app.exceptions import ConfigError
from app.utils import RunDirectory, handle_errors, require_path
from clip_align import export_candidates
from clip_align.evaluate import ccr_evaluate
from ctr_recognizer import write_predictions
from eval_bench import split_classes
from eval_bench.runs import ctr_evaluate, train_counts, write_report, write_samples, write_summary
from models import RunConfig, SplitSpec

logger = logging.getLogger(__name__)


def with_split(config: RunConfig, split: Optional[str]) -> RunConfig:
    if split is None:
        return config
    try:
        return config.model_copy(update={"split": SplitSpec.parse(split)})
    except ValueError as e:
        raise ConfigError(f"--split: {e}") from e


@handle_errors
def evaluate(model: Path = typer.Option(..., help="Pre-training or recognizer run directory."),
             data: Path = typer.Option(..., "--dataset", help="Glyph or text-line test dataset."),
             out: Path = typer.Option(..., help="Report directory."),
             split: Optional[str] = typer.Option(None, help="Split, e.g. char_zero_shot:m=240,k=60."),
             candidates: Optional[Path] = typer.Option(None, help="Candidate matrix replacing the run's own."),
             lexicon: Optional[Path] = typer.Option(None, help="Lexicon directory."),
             train: Optional[Path] = typer.Option(None, help="Training lines, for the few-shot buckets."),
             per_sample: bool = typer.Option(False, help="Also write a per-sample CSV.")):
    """
    Evaluate a run on a dataset. Recognizer runs are scored on text lines,
    pre-training runs on single glyphs against the candidate matrix.
    """
    model = require_path(model, "run directory")
    test = dataset(data, "test dataset")
    recognizer_run = (model / conf.CTR_CHECKPOINT_FILE).exists()
    with RunDirectory(out, "eval") as run:
        if recognizer_run:
            config, recognizer = ctr_model(model, candidates)
            config = with_split(config, split)
            lex = lexicon_for(config, lexicon)
            train_classes, _ = split_classes(lex, config.split)
            counts = train_counts(dataset(train, "training dataset").restrict(train_classes)) if train else None
            report, results = ctr_evaluate(recognizer, test, counts, seen_classes=train_classes)
            write_predictions(run.output(conf.PREDICTIONS_FILE), test.filenames, results)
            if per_sample:
                write_samples(run.output(conf.SAMPLES_FILE), test.filenames, [r.classes for r in results],
                              test.labels)
            title = f"text-line recognition on {data} ({config.split})"
        else:
            config, clip = clip_model(model)
            config = with_split(config, split)
            lex = lexicon_for(config, lexicon)
            train_classes, _ = split_classes(lex, config.split)
            if candidates is not None or (model / conf.CANDIDATES_FILE).exists():
                matrix = candidates_for(model, candidates)
            else:
                matrix = export_candidates(clip, lex)
            report, predictions = ccr_evaluate(clip, test, matrix, seen_classes=train_classes)
            with open(run.output(conf.PREDICTIONS_FILE), "w", encoding="utf-8") as f:
                for filename, prediction in zip(test.filenames, predictions):
                    f.write(f"{filename}\t{int(prediction)}\n")
            if per_sample:
                write_samples(run.output(conf.SAMPLES_FILE), test.filenames, [(int(p),) for p in predictions],
                              test.labels)
            title = f"character recognition on {data} ({config.split})"
        write_report(run.report(conf.REPORT_FILE), report)
        write_summary(run.report(conf.SUMMARY_FILE), report, title)
        run.manifest.lexicon_hash = lex.digest()
    typer.echo(f"CACC {report.cacc:.4f}" + (f" LACC {report.lacc:.4f} NED {report.ned:.4f}"
                                             if report.lacc is not None else ""))
