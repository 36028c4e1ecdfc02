from pathlib import Path
from typing import Optional

import typer

import conf
from app.commands.shared import clip_model, lexicon_for
from app.utils import RunDirectory, handle_errors, require_path
from clip_align import CandidateMatrix
from ctr_recognizer import add_candidate
from ids_core import save_lexicon, tokens_for_level


@handle_errors
def add_class(candidates: Path = typer.Option(..., help="Candidate matrix to extend."),
              ids: str = typer.Option(..., help='IDS of the new class, e.g. "H2 a c".'),
              model: Path = typer.Option(..., help="Pre-training run providing the text encoder."),
              out: Path = typer.Option(..., help="Directory for the extended matrix and lexicon."),
              name: Optional[str] = typer.Option(None, help="Name of the new class."),
              lexicon: Optional[Path] = typer.Option(None, help="Lexicon directory.")):
    """
    Append a class to the candidate matrix and to a copy of the lexicon.
    No weight changes.
    """
    config, clip = clip_model(model)
    lex = lexicon_for(config, lexicon)
    matrix = CandidateMatrix.load(require_path(candidates, "candidate matrix"))
    class_id = lex.n_classes
    extended_lex = lex.with_class(name or f"c{class_id:04d}", lex.parse_tree(ids))
    extended = add_candidate(matrix, class_id, tokens_for_level(class_id, extended_lex, clip.level), clip)
    with RunDirectory(out, "add-class") as run:
        extended.save(run.output(conf.CANDIDATES_FILE))
        run.output(conf.LEXICON_FILE)
        run.output(conf.STROKES_FILE)
        save_lexicon(extended_lex, run.path)
        run.manifest.lexicon_hash = extended_lex.digest()
    typer.echo(f"class {class_id} added; {len(extended)} candidates")
