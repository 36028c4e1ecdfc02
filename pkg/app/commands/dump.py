from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
import typer

import conf
from app.commands.shared import candidates_for, clip_model, dataset, lexicon_for
from app.utils import RunDirectory, handle_errors


class EmbeddingSource(str, Enum):
    images = "images"
    candidates = "candidates"


def write_embeddings(path: Path, class_ids, labels, vectors: np.ndarray):
    """``class_id<TAB>label<TAB>floats`` per row."""
    with open(path, "w", encoding="utf-8") as f:
        for class_id, label, vector in zip(class_ids, labels, vectors):
            f.write(f"{class_id}\t{label}\t" + "\t".join(repr(float(v)) for v in vector) + "\n")


@handle_errors
def dump_embeddings(model: Path = typer.Option(..., help="Pre-training run directory."),
                    out: Path = typer.Option(..., help="Output directory."),
                    source: EmbeddingSource = typer.Option(EmbeddingSource.images, help="What to embed."),
                    data: Optional[Path] = typer.Option(None, "--dataset", help="Glyph dataset (images source)."),
                    candidates: Optional[Path] = typer.Option(None, help="Candidate matrix (candidates source)."),
                    lexicon: Optional[Path] = typer.Option(None, help="Lexicon directory.")):
    """Dump image embeddings or canonical representations for external 2-D projection."""
    config, clip = clip_model(model)
    lex = lexicon_for(config, lexicon)

    def label(class_id: int) -> str:
        return lex.name(class_id) if class_id < lex.n_classes else f"c{class_id:04d}"

    with RunDirectory(out, "dump-embeddings") as run:
        if source == EmbeddingSource.images:
            glyphs = dataset(data, "glyph dataset")
            class_ids, vectors = glyphs.class_labels, clip.embed_images(glyphs.images)
        else:
            matrix = candidates_for(model, candidates)
            class_ids, vectors = matrix.class_ids, matrix.vectors
        write_embeddings(run.output(conf.EMBEDDINGS_FILE), class_ids, [label(c) for c in class_ids], vectors)
        run.manifest.lexicon_hash = lex.digest()
    typer.echo(f"{len(class_ids)} embeddings written to {out / conf.EMBEDDINGS_FILE}")
