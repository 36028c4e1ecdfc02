import logging

import typer
from rich.console import Console
from rich.logging import RichHandler

from app.commands import ablate, add_class, dump, evaluate, export, lexicon, pretrain, synth, train_ctr
from conf import PROJECT_TITLE, PROJECT_VERSION

app = typer.Typer(
    name=PROJECT_TITLE.lower(),
    help=f"{PROJECT_TITLE} {PROJECT_VERSION}: radical-level zero-shot Chinese character and text-line recognition.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level.")):
    """
    Install a rich log handler on stderr for every command; ``--verbose``
    switches from INFO to DEBUG.
    """
    handler = RichHandler(console=Console(stderr=True), show_path=False)
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format="%(message)s",
                        handlers=[handler], force=True)


app.add_typer(lexicon.app, name="lexicon")
app.command("synth")(synth.synth)
app.command("pretrain")(pretrain.pretrain)
app.command("export-candidates")(export.export_candidates)
app.command("train-ctr")(train_ctr.train_ctr)
app.command("eval")(evaluate.evaluate)
app.command("ablate")(ablate.ablate)
app.command("dump-embeddings")(dump.dump_embeddings)
app.command("add-class")(add_class.add_class)

if __name__ == "__main__":
    app()
