import functools
import logging
import os
import time
from pathlib import Path
from typing import Callable, Optional, Union

import orjson
import typer
from pydantic import ValidationError

import conf
from app.exceptions import AppError, MissingInput, RunLocked
from clip_align import ClipError
from ctr_recognizer import CtrError
from eval_bench import EvalError
from glyph_forge import GlyphError
from ids_core import IdsError
from models import RunManifest
from tensor_substrate import TensorError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

HANDLED_ERRORS = (AppError, IdsError, GlyphError, TensorError, ClipError, CtrError, EvalError, ValidationError)


def handle_errors(command: Callable) -> Callable:
    """
    Map package errors raised by a command to a one-line diagnostic on stderr
    and exit code 1.
    """
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except HANDLED_ERRORS as e:
            logger.debug("command failed", exc_info=True)
            typer.echo(f"error: {type(e).__name__}: {e}", err=True)
            raise typer.Exit(code=1) from e
    return wrapper


def require_path(path: Optional[PathLike], what: str) -> Path:
    if path is None:
        raise MissingInput(f"no {what} given")
    path = Path(path)
    if not path.exists():
        raise MissingInput(f"{what} {path} does not exist")
    return path


def require_seed(seed: Optional[int]) -> int:
    if seed is None:
        raise MissingInput("--seed is required for training commands")
    return seed


class RunDirectory:
    """
    Output directory of one command, owned through a lock file for as long as
    the command runs. On a clean exit the manifest is written.
    """

    def __init__(self, path: PathLike, command: str):
        self.path = Path(path)
        self.manifest = RunManifest(command=command)
        self._lock = self.path / conf.LOCK_FILE
        self._started = 0.0

    def __enter__(self) -> "RunDirectory":
        self.path.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self._lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as e:
            raise RunLocked(f"{self.path} is in use by another process ({self._lock} exists)") from e
        with os.fdopen(fd, "w") as f:
            f.write(str(os.getpid()))
        self._started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        try:
            if exc_type is None:
                self.manifest.wall_clock_seconds = time.perf_counter() - self._started
                write_manifest(self.path, self.manifest)
        finally:
            self._lock.unlink(missing_ok=True)

    def file(self, name: str) -> Path:
        return self.path / name

    def checkpoint(self, name: str) -> Path:
        self.manifest.checkpoints.append(name)
        return self.file(name)

    def report(self, name: str) -> Path:
        self.manifest.reports.append(name)
        return self.file(name)

    def output(self, name: str) -> Path:
        self.manifest.outputs.append(name)
        return self.file(name)


def write_manifest(directory: PathLike, manifest: RunManifest) -> Path:
    """
    :raises MissingInput: if the manifest names a file that does not exist.
    """
    directory = Path(directory)
    for name in manifest.checkpoints + manifest.reports + manifest.outputs:
        if not (directory / name).exists():
            raise MissingInput(f"manifest references {name}, which was not written")
    path = directory / conf.RUN_MANIFEST_FILE
    path.write_bytes(orjson.dumps(manifest.model_dump(), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    return path


def read_manifest(directory: PathLike) -> RunManifest:
    path = require_path(Path(directory) / conf.RUN_MANIFEST_FILE, "run manifest")
    return RunManifest.model_validate(orjson.loads(path.read_bytes()))
