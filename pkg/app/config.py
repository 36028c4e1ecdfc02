import hashlib
import io
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from dotenv.parser import parse_stream
from pydantic import ValidationError

from app.exceptions import ConfigError
from models import RunConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def parse_pairs(text: str, source: str) -> List[Tuple[str, str, int]]:
    """
    ``key=value`` lines of a config file as ``(key, value, line number)``.
    Comments and blank lines are skipped.

    :raises ConfigError: on a malformed line, naming ``source:line``.
    """
    pairs = []
    for binding in parse_stream(io.StringIO(text)):
        if binding.error:
            raise ConfigError(f"{source}:{binding.original.line}: cannot parse "
                              f"{binding.original.string.strip()!r}")
        if binding.key is None:
            continue
        if binding.value is None:
            raise ConfigError(f"{source}:{binding.original.line}: {binding.key} has no value")
        pairs.append((binding.key, binding.value, binding.original.line))
    return pairs


def nest(pairs: Iterable[Tuple[str, str, int]], source: str) -> Tuple[Dict[str, Any], Dict[str, int]]:
    """Turn dotted keys into nested sections; also returns the line of every key."""
    tree: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for key, value, line in pairs:
        parts = key.split(".")
        node = tree
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"{source}:{line}: {key} conflicts with an earlier value")
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError(f"{source}:{line}: {key} conflicts with an earlier section")
        node[parts[-1]] = value
        lines[key] = line
    return tree, lines


def validate(tree: Dict[str, Any], lines: Dict[str, int], source: str) -> RunConfig:
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(part) for part in error["loc"])
        line = next((lines[k] for k in lines if key == k or key.startswith(k + ".")), None)
        where = f"{source}:{line}" if line is not None else source
        raise ConfigError(f"{where}: {key}: {error['msg']}") from e


def load_config(path: Optional[PathLike] = None, overrides: Iterable[str] = ()) -> RunConfig:
    """
    Resolve a run configuration from an optional ``key=value`` file and
    ``--set key=value`` overrides, which win over the file.

    :raises ConfigError: with ``file:line`` on parse or validation errors.
    """
    pairs: List[Tuple[str, str, int]] = []
    lines: Dict[str, int] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        pairs = parse_pairs(path.read_text(encoding="utf-8"), str(path))
    for number, item in enumerate(overrides, start=1):
        pairs += [(key, value, number) for key, value, _ in parse_pairs(item, f"--set #{number}")]
    tree, lines = nest(pairs, str(path) if path else "--set")
    return validate(tree, lines, str(path) if path else "--set")


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (list, tuple)):
        return ",".join(str(item) for item in value)
    return str(value)


def _flatten(prefix: str, value: Any, out: List[str]):
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else key, value[key], out)
    elif value is not None:
        out.append(f"{prefix}={_format(value)}")


def dump_config(config: RunConfig) -> str:
    """The resolved configuration in the ``key=value`` form :func:`load_config` reads."""
    data = config.model_dump(mode="json", by_alias=True)
    data["split"] = str(config.split)
    lines: List[str] = []
    _flatten("", data, lines)
    return "\n".join(lines) + "\n"


def save_config(config: RunConfig, path: PathLike) -> str:
    text = dump_config(config)
    Path(path).write_text(text, encoding="utf-8")
    return config_hash(config)


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(dump_config(config).encode("utf-8")).hexdigest()
