import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image

import conf
from glyph_forge.atlas import RadicalAtlas
from glyph_forge.compose import compose_glyph, render_line
from glyph_forge.exceptions import DatasetError
from glyph_forge.style import sample_style
from ids_core import Lexicon
from models import DatasetRegime, Regime
from seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class Dataset:
    """
    A synthesized dataset loaded into memory.

    :ivar images: float32 array of shape (N, H, W) with values in [0, 1].
    :ivar labels: per-sample class-id sequences (length 1 for glyph datasets).
    """
    root: Path
    images: np.ndarray
    labels: List[Tuple[int, ...]]
    filenames: List[str]
    meta: Dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def kind(self) -> str:
        return self.meta.get("kind", "glyph")

    @property
    def class_labels(self) -> List[int]:
        return [label[0] for label in self.labels]

    def classes(self) -> List[int]:
        return sorted({class_id for label in self.labels for class_id in label})

    def subset(self, indices: Sequence[int]) -> "Dataset":
        indices = list(indices)
        return Dataset(root=self.root, images=self.images[indices], labels=[self.labels[i] for i in indices],
                       filenames=[self.filenames[i] for i in indices], meta=dict(self.meta))

    def restrict(self, classes: Iterable[int]) -> "Dataset":
        """Samples whose every label class is in ``classes``."""
        allowed = set(classes)
        return self.subset([i for i, label in enumerate(self.labels) if allowed.issuperset(label)])


def sample_regime(regime: DatasetRegime, index: int) -> Regime:
    regime = DatasetRegime(regime)
    if regime == DatasetRegime.mixed:
        return Regime.printed if index % 2 == 0 else Regime.scribbled
    return Regime(regime.value)


def write_pgm(path: Path, pixels: np.ndarray):
    quantized = np.round(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(quantized).save(path, format="PPM")


def read_pgm(path: Path) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("L"), dtype=np.float32) / 255.0


def _run(jobs: int, work: Callable[[int], Tuple[str, Tuple[int, ...]]], threads: int) -> List[Tuple[str, Tuple[int, ...]]]:
    if threads <= 1:
        return [work(index) for index in range(jobs)]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(work, range(jobs)))


def _write_tables(out_dir: Path, rows: List[Tuple[str, Tuple[int, ...]]], meta: Dict[str, str]):
    with open(out_dir / conf.MANIFEST_FILE, "w", encoding="utf-8") as manifest:
        for filename, label in rows:
            manifest.write(f"{filename}\t{' '.join(str(c) for c in label)}\n")
    with open(out_dir / conf.META_FILE, "w", encoding="utf-8") as meta_file:
        for key, value in meta.items():
            meta_file.write(f"{key}\t{value}\n")


def make_dataset(lex: Lexicon, classes: Sequence[int], samples_per_class: int, regime: DatasetRegime, seed: int,
                 out_dir: PathLike, threads: Optional[int] = None) -> Path:
    """
    Synthesize single-character glyphs for ``classes`` and write them to ``out_dir``.

    Sample ``i`` of class ``c`` draws its style and noise from
    ``derive_seed(seed, "glyph", c, i)`` only, so the files are identical whether
    generated serially or in parallel.

    :param lex: lexicon providing the radical trees.
    :param classes: class ids to render, in manifest order.
    :param samples_per_class: images per class.
    :param regime: printed, scribbled or mixed.
    :param seed: dataset seed.
    :param out_dir: target directory (created if missing).
    :param threads: worker threads; defaults to ``RADICALIGN_THREADS``.
    :return: the dataset directory.
    :raises DatasetError: if ``classes`` is empty or ``samples_per_class`` < 1.
    """
    classes = [int(c) for c in classes]
    if not classes:
        raise DatasetError("cannot synthesize a dataset without classes")
    if samples_per_class < 1:
        raise DatasetError("samples_per_class must be at least 1")
    for class_id in classes:
        lex.entry(class_id)
    out_dir = Path(out_dir)
    (out_dir / conf.IMAGES_DIR).mkdir(parents=True, exist_ok=True)
    atlas = RadicalAtlas(lex)

    def work(index: int) -> Tuple[str, Tuple[int, ...]]:
        class_id, sample = classes[index // samples_per_class], index % samples_per_class
        sample_seed = derive_seed(seed, "glyph", class_id, sample)
        style = sample_style(sample_regime(regime, sample), rng_for(sample_seed, "style"))
        glyph = compose_glyph(lex.tree(class_id), atlas, style, derive_seed(sample_seed, "render"), class_id)
        filename = f"{conf.IMAGES_DIR}/{class_id:05d}_{sample:04d}.pgm"
        write_pgm(out_dir / filename, glyph.pixels)
        return filename, (class_id,)

    rows = _run(len(classes) * samples_per_class, work, conf.SYNTH_THREADS if threads is None else threads)
    _write_tables(out_dir, rows, {
        "kind": "glyph",
        "seed": str(seed),
        "regime": DatasetRegime(regime).value,
        "lexicon_hash": lex.digest(),
        "samples": str(len(rows)),
    })
    logger.info(f"wrote {len(rows)} glyphs for {len(classes)} classes to {out_dir}")
    return out_dir


def make_line_dataset(lex: Lexicon, classes: Sequence[int], n_lines: int, regime: DatasetRegime, seed: int,
                      out_dir: PathLike, min_len: int = 1, max_len: int = conf.MAX_LINE_LENGTH,
                      threads: Optional[int] = None) -> Path:
    """
    Synthesize text lines whose characters are drawn uniformly from ``classes``.

    Line ``i`` takes its length, characters, style and jitter from
    ``derive_seed(seed, "line", i)``.
    """
    classes = [int(c) for c in classes]
    if not classes:
        raise DatasetError("cannot synthesize a dataset without classes")
    if n_lines < 1:
        raise DatasetError("n_lines must be at least 1")
    if not 1 <= min_len <= max_len <= conf.MAX_LINE_LENGTH:
        raise DatasetError(f"line lengths must satisfy 1 <= min_len <= max_len <= {conf.MAX_LINE_LENGTH}")
    for class_id in classes:
        lex.entry(class_id)
    out_dir = Path(out_dir)
    (out_dir / conf.IMAGES_DIR).mkdir(parents=True, exist_ok=True)
    atlas = RadicalAtlas(lex)

    def work(index: int) -> Tuple[str, Tuple[int, ...]]:
        line_seed = derive_seed(seed, "line", index)
        rng = rng_for(line_seed, "content")
        length = int(rng.integers(min_len, max_len + 1))
        label = tuple(int(classes[i]) for i in rng.integers(0, len(classes), size=length))
        style = sample_style(sample_regime(regime, index), rng_for(line_seed, "style"))
        line = render_line(label, lex, style, derive_seed(line_seed, "render"), atlas)
        filename = f"{conf.IMAGES_DIR}/line_{index:06d}.pgm"
        write_pgm(out_dir / filename, line.pixels)
        return filename, label

    rows = _run(n_lines, work, conf.SYNTH_THREADS if threads is None else threads)
    _write_tables(out_dir, rows, {
        "kind": "line",
        "seed": str(seed),
        "regime": DatasetRegime(regime).value,
        "lexicon_hash": lex.digest(),
        "samples": str(len(rows)),
    })
    logger.info(f"wrote {len(rows)} text lines over {len(classes)} classes to {out_dir}")
    return out_dir


def read_meta(root: PathLike) -> Dict[str, str]:
    path = Path(root) / conf.META_FILE
    if not path.exists():
        raise DatasetError(f"{root} is not a dataset directory (no {conf.META_FILE})")
    meta = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition("\t")
        meta[key] = value
    return meta


def read_manifest(root: PathLike) -> List[Tuple[str, Tuple[int, ...]]]:
    path = Path(root) / conf.MANIFEST_FILE
    if not path.exists():
        raise DatasetError(f"{root} has no {conf.MANIFEST_FILE}")
    rows = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        filename, sep, label = line.partition("\t")
        if not sep:
            raise DatasetError(f"{path}: row {number}: expected filename<TAB>class_ids")
        try:
            rows.append((filename, tuple(int(c) for c in label.split())))
        except ValueError as e:
            raise DatasetError(f"{path}: row {number}: {e}") from e
    return rows


def load_dataset(root: PathLike) -> Dataset:
    root = Path(root)
    meta = read_meta(root)
    rows = read_manifest(root)
    if not rows:
        raise DatasetError(f"{root} contains no samples")
    images = np.stack([read_pgm(root / filename) for filename, _ in rows])
    return Dataset(root=root, images=images, labels=[label for _, label in rows],
                   filenames=[filename for filename, _ in rows], meta=meta)
