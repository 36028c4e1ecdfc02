from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np
from PIL import Image, ImageDraw

import conf
from glyph_forge.exceptions import GlyphError, MissingBitmap
from ids_core import Lexicon, UnknownRadical

SUPERSAMPLE = 4
NOMINAL_STROKE_WIDTH = 1.5
MIN_RADICAL_PIXELS = 8

Point = Tuple[float, float]


def _stroke_paths() -> List[List[Point]]:
    """
    Unit-square polylines (x right, y down) for every stroke instance, in the
    order of the stroke inventory: heng, shu, pie, dian, zhe.
    """
    paths: List[List[Point]] = []
    instances = conf.STROKE_INSTANCES
    for i in range(instances):
        y = 0.2 + 0.6 * i / max(instances - 1, 1)
        paths.append([(0.15, y), (0.85, y)])
    for i in range(instances):
        x = 0.2 + 0.6 * i / max(instances - 1, 1)
        paths.append([(x, 0.15), (x, 0.85)])
    for i in range(instances):
        shift = (i - (instances - 1) / 2) * 0.15
        paths.append([(0.75 + shift, 0.15), (0.25 + shift, 0.85)])
    for i in range(instances):
        cx, cy = (0.3 + 0.4 * (i % 2), 0.3 + 0.4 * ((i // 2) % 2))
        paths.append([(cx - 0.1, cy - 0.1), (cx + 0.1, cy + 0.1)])
    for i in range(instances):
        top = 0.15 + 0.12 * i
        right = 0.8 - 0.1 * i
        paths.append([(0.2, top), (right, top), (right, 0.85)])
    return paths


STROKE_PATHS = _stroke_paths()


@lru_cache(maxsize=4096)
def stroke_bitmap(strokes: Tuple[int, ...], thickness: float = 1.0, size: int = conf.RADICAL_SIZE) -> np.ndarray:
    """
    Rasterize the union of ``strokes`` into a ``size``×``size`` grayscale bitmap.

    Drawing happens on a supersampled canvas which is box-filtered down, so stroke
    edges are anti-aliased. The returned array is read-only and shared by the cache.
    """
    big = size * SUPERSAMPLE
    canvas = Image.new("L", (big, big), 0)
    draw = ImageDraw.Draw(canvas)
    width = max(1, int(round(thickness * NOMINAL_STROKE_WIDTH * SUPERSAMPLE)))
    for stroke in strokes:
        points = [(x * (big - 1), y * (big - 1)) for x, y in STROKE_PATHS[stroke]]
        draw.line(points, fill=255, width=width, joint="curve")
    small = canvas.resize((size, size), Image.Resampling.BOX)
    pixels = np.asarray(small, dtype=np.float32) / 255.0
    pixels.setflags(write=False)
    return pixels


def resize(pixels: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of a float bitmap to ``height``×``width``."""
    if pixels.shape == (height, width):
        return np.array(pixels, dtype=np.float32)
    image = Image.fromarray(np.ascontiguousarray(pixels, dtype=np.float32))
    return np.asarray(image.resize((width, height), Image.Resampling.BILINEAR), dtype=np.float32)


class RadicalAtlas:
    """Radical primitive bitmaps for one lexicon's radical inventory."""

    def __init__(self, lex: Lexicon):
        self.lex = lex

    def bitmap(self, radical: int, thickness: float = 1.0) -> np.ndarray:
        """
        :raises MissingBitmap: if the radical has no stroke decomposition to draw.
        """
        try:
            strokes = self.lex.strokes_of(radical)
        except UnknownRadical as e:
            raise MissingBitmap(str(e)) from e
        # thickness is quantized so the bitmap cache stays small
        return stroke_bitmap(tuple(strokes), round(float(thickness) * 20) / 20)

    def validate(self) -> Dict[int, np.ndarray]:
        """
        Check the inventory: every radical has at least eight lit pixels and no two
        radicals share a bitmap.

        :raises GlyphError: naming the offending radicals.
        """
        bitmaps = {radical: self.bitmap(radical) for radical in range(self.lex.n_radicals)}
        owners: Dict[bytes, int] = {}
        for radical, pixels in bitmaps.items():
            name = self.lex.radical_names[radical]
            if np.count_nonzero(pixels) < MIN_RADICAL_PIXELS:
                raise GlyphError(f"radical {name!r} draws only {np.count_nonzero(pixels)} pixels")
            key = pixels.tobytes()
            if key in owners:
                raise GlyphError(f"radicals {self.lex.radical_names[owners[key]]!r} and {name!r} "
                                 f"have identical bitmaps")
            owners[key] = radical
        return bitmaps
