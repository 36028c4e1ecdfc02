from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

import conf
from glyph_forge.atlas import RadicalAtlas, resize
from glyph_forge.exceptions import LineTooLong
from ids_core import IdsTree, Leaf, Lexicon, StructureOp
from models import StyleParams
from seeding import derive_seed

# (top, bottom, left, right), half-open
Box = Tuple[int, int, int, int]


@dataclass(frozen=True)
class GlyphImage:
    pixels: np.ndarray
    class_id: Optional[int] = None


@dataclass(frozen=True)
class TextLineImage:
    pixels: np.ndarray
    label: Tuple[int, ...]


def _cuts(start: int, stop: int, parts: int) -> List[int]:
    span = stop - start
    return [start + (i * span + parts // 2) // parts for i in range(parts + 1)]


def enc_center(box: Box) -> Box:
    top, bottom, left, right = box
    height, width = bottom - top, right - left
    inner_h = int(round(height * conf.ENC_CENTER_FRACTION))
    inner_w = int(round(width * conf.ENC_CENTER_FRACTION))
    inner_top = top + (height - inner_h) // 2
    inner_left = left + (width - inner_w) // 2
    return inner_top, inner_top + inner_h, inner_left, inner_left + inner_w


def child_boxes(op: StructureOp, box: Box) -> List[Box]:
    """
    Regions assigned to the children of ``op`` inside ``box``.

    Binary and ternary splits tile the box exactly; ENC gives the outer child the
    whole box (later reduced to a ring) and the inner child the central 60%.
    """
    top, bottom, left, right = box
    if op == StructureOp.H2 or op == StructureOp.H3:
        cols = _cuts(left, right, op.arity)
        return [(top, bottom, cols[i], cols[i + 1]) for i in range(op.arity)]
    if op == StructureOp.V2 or op == StructureOp.V3:
        rows = _cuts(top, bottom, op.arity)
        return [(rows[i], rows[i + 1], left, right) for i in range(op.arity)]
    return [box, enc_center(box)]


def _paint(tree: IdsTree, box: Box, canvas: np.ndarray, atlas: RadicalAtlas, thickness: float):
    top, bottom, left, right = box
    if bottom <= top or right <= left:
        return
    if isinstance(tree, Leaf):
        patch = resize(atlas.bitmap(tree.radical, thickness), bottom - top, right - left)
        np.maximum(canvas[top:bottom, left:right], patch, out=canvas[top:bottom, left:right])
        return
    boxes = child_boxes(tree.op, box)
    if tree.op == StructureOp.ENC:
        ring = np.zeros_like(canvas)
        _paint(tree.children[0], boxes[0], ring, atlas, thickness)
        inner_top, inner_bottom, inner_left, inner_right = boxes[1]
        ring[inner_top:inner_bottom, inner_left:inner_right] = 0.0
        np.maximum(canvas, ring, out=canvas)
        _paint(tree.children[1], boxes[1], canvas, atlas, thickness)
        return
    for child, child_box in zip(tree.children, boxes):
        _paint(child, child_box, canvas, atlas, thickness)


def _affine(pixels: np.ndarray, style: StyleParams) -> np.ndarray:
    cos, sin = np.cos(style.rotation), np.sin(style.rotation)
    rotation = np.array([[cos, -sin], [sin, cos]])
    shear = np.array([[1.0, 0.0], [style.shear, 1.0]])
    forward = rotation @ shear * style.scale
    inverse = np.linalg.inv(forward)
    center = (np.array(pixels.shape, dtype=np.float64) - 1.0) / 2.0
    offset = center - inverse @ center
    return ndimage.affine_transform(pixels, inverse, offset=offset, order=1, mode="constant", cval=0.0)


def apply_style(pixels: np.ndarray, style: StyleParams, seed: int) -> np.ndarray:
    """Affine distortion (bilinear, background outside) followed by gaussian noise, clamped to [0, 1]."""
    out = pixels.astype(np.float64)
    if not style.is_affine_identity:
        out = _affine(out, style)
    if style.noise_sigma > 0:
        out = out + np.random.default_rng(seed).normal(0.0, style.noise_sigma, size=out.shape)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def compose_glyph(tree: IdsTree, atlas: RadicalAtlas, style: StyleParams, seed: int,
                  class_id: Optional[int] = None, size: int = conf.GLYPH_SIZE) -> GlyphImage:
    """
    Render a radical tree into a ``size``×``size`` glyph.

    Each operator splits its region among its children, leaves draw their radical
    bitmap scaled to their region, and the style's affine jitter and noise are
    applied to the finished glyph. Output bytes are fully determined by
    ``(tree, style, seed)``.

    :param tree: radical tree to draw.
    :param atlas: radical bitmaps for the tree's inventory.
    :param style: distortion parameters.
    :param seed: seed of the noise generator.
    :param class_id: label carried by the returned image.
    :raises MissingBitmap: if a leaf radical has no bitmap.
    """
    canvas = np.zeros((size, size), dtype=np.float32)
    _paint(tree, (0, size, 0, size), canvas, atlas, style.stroke_thickness)
    return GlyphImage(pixels=apply_style(canvas, style, seed), class_id=class_id)


def render_line(class_ids: Sequence[int], lex: Lexicon, style: StyleParams, seed: int,
                atlas: Optional[RadicalAtlas] = None) -> TextLineImage:
    """
    Render a horizontal text line of at most eight characters on a 32×256 canvas.

    Glyph ``i`` is placed at column ``32*i`` shifted by a jitter in [-2, 2] and
    clipped to the canvas; overlapping pixels keep the brighter value.

    :raises LineTooLong: if the line is empty or longer than eight characters.
    """
    if not 1 <= len(class_ids) <= conf.MAX_LINE_LENGTH:
        raise LineTooLong(f"a line holds 1 to {conf.MAX_LINE_LENGTH} characters, got {len(class_ids)}")
    atlas = atlas or RadicalAtlas(lex)
    cell = conf.GLYPH_SIZE
    canvas = np.zeros((cell, conf.LINE_WIDTH), dtype=np.float32)
    jitters = np.random.default_rng(seed).integers(-conf.PLACEMENT_JITTER, conf.PLACEMENT_JITTER + 1,
                                                   size=len(class_ids))
    for position, (class_id, jitter) in enumerate(zip(class_ids, jitters)):
        glyph = compose_glyph(lex.tree(class_id), atlas, style, derive_seed(seed, "glyph", position), class_id)
        start = position * cell + int(jitter)
        first, last = max(start, 0), min(start + cell, conf.LINE_WIDTH)
        region = canvas[:, first:last]
        np.maximum(region, glyph.pixels[:, first - start:last - start], out=region)
    return TextLineImage(pixels=canvas, label=tuple(int(c) for c in class_ids))


def glyph_fingerprint(lex: Lexicon, tree: IdsTree) -> bytes:
    """Quantized noise-free rendering of ``tree``, used to reject visually identical classes."""
    glyph = compose_glyph(tree, RadicalAtlas(lex), StyleParams(), seed=0)
    return np.round(glyph.pixels * 255).astype(np.uint8).tobytes()
