import numpy as np
import pytest

import conf
from glyph_forge import (IDENTITY_STYLE, DatasetError, LineTooLong, RadicalAtlas, child_boxes, compose_glyph,
                         glyph_fingerprint, load_dataset, make_dataset, render_line, resize, sample_style)
from glyph_forge.style import FULL_RANGES, PRINTED_RANGES
from ids_core import Leaf, Node, StructureOp, build_lexicon
from models import DatasetRegime, Regime


@pytest.mark.parametrize("op", [StructureOp.H2, StructureOp.V2, StructureOp.H3, StructureOp.V3])
def test_split_boxes_tile_the_parent(op):
    box = (0, 32, 0, 32)
    boxes = child_boxes(op, box)
    assert len(boxes) == op.arity
    area = sum((b - t) * (r - l) for t, b, l, r in boxes)
    assert area == 32 * 32


def test_enclosure_centers_inner_child():
    outer, inner = child_boxes(StructureOp.ENC, (0, 30, 0, 30))
    assert outer == (0, 30, 0, 30)
    top, bottom, left, right = inner
    assert (bottom - top, right - left) == (18, 18)
    assert top == left == 6


def test_single_leaf_fills_the_canvas(lex):
    atlas = RadicalAtlas(lex)
    glyph = compose_glyph(Leaf(2), atlas, IDENTITY_STYLE, seed=0)
    expected = resize(atlas.bitmap(2, IDENTITY_STYLE.stroke_thickness), conf.GLYPH_SIZE, conf.GLYPH_SIZE)
    np.testing.assert_allclose(glyph.pixels, expected, atol=1e-6)


def test_left_right_split_draws_each_half(lex):
    atlas = RadicalAtlas(lex)
    glyph = compose_glyph(Node(StructureOp.H2, (Leaf(0), Leaf(3))), atlas, IDENTITY_STYLE, seed=0)
    half = conf.GLYPH_SIZE // 2
    for radical, pixels in ((0, glyph.pixels[:, :half]), (3, glyph.pixels[:, half:])):
        expected = resize(atlas.bitmap(radical, IDENTITY_STYLE.stroke_thickness), conf.GLYPH_SIZE, half)
        np.testing.assert_allclose(pixels, expected, atol=1e-6)


def test_compose_is_deterministic(lex):
    """The same tree, style and seed give byte-identical glyphs."""
    atlas = RadicalAtlas(lex)
    style = sample_style(Regime.scribbled, np.random.default_rng(1))
    first = compose_glyph(lex.tree(4), atlas, style, seed=9)
    second = compose_glyph(lex.tree(4), atlas, style, seed=9)
    assert first.pixels.shape == (conf.GLYPH_SIZE, conf.GLYPH_SIZE)
    assert first.pixels.tobytes() == second.pixels.tobytes()
    assert 0.0 <= first.pixels.min() and first.pixels.max() <= 1.0


def test_distinct_classes_differ_in_pixels():
    """Lexicons built with the glyph fingerprint never render two classes identically."""
    lex = build_lexicon(20, n_radicals=6, max_depth=2, seed=8, fingerprint=glyph_fingerprint)
    atlas = RadicalAtlas(lex)
    renders = {compose_glyph(lex.tree(c), atlas, IDENTITY_STYLE, seed=0).pixels.tobytes() for c in lex.class_ids}
    assert len(renders) == lex.n_classes


@pytest.mark.parametrize("regime, ranges", [(Regime.printed, PRINTED_RANGES), (Regime.scribbled, FULL_RANGES)])
def test_styles_stay_in_regime(regime, ranges):
    rng = np.random.default_rng(4)
    for _ in range(50):
        style = sample_style(regime, rng)
        for name, (low, high) in ranges.items():
            assert low <= getattr(style, name) <= high


def test_line_rendering(lex):
    line = render_line([0, 1, 2], lex, IDENTITY_STYLE, seed=3)
    assert line.pixels.shape == (conf.GLYPH_SIZE, conf.LINE_WIDTH)
    assert line.label == (0, 1, 2)
    # nothing is drawn past the third cell plus jitter
    assert not line.pixels[:, 3 * conf.GLYPH_SIZE + conf.PLACEMENT_JITTER:].any()


def test_line_length_limits(lex):
    with pytest.raises(LineTooLong):
        render_line([], lex, IDENTITY_STYLE, seed=0)
    with pytest.raises(LineTooLong):
        render_line([0] * (conf.MAX_LINE_LENGTH + 1), lex, IDENTITY_STYLE, seed=0)


def test_parallel_synthesis_matches_serial(lex, tmp_path):
    """Per-sample seeding makes thread count irrelevant to the bytes written."""
    serial = make_dataset(lex, [0, 1, 2], 3, DatasetRegime.mixed, 21, tmp_path / "serial", threads=1)
    parallel = make_dataset(lex, [0, 1, 2], 3, DatasetRegime.mixed, 21, tmp_path / "parallel", threads=3)
    left, right = load_dataset(serial), load_dataset(parallel)
    assert left.labels == right.labels
    assert left.filenames == right.filenames
    assert np.array_equal(left.images, right.images)
    for name in left.filenames:
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()


def test_dataset_layout(glyphs, lex):
    assert len(glyphs) == 2 * lex.n_classes
    assert glyphs.images.shape[1:] == (conf.GLYPH_SIZE, conf.GLYPH_SIZE)
    assert glyphs.meta["lexicon_hash"] == lex.digest()
    assert glyphs.restrict([0, 1]).class_labels == [0, 0, 1, 1]


def test_dataset_rejects_empty_class_list(lex, tmp_path):
    with pytest.raises(DatasetError):
        make_dataset(lex, [], 1, DatasetRegime.printed, 0, tmp_path)
