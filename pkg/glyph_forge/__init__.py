from glyph_forge.atlas import RadicalAtlas, resize, stroke_bitmap
from glyph_forge.compose import (GlyphImage, TextLineImage, apply_style, child_boxes, compose_glyph,
                                 glyph_fingerprint, render_line)
from glyph_forge.dataset import Dataset, load_dataset, make_dataset, make_line_dataset, read_manifest, read_meta
from glyph_forge.exceptions import DatasetError, GlyphError, LineTooLong, MissingBitmap
from glyph_forge.style import IDENTITY_STYLE, sample_style
