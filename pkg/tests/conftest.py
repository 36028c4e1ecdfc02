import numpy as np
import pytest
from typer.testing import CliRunner

from glyph_forge import load_dataset, make_dataset, make_line_dataset
from ids_core import build_lexicon, save_lexicon
from models import CtrConfig, DatasetRegime, ModelConfig, PretrainConfig

TINY_MODEL = dict(embed_dim=8, image_widths=(4, 8), text_dim=8, text_layers=1, heads=2, max_seq_len=24,
                  ctr_widths=(4, 8, 8), decoder_layers=1)


@pytest.fixture(scope="session")
def lex():
    """Twelve classes over six radicals, small enough for every test to train on."""
    return build_lexicon(12, n_radicals=6, max_depth=2, seed=3)


@pytest.fixture(scope="session")
def lexicon_dir(lex, tmp_path_factory):
    directory = tmp_path_factory.mktemp("lexicon")
    save_lexicon(lex, directory)
    return directory


@pytest.fixture(scope="session")
def glyph_dir(lex, tmp_path_factory):
    return make_dataset(lex, lex.class_ids, 2, DatasetRegime.printed, 11, tmp_path_factory.mktemp("glyphs"),
                        threads=1)


@pytest.fixture(scope="session")
def line_dir(lex, tmp_path_factory):
    return make_line_dataset(lex, lex.class_ids, 6, DatasetRegime.printed, 12, tmp_path_factory.mktemp("lines"),
                             max_len=3, threads=1)


@pytest.fixture(scope="session")
def glyphs(glyph_dir):
    return load_dataset(glyph_dir)


@pytest.fixture(scope="session")
def lines(line_dir):
    return load_dataset(line_dir)


@pytest.fixture
def model_config():
    return ModelConfig(**TINY_MODEL)


@pytest.fixture
def pretrain_config():
    return PretrainConfig(batch_size=8, epochs=1, lr=1e-3)


@pytest.fixture
def ctr_config():
    return CtrConfig(batch_size=4, epochs=1, lr=1e-3, max_decode_len=4)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def runner():
    return CliRunner()
