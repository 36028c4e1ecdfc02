"""Desk-scale end-to-end runs. Deselected by default; run with ``pytest -m slow``."""
import numpy as np
import pytest

from clip_align import export_candidates
from clip_align.evaluate import ccr_evaluate, intra_class_cosine
from ctr_recognizer import CtrModel, add_candidate, greedy_decode, train_ctr
from eval_bench.ablation import ablation_sweep
from eval_bench.pipeline import Datasets, pretrain_stage
from eval_bench.runs import ctr_evaluate
from glyph_forge import glyph_fingerprint, load_dataset, make_dataset, make_line_dataset
from ids_core import build_lexicon, random_tree, tokens_for_level
from models import CtrConfig, DatasetRegime, ModelConfig, PretrainConfig, RunConfig

pytestmark = pytest.mark.slow

SEED = 2024
SEEN = list(range(240))
UNSEEN = list(range(240, 300))


@pytest.fixture(scope="module")
def lexicon300():
    return build_lexicon(300, seed=SEED, fingerprint=glyph_fingerprint)


@pytest.fixture(scope="module")
def desk_data(lexicon300, tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    return Datasets(
        glyph_train=load_dataset(make_dataset(lexicon300, SEEN, 8, DatasetRegime.mixed, SEED, root / "glyph_train")),
        glyph_test=load_dataset(make_dataset(lexicon300, lexicon300.class_ids, 2, DatasetRegime.mixed, SEED + 1,
                                             root / "glyph_test")),
        line_train=load_dataset(make_line_dataset(lexicon300, SEEN, 2000, DatasetRegime.printed, SEED + 2,
                                                  root / "line_train", max_len=6)),
        line_test=load_dataset(make_line_dataset(lexicon300, lexicon300.class_ids, 200, DatasetRegime.printed,
                                                 SEED + 3, root / "line_test", max_len=6)),
    )


@pytest.fixture(scope="module")
def desk_config():
    return RunConfig(split="char_zero_shot:m=240,k=60", pretrain=PretrainConfig(epochs=30),
                     ctr=CtrConfig(epochs=10))


@pytest.fixture(scope="module")
def encoders(desk_config, lexicon300, desk_data):
    model, _ = pretrain_stage(desk_config, lexicon300, desk_data.glyph_train, SEED)
    return model, export_candidates(model, lexicon300)


def test_character_zero_shot(encoders, desk_data):
    model, candidates = encoders
    assert len(candidates) == 300
    report, _ = ccr_evaluate(model, desk_data.glyph_test, candidates, seen_classes=SEEN)
    assert report.unseen_cacc >= 0.30
    assert report.seen_cacc >= 0.85


def test_line_zero_shot_and_new_class(desk_config, lexicon300, desk_data, encoders):
    clip, candidates = encoders
    recognizer, _ = train_ctr(desk_config.ctr, desk_config.model, candidates, desk_data.line_train, SEED)
    report, _ = ctr_evaluate(recognizer, desk_data.line_test, seen_classes=SEEN)
    assert report.unseen_cacc >= 0.20

    successes = 0
    for trial in range(5):
        new_tree = random_tree(np.random.default_rng(SEED + 10 + trial), lexicon300.n_radicals, 2)
        if any(new_tree == lexicon300.tree(c) for c in lexicon300.class_ids):
            continue
        extended_lex = lexicon300.with_class("new", new_tree)
        extended = add_candidate(candidates, 300, tokens_for_level(300, extended_lex, clip.level), clip)
        line_dir = make_line_dataset(extended_lex, [300], 1, DatasetRegime.printed, SEED + 20 + trial,
                                     f"{desk_data.line_test.root}_new_{trial}", min_len=1, max_len=1)
        line = load_dataset(line_dir)
        result = greedy_decode(recognizer.with_candidates(extended), line.images)[0]
        successes += 300 in result.classes
    assert successes >= 1


def test_lambda_and_head_ablations(desk_config, lexicon300, desk_data):
    table = ablation_sweep("lambda", ["0", "1"], desk_config, lexicon300, desk_data, SEED)
    assert len(table.rows) == 2
    heads = ablation_sweep("head_mode", ["match", "fc"], desk_config, lexicon300, desk_data, SEED)
    match, fc = (row.report for row in heads.rows)
    assert match.unseen_cacc > 0.0
    assert fc.unseen_cacc == 0.0


@pytest.mark.xfail(strict=False, reason="the clustering effect of lambda is reported, not guaranteed at desk scale")
def test_lambda_tightens_clusters(lexicon300, desk_data, desk_config):
    cosines = {}
    for lam in (0.0, 1.0):
        config = desk_config.model_copy(
            update={"pretrain": desk_config.pretrain.model_copy(update={"lam": lam})})
        model, _ = pretrain_stage(config, lexicon300, desk_data.glyph_train, SEED)
        cosines[lam] = intra_class_cosine(model, desk_data.glyph_test.restrict(UNSEEN))
    assert cosines[1.0] >= cosines[0.0]


def test_greedy_decoding_terminates(lexicon300, encoders):
    _, candidates = encoders
    model = CtrModel(ModelConfig(), CtrConfig(), candidates, np.random.default_rng(SEED))
    images = np.random.default_rng(SEED).random((1000, 32, 256)).astype(np.float32)
    results = greedy_decode(model, images)
    assert len(results) == 1000
    assert all(len(result.classes) <= model.max_decode_len for result in results)
    assert all(not result.truncated or len(result.classes) == model.max_decode_len for result in results)
