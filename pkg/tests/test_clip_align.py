import math

import numpy as np
import pytest

from clip_align import (CandidateMatrix, ClipModel, DuplicateClass, EmptyCandidates, EmptyDataset, SequenceTooLong,
                        UnknownToken, ccr_recognize, class_batches, encode_token_batch, export_candidates, loss_li,
                        loss_lt, pretrain, pretrain_loss)
from clip_align.evaluate import ccr_evaluate, intra_class_cosine
from ids_core import Radical, Special, StructureOp, TokenAlphabet
from models import DecompositionLevel
from tensor_substrate import Tensor, check_gradients


def unit_rows(rng, n, dim=8):
    rows = rng.normal(size=(n, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def test_loss_lt_single_pair_is_zero():
    one = Tensor(np.array([[1.0, 0.0]]))
    assert loss_lt(one, one).item() == pytest.approx(0.0)


def test_loss_lt_orthonormal_pairs():
    eye = Tensor(np.eye(2))
    assert loss_lt(eye, eye).item() == pytest.approx(4 * -math.log(math.e / (math.e + 1)), abs=1e-3)
    assert loss_lt(eye, eye).item() == pytest.approx(1.2530, abs=1e-3)


def test_loss_lt_identical_embeddings():
    same = Tensor(np.array([[1.0, 0.0], [1.0, 0.0]]))
    assert loss_lt(same, same).item() == pytest.approx(2.7726, abs=1e-3)


def test_loss_li_oracles():
    distinct = Tensor(np.eye(3))
    assert loss_li(distinct, [0, 1, 2]).item() == 0.0
    aligned = Tensor(np.array([[1.0, 0.0], [1.0, 0.0]]))
    assert loss_li(aligned, [5, 5]).item() == pytest.approx(1.3863, abs=1e-3)
    opposed = Tensor(np.array([[1.0, 0.0], [-1.0, 0.0]]))
    assert loss_li(opposed, [5, 5]).item() == pytest.approx(2 * 2.1269, abs=1e-3)


def test_losses_are_permutation_invariant(rng):
    image, text = unit_rows(rng, 4), unit_rows(rng, 4)
    labels = np.array([0, 1, 0, 2])
    order = np.array([2, 0, 3, 1])
    assert loss_lt(Tensor(image), Tensor(text)).item() == pytest.approx(
        loss_lt(Tensor(image[order]), Tensor(text[order])).item())
    assert loss_li(Tensor(image), labels).item() == pytest.approx(
        loss_li(Tensor(image[order]), labels[order]).item())


def test_loss_lt_is_positive_for_unit_rows(rng):
    for _ in range(10):
        image = Tensor(unit_rows(rng, 3))
        assert loss_lt(image, image).item() > 0.0


def test_loss_gradients(rng):
    image = Tensor(unit_rows(rng, 4), requires_grad=True)
    text = Tensor(unit_rows(rng, 4), requires_grad=True)
    labels = [0, 1, 0, 1]
    assert check_gradients(lambda: loss_lt(image, text), [image, text]) < 1e-4
    assert check_gradients(lambda: loss_li(image, labels), [image]) < 1e-4
    assert check_gradients(lambda: pretrain_loss(image, text, labels, 1.0)[0], [image, text]) < 1e-4


def test_lambda_zero_is_text_loss_only(rng):
    image, text = Tensor(unit_rows(rng, 4)), Tensor(unit_rows(rng, 4))
    total, l_t, _ = pretrain_loss(image, text, [0, 0, 1, 1], 0.0)
    assert total is l_t


def test_random_embeddings_give_chance_level_loss(rng):
    """Random unit embeddings in 64 dimensions score close to log N per direction."""
    n = 32
    values = [loss_lt(Tensor(unit_rows(rng, n, 64)), Tensor(unit_rows(rng, n, 64))).item() / (2 * n)
              for _ in range(100)]
    assert abs(np.mean(values) - math.log(n)) / math.log(n) < 0.15


def test_token_batch_validation(lex):
    alphabet = TokenAlphabet.from_lexicon(lex)
    ids, ends = encode_token_batch(alphabet, [(Radical(0), Special.END), (StructureOp.H2, Radical(0), Radical(1),
                                                                          Special.END)], 6)
    assert ids.shape == (2, 6)
    assert list(ends) == [1, 3]
    assert ids[0, 2] == alphabet.pad_id
    with pytest.raises(UnknownToken):
        encode_token_batch(alphabet, [(Radical(0),)], 6)
    with pytest.raises(UnknownToken):
        encode_token_batch(alphabet, [(Radical(99), Special.END)], 6)
    with pytest.raises(SequenceTooLong):
        encode_token_batch(alphabet, [(Radical(0),) * 6 + (Special.END,)], 6)


def test_embeddings_are_unit_and_deterministic(lex, glyphs, model_config):
    model = ClipModel.create(model_config, lex, DecompositionLevel.radical, seed=1)
    images = model.embed_images(glyphs.images[:4])
    assert np.allclose(np.linalg.norm(images, axis=1), 1.0, atol=1e-5)
    assert np.array_equal(images, model.embed_images(glyphs.images[:4]))
    texts = model.embed_tokens(model.class_tokens(lex, [0, 1]))
    assert np.allclose(np.linalg.norm(texts, axis=1), 1.0, atol=1e-5)


def test_candidate_matrix_append_and_immutability(rng):
    matrix = CandidateMatrix((0, 1, 2), unit_rows(rng, 3))
    extended = matrix.append(7, unit_rows(rng, 1)[0])
    assert len(extended) == 4 and len(matrix) == 3
    assert extended.vectors[:3].tobytes() == matrix.vectors.tobytes()
    assert extended.class_ids == (0, 1, 2, 7)
    with pytest.raises(DuplicateClass):
        extended.append(7, unit_rows(rng, 1)[0])
    with pytest.raises(ValueError):
        matrix.vectors[0, 0] = 1.0


def test_candidate_file_round_trip(rng, tmp_path):
    matrix = CandidateMatrix((3, 1), unit_rows(rng, 2))
    path = tmp_path / "candidates.tsv"
    matrix.save(path)
    loaded = CandidateMatrix.load(path)
    assert loaded.class_ids == (3, 1)
    assert loaded.digest() == matrix.digest()


def test_recognition_picks_best_row_lowest_on_ties(rng):
    rows = unit_rows(rng, 5)
    rows[4] = rows[1]
    matrix = CandidateMatrix((10, 11, 12, 13, 14), rows)
    assert int(ccr_recognize(rows[3], matrix)) == 13
    assert int(ccr_recognize(rows[1], matrix)) == 11
    assert int(ccr_recognize(rows[3] * 7.5, matrix)) == 13
    queries = rng.normal(size=(100, 8))
    expected = [11 if row in (1, 4) else matrix.class_ids[row]
                for row in (int(np.argmax(rows[:4] @ q)) for q in queries)]
    assert list(ccr_recognize(queries, matrix)) == expected
    row = rows[1].astype(np.float32)
    one_ulp_up = np.nextafter(row, 2 * row)
    nudged = CandidateMatrix((10, 11, 12, 13, 14), np.vstack([rows[:4], one_ulp_up]))
    assert int(ccr_recognize(rows[1], nudged)) == 11
    with pytest.raises(EmptyCandidates):
        ccr_recognize(rows[0], CandidateMatrix((), np.zeros((0, 8))))


def test_class_batches_pair_samples(glyphs):
    batches = list(class_batches(glyphs.class_labels, 8, 1.0, np.random.default_rng(0)))
    labels = glyphs.class_labels
    seen = [labels[i] for batch in batches for i in batch]
    assert sorted(set(seen)) == sorted(set(labels))
    for batch in batches:
        assert len(batch) <= 8
        counts = np.bincount([labels[i] for i in batch])
        assert set(counts[counts > 0]) == {2}
    singles = list(class_batches(labels, 8, 0.0, np.random.default_rng(0)))
    assert all(len(set(labels[i] for i in batch)) == len(batch) for batch in singles)


def test_pretrain_is_deterministic(lex, glyphs, model_config, pretrain_config):
    first, log = pretrain(pretrain_config, model_config, lex, glyphs, seed=4)
    second, again = pretrain(pretrain_config, model_config, lex, glyphs, seed=4)
    assert log.to_tsv() == again.to_tsv()
    assert log.to_tsv().startswith("epoch\tL_T\tL_I\tL_pre\n")
    for name, value in first.state_dict().items():
        assert np.array_equal(second.state_dict()[name], value)


def test_pretrain_loss_decreases(lex, glyphs, model_config, pretrain_config):
    config = pretrain_config.model_copy(update={"epochs": 5, "lr": 3e-3})
    _, log = pretrain(config, model_config, lex, glyphs, seed=4)
    assert len(log.epochs) == 5
    assert log.epochs[-1].l_pre < log.epochs[0].l_pre


def test_pretrain_rejects_empty_dataset(lex, glyphs, model_config, pretrain_config):
    with pytest.raises(EmptyDataset):
        pretrain(pretrain_config, model_config, lex, glyphs.subset([]), seed=0)


def test_checkpoint_preserves_metrics(lex, glyphs, model_config, pretrain_config, tmp_path):
    model, _ = pretrain(pretrain_config, model_config, lex, glyphs, seed=2)
    candidates = export_candidates(model, lex)
    assert np.allclose(np.linalg.norm(candidates.vectors, axis=1), 1.0, atol=1e-5)
    report, predictions = ccr_evaluate(model, glyphs, candidates, seen_classes=range(8))
    model.save(tmp_path / "model.ckpt")
    restored = ClipModel.load(tmp_path / "model.ckpt", model_config)
    assert restored.level == model.level
    again, repeated = ccr_evaluate(restored, glyphs, export_candidates(restored, lex), seen_classes=range(8))
    assert np.array_equal(predictions, repeated)
    assert report.cacc == again.cacc
    assert report.seen_cacc is not None and report.unseen_cacc is not None
    assert -1.0 <= intra_class_cosine(model, glyphs) <= 1.0
