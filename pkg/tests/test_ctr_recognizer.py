import math

import numpy as np
import pytest

from clip_align import CandidateMatrix, ClipModel, DuplicateClass
from ctr_recognizer import (BOS_CODE, PAD_CODE, PAD_TARGET, CandidateMissing, CtrError, CtrModel, DecodeResult,
                            DimensionMismatch, LabelOutOfRange, add_candidate, ctr_loss, greedy_decode, match_logits,
                            matching_head, teacher_forcing, train_ctr, write_predictions)
from models import DecompositionLevel, HeadMode
from tensor_substrate import Tensor, check_gradients

ROWS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])


def unit_rows(rng, n, dim=8):
    rows = rng.normal(size=(n, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


@pytest.fixture
def candidates(lex, rng):
    return CandidateMatrix(tuple(lex.class_ids), unit_rows(rng, lex.n_classes))


@pytest.fixture
def recognizer(model_config, ctr_config, candidates):
    return CtrModel(model_config, ctr_config, candidates, np.random.default_rng(5))


def test_matching_head_probabilities():
    features = Tensor(np.array([[1.0, 0.0]]))
    assert matching_head(features, ROWS).data[0] == pytest.approx([0.6652, 0.2447, 0.0900], abs=1e-4)
    with pytest.raises(DimensionMismatch):
        match_logits(features, np.ones((3, 4)))


def test_loss_without_regularizer_is_cross_entropy():
    features = Tensor(np.array([[[1.0, 0.0], [0.0, 1.0]]]))
    loss = ctr_loss(features, np.array([[0, PAD_TARGET]]), ROWS, beta=0.0)
    assert loss.item() == pytest.approx(-math.log(0.6652), abs=1e-4)


def test_regularizer_is_distance_to_target_row():
    """For unit vectors the squared distance is two minus twice the cosine."""
    features = Tensor(np.array([[[1.0, 0.0]]]))
    plain = ctr_loss(features, np.array([[1]]), ROWS, beta=0.0).item()
    regularized = ctr_loss(features, np.array([[1]]), ROWS, beta=1.0).item()
    assert regularized - plain == pytest.approx(2.0)
    aligned = ctr_loss(features, np.array([[0]]), ROWS, beta=0.5).item()
    assert aligned == pytest.approx(ctr_loss(features, np.array([[0]]), ROWS, beta=0.0).item())


def test_loss_rejects_bad_targets():
    features = Tensor(np.zeros((1, 2, 2)))
    with pytest.raises(LabelOutOfRange):
        ctr_loss(features, np.array([[0, 3]]), ROWS, beta=0.0)
    with pytest.raises(LabelOutOfRange):
        ctr_loss(features, np.array([[0]]), ROWS, beta=0.0)


def test_loss_gradient(rng):
    features = Tensor(unit_rows(rng, 6, 4).reshape(2, 3, 4), requires_grad=True)
    rows = Tensor(unit_rows(rng, 5, 4), requires_grad=True)
    targets = np.array([[0, 4, PAD_TARGET], [2, 2, 1]])
    assert check_gradients(lambda: ctr_loss(features, targets, rows, beta=0.3), [features, rows]) < 1e-4


def test_teacher_forcing_layout(recognizer):
    inputs, targets = teacher_forcing(recognizer, [(3, 1), (2,)])
    end = recognizer.end_index
    assert end == 12
    assert inputs.tolist() == [[BOS_CODE, 3, 1], [BOS_CODE, 2, PAD_CODE]]
    assert targets.tolist() == [[3, 1, end], [2, end, PAD_TARGET]]


def test_decoder_rejects_unknown_inputs(recognizer):
    memory = recognizer.encode(np.zeros((1, 32, 256)))
    with pytest.raises(LabelOutOfRange):
        recognizer.decode(memory, np.array([[BOS_CODE, recognizer.end_index]]))
    with pytest.raises(CandidateMissing):
        teacher_forcing(recognizer, [(99,)])


def test_decoder_logits_are_causal(recognizer, lines, rng):
    """Changing teacher-forced inputs at step t or later never changes logits before t."""
    memory = recognizer.encode(lines.images[:2])
    steps = recognizer.max_decode_len + 1
    codes = rng.integers(0, recognizer.end_index, size=(2, steps))
    codes[:, 0] = BOS_CODE
    _, logits, _ = recognizer.decode(memory, codes)
    for t in range(1, steps):
        perturbed = codes.copy()
        perturbed[:, t:] = rng.integers(0, recognizer.end_index, size=(2, steps - t))
        perturbed[1, -1] = PAD_CODE
        _, changed, _ = recognizer.decode(memory, perturbed)
        np.testing.assert_allclose(changed.data[:, :t], logits.data[:, :t], rtol=0, atol=1e-5)


def test_first_greedy_step_matches_teacher_forcing(recognizer, lines):
    images = lines.images[:3]
    codes = np.array([[BOS_CODE, 0, 1]] * len(images))
    _, logits, _ = recognizer.forward(images, codes)
    first = np.argmax(logits.data[:, 0], axis=-1)
    for choice, result in zip(first, greedy_decode(recognizer, images)):
        if choice == recognizer.end_index:
            assert result.classes == ()
        else:
            assert result.classes[0] == recognizer.output_ids[choice]


def test_decoding_respects_emission_limit(recognizer, lines):
    results = greedy_decode(recognizer, lines.images[:3], max_len=2)
    assert len(results) == 3
    for result in results:
        assert len(result.classes) <= 2
        assert not result.truncated or len(result.classes) == 2
    with pytest.raises(LabelOutOfRange):
        greedy_decode(recognizer, lines.images[:1], max_len=recognizer.max_decode_len + 1)


def test_decoding_marks_truncation(model_config, ctr_config, candidates, lines):
    fc = ctr_config.model_copy(update={"head_mode": HeadMode.fc})
    model = CtrModel(model_config, fc, candidates, np.random.default_rng(1), output_classes=(0, 1, 2))
    model.classifier.bias.data[-1] = -1e4
    results = greedy_decode(model, lines.images[:2], max_len=3)
    assert all(result.truncated and len(result.classes) == 3 for result in results)
    assert {c for result in results for c in result.classes} <= {0, 1, 2}


def test_classifier_head_is_closed_set(model_config, ctr_config, candidates):
    fc = ctr_config.model_copy(update={"head_mode": HeadMode.fc})
    model = CtrModel(model_config, fc, candidates, np.random.default_rng(1), output_classes=(0, 1, 2))
    assert model.n_outputs == 4
    with pytest.raises(CandidateMissing):
        model.output_index(5)
    with pytest.raises(CandidateMissing):
        model.with_candidates(candidates)


def test_training_leaves_candidates_untouched(model_config, ctr_config, candidates, lines):
    before = candidates.vectors.tobytes()
    model, log = train_ctr(ctr_config, model_config, candidates, lines, seed=3)
    assert candidates.vectors.tobytes() == before
    assert model.candidates is candidates
    assert log.to_tsv().startswith("epoch\tloss\n")
    assert all(np.isfinite(row.loss) for row in log.epochs)


def test_training_is_deterministic(model_config, ctr_config, candidates, lines):
    first, _ = train_ctr(ctr_config, model_config, candidates, lines, seed=3)
    second, _ = train_ctr(ctr_config, model_config, candidates, lines, seed=3)
    for name, value in first.state_dict().items():
        assert np.array_equal(second.state_dict()[name], value)


def test_training_loss_decreases(model_config, ctr_config, candidates, lines):
    config = ctr_config.model_copy(update={"epochs": 5, "lr": 3e-3})
    _, log = train_ctr(config, model_config, candidates, lines, seed=3)
    assert log.epochs[-1].loss < log.epochs[0].loss


def test_end_row_is_never_exported(model_config, ctr_config, candidates, lines, tmp_path):
    model, _ = train_ctr(ctr_config, model_config, candidates, lines, seed=3)
    model.candidates.save(tmp_path / "candidates.tsv")
    exported = CandidateMatrix.load(tmp_path / "candidates.tsv")
    assert exported.class_ids == candidates.class_ids
    assert len(model.output_rows().data) == len(exported) + 1
    end = model.output_rows().data[-1]
    assert not np.any(np.all(np.isclose(exported.vectors, end, atol=1e-6), axis=1))


def test_pretrained_initialization_needs_a_model(model_config, ctr_config, candidates, lines):
    config = ctr_config.model_copy(update={"init_from_pretrain": True})
    with pytest.raises(CtrError):
        train_ctr(config, model_config, candidates, lines, seed=3)


def test_adding_a_candidate_extends_outputs(lex, model_config, recognizer, candidates, lines):
    clip = ClipModel.create(model_config, lex, DecompositionLevel.radical, seed=1)
    tokens = clip.class_tokens(lex, [0])[0]
    extended = add_candidate(candidates, 12, tokens, clip)
    assert extended.vectors[:12].tobytes() == candidates.vectors.tobytes()
    assert np.linalg.norm(extended.vector(12)) == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(DuplicateClass):
        add_candidate(extended, 12, tokens, clip)
    grown = recognizer.with_candidates(extended)
    assert grown.n_outputs == 14 and grown.output_index(12) == 12
    assert recognizer.n_outputs == 13
    results = greedy_decode(grown, lines.images[:2], max_len=2)
    assert all(set(result.classes) <= set(extended.class_ids) for result in results)


@pytest.mark.parametrize("head_mode", [HeadMode.match, HeadMode.fc])
def test_checkpoint_round_trip(model_config, ctr_config, candidates, lines, tmp_path, head_mode):
    config = ctr_config.model_copy(update={"head_mode": head_mode})
    model = CtrModel(model_config, config, candidates, np.random.default_rng(2), output_classes=(1, 4, 7))
    model.save(tmp_path / "ctr.ckpt")
    restored = CtrModel.load(tmp_path / "ctr.ckpt", model_config, ctr_config, candidates)
    assert restored.head_mode == head_mode
    assert restored.output_ids == model.output_ids
    assert greedy_decode(restored, lines.images[:2]) == greedy_decode(model, lines.images[:2])


def test_prediction_file(tmp_path):
    path = tmp_path / "predictions.tsv"
    write_predictions(path, ["a", "b"], [DecodeResult((3, 1)), DecodeResult((), True)])
    assert path.read_text(encoding="utf-8") == "a\t3 1\t0\nb\t\t1\n"
