from functools import lru_cache

import numpy as np
import pytest

from clip_align import CandidateMatrix, EmptyDataset
from ctr_recognizer import CtrModel
from eval_bench import (DegenerateSplit, EvalError, LengthMismatch, SplitOverflow, align, cacc, character_accuracy,
                        edit_distance, few_shot_report, lacc, make_char_zero_shot_split,
                        make_radical_zero_shot_split, ned, shot_bucket, split_classes)
from eval_bench.ablation import (DEFAULT_VALUES, AblationRow, AblationTable, ablation_sweep, apply_value, lambda_gate,
                                 parse_value)
from eval_bench.metrics import BUCKETS, bucket_classes, normalized_errors
from eval_bench.pipeline import Datasets
from eval_bench.runs import ctr_evaluate, read_report, train_counts, write_report, write_samples, write_summary
from ids_core import build_lexicon, leaves
from models import AblationParam, DecompositionLevel, HeadMode, MetricsReport, RunConfig, SplitKind, SplitSpec


def levenshtein(a, b):
    @lru_cache(maxsize=None)
    def distance(i, j):
        if i == 0 or j == 0:
            return i + j
        return min(distance(i - 1, j) + 1, distance(i, j - 1) + 1,
                   distance(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return distance(len(a), len(b))


def test_edit_distance_examples():
    assert edit_distance((), ()) == 0
    assert edit_distance((1, 2, 3), ()) == 3
    assert edit_distance((1, 2, 3), (1, 3)) == 1
    assert edit_distance((1, 2), (2, 1)) == 2


def test_edit_distance_matches_recursive_definition(rng):
    for _ in range(500):
        a = tuple(int(v) for v in rng.integers(0, 3, size=rng.integers(0, 13)))
        b = tuple(int(v) for v in rng.integers(0, 3, size=rng.integers(0, 13)))
        assert edit_distance(a, b) == levenshtein(a, b)
        assert edit_distance(a, b) == edit_distance(b, a)


def test_alignment_marks_kept_characters():
    assert align((1, 3), (1, 2, 3)) == [True, False, True]
    assert align((), (4, 5)) == [False, False]
    assert align((7, 8), (7, 8)) == [True, True]


def test_line_metrics():
    assert ned([(1, 2)], [(1, 2, 3)]) == pytest.approx(0.6667, abs=1e-4)
    assert ned([(4, 5)], [(1, 2)]) == 0.0
    assert ned([()], [()]) == 1.0
    assert normalized_errors([(), (1,)], [(), (2,)]) == [0.0, 1.0]
    assert lacc([(1, 2), (3,)], [(1, 2), (4,)]) == 0.5
    assert cacc([1, 2, 3, 4], [1, 2, 0, 4]) == 0.75


def test_metrics_reject_mismatched_inputs():
    with pytest.raises(LengthMismatch):
        cacc([1, 2], [1])
    with pytest.raises(LengthMismatch):
        ned([], [])
    with pytest.raises(LengthMismatch):
        lacc([(1,)], [])


def test_character_accuracy_by_class():
    preds, labels = [(1, 5, 3), (2,)], [(1, 2, 3), (2,)]
    assert character_accuracy(preds, labels) == 0.75
    assert character_accuracy(preds, labels, classes=[2]) == 0.5
    assert character_accuracy(preds, labels, classes=[9]) is None


def test_shot_buckets():
    assert [shot_bucket(n) for n in (0, 1, 50, 51)] == ["0", "1-50", "1-50", ">50"]
    buckets = bucket_classes({2: 10, 3: 60}, [1, 2, 3, 4])
    assert buckets == {"0": [1, 4], "1-50": [2], ">50": [3]}
    members = [c for name in BUCKETS for c in buckets[name]]
    assert sorted(members) == [1, 2, 3, 4]


def test_few_shot_report():
    report = few_shot_report({2: 10, 3: 60}, [(1, 5, 3)], [(1, 2, 3)])
    assert report == {"0": 1.0, "1-50": 0.0, ">50": 1.0}
    assert few_shot_report({1: 100}, [(1,)], [(1,)]) == {">50": 1.0}


def test_char_zero_shot_split():
    small = build_lexicon(4, n_radicals=6, max_depth=2, seed=3)
    assert make_char_zero_shot_split(small, 2, 2) == ([0, 1], [2, 3])
    with pytest.raises(SplitOverflow):
        make_char_zero_shot_split(small, 3, 2)


def test_radical_zero_shot_split(lex):
    with pytest.raises(DegenerateSplit):
        make_radical_zero_shot_split(lex, 1)
    with pytest.raises(DegenerateSplit):
        make_radical_zero_shot_split(lex, lex.n_classes + 1)
    counts = {}
    for class_id in lex.class_ids:
        for radical in set(leaves(lex.tree(class_id))):
            counts[radical] = counts.get(radical, 0) + 1
    built = 0
    for n in range(2, lex.n_classes + 1):
        try:
            train, test = make_radical_zero_shot_split(lex, n)
        except DegenerateSplit:
            continue
        built += 1
        expected = [c for c in lex.class_ids if any(counts[r] < n for r in leaves(lex.tree(c)))]
        assert test == expected
        assert not set(train) & set(test)
        assert sorted(train + test) == sorted(lex.class_ids)
    assert built > 0


def test_split_dispatch(lex):
    assert split_classes(lex, SplitSpec()) == (list(lex.class_ids), list(lex.class_ids))
    spec = SplitSpec.parse("char_zero_shot:m=8,k=4")
    assert spec.kind == SplitKind.char_zero_shot
    assert split_classes(lex, spec) == (list(range(8)), list(range(8, 12)))


def test_report_files(tmp_path):
    report = MetricsReport(cacc=0.5, lacc=0.25, samples=4, few_shot={"0": 0.125})
    write_report(tmp_path / "report.tsv", report)
    rows = read_report(tmp_path / "report.tsv")
    assert rows["cacc"] == "0.5" and rows["lacc"] == "0.25" and rows["samples"] == "4"
    assert rows["few_shot[0]"] == "0.125"
    assert "ned" not in rows
    write_summary(tmp_path / "summary.txt", report, "Glyphs")
    summary = (tmp_path / "summary.txt").read_text(encoding="utf-8")
    assert summary.startswith("Glyphs\n======\n")
    assert "CACC: 50.00%" in summary


def test_samples_file(tmp_path):
    path = tmp_path / "samples.csv"
    write_samples(path, ["b", "a"], [(1,), (1, 2)], [(2, 3), (1, 2)])
    assert path.read_text(encoding="utf-8").splitlines() == [
        "sample_id,ED,Maxlen,correct", "a,0,2,1", "b,2,2,0"]


def test_line_evaluation(lex, model_config, ctr_config, lines, rng):
    vectors = rng.normal(size=(lex.n_classes, model_config.embed_dim))
    candidates = CandidateMatrix(tuple(lex.class_ids), vectors / np.linalg.norm(vectors, axis=1, keepdims=True))
    model = CtrModel(model_config, ctr_config, candidates, np.random.default_rng(0))
    counts = train_counts(lines)
    assert sum(counts.values()) == sum(len(label) for label in lines.labels)
    report, results = ctr_evaluate(model, lines, counts, seen_classes=range(6))
    assert report.samples == len(lines) == len(results)
    assert 0.0 <= report.ned <= 1.0 and 0.0 <= report.lacc <= 1.0
    assert report.truncated == sum(result.truncated for result in results)
    assert set(report.few_shot) <= set(BUCKETS)
    with pytest.raises(EmptyDataset):
        ctr_evaluate(model, lines.subset([]))


def test_ablation_values():
    assert parse_value(AblationParam.lam, "0.5") == 0.5
    assert parse_value(AblationParam.head_mode, "fc") == HeadMode.fc
    assert parse_value(AblationParam.level, "stroke") == DecompositionLevel.stroke
    assert parse_value(AblationParam.reg_term, "off") is False
    for param, text in [(AblationParam.lam, "x"), (AblationParam.reg_term, "maybe"), (AblationParam.level, "leaf")]:
        with pytest.raises(EvalError):
            parse_value(param, text)
    config = RunConfig()
    assert apply_value(config, AblationParam.reg_term, False).ctr.beta == 0.0
    assert apply_value(config, AblationParam.reg_term, True).ctr.beta == config.ctr.beta
    assert apply_value(config, AblationParam.lam, 0.0).pretrain.lam == 0.0


def test_lambda_gate():
    def row(value, unseen):
        return AblationRow(value, MetricsReport(cacc=0.5, samples=1, unseen_cacc=unseen))
    assert lambda_gate([row(0.0, 0.4), row(1.0, 0.5)]) is None
    assert "below" in lambda_gate([row(0.0, 0.5), row(1.0, 0.4)])
    assert lambda_gate([row(1.0, 0.4)]) is None


def test_ablation_table_format():
    table = AblationTable(AblationParam.beta, [AblationRow(0.5, MetricsReport(cacc=0.25, samples=2))], ["check"])
    lines = table.to_tsv().splitlines()
    assert lines[0] == "param\tvalue\tcacc\tlacc\tned\tseen_cacc\tunseen_cacc\tsamples\ttruncated"
    assert lines[1] == "beta\t0.5\t0.25\t-\t-\t-\t-\t2\t0"
    assert lines[2] == "# WARNING: check"


def test_ablation_needs_datasets(lex):
    with pytest.raises(EvalError):
        ablation_sweep("beta", ["0"], RunConfig(), lex, Datasets(), seed=0)
    with pytest.raises(EvalError):
        ablation_sweep("lambda", [], RunConfig(), lex, Datasets(), seed=0)


def test_lambda_sweep(lex, glyphs, model_config, pretrain_config):
    config = RunConfig(model=model_config, pretrain=pretrain_config, split="char_zero_shot:m=8,k=4")
    table = ablation_sweep("lambda", ["0", "1"], config, lex, Datasets(glyph_train=glyphs, glyph_test=glyphs), seed=1)
    assert [row.value for row in table.rows] == [0.0, 1.0]
    assert all(row.report.unseen_cacc is not None for row in table.rows)
    assert table.warnings == ([lambda_gate(table.rows)] if lambda_gate(table.rows) else [])


def test_head_mode_sweep(lex, glyphs, lines, model_config, pretrain_config, ctr_config):
    config = RunConfig(model=model_config, pretrain=pretrain_config, ctr=ctr_config)
    data = Datasets(glyph_train=glyphs, line_train=lines, line_test=lines)
    table = ablation_sweep(AblationParam.head_mode, ["match", "fc"], config, lex, data, seed=1)
    assert [row.label for row in table.rows] == ["match", "fc"]
    assert all(row.report.samples == len(lines) for row in table.rows)
    assert table.to_tsv().count("\nhead_mode\t") == 2


def test_radical_split_on_larger_lexicon():
    lex = build_lexicon(30, n_radicals=24, max_depth=3, seed=5)
    counts = {}
    for class_id in lex.class_ids:
        for radical in set(leaves(lex.tree(class_id))):
            counts[radical] = counts.get(radical, 0) + 1
    train, test = make_radical_zero_shot_split(lex, 3)
    assert test == [c for c in lex.class_ids if any(counts[r] < 3 for r in leaves(lex.tree(c)))]
    assert train == [c for c in lex.class_ids if c not in test]


def test_classifier_head_scores_zero_on_unseen(lex, model_config, ctr_config, lines, rng):
    vectors = rng.normal(size=(lex.n_classes, model_config.embed_dim))
    candidates = CandidateMatrix(tuple(lex.class_ids), vectors / np.linalg.norm(vectors, axis=1, keepdims=True))
    fc = ctr_config.model_copy(update={"head_mode": HeadMode.fc})
    model = CtrModel(model_config, fc, candidates, np.random.default_rng(0), output_classes=range(6))
    report, results = ctr_evaluate(model, lines, seen_classes=range(6))
    assert all(set(result.classes) <= set(range(6)) for result in results)
    assert report.unseen_cacc in (None, 0.0)


def test_default_grids():
    assert [parse_value(AblationParam.lam, v) for v in DEFAULT_VALUES[AblationParam.lam]] == [0.0, 0.5, 1.0, 2.0, 5.0]
    assert DEFAULT_VALUES[AblationParam.head_mode] == ("match", "fc")
    assert set(DEFAULT_VALUES) == set(AblationParam)
