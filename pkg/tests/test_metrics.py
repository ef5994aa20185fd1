# -*- coding: utf-8 -*-

import itertools

import pytest

from propclass.exceptions import EmptyEvalSet, LengthMismatch, UnknownCode
from propclass.metrics import (
    CORRECT,
    code_distance,
    distance_report,
    evaluate,
    f1_report,
    level_distance,
    sample_table,
    wrong_case_report,
    wrong_cases,
)
from propclass.taxonomy import ROOT, TopicPath, encode_topic_path

from .conftest import make_proposal


def brute_force_f1(preds, truths):
    pred_sets = [set(itertools.chain.from_iterable(p.labels(k) for k in range(1, len(p)))) for p in preds]
    truth_sets = [set(itertools.chain.from_iterable(t.labels(k) for k in range(1, len(t)))) for t in truths]
    classes = set().union(*pred_sets, *truth_sets)
    totals = [0, 0, 0]
    per_class = []
    for code in classes:
        tp = sum(1 for p, t in zip(pred_sets, truth_sets) if code in p and code in t)
        fp = sum(1 for p, t in zip(pred_sets, truth_sets) if code in p and code not in t)
        fn = sum(1 for p, t in zip(pred_sets, truth_sets) if code not in p and code in t)
        totals = [totals[0] + tp, totals[1] + fp, totals[2] + fn]
        per_class.append(2.0 * tp / (2 * tp + fp + fn))
    tp, fp, fn = totals
    return 2.0 * tp / (2 * tp + fp + fn), sum(per_class) / len(per_class)


@pytest.fixture
def paths(small_taxonomy):
    def encode(*codes):
        return encode_topic_path(codes, small_taxonomy)

    return encode


class TestF1:
    def test_perfect(self, paths):
        truths = [paths("F0601", "C09"), paths("F0602"), paths("C")]
        report = f1_report(truths, truths, depth=3)
        assert report.micro_f1 == 1.0
        assert report.macro_f1 == 1.0
        assert report.level_micro == [1.0, 1.0, 1.0]

    def test_hand_counts(self, paths):
        report = f1_report([paths("F0602")], [paths("F0601", "C09")], depth=3)
        assert report.micro_f1 == pytest.approx(0.5)
        assert report.level_micro[0] == pytest.approx(2.0 / 3.0)

    def test_matches_brute_force(self, paths):
        preds = [paths("F0602"), paths("C09", "F06"), paths("F"), TopicPath.empty(), paths("F0601", "F0602")]
        truths = [paths("F0601", "C09"), paths("C09"), paths("F0601"), paths("C"), paths("F0602")]
        report = f1_report(preds, truths)
        micro, macro = brute_force_f1(preds, truths)
        assert report.micro_f1 == pytest.approx(micro, abs=1e-12)
        assert report.macro_f1 == pytest.approx(macro, abs=1e-12)

    def test_empty_predictions(self, paths):
        report = f1_report([TopicPath.empty()] * 2, [paths("F06"), paths("C09")])
        assert report.micro_f1 == 0.0
        assert report.macro_f1 == 0.0

    def test_nothing_anywhere(self):
        report = f1_report([TopicPath.empty()], [TopicPath.empty()], depth=2)
        assert report.micro_f1 == 1.0
        assert report.level_micro == [None, None]

    def test_level_without_labels(self, paths):
        report = f1_report([paths("F")], [paths("C")], depth=3)
        assert report.level_micro[0] == 0.0
        assert report.level_micro[1:] == [None, None]

    def test_length_mismatch(self, paths):
        with pytest.raises(LengthMismatch):
            f1_report([paths("F")], [])

    def test_class_table(self, paths):
        frame = f1_report([paths("F0602")], [paths("F0601")]).to_dataframe()
        assert list(frame.columns) == ["code", "level", "precision", "recall", "f1", "support"]
        assert frame.set_index("code").loc["F06", "f1"] == 1.0
        assert frame.set_index("code").loc["F0601", "support"] == 1


class TestDistance:
    @pytest.mark.parametrize(
        "truth,pred,expected",
        [
            ("A0101", "A0101", 0),
            ("A0101", "A0102", 1),
            ("A0101", "A0201", 10),
            ("A0101", "B0101", 30),
            ("A010101", "B010101", 50),
            ("A01", "B01", 10),
            ("A0101", "A01", 1),
            ("A01", "A0101", 1),
        ],
    )
    def test_code_distance(self, truth, pred, expected):
        assert code_distance(truth, pred) == expected

    def test_unknown_code(self, small_taxonomy):
        with pytest.raises(UnknownCode):
            code_distance("F06", "Z01", small_taxonomy)

    def test_level_distance(self):
        assert level_distance({"A0101"}, {"A0102", "B0101"}, 3) == 1
        assert level_distance({"A01", "B01"}, {"A01"}, 2) == 10
        assert level_distance(set(), {"A"}, 1) == 1
        assert level_distance({"A01"}, set(), 2) == 2
        assert level_distance(set(), set(), 3) == 0

    def test_report_means(self, paths, small_taxonomy):
        report = distance_report([paths("F0602"), paths("C09")], [paths("F0601"), paths("C09")], 3, small_taxonomy)
        assert report.levels == [0.0, 0.0, 0.5]
        assert report.to_dict()["penalties"] == {"0": 1, "1": 10, "2": 30, "3": 50}

    def test_report_empty(self):
        with pytest.raises(EmptyEvalSet):
            distance_report([], [], 3)


class TestWrongCases:
    def test_lack(self, paths):
        assert wrong_cases(paths("F"), paths("F06")) == {2: "Lack"}

    def test_too_much(self, paths):
        assert wrong_cases(paths("F06"), paths("F")) == {2: "TooMuch"}

    def test_wrong_parent(self, paths):
        pred = TopicPath([[ROOT], ["C"], ["F06"]])
        assert wrong_cases(pred, paths("C09")) == {2: "Wrong"}

    def test_other(self, paths):
        assert wrong_cases(paths("F0602"), paths("F0601")) == {3: "Other"}
        assert wrong_cases(paths("C09"), paths("F06")) == {1: "Other", 2: "Other"}

    def test_correct(self, paths):
        assert wrong_cases(paths("F0601", "C09"), paths("F0601", "C09")) == {}

    def test_each_level_counted_once(self, paths):
        preds = [paths("F"), paths("F06"), paths("F0602"), paths("C09"), TopicPath([[ROOT], ["C"], ["F06"]])]
        truths = [paths("F06"), paths("F"), paths("F0601"), paths("C09"), paths("C09")]
        report = wrong_case_report(preds, truths, 3)
        for counts in report.levels:
            assert sum(counts.values()) == len(preds)
        assert report.totals == dict(Lack=1, TooMuch=1, Wrong=1, Other=1, Correct=11)


class TestEvaluate:
    def test_perfect_with_subsets(self, paths, small_taxonomy):
        proposals = [
            make_proposal("P1", ["F0601", "C09"]),
            make_proposal("P2", ["F0602"]),
            make_proposal("P3", ["F0601", "F0602"]),
        ]
        truths = [paths(*p.labels) for p in proposals]
        report = evaluate(truths, truths, small_taxonomy, proposals)
        assert report["samples"] == 3
        assert report["f1"]["micro_f1"] == 1.0
        assert report["distance"]["levels"] == [0.0, 0.0, 0.0]
        assert report["wrong_cases"]["totals"][CORRECT] == 9
        assert report["subsets"]["all"]["samples"] == 3
        assert report["subsets"]["bi"]["samples"] == 2
        assert report["subsets"]["differ"] == dict(samples=1, micro_f1=1.0, macro_f1=1.0)

    def test_missing_subset(self, paths, small_taxonomy):
        proposals = [make_proposal("P1", ["F06"])]
        truths = [paths("F06")]
        report = evaluate(truths, truths, small_taxonomy, proposals)
        assert report["subsets"]["bi"] is None
        assert report["subsets"]["differ"] is None

    def test_empty(self, small_taxonomy):
        with pytest.raises(EmptyEvalSet):
            evaluate([], [], small_taxonomy)

    def test_sample_table(self, paths, small_taxonomy):
        frame = sample_table(["P1", "P2"], [paths("F0602"), paths("C09")], [paths("F0601"), paths("C09")],
                             small_taxonomy)
        assert list(frame["id"]) == ["P1", "P2"]
        assert list(frame["exact"]) == [False, True]
        assert list(frame["distance_3"]) == [1, 0]
        assert list(frame["case_3"]) == ["Other", CORRECT]
