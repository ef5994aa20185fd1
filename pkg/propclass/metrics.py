# -*- coding: utf-8 -*-

"""
propclass.metrics
~~~~~~~~~~~~~~~~~

Evaluation of predicted topic paths: flat and level-wise Micro/Macro-F1, the interdisciplinary distance, and the
wrong-case breakdown.
"""

import collections

import numpy as np
import pandas
from sklearn.metrics import f1_score, precision_recall_fscore_support
from sklearn.preprocessing import MultiLabelBinarizer

from .corpus import SUBSETS, select_subset
from .exceptions import EmptyEvalSet, LengthMismatch, UnknownCode
from .taxonomy import code_level, code_prefix, parent_code

PENALTIES = {0: 1, 1: 10, 2: 30, 3: 50}
WRONG_CASES = ("Lack", "TooMuch", "Wrong", "Other")
CORRECT = "Correct"


def _path_labels(path):
    # Root and stop never enter the label universe.
    labels = set()
    for level in range(1, len(path)):
        labels.update(path.labels(level))
    return labels


def _scores(truth_sets, pred_sets, classes):
    binarizer = MultiLabelBinarizer(classes=classes)
    truth = binarizer.fit_transform(truth_sets)
    pred = binarizer.transform(pred_sets)
    micro = f1_score(truth, pred, average="micro", zero_division=0)
    macro = f1_score(truth, pred, average="macro", zero_division=0)
    return float(micro), float(macro), truth, pred


class F1Report(object):
    """Flat and level-wise Micro/Macro-F1, and per-class precision, recall and F1."""

    def __init__(self, micro_f1, macro_f1, level_micro, level_macro, classes):
        self.micro_f1 = micro_f1
        self.macro_f1 = macro_f1
        self.level_micro = level_micro
        self.level_macro = level_macro
        self.classes = classes

    def __repr__(self):
        return "F1Report(micro_f1={0:.4f}, macro_f1={1:.4f})".format(self.micro_f1, self.macro_f1)

    def to_dict(self):
        return dict(
            micro_f1=self.micro_f1,
            macro_f1=self.macro_f1,
            level_micro=self.level_micro,
            level_macro=self.level_macro,
            classes=self.classes,
        )

    def to_dataframe(self):
        """The per-class table as a pandas DataFrame.

        :rtype: pandas.DataFrame
        """
        return pandas.DataFrame.from_records(self.classes, columns=["code", "level", "precision", "recall", "f1",
                                                                    "support"])


def f1_report(preds, truths, depth=None):
    """Scores predictions against truths, treating every (level, label) decision as a binary class.

    Macro-F1 averages over the classes that occur in the truths or the predictions. A level where neither has a
    label reports None; an empty label universe scores 1.0.

    :param preds: The predicted paths.
    :type preds: list(TopicPath)
    :param truths: The true paths, aligned with `preds`.
    :type truths: list(TopicPath)
    :param depth: The number of levels to report. Defaults to the deepest path.
    :raise LengthMismatch: Raises if the lists differ in length.
    :rtype: F1Report
    """
    if len(preds) != len(truths):
        raise LengthMismatch(len(truths), len(preds))
    if depth is None:
        depth = max([len(p) - 1 for p in list(preds) + list(truths)] or [0])
    truth_sets = [_path_labels(t) for t in truths]
    pred_sets = [_path_labels(p) for p in preds]
    universe = sorted(set().union(*truth_sets, *pred_sets), key=lambda c: (code_level(c), c))
    if not universe:
        return F1Report(1.0, 1.0, [None] * depth, [None] * depth, [])

    micro, macro, truth, pred = _scores(truth_sets, pred_sets, universe)
    precision, recall, f1, support = precision_recall_fscore_support(truth, pred, average=None, zero_division=0)
    classes = [
        dict(code=code, level=code_level(code), precision=float(p), recall=float(r), f1=float(f), support=int(s))
        for code, p, r, f, s in zip(universe, precision, recall, f1, support)
    ]

    level_micro, level_macro = [], []
    for level in range(1, depth + 1):
        level_classes = [code for code in universe if code_level(code) == level]
        if not level_classes:
            level_micro.append(None)
            level_macro.append(None)
            continue
        keep = set(level_classes)
        level_truth = [labels & keep for labels in truth_sets]
        level_pred = [labels & keep for labels in pred_sets]
        scores = _scores(level_truth, level_pred, level_classes)
        level_micro.append(scores[0])
        level_macro.append(scores[1])
    return F1Report(micro, macro, level_micro, level_macro, classes)


def code_distance(truth_code, pred_code, taxonomy=None):
    """The penalty for predicting `pred_code` where `truth_code` is true.

    The codes are compared level by level; at the first level where their prefixes differ, the penalty is indexed
    by how many levels of the true code remain below it: 0 -> 1, 1 -> 10, 2 -> 30, 3 or more -> 50. When one code
    is a prefix of the other, they diverge just below the shorter one. Identical codes score 0.

    :param truth_code: The true code.
    :param pred_code: The predicted code.
    :param taxonomy: When given, both codes must belong to it.
    :type taxonomy: DisciplineTaxonomy or None
    :raise UnknownCode: Raises if a code is not in `taxonomy`.
    :rtype: int
    """
    if taxonomy is not None:
        for code in (truth_code, pred_code):
            if code not in taxonomy:
                raise UnknownCode(code)
    if truth_code == pred_code:
        return 0
    truth_level = code_level(truth_code)
    shallower = min(truth_level, code_level(pred_code))
    divergence = shallower + 1
    for level in range(1, shallower + 1):
        if code_prefix(truth_code, level) != code_prefix(pred_code, level):
            divergence = level
            break
    remaining = min(max(truth_level - divergence, 0), max(PENALTIES))
    return PENALTIES[remaining]


def level_distance(truth_labels, pred_labels, level, taxonomy=None):
    """The sum over true labels of the smallest code distance to any predicted label.

    When exactly one of the sets is empty, the distance is `level`; when both are, 0.

    :param truth_labels: L_k.
    :param pred_labels: The prediction for level k.
    :param level: k.
    :rtype: int
    """
    truth_labels = set(truth_labels)
    pred_labels = set(pred_labels)
    if not truth_labels and not pred_labels:
        return 0
    if not truth_labels or not pred_labels:
        return level
    return sum(min(code_distance(t, p, taxonomy) for p in pred_labels) for t in truth_labels)


class DistanceReport(object):
    """The mean interdisciplinary distance per level."""

    def __init__(self, levels, penalties=None):
        self.levels = levels
        self.penalties = dict(penalties or PENALTIES)

    def __repr__(self):
        return "DistanceReport(levels={0})".format(self.levels)

    def to_dict(self):
        return dict(levels=self.levels, penalties={str(k): v for k, v in sorted(self.penalties.items())})


def distance_report(preds, truths, depth, taxonomy=None):
    """Averages level_distance over the samples for every level 1..depth.

    :rtype: DistanceReport
    """
    if len(preds) != len(truths):
        raise LengthMismatch(len(truths), len(preds))
    if not preds:
        raise EmptyEvalSet()
    levels = []
    for level in range(1, depth + 1):
        distances = [level_distance(t.labels(level), p.labels(level), level, taxonomy) for p, t in zip(preds, truths)]
        levels.append(float(np.mean(distances)))
    return DistanceReport(levels)


def wrong_cases(pred, truth):
    """Labels every mismatching level of one prediction.

    Lack: nothing predicted where the truth has labels. TooMuch: labels predicted where the truth has none.
    Wrong: some predicted label's parent is missing from the predicted previous level. Other: any other mismatch.
    Earlier categories take priority.

    :param pred: The predicted path.
    :type pred: TopicPath
    :param truth: The true path.
    :type truth: TopicPath
    :return: The category of every mismatching level.
    :rtype: dict(int, str)
    """
    cases = {}
    for level in range(1, max(len(pred), len(truth))):
        predicted = pred.labels(level)
        expected = truth.labels(level)
        if predicted == expected:
            continue
        if not predicted:
            cases[level] = "Lack"
        elif not expected:
            cases[level] = "TooMuch"
        elif level > 1 and any(parent_code(code) not in pred.labels(level - 1) for code in predicted):
            cases[level] = "Wrong"
        else:
            cases[level] = "Other"
    return cases


class WrongCaseReport(object):
    """Per-level counts of Lack, TooMuch, Wrong and Other, plus correct levels."""

    def __init__(self, levels):
        """Initialize the WrongCaseReport object.

        :param levels: Counters keyed by category, one per level starting at level 1.
        :type levels: list(collections.Counter)
        """
        self.levels = levels

    @property
    def totals(self):
        totals = collections.Counter()
        for counts in self.levels:
            totals.update(counts)
        return {name: totals.get(name, 0) for name in WRONG_CASES + (CORRECT,)}

    def to_dict(self):
        return dict(
            levels=[{name: counts.get(name, 0) for name in WRONG_CASES + (CORRECT,)} for counts in self.levels],
            totals=self.totals,
        )


def wrong_case_report(preds, truths, depth):
    """Counts, for every level 1..depth, each sample as correct or in exactly one wrong-case category.

    :rtype: WrongCaseReport
    """
    if len(preds) != len(truths):
        raise LengthMismatch(len(truths), len(preds))
    levels = [collections.Counter() for _ in range(depth)]
    for pred, truth in zip(preds, truths):
        cases = wrong_cases(pred, truth)
        for level in range(1, depth + 1):
            levels[level - 1][cases.get(level, CORRECT)] += 1
    return WrongCaseReport(levels)


def evaluate(preds, truths, taxonomy, proposals=None):
    """The full evaluation report: F1, distance and wrong cases, and per-subset F1 when proposals are given.

    :param preds: The predicted paths.
    :param truths: The true paths, aligned with `preds`.
    :param taxonomy: The taxonomy.
    :param proposals: The proposals behind `truths`, aligned, for the subset breakdown.
    :type proposals: list(Proposal) or None
    :raise EmptyEvalSet: Raises if there is nothing to evaluate.
    :rtype: dict
    """
    if not truths:
        raise EmptyEvalSet()
    depth = taxonomy.depth
    report = dict(
        samples=len(truths),
        f1=f1_report(preds, truths, depth).to_dict(),
        distance=distance_report(preds, truths, depth, taxonomy).to_dict(),
        wrong_cases=wrong_case_report(preds, truths, depth).to_dict(),
    )
    if proposals is not None:
        if len(proposals) != len(truths):
            raise LengthMismatch(len(truths), len(proposals))
        position = {p.id: i for i, p in enumerate(proposals)}
        subsets = {}
        for name in SUBSETS:
            chosen = [position[p.id] for p in select_subset(proposals, name)]
            if not chosen:
                subsets[name] = None
                continue
            scores = f1_report([preds[i] for i in chosen], [truths[i] for i in chosen], depth)
            subsets[name] = dict(samples=len(chosen), micro_f1=scores.micro_f1, macro_f1=scores.macro_f1)
        report["subsets"] = subsets
    return report


def sample_table(ids, preds, truths, taxonomy):
    """One audit row per sample: paths, exact match, and per-level distance and wrong case.

    :rtype: pandas.DataFrame
    """
    rows = []
    for sample_id, pred, truth in zip(ids, preds, truths):
        cases = wrong_cases(pred, truth)
        row = collections.OrderedDict(
            id=sample_id,
            truth=" | ".join(",".join(level) for level in truth.to_list()),
            pred=" | ".join(",".join(level) for level in pred.to_list()),
            exact=_path_labels(pred) == _path_labels(truth),
        )
        for level in range(1, taxonomy.depth + 1):
            row["distance_{0}".format(level)] = level_distance(truth.labels(level), pred.labels(level), level)
            row["case_{0}".format(level)] = cases.get(level, CORRECT)
        rows.append(row)
    return pandas.DataFrame(rows)
