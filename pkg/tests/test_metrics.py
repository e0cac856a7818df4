import itertools
import math
from collections import Counter

import numpy as np
import pytest

from errors import ShapeError
from metrics import (
    MetricError,
    MetricReport,
    UNMATCHED,
    ari,
    clustering_accuracy,
    evaluate,
    macro_f1,
    nmi,
)


def brute_force_accuracy(pred, truth) -> float:
    pred_ids, true_ids = sorted(set(pred)), sorted(set(truth))
    slots = true_ids + [None] * max(0, len(pred_ids) - len(true_ids))
    best = 0
    for perm in itertools.permutations(slots, len(pred_ids)):
        mapping = dict(zip(pred_ids, perm))
        best = max(best, sum(mapping[p] == t for p, t in zip(pred, truth)))
    return best / len(pred)


def entropy(labels) -> float:
    n = len(labels)
    return -sum(c / n * math.log(c / n) for c in Counter(labels).values())


def nmi_oracle(pred, truth) -> float:
    n = len(pred)
    joint = Counter(zip(pred, truth))
    cp, ct = Counter(pred), Counter(truth)
    mi = sum(c / n * math.log(c * n / (cp[p] * ct[t])) for (p, t), c in joint.items())
    denom = (entropy(pred) + entropy(truth)) / 2.0
    return mi / denom if denom > 0 else 1.0


def ari_oracle(pred, truth) -> float:
    comb = lambda x: x * (x - 1) / 2.0
    n = len(pred)
    index = sum(comb(c) for c in Counter(zip(pred, truth)).values())
    a = sum(comb(c) for c in Counter(pred).values())
    b = sum(comb(c) for c in Counter(truth).values())
    expected = a * b / comb(n)
    maximum = (a + b) / 2.0
    return (index - expected) / (maximum - expected)


class TestAccuracy:
    def test_identity(self):
        assert clustering_accuracy([0, 1, 2, 1], [0, 1, 2, 1])[0] == 1.0

    def test_relabeling(self):
        acc, mapping = clustering_accuracy([2, 2, 0, 1], [0, 0, 1, 2])
        assert acc == 1.0
        assert mapping == {2: 0, 0: 1, 1: 2}

    def test_hand_example(self):
        assert clustering_accuracy([0, 0, 1, 1], [0, 1, 1, 1])[0] == pytest.approx(0.75)

    def test_extra_cluster_unmatched(self):
        acc, mapping = clustering_accuracy([0, 1, 2], [0, 0, 1])
        assert acc == pytest.approx(2 / 3)
        assert sorted(mapping.values()).count(UNMATCHED) == 1

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            k = int(rng.integers(1, 7))
            n = int(rng.integers(k, 25))
            truth = rng.integers(0, k, n).tolist()
            pred = rng.integers(0, int(rng.integers(1, 7)), n).tolist()
            assert clustering_accuracy(pred, truth)[0] == brute_force_accuracy(pred, truth)


class TestNmi:
    def test_identical(self):
        assert nmi([0, 0, 1, 1, 2], [0, 0, 1, 1, 2]) == pytest.approx(1.0)

    def test_constant_prediction(self):
        assert nmi([0, 0, 0, 0], [0, 0, 1, 1]) == pytest.approx(0.0)

    def test_independent_partitions(self):
        assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_matches_oracle(self):
        pred, truth = [0, 0, 1, 1, 2, 2, 2], [0, 1, 1, 1, 2, 2, 0]
        assert nmi(pred, truth) == pytest.approx(nmi_oracle(pred, truth), abs=1e-10)


class TestAri:
    def test_identical(self):
        assert ari([1, 1, 0, 0], [0, 0, 1, 1]) == pytest.approx(1.0)

    def test_independent_partitions(self):
        # pair-counting formula: index 0, expected 1/3, max 2
        assert ari([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5, abs=1e-12)

    def test_single_clusters(self):
        assert ari([0, 0, 0], [0, 0, 0]) == pytest.approx(1.0)

    def test_matches_oracle(self):
        pred, truth = [0, 0, 1, 1, 2, 2, 2], [0, 1, 1, 1, 2, 2, 0]
        assert ari(pred, truth) == pytest.approx(ari_oracle(pred, truth), abs=1e-10)


class TestMacroF1:
    def test_relabeled_perfect(self):
        assert macro_f1([1, 1, 0, 0], [0, 0, 1, 1]) == pytest.approx(1.0)

    def test_hand_example(self):
        assert macro_f1([0, 0, 1, 1], [0, 1, 1, 1]) == pytest.approx((2 / 3 + 4 / 5) / 2)

    def test_single_cluster_prediction(self):
        assert macro_f1([0, 0, 0, 0], [0, 0, 1, 1]) == pytest.approx(1 / 3)


class TestEvaluate:
    def test_relabel_invariance(self):
        rng = np.random.default_rng(1)
        truth = rng.integers(0, 3, 40)
        pred = rng.integers(0, 3, 40)
        relabeled = np.array([2, 0, 1])[pred]
        a, b = evaluate(pred, truth), evaluate(relabeled, truth)
        for name in ("acc", "nmi", "ari", "f1"):
            assert getattr(a, name) == pytest.approx(getattr(b, name), abs=1e-12)

    def test_self_agreement(self):
        x = [0, 2, 1, 1, 0, 2]
        report = evaluate(x, x)
        assert report.nmi == pytest.approx(1.0)
        assert report.ari == pytest.approx(1.0)

    def test_non_contiguous_labels(self):
        report = evaluate([5, 5, 9, 9], [3, 3, 7, 7])
        assert report.acc == 1.0
        assert report.mapping == {5: 3, 9: 7}

    def test_dict_form(self):
        report = evaluate([0, 0, 1, 1], [0, 1, 1, 1])
        restored = MetricReport.from_dict(report.to_dict())
        assert restored.scores() == report.scores()
        assert restored.mapping == report.mapping
        np.testing.assert_array_equal(restored.contingency, report.contingency)

    def test_contingency_rows_are_predictions(self):
        report = evaluate([0, 0, 0, 1], [0, 1, 1, 1])
        np.testing.assert_array_equal(report.contingency, [[1, 2], [0, 1]])

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            evaluate([0, 1], [0, 1, 1])

    def test_negative_labels(self):
        with pytest.raises(MetricError):
            evaluate([0, -1], [0, 1])
