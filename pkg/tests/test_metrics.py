"""Detection metrics against hand walks and brute-force oracles."""

import itertools
import math

import numpy as np
import pytest

from signdet.labels import Annotation, Detection, NormBox
from signdet.metrics import (
    F1Curve,
    MatchResult,
    average_precision,
    confusion_matrix,
    f1,
    f1_confidence_curve,
    map_at_50,
    match,
    per_class_ap,
    pr_curve,
    precision,
    rates,
    recall,
)

from oracles import ap_oracle, greedy_match_counts, random_eval_instance

BOX = NormBox(0.5, 0.5, 0.2, 0.2)
NEAR_BOX = NormBox(0.51, 0.5, 0.2, 0.2)  # IoU with BOX well above 0.5
FAR_BOX = NormBox(0.15, 0.15, 0.2, 0.2)


def det(box, conf, class_id=0):
    return Detection(class_id, box, conf)


def gt(box, class_id=0):
    return Annotation(class_id, box)


class TestMatch:
    def test_single_tp(self):
        result = match([det(NEAR_BOX, 0.9)], [gt(BOX)], 0.5)
        assert (result.tp, result.fp, result.fn) == (1, 0, 0)
        assert result.detection_gt == (0,)

    def test_two_dets_one_gt_greedy(self):
        high = det(NEAR_BOX, 0.9)
        low = det(BOX, 0.8)
        result = match([low, high], [gt(BOX)], 0.5)
        # the higher-confidence det wins the gt regardless of input order
        assert result.detection_is_tp == (False, True)
        assert (result.tp, result.fp, result.fn) == (1, 1, 0)

    def test_two_dets_one_gt_matches_brute_force(self):
        # enumerate every injective det->gt assignment with IoU >= threshold;
        # the greedy result must be one of them and must take the
        # higher-confidence detection
        dets = [det(NEAR_BOX, 0.9), det(BOX, 0.8)]
        gts = [gt(BOX)]
        valid = []
        for assignment in itertools.product([None, 0], repeat=2):
            used = [g for g in assignment if g is not None]
            if len(used) != len(set(used)):
                continue
            valid.append(assignment)
        result = match(dets, gts, 0.5)
        assert result.detection_gt in valid
        assert result.detection_gt == (0, None)

    def test_cross_class_never_matches(self):
        result = match([det(BOX, 0.9, class_id=0)], [gt(BOX, class_id=1)], 0.5)
        assert (result.tp, result.fp, result.fn) == (0, 1, 1)

    def test_iou_below_threshold_is_fp(self):
        result = match([det(FAR_BOX, 0.9)], [gt(BOX)], 0.5)
        assert (result.tp, result.fp, result.fn) == (0, 1, 1)

    def test_count_identities_random(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            images, _ = random_eval_instance(rng)
            for dets, gts in images:
                result = match(dets, gts, 0.5)
                assert result.tp + result.fp == len(dets)
                assert result.tp + result.fn == len(gts)
                matched_gts = [g for g in result.detection_gt if g is not None]
                assert len(matched_gts) == len(set(matched_gts))
                assert result.tp == sum(result.gt_matched)

    def test_agrees_with_independent_matcher(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            images, _ = random_eval_instance(rng)
            for dets, gts in images:
                result = match(dets, gts, 0.5)
                assert (result.tp, result.fp, result.fn) == greedy_match_counts(dets, gts, 0.5)


class TestRates:
    def test_formulas(self):
        assert precision(9, 1) == pytest.approx(0.9)
        assert recall(9, 3) == pytest.approx(0.75)
        assert f1(0.5, 1.0) == pytest.approx(2 / 3)

    def test_published_rows_reproduce(self):
        assert f1(0.922, 0.782) == pytest.approx(0.846, abs=5e-4)
        assert f1(0.909, 0.902) == pytest.approx(0.905, abs=5e-4)

    def test_zero_denominator_conventions(self):
        assert precision(0, 0) == 0.0
        assert recall(0, 0) == 0.0
        assert f1(0.0, 0.0) == 0.0
        r = rates(0, 0, 0)
        assert not r.precision_defined
        assert not r.recall_defined
        assert not r.f1_defined
        filled = rates(3, 1, 2)
        assert filled.precision_defined and filled.recall_defined and filled.f1_defined
        assert filled.precision == pytest.approx(0.75)
        assert filled.recall == pytest.approx(0.6)

    def test_mean_inequality_chain(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            p, r = rng.uniform(1e-6, 1.0, size=2)
            harmonic = f1(p, r)
            geometric = math.sqrt(p * r)
            arithmetic = (p + r) / 2
            assert harmonic <= geometric + 1e-12
            assert geometric <= arithmetic + 1e-12

    def test_f1_symmetry(self):
        assert f1(0.3, 0.8) == pytest.approx(f1(0.8, 0.3))


class TestPRCurve:
    def test_single_tp_point(self):
        images = [([det(NEAR_BOX, 0.9)], [gt(BOX)])]
        curve = pr_curve(images, 0, 0.5)
        assert curve.n_gt == 1
        assert len(curve.points) == 1
        point = curve.points[0]
        assert (point.precision, point.recall) == (1.0, 1.0)

    def test_tp_then_fp_walk(self):
        images = [([det(NEAR_BOX, 0.9), det(FAR_BOX, 0.4)], [gt(BOX)])]
        curve = pr_curve(images, 0, 0.5)
        assert [(p.precision, p.recall) for p in curve.points] == [(1.0, 1.0), (0.5, 1.0)]

    def test_fp_then_tp_walk(self):
        images = [([det(FAR_BOX, 0.9), det(NEAR_BOX, 0.4)], [gt(BOX)])]
        curve = pr_curve(images, 0, 0.5)
        assert [(p.precision, p.recall) for p in curve.points] == [(0.0, 0.0), (0.5, 1.0)]

    def test_confidences_non_increasing_across_images(self):
        images = [
            ([det(NEAR_BOX, 0.3)], [gt(BOX)]),
            ([det(NEAR_BOX, 0.8)], [gt(BOX)]),
        ]
        curve = pr_curve(images, 0, 0.5)
        confs = [p.confidence for p in curve.points]
        assert confs == sorted(confs, reverse=True)


class TestAveragePrecision:
    def test_perfect_curve(self):
        images = [([det(NEAR_BOX, 0.9)], [gt(BOX)])]
        assert average_precision(pr_curve(images, 0, 0.5)) == pytest.approx(1.0)

    def test_fp_then_tp_is_half(self):
        images = [([det(FAR_BOX, 0.9), det(NEAR_BOX, 0.4)], [gt(BOX)])]
        assert average_precision(pr_curve(images, 0, 0.5)) == pytest.approx(0.5)

    def test_trailing_fp_preserves_ap(self):
        images = [([det(NEAR_BOX, 0.9), det(FAR_BOX, 0.4)], [gt(BOX)])]
        assert average_precision(pr_curve(images, 0, 0.5)) == pytest.approx(1.0)

    def test_matches_threshold_enumeration_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            images, n_classes = random_eval_instance(rng)
            for class_id in range(n_classes):
                curve = pr_curve(images, class_id, 0.5)
                if curve.n_gt == 0:
                    continue
                expected = ap_oracle(images, class_id, 0.5)
                assert average_precision(curve) == pytest.approx(expected, abs=1e-9)

    def test_duplicate_lower_confidence_detection_never_raises_ap(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            # well-separated ground truths so a duplicate can only contend
            # for the ground truth its original matched
            gts = [gt(NormBox(0.2, 0.2, 0.15, 0.15)), gt(NormBox(0.8, 0.8, 0.15, 0.15))]
            dets = [
                det(NormBox(0.2, 0.2, 0.15, 0.15), float(rng.uniform(0.5, 1.0))),
                det(NormBox(0.8, 0.8, 0.15, 0.15), float(rng.uniform(0.5, 1.0))),
            ]
            images = [(dets, gts)]
            before = average_precision(pr_curve(images, 0, 0.5))
            source = dets[int(rng.integers(0, 2))]
            duplicate = Detection(0, source.box, source.confidence * float(rng.uniform(0.1, 0.9)))
            images_after = [(dets + [duplicate], gts)]
            after = average_precision(pr_curve(images_after, 0, 0.5))
            assert after <= before + 1e-12

    def test_eleven_point_variant(self):
        images = [([det(NEAR_BOX, 0.9)], [gt(BOX)])]
        curve = pr_curve(images, 0, 0.5)
        assert average_precision(curve, interpolation="11_point") == pytest.approx(1.0)
        with pytest.raises(ValueError):
            average_precision(curve, interpolation="5_point")

    def test_eleven_point_partial_curve(self):
        # one TP then one FP over two gts: envelope is 1.0 up to recall 0.5,
        # 0 after, so the 11-point mean samples six 1.0 values out of eleven
        images = [([det(NEAR_BOX, 0.9), det(FAR_BOX, 0.4)], [gt(BOX), gt(NormBox(0.8, 0.2, 0.1, 0.1))])]
        curve = pr_curve(images, 0, 0.5)
        assert average_precision(curve, interpolation="11_point") == pytest.approx(6 / 11)


class TestMap:
    def test_perfect_dataset(self):
        images = [
            ([det(NEAR_BOX, 0.9, class_id=0)], [gt(BOX, class_id=0)]),
            ([det(NEAR_BOX, 0.8, class_id=1)], [gt(BOX, class_id=1)]),
        ]
        assert map_at_50(images) == pytest.approx(1.0)

    def test_half_dataset(self):
        images = [
            ([det(NEAR_BOX, 0.9, class_id=0)], [gt(BOX, class_id=0)]),
            ([], [gt(BOX, class_id=1)]),  # class 1 entirely missed
        ]
        assert map_at_50(images) == pytest.approx(0.5)

    def test_class_without_gt_excluded(self):
        images = [
            ([det(NEAR_BOX, 0.9, class_id=0), det(FAR_BOX, 0.8, class_id=3)], [gt(BOX, class_id=0)]),
        ]
        aps = per_class_ap(images)
        assert set(aps) == {0}
        assert map_at_50(images) == pytest.approx(1.0)

    def test_empty_dataset_raises(self):
        with pytest.raises(ValueError):
            map_at_50([([], [])])


class TestF1ConfidenceCurve:
    def test_step_shape(self):
        images = [([det(NEAR_BOX, 0.9)], [gt(BOX)])]
        curve = f1_confidence_curve(images, 0.5)
        by_threshold = dict(zip(curve.thresholds, curve.values))
        assert by_threshold[0.0] == pytest.approx(1.0)
        assert by_threshold[0.9] == pytest.approx(1.0)
        assert by_threshold[0.901] == pytest.approx(0.0)
        assert by_threshold[1.0] == pytest.approx(0.0)

    def test_default_grid(self):
        images = [([det(NEAR_BOX, 0.9)], [gt(BOX)])]
        curve = f1_confidence_curve(images, 0.5)
        assert len(curve.thresholds) == 1001
        assert curve.thresholds[0] == 0.0
        assert curve.thresholds[-1] == 1.0

    def test_zero_threshold_equals_unfiltered_match(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            images, n_classes = random_eval_instance(rng)
            class_ids = sorted({g.class_id for _, gts in images for g in gts})
            if not class_ids:
                continue
            curve = f1_confidence_curve(images, 0.5, grid=[0.0])
            f1_sum = 0.0
            for class_id in class_ids:
                tp = fp = fn = 0
                for dets, gts in images:
                    result = match(
                        [d for d in dets if d.class_id == class_id],
                        [g for g in gts if g.class_id == class_id],
                        0.5,
                    )
                    tp += result.tp
                    fp += result.fp
                    fn += result.fn
                f1_sum += f1(precision(tp, fp), recall(tp, fn))
            assert curve.values[0] == pytest.approx(f1_sum / len(class_ids), abs=1e-12)

    def test_argmax_reproducible_and_first_of_ties(self):
        images = [([det(NEAR_BOX, 0.9)], [gt(BOX)])]
        first = f1_confidence_curve(images, 0.5)
        second = f1_confidence_curve(images, 0.5)
        assert first == second
        # F1 is 1.0 on every threshold up to 0.9; the earliest grid point wins
        assert first.best_threshold == 0.0
        assert first.best_f1 == pytest.approx(1.0)

    def test_no_gt_raises(self):
        with pytest.raises(ValueError):
            f1_confidence_curve([([], [])], 0.5)


class TestConfusionMatrix:
    def test_perfect_detection_is_diagonal(self):
        images = [
            ([det(NEAR_BOX, 0.9, class_id=0)], [gt(BOX, class_id=0)]),
            ([det(NEAR_BOX, 0.8, class_id=2)], [gt(BOX, class_id=2)]),
        ]
        counts = confusion_matrix(images, num_classes=3)
        expected = np.zeros((4, 4), dtype=np.int64)
        expected[0, 0] = 1
        expected[2, 2] = 1
        assert np.array_equal(counts, expected)

    def test_cross_class_confusion_cell(self):
        # detector says class 1 on top of a class-0 gt at high IoU
        images = [([det(NEAR_BOX, 0.9, class_id=1)], [gt(BOX, class_id=0)])]
        counts = confusion_matrix(images, num_classes=2)
        assert counts[0, 1] == 1
        assert counts.sum() == 1

    def test_spurious_detection_hits_background_row(self):
        images = [([det(FAR_BOX, 0.9, class_id=1)], [gt(BOX, class_id=0)])]
        counts = confusion_matrix(images, num_classes=2)
        assert counts[2, 1] == 1  # background row
        assert counts[0, 2] == 1  # unmatched gt -> background column

    def test_confidence_threshold_applies(self):
        images = [([det(NEAR_BOX, 0.1, class_id=0)], [gt(BOX, class_id=0)])]
        counts = confusion_matrix(images, num_classes=1, confidence_threshold=0.25)
        assert counts[0, 1] == 1  # gt unmatched because the det was dropped
        assert counts[1, 0] == 0

    def test_rejects_out_of_range_classes(self):
        images = [([det(NEAR_BOX, 0.9, class_id=5)], [gt(BOX, class_id=0)])]
        with pytest.raises(ValueError):
            confusion_matrix(images, num_classes=2)

    def test_agrees_with_brute_force_on_random_instances(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            images, n_classes = random_eval_instance(rng)
            counts = confusion_matrix(images, num_classes=n_classes)
            # row sums: every gt appears exactly once in its class row, and
            # background-row entries equal unmatched kept detections
            n_gts = sum(len(gts) for _, gts in images)
            kept = sum(1 for dets, _ in images for d in dets if d.confidence >= 0.25)
            assert counts[:n_classes, :].sum() == n_gts
            assert counts[:, :n_classes].sum() == kept
