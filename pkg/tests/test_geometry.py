"""Geometry: corner conversion round-trips, IoU identities, NMS behavior."""

import pytest
from hypothesis import given, strategies as st

from signdet.geometry import CornerBox, from_corners, iou, iou_norm, iou_wh, nms, to_corners
from signdet.labels import Detection, NormBox


@st.composite
def norm_boxes(draw):
    w = draw(st.floats(1e-6, 1.0, allow_nan=False))
    h = draw(st.floats(1e-6, 1.0, allow_nan=False))
    cx = draw(st.floats(0.0, 1.0, allow_nan=False))
    cy = draw(st.floats(0.0, 1.0, allow_nan=False))
    return NormBox(cx, cy, w, h)


class TestCornerConversion:
    def test_known_values(self):
        corners = to_corners(NormBox(0.5, 0.5, 0.5, 0.25))
        assert corners == CornerBox(0.25, 0.375, 0.75, 0.625)

    def test_from_corners_with_clamp(self):
        # NormBox(0.1, 0.1, 0.4, 0.4) has corners at (-0.1, -0.1, 0.3, 0.3)
        corners = to_corners(NormBox(0.1, 0.1, 0.4, 0.4))
        clamped = from_corners(corners, clamp=True)
        assert clamped.cx == pytest.approx(0.15)
        assert clamped.cy == pytest.approx(0.15)
        assert clamped.w == pytest.approx(0.3)
        assert clamped.h == pytest.approx(0.3)

    def test_out_of_order_corners_rejected(self):
        with pytest.raises(ValueError):
            CornerBox(0.5, 0.0, 0.4, 1.0)

    @given(norm_boxes())
    def test_round_trip_tight(self, box):
        back = from_corners(to_corners(box))
        assert abs(back.cx - box.cx) <= 1e-12
        assert abs(back.cy - box.cy) <= 1e-12
        assert abs(back.w - box.w) <= 1e-12
        assert abs(back.h - box.h) <= 1e-12


class TestIoU:
    def test_known_overlap(self):
        # unit-square pair offset by 1: intersection 1, union 7
        assert iou(CornerBox(0, 0, 2, 2), CornerBox(1, 1, 3, 3)) == pytest.approx(1 / 7)

    def test_disjoint_is_zero(self):
        assert iou(CornerBox(0, 0, 0.2, 0.2), CornerBox(0.5, 0.5, 0.9, 0.9)) == 0.0

    def test_degenerate_is_zero(self):
        line = CornerBox(0.1, 0.1, 0.1, 0.9)
        assert iou(line, line) == 0.0
        assert iou(line, CornerBox(0, 0, 1, 1)) == 0.0

    def test_identity(self):
        box = CornerBox(0.1, 0.2, 0.6, 0.9)
        assert iou(box, box) == pytest.approx(1.0)

    @given(norm_boxes(), norm_boxes())
    def test_bounds_and_symmetry(self, a, b):
        value = iou_norm(a, b)
        assert 0.0 <= value <= 1.0 + 1e-12
        assert value == pytest.approx(iou_norm(b, a))

    def test_iou_wh_matches_common_center_iou(self):
        pairs = [((0.2, 0.4), (0.3, 0.3)), ((1.0, 1.0), (0.5, 0.5)), ((0.1, 0.9), (0.9, 0.1))]
        for a, b in pairs:
            centered = iou_norm(NormBox(0.5, 0.5, *a), NormBox(0.5, 0.5, *b))
            assert iou_wh(a, b) == pytest.approx(centered)

    def test_iou_wh_identical_is_one(self):
        assert iou_wh((0.25, 0.5), (0.25, 0.5)) == pytest.approx(1.0)


def det(cx, cy, w, h, conf, class_id=0):
    return Detection(class_id, NormBox(cx, cy, w, h), conf)


class TestNMS:
    def test_identical_boxes_keep_top(self):
        dets = [det(0.5, 0.5, 0.2, 0.2, 0.9), det(0.5, 0.5, 0.2, 0.2, 0.8)]
        assert nms(dets) == [dets[0]]

    def test_confidence_threshold_drops(self):
        dets = [det(0.5, 0.5, 0.2, 0.2, 0.2)]
        assert nms(dets) == []
        assert nms(dets, confidence_threshold=0.2) == dets

    def test_class_aware_keeps_cross_class_overlap(self):
        dets = [det(0.5, 0.5, 0.2, 0.2, 0.9, class_id=0), det(0.5, 0.5, 0.2, 0.2, 0.8, class_id=1)]
        assert nms(dets) == dets
        assert nms(dets, class_aware=False) == [dets[0]]

    def test_ties_broken_by_input_index(self):
        a = det(0.3, 0.3, 0.2, 0.2, 0.7)
        b = det(0.31, 0.3, 0.2, 0.2, 0.7)  # overlaps a heavily
        assert nms([a, b]) == [a]
        assert nms([b, a]) == [b]

    def test_output_sorted_by_confidence(self):
        dets = [det(0.2, 0.2, 0.1, 0.1, 0.5), det(0.8, 0.8, 0.1, 0.1, 0.9)]
        kept = nms(dets)
        assert [d.confidence for d in kept] == [0.9, 0.5]

    def test_idempotent(self):
        rng_boxes = [
            det(0.3, 0.3, 0.3, 0.3, 0.9),
            det(0.35, 0.3, 0.3, 0.3, 0.8),
            det(0.8, 0.8, 0.2, 0.2, 0.7),
            det(0.79, 0.8, 0.2, 0.2, 0.6),
        ]
        once = nms(rng_boxes)
        assert nms(once) == once

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            nms([], iou_threshold=1.5)
        with pytest.raises(ValueError):
            nms([], confidence_threshold=-0.1)

    @given(
        st.lists(
            st.tuples(
                st.floats(0.1, 0.9), st.floats(0.1, 0.9),
                st.floats(0.05, 0.2), st.floats(0.05, 0.2),
                st.floats(0.0, 1.0), st.integers(0, 2),
            ),
            max_size=12,
        )
    )
    def test_invariants_hold(self, raw):
        dets = [det(cx, cy, w, h, conf, class_id) for cx, cy, w, h, conf, class_id in raw]
        kept = nms(dets)
        confs = [d.confidence for d in kept]
        assert confs == sorted(confs, reverse=True)
        assert all(d.confidence >= 0.25 for d in kept)
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                if a.class_id == b.class_id:
                    assert iou_norm(a.box, b.box) <= 0.45 + 1e-12
        assert nms(kept) == kept
