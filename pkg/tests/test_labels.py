"""Label format: parsing, emission, round-trips, and the class table."""

import math

import pytest
from hypothesis import given, strategies as st

from signdet.labels import (
    Annotation,
    Detection,
    LabelClassError,
    LabelFieldCountError,
    LabelNumericError,
    LabelRangeError,
    LabelWarning,
    NormBox,
    DatasetDescriptor,
    default_class_table,
    emit_label_file,
    emit_prediction_file,
    format_label_line,
    load_descriptor,
    parse_label_file,
    parse_label_line,
    parse_prediction_file,
    parse_prediction_line,
    save_descriptor,
)

MICRO = 1_000_000  # coordinate grid implied by six-decimal emission


def quantized_annotation(class_id, cx_i, cy_i, w_i, h_i):
    return Annotation(class_id, NormBox(cx_i / MICRO, cy_i / MICRO, w_i / MICRO, h_i / MICRO))


@st.composite
def annotations(draw):
    """Annotations with coordinates on the six-decimal grid."""
    w_i = draw(st.integers(1, MICRO))
    h_i = draw(st.integers(1, MICRO))
    cx_i = draw(st.integers(0, MICRO))
    cy_i = draw(st.integers(0, MICRO))
    class_id = draw(st.integers(0, 11))
    return quantized_annotation(class_id, cx_i, cy_i, w_i, h_i)


class TestParseLabelLine:
    def test_nominal_line(self):
        ann = parse_label_line("3 0.45 0.50 0.10 0.20")
        assert ann.class_id == 3
        assert ann.box == NormBox(0.45, 0.5, 0.1, 0.2)

    def test_full_image_box_is_legal(self):
        ann = parse_label_line("0 0.5 0.5 1.0 1.0")
        assert ann.box == NormBox(0.5, 0.5, 1.0, 1.0)
        assert ann.box.corner_overflow() == 0.0

    def test_width_out_of_range(self):
        with pytest.raises(LabelRangeError) as err:
            parse_label_line("2 0.5 0.5 1.2 0.1")
        assert err.value.field == "w"

    def test_field_count(self):
        with pytest.raises(LabelFieldCountError):
            parse_label_line("1 0.5 0.5 0.5")
        with pytest.raises(LabelFieldCountError):
            parse_label_line("1 0.5 0.5 0.5 0.5 0.9")

    def test_non_numeric_token(self):
        with pytest.raises(LabelNumericError) as err:
            parse_label_line("1 0.5 abc 0.5 0.5")
        assert err.value.field == "cy"

    def test_bad_class_ids(self):
        with pytest.raises(LabelClassError):
            parse_label_line("-1 0.5 0.5 0.5 0.5")
        with pytest.raises(LabelClassError):
            parse_label_line("1.5 0.5 0.5 0.5 0.5")

    def test_non_finite_rejected(self):
        with pytest.raises(LabelRangeError):
            parse_label_line("1 nan 0.5 0.5 0.5")
        with pytest.raises(LabelRangeError):
            parse_label_line("1 0.5 inf 0.5 0.5")

    def test_corner_overflow_allowed_unless_tolerance_given(self):
        # corners reach x = 1.05; in-range fields parse under defaults
        ann = parse_label_line("0 0.9 0.5 0.3 0.2")
        assert ann.box.cx == pytest.approx(0.9)
        with pytest.raises(LabelRangeError):
            parse_label_line("0 0.9 0.5 0.3 0.2", corner_tolerance=0.0)
        ann = parse_label_line("0 0.9 0.5 0.3 0.2", corner_tolerance=0.1)
        assert ann.box.cx == pytest.approx(0.9)

    def test_lenient_clamps_small_overflow_and_warns(self):
        with pytest.warns(LabelWarning):
            ann = parse_label_line("0 0.5 0.5 1.0005 1.0", strict=False)
        assert ann.box.w == 1.0
        with pytest.warns(LabelWarning):
            ann = parse_label_line("0 0.9996 0.5 0.001 0.001", strict=False)
        assert ann.box.corner_overflow() == 0.0

    def test_lenient_still_rejects_large_overflow(self):
        with pytest.raises(LabelRangeError):
            parse_label_line("0 0.9 0.5 0.3 0.2", strict=False)
        with pytest.raises(LabelRangeError):
            parse_label_line("0 0.5 0.5 1.2 1.0", strict=False)


class TestParseLabelFile:
    def test_empty_file_is_valid_negative(self):
        assert parse_label_file("") == []
        assert parse_label_file("\n\n") == []

    def test_line_numbers_on_errors(self):
        text = "0 0.5 0.5 0.2 0.2\n\n7 0.5 0.5 2.0 0.2\n"
        with pytest.raises(LabelRangeError) as err:
            parse_label_file(text)
        assert err.value.line == 3
        assert "line 3" in str(err.value)

    def test_no_partial_results(self):
        text = "0 0.5 0.5 0.2 0.2\nbroken\n"
        with pytest.raises(LabelFieldCountError):
            parse_label_file(text)


class TestEmission:
    def test_six_decimal_format(self):
        ann = Annotation(4, NormBox(0.5, 0.25, 0.125, 0.0625))
        assert format_label_line(ann) == "4 0.500000 0.250000 0.125000 0.062500"

    def test_emit_parse_round_trip_examples(self):
        anns = [
            Annotation(0, NormBox(0.5, 0.5, 1.0, 1.0)),
            Annotation(11, NormBox(0.123456, 0.2, 0.3, 0.4)),
        ]
        assert parse_label_file(emit_label_file(anns)) == anns

    def test_emit_is_a_fixpoint_of_parse(self):
        # six-decimal values survive parse -> emit exactly, including a box
        # that overhangs the left image edge
        assert emit_label_file([parse_label_line("1 0.123456 0.2 0.3 0.4")]) == (
            "1 0.123456 0.200000 0.300000 0.400000\n"
        )
        text = "1 0.123456 0.200000 0.300000 0.400000\n"
        assert emit_label_file(parse_label_file(text)) == text

    def test_lf_endings_and_trailing_newline(self):
        text = emit_label_file([Annotation(0, NormBox(0.5, 0.5, 0.5, 0.5))])
        assert text.endswith("\n")
        assert "\r" not in text

    @given(st.lists(annotations(), max_size=20))
    def test_round_trip_property(self, anns):
        assert parse_label_file(emit_label_file(anns)) == anns

    @given(st.lists(annotations(), max_size=20))
    def test_reemission_is_byte_stable(self, anns):
        text = emit_label_file(anns)
        assert emit_label_file(parse_label_file(text)) == text

    def test_invalid_annotation_cannot_be_built(self):
        with pytest.raises(LabelRangeError):
            Annotation(0, NormBox(0.5, 0.5, 0.0, 0.5))
        with pytest.raises(LabelClassError):
            Annotation(-2, NormBox(0.5, 0.5, 0.5, 0.5))


class TestPredictions:
    def test_parse_prediction_line(self):
        det = parse_prediction_line("2 0.5 0.5 0.25 0.25 0.875")
        assert det == Detection(2, NormBox(0.5, 0.5, 0.25, 0.25), 0.875)

    def test_confidence_range(self):
        with pytest.raises(LabelRangeError) as err:
            parse_prediction_line("2 0.5 0.5 0.25 0.25 1.5")
        assert err.value.field == "confidence"

    def test_round_trip(self):
        dets = [
            Detection(0, NormBox(0.5, 0.5, 0.5, 0.5), 0.25),
            Detection(3, NormBox(0.25, 0.75, 0.125, 0.25), 1.0),
        ]
        assert parse_prediction_file(emit_prediction_file(dets)) == dets


class TestClassTable:
    def test_twelve_classes_in_order(self):
        table = default_class_table()
        assert len(table) == 12
        assert table.names == (
            "illu", "prema", "dabbulu", "kadhu", "okati", "avunu",
            "bagunna", "kutumbam", "Namasthe", "sahayam", "enduku", "ekkada",
        )
        assert table.glosses[0] == "Home"
        assert table.glosses[8] == "Pray"

    def test_indices_contiguous(self):
        table = default_class_table()
        assert [e.index for e in table] == list(range(12))


class TestDescriptor:
    def test_round_trip(self, tmp_path):
        desc = DatasetDescriptor("images/train", "images/val", default_class_table().names)
        path = tmp_path / "data.yaml"
        save_descriptor(desc, path)
        text = path.read_text()
        for key in ("train:", "val:", "nc:", "names:"):
            assert key in text
        assert load_descriptor(path) == desc

    def test_nc_mismatch_rejected(self, tmp_path):
        path = tmp_path / "data.yaml"
        path.write_text("train: a\nval: b\nnc: 3\nnames: [x, y]\n")
        with pytest.raises(ValueError):
            load_descriptor(path)

    def test_missing_keys_rejected(self, tmp_path):
        path = tmp_path / "data.yaml"
        path.write_text("train: a\nnames: [x]\n")
        with pytest.raises(ValueError) as err:
            load_descriptor(path)
        assert "val" in str(err.value)


class TestNormBoxInvariants:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(cx=-0.1, cy=0.5, w=0.5, h=0.5),
            dict(cx=0.5, cy=1.1, w=0.5, h=0.5),
            dict(cx=0.5, cy=0.5, w=0.0, h=0.5),
            dict(cx=0.5, cy=0.5, w=0.5, h=1.0001),
            dict(cx=math.nan, cy=0.5, w=0.5, h=0.5),
        ],
    )
    def test_rejects_out_of_domain(self, kwargs):
        with pytest.raises(LabelRangeError):
            NormBox(**kwargs)

    def test_corner_overflow_measure(self):
        assert NormBox(0.5, 0.5, 1.0, 1.0).corner_overflow() == 0.0
        assert NormBox(0.9, 0.5, 0.3, 0.2).corner_overflow() == pytest.approx(0.05)
