import pytest

from simdet.errors import ShapeError
from simdet.evalkit.boxes import Box, iou


def interval(start, end):
    return Box((float(start),), (float(end - start),))


def test_identical_boxes():
    box = Box((3.0, 4.0), (32.0, 32.0))
    assert iou(box, box) == 1.0


def test_disjoint_boxes():
    assert iou(Box((0.0, 0.0), (32.0, 32.0)), Box((32.0, 0.0), (32.0, 32.0))) == 0.0


def test_overlapping_intervals():
    assert iou(interval(0, 10), interval(5, 15)) == pytest.approx(1 / 3)


def test_quarter_overlap_in_two_dimensions():
    assert iou(Box((0.0, 0.0), (2.0, 2.0)), Box((1.0, 1.0), (2.0, 2.0))) == pytest.approx(1 / 7)


def test_rank_mismatch_rejected():
    with pytest.raises(ShapeError, match="cannot compare"):
        iou(interval(0, 1), Box((0.0, 0.0), (1.0, 1.0)))


@pytest.mark.parametrize(("offsets", "extents"), [((0.0,), (0.0,)), ((0.0, 1.0), (2.0,)), ((), ())])
def test_invalid_boxes_rejected(offsets, extents):
    with pytest.raises(ShapeError):
        Box(offsets, extents)


def test_shift_moves_start_and_end_independently():
    assert interval(10, 20).shifted(-2, 3) == interval(8, 23)


def test_shift_past_the_other_end_collapses():
    assert interval(2, 10).shifted(5, -5) is None
    assert interval(2, 10).shifted(4, -4) is None
    assert interval(2, 10).shifted(3, -4) == interval(5, 6)


def test_shift_needs_one_axis():
    with pytest.raises(ShapeError, match="1-D"):
        Box((0.0, 0.0), (1.0, 1.0)).shifted(1, 1)


def test_clamp_to_target():
    assert interval(-3, 5).clamped((100.0,)) == interval(0, 5)
    assert interval(95, 110).clamped((100.0,)) == interval(95, 100)
    assert interval(120, 130).clamped((100.0,)) is None
