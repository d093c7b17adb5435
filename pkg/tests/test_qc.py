import pytest

from tabcanon.core.errors import MissingBoxes
from tabcanon.model import BBox, Token, TokenSequence
from tabcanon.stages.base import TableItem
from tabcanon.stages.qc import (
    EDIT_DISTANCE, OBJECT_COUNT, OVERLAP, WORD_CONTAINMENT, QCStage, QCThresholds, cell_edit_distance, check_overlap,
    count_objects, normalized_edit_distance, qc, word_containment,
)
from tests.factories import ROW_H, boxed_grid, cell, grid, retext, table


def _words(*boxes, text="w"):
    return TokenSequence(granularity="word", tokens=tuple(Token(text=text, bbox=BBox.of(*b)) for b in boxes))


def _with_first_word(words: TokenSequence, text: str) -> TokenSequence:
    first = words.tokens[0].model_copy(update={"text": text})
    return words.model_copy(update={"tokens": (first,) + words.tokens[1:]})


def test_clean_grid_is_accepted():
    t, words = boxed_grid(3, 3, header_rows=1)
    report = qc(t, words)
    assert report.verdict == "accept"
    assert report.reasons == ()
    assert report.mean_cell_edit_distance == 0.0
    assert report.mean_word_containment == 1.0
    assert report.object_count == 1 + 3 + 3 + 1


def test_check_overlap():
    t, _ = boxed_grid(2, 2)
    assert check_overlap(t)
    overlapping = (BBox.of(0, 0, 200, ROW_H + 1), BBox.of(0, ROW_H, 200, 2 * ROW_H))
    t, words = boxed_grid(2, 2, row_boxes=overlapping)
    assert not check_overlap(t)
    report = qc(t, words)
    assert report.verdict == "reject" and OVERLAP in report.reasons
    with pytest.raises(MissingBoxes):
        check_overlap(grid([["a"]]))


def test_normalized_edit_distance():
    assert normalized_edit_distance("hello", "helo") == pytest.approx(0.2)
    assert normalized_edit_distance("", "") == 0.0
    assert normalized_edit_distance("abc", "") == 1.0


@pytest.mark.parametrize("n_b, verdict", [(49, "accept"), (51, "reject")])
def test_edit_distance_threshold(n_b, verdict):
    t, words = boxed_grid(1, 10)
    t = retext(t, (0, 0), "a" * 100)
    words = _with_first_word(words, "b" * n_b + "a" * (100 - n_b))
    assert cell_edit_distance(t, words) == pytest.approx(n_b / 1000)
    report = qc(t, words)
    assert report.verdict == verdict
    assert (EDIT_DISTANCE in report.reasons) == (verdict == "reject")


def test_edit_distance_ignores_whitespace():
    t, words = boxed_grid(1, 2)
    t = retext(t, (0, 0), "r0 c0")
    assert cell_edit_distance(t, words) == 0.0


def test_word_containment_mean():
    t, _ = boxed_grid(1, 2)
    words = _words((10, 5, 30, 15), (110, 5, 130, 15), (70, 5, 120, 15))
    value, vacuous = word_containment(t, words)
    assert value == pytest.approx((1 + 1 + 0.6) / 3)
    assert not vacuous


def test_no_word_inside_passes_vacuously():
    t, _ = boxed_grid(1, 2)
    assert word_containment(t, _words((500, 500, 510, 510))) == (1.0, True)
    item = QCStage("qc")(TableItem(name="t", table=t, tokens=_words((500, 500, 510, 510))))
    assert item.reports[0][1].vacuous_containment


@pytest.mark.parametrize("x0, verdict", [(10.1, "reject"), (9.9, "accept")])
def test_containment_threshold(x0, verdict):
    t, _ = boxed_grid(1, 2)
    t = t.evolve(cells=tuple(c.evolve(text="") for c in t.cells))
    words = _words((x0, 5, x0 + 100, 15))
    value, _ = word_containment(t, words)
    assert value == pytest.approx((100 - x0) / 100)
    report = qc(t, TokenSequence(), words)
    assert report.verdict == verdict
    assert (WORD_CONTAINMENT in report.reasons) == (verdict == "reject")


@pytest.mark.parametrize("n_cols, verdict", [(48, "accept"), (49, "reject")])
def test_object_count_threshold(n_cols, verdict):
    t, words = boxed_grid(50, n_cols, header_rows=1)
    assert count_objects(t) == 1 + 50 + n_cols + 1
    report = qc(t, words)
    assert report.verdict == verdict
    assert report.reasons == (() if verdict == "accept" else (OBJECT_COUNT,))


def test_count_objects_counts_prh_rows_and_spans():
    t = table(3, 2, [cell(0, 0, "a", c1=1, is_column_header=True), cell(1, 0, "S", c1=1, is_projected_row_header=True),
                     cell(2, 0, "x"), cell(2, 1, "y")])
    # table, 3 rows, 2 columns, header, one projected row header, one spanning header cell
    assert count_objects(t) == 1 + 3 + 2 + 1 + 1 + 1


def test_stage_thresholds_come_from_config():
    t, words = boxed_grid(50, 48, header_rows=1)
    item = QCStage("qc", {"max_objects": 99})(TableItem(name="t", table=t, tokens=words))
    assert item.reasons == [OBJECT_COUNT]
    assert QCStage("qc").thresholds() == QCThresholds()
