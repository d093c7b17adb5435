import random

import pytest

from tabcanon.core.errors import EmptyTokenStream
from tabcanon.model import BBox, Token, TokenSequence
from tabcanon.stages.align import AlignStage, Scoring, align_table_text, needleman_wunsch
from tabcanon.stages.base import TableItem
from tabcanon.stages.qc import cell_edit_distance
from tests.factories import cell, char_tokens, grid, gridded, random_layout_table, table

S = Scoring(2, -1, -1)


def _chars(text, boxes):
    return TokenSequence(granularity="char", tokens=tuple(Token(text=ch, bbox=BBox.of(*b)) for ch, b in zip(text, boxes)))


def test_identity():
    a = needleman_wunsch("ABC", "ABC", S)
    assert a.pairs == ((0, 0), (1, 1), (2, 2))
    assert a.score == 6


def test_one_mismatch():
    a = needleman_wunsch("ABC", "AXC", S)
    assert a.pairs == ((0, 0), (1, 1), (2, 2))
    assert a.score == 3


def test_all_gap():
    a = needleman_wunsch("AB", "", S)
    assert a.pairs == ()
    assert a.score == -2
    assert needleman_wunsch("", "", S).score == 0


def test_gap_in_the_middle():
    a = needleman_wunsch("cooperate", "co-operate", S)
    assert a.score == 2 * 9 - 1
    assert len(a.pairs) == 9


def test_score_is_symmetric():
    rng = random.Random(7)
    for _ in range(50):
        x = "".join(rng.choice("abc") for _ in range(rng.randint(0, 12)))
        y = "".join(rng.choice("abc") for _ in range(rng.randint(0, 12)))
        assert needleman_wunsch(x, y, S).score == needleman_wunsch(y, x, S).score


def test_band_keeps_optimum_near_the_diagonal():
    x, y = "the quick brown fox", "the quick brwn fox"
    assert needleman_wunsch(x, y, S, band=2).score == needleman_wunsch(x, y, S).score


def test_scoring_order():
    with pytest.raises(ValueError):
        Scoring(0, -1, -1)
    with pytest.raises(ValueError):
        Scoring(2, 1, -1)


def test_single_cell_box_is_union():
    t = grid([["AB"]])
    out, report = align_table_text(t, _chars("AB", [(0, 0, 5, 10), (5, 0, 10, 10)]))
    assert out.cells[0].text_box == BBox.of(0, 0, 10, 10)
    assert report.match_fractions == (1.0,)
    assert report.unmatched_cells == ()


def test_boxes_follow_sequence_order_not_space():
    t = grid([["A", "B"]])
    out, _ = align_table_text(t, _chars("AB", [(50, 0, 60, 10), (0, 0, 10, 10)]))
    assert out.cell_at(0, 0).text_box == BBox.of(50, 0, 60, 10)
    assert out.cell_at(0, 1).text_box == BBox.of(0, 0, 10, 10)


def test_hyphen_is_gapped():
    t = grid([["cooperate"]])
    tokens = _chars("co-operate", [(i, 0, i + 1, 10) for i in range(10)])
    out, report = align_table_text(t, tokens)
    assert out.cells[0].text_box == BBox.of(0, 0, 10, 10)
    assert report.match_fractions == (1.0,)
    assert report.unmatched_tokens == (2,)


def test_blank_and_unmatched_cells():
    t = grid([["", "zz"], ["ab", "cd"]])
    out, report = align_table_text(t, _chars("abcd", [(i, 0, i + 1, 10) for i in range(4)]))
    assert out.cell_at(0, 0).text_box is None
    assert report.match_fractions[0] is None
    assert out.cell_at(0, 1).text_box is None
    assert report.unmatched_cells == (1,)


def test_empty_token_stream():
    with pytest.raises(EmptyTokenStream):
        align_table_text(grid([["x"]]), TokenSequence())
    out, _ = align_table_text(grid([[""]]), TokenSequence())
    assert out.cells[0].text_box is None


def test_word_tokens_lend_their_box():
    t = grid([["ab", "c"]])
    words = TokenSequence(granularity="word", tokens=(Token(text="ab", bbox=BBox.of(0, 0, 20, 10)),
                                                      Token(text="c", bbox=BBox.of(30, 0, 40, 10))))
    out, _ = align_table_text(t, words)
    assert out.cell_at(0, 0).text_box == BBox.of(0, 0, 20, 10)


def _hyphenate(text: str, rng: random.Random) -> str:
    # a hyphen inside one word, like a line-break hyphenation, and doubled spaces
    words = text.split(" ")
    i = rng.choice([k for k, w in enumerate(words) if len(w) > 3])
    k = rng.randint(1, len(words[i]) - 1)
    words[i] = words[i][:k] + "-" + words[i][k:]
    return "  ".join(words)


def test_noisy_streams_still_box_every_cell():
    rng = random.Random(3)
    for _ in range(20):
        t = random_layout_table(rng)
        long = {(c.row_start, c.col_start): " ".join([c.text] * 6) for c in t.cells if not c.blank}
        t = t.evolve(cells=tuple(c.evolve(text=long.get((c.row_start, c.col_start), c.text)) for c in t.cells))
        budget = int(0.02 * sum(len(x.replace(" ", "")) for x in long.values()))
        noisy = dict(long)
        for pos, text in long.items():
            if budget and any(len(w) > 3 for w in text.split(" ")) and rng.random() < 0.5:
                noisy[pos] = _hyphenate(text, rng)
                budget -= 1
        tokens = char_tokens(t, noisy)

        aligned, report = align_table_text(t, tokens, S)
        assert not report.unmatched_cells
        assert all(c.text_box is not None for c in aligned.cells if not c.blank)
        assert cell_edit_distance(gridded(aligned), tokens) <= 0.05


def test_stage_records_report():
    t = table(1, 2, [cell(0, 0, "a"), cell(0, 1, "b")])
    item = TableItem(name="x", table=t, tokens=_chars("ab", [(0, 0, 1, 1), (5, 0, 6, 1)]))
    item = AlignStage("align", {"match": 2, "mismatch": -1, "gap": -1})(item)
    assert item.table.cell_at(0, 1).text_box == BBox.of(5, 0, 6, 1)
    assert item.reports[0][0] == "align"
