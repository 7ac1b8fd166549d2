import json

import pytest
from hypothesis import given, settings, strategies as st

from sara.geometry import PixelPoint
from sara.layout import (
    LayoutParseError,
    LayoutValidationError,
    WordBox,
    build_reading_order,
    context_window,
    parse_layout,
    segment_paragraphs,
    word_at,
)


def doc(words, width=800, height=600, **extra):
    return json.dumps({"image": {"width_px": width, "height_px": height},
                       "words": words, **extra})


def wb(i, x, y, w=50, h=20, text=None):
    if text is None:
        text = f"w{i}"
    return {"id": i, "text": text, "x": x, "y": y, "w": w, "h": h}


class TestParseLayout:
    def test_single_word(self):
        layout = parse_layout(doc([wb(0, 10, 10)]))
        assert layout.n_words == 1
        assert len(layout.lines) == 1
        assert len(layout.paragraphs) == 1
        assert layout.full_text == "w0"

    def test_overlapping_duplicate_boxes_rejected(self):
        # identical boxes share an x-center, which breaks the strict
        # left-to-right ordering invariant
        with pytest.raises(LayoutValidationError):
            parse_layout(doc([wb(0, 10, 10), wb(1, 10, 10)]))

    def test_demo_fixture_reading_order_matches_declaration(self, demo_layout_doc):
        declared = [w["text"] for w in demo_layout_doc["words"]]
        # strip the declared structure; reconstruction must reproduce it
        stripped = dict(demo_layout_doc)
        stripped.pop("lines")
        stripped.pop("paragraphs")
        layout = parse_layout(json.dumps(stripped))
        got = [layout.words[w].text for w in layout.reading_order()]
        assert got == declared
        assert [list(l.word_ids) for l in layout.lines] == demo_layout_doc["lines"]
        assert [list(p.line_range()) for p in layout.paragraphs] == demo_layout_doc["paragraphs"]

    def test_declared_lines_and_paragraphs_win(self, demo_layout_doc):
        layout = parse_layout(json.dumps(demo_layout_doc))
        assert [list(l.word_ids) for l in layout.lines] == demo_layout_doc["lines"]
        assert layout.paragraph_of_word(8) == 1

    def test_bytes_input(self, demo_layout_doc):
        layout = parse_layout(json.dumps(demo_layout_doc).encode("utf-8"))
        assert layout.n_words == 12

    def test_malformed_json_names_position(self):
        with pytest.raises(LayoutParseError, match="line"):
            parse_layout(b'{"image": ')

    def test_missing_field_named(self):
        with pytest.raises(LayoutParseError, match="width_px"):
            parse_layout(json.dumps({"image": {"height_px": 2}, "words": [wb(0, 1, 1)]}))

    def test_non_dense_ids_rejected(self):
        with pytest.raises(LayoutParseError, match="dense"):
            parse_layout(doc([wb(0, 10, 10), wb(5, 100, 10)]))

    def test_box_outside_image_rejected(self):
        with pytest.raises(LayoutValidationError, match="word 0"):
            parse_layout(doc([wb(0, 790, 10, w=50)]))

    def test_empty_text_rejected(self):
        with pytest.raises(LayoutValidationError):
            parse_layout(doc([wb(0, 10, 10, text="")]))

    def test_two_columns_rejected(self):
        words = [wb(0, 10, 10), wb(1, 700, 10, w=60)]
        with pytest.raises(LayoutValidationError, match="column"):
            parse_layout(doc(words))

    def test_full_text_matches_reading_order(self, demo_layout):
        ordered = [demo_layout.words[w].text for w in demo_layout.reading_order()]
        assert demo_layout.full_text.split() == ordered


class TestBuildReadingOrder:
    def test_same_row_sorted_left_to_right(self):
        words = [WordBox(0, "b", 80, 10, 40, 20), WordBox(1, "a", 10, 10, 40, 20)]
        lines = build_reading_order(words)
        assert len(lines) == 1
        assert lines[0].word_ids == (1, 0)

    def test_vertical_split_beyond_threshold(self):
        # centers 50 px apart, median height 20 -> threshold 12 -> 2 lines
        words = [WordBox(0, "a", 10, 10, 40, 20), WordBox(1, "b", 10, 60, 40, 20)]
        lines = build_reading_order(words)
        assert len(lines) == 2
        # exhaustive pairwise check: words share a line iff centers differ
        # by less than 0.6 * median height
        for la in lines:
            for lb in lines:
                for wa in la.word_ids:
                    for pb in lb.word_ids:
                        together = la.line_id == lb.line_id
                        close = abs(words[wa].cy - words[pb].cy) < 0.6 * 20
                        assert together == close

    def test_centers_within_threshold_merge(self):
        words = [WordBox(0, "a", 10, 10, 40, 20), WordBox(1, "b", 60, 15, 40, 20)]
        assert len(build_reading_order(words)) == 1

    def test_permutation_invariance(self, demo_layout):
        words = list(demo_layout.words)
        shuffled = [words[i] for i in (7, 2, 11, 0, 5, 9, 1, 10, 4, 8, 3, 6)]
        assert build_reading_order(shuffled) == build_reading_order(words)

    def test_reading_order_is_permutation(self, grid_layout):
        order = list(grid_layout.reading_order())
        assert sorted(order) == list(range(grid_layout.n_words))


@st.composite
def random_word_sets(draw):
    n_lines = draw(st.integers(min_value=1, max_value=5))
    per_line = draw(st.integers(min_value=1, max_value=6))
    words = []
    y = 10.0
    wid = 0
    for _ in range(n_lines):
        x = 5.0
        for _ in range(per_line):
            w = draw(st.floats(min_value=20, max_value=60))
            words.append(WordBox(wid, f"w{wid}", x, y, w, 20.0))
            x += w + draw(st.floats(min_value=4, max_value=15))
            wid += 1
        y += draw(st.floats(min_value=26, max_value=60))
    return words


@given(words=random_word_sets(), seed=st.randoms(use_true_random=False))
@settings(max_examples=80)
def test_reading_order_permutation_invariant_property(words, seed):
    shuffled = list(words)
    seed.shuffle(shuffled)
    a = build_reading_order(words)
    b = build_reading_order(shuffled)
    assert a == b
    assert sorted(w for l in a for w in l.word_ids) == [w.word_id for w in words]


class TestSegmentParagraphs:
    def test_single_line(self):
        lines = build_reading_order([WordBox(0, "a", 10, 10, 40, 20)])
        paras = segment_paragraphs(lines)
        assert len(paras) == 1
        assert list(paras[0].line_range()) == [0]

    def test_break_at_outsized_gap(self):
        # gaps [8, 8, 20, 8]: median 8, threshold 14.4 -> break at the 20
        tops = [10, 38, 66, 106, 134]
        words = [WordBox(i, f"w{i}", 10, t, 40, 20) for i, t in enumerate(tops)]
        lines = build_reading_order(words)
        gaps = [b.top_px - a.bottom_px for a, b in zip(lines, lines[1:])]
        assert gaps == [8, 8, 20, 8]
        paras = segment_paragraphs(lines)
        assert len(paras) == 2
        assert list(paras[0].line_range()) == [0, 1, 2]
        assert list(paras[1].line_range()) == [3, 4]

    def test_uniform_gaps_single_paragraph(self):
        tops = [10, 38, 66, 94]
        words = [WordBox(i, f"w{i}", 10, t, 40, 20) for i, t in enumerate(tops)]
        assert len(segment_paragraphs(build_reading_order(words))) == 1

    def test_two_lines_always_one_paragraph(self):
        words = [WordBox(0, "a", 10, 10, 40, 20), WordBox(1, "b", 10, 300, 40, 20)]
        assert len(segment_paragraphs(build_reading_order(words))) == 1


class TestWordAt:
    def test_exact_center(self, demo_layout):
        w = demo_layout.word(3)
        assert word_at(PixelPoint(w.cx, w.cy), demo_layout, 0.0) == 3

    def test_gutter_hit_with_slack(self, demo_layout):
        w = demo_layout.word(3)
        p = PixelPoint(w.right + 2, w.cy)
        assert word_at(p, demo_layout, 5.0) == 3

    def test_far_miss(self, demo_layout):
        assert word_at(PixelPoint(400, 590), demo_layout, 5.0) is None

    def test_tie_breaks_to_nearest_center_then_smallest_id(self):
        words = [wb(0, 10, 10, w=50, h=20), wb(1, 10, 40, w=50, h=20)]
        layout = parse_layout(doc(words))
        # equidistant between the two stacked words: ids break the tie
        assert word_at(PixelPoint(35, 35), layout, 6.0) == 0
        # nearer the lower word
        assert word_at(PixelPoint(35, 38), layout, 6.0) == 1

    def test_every_word_center_hits_itself(self, grid_layout):
        for w in grid_layout.words:
            assert word_at(PixelPoint(w.cx, w.cy), grid_layout, 0.0) == w.word_id

    def test_negative_slack_rejected(self, demo_layout):
        with pytest.raises(ValueError):
            word_at(PixelPoint(0, 0), demo_layout, -1.0)


class TestContextWindow:
    def test_first_word_clamps(self, demo_layout):
        ctx = context_window(0, demo_layout, 3)
        assert ctx.window_text == "The quick brown fox"

    def test_middle_word_window(self, demo_layout):
        # word 5 is "over"; the 5-word window from the fixture
        ctx = context_window(5, demo_layout, 2)
        assert ctx.window_text == "fox jumps over lazy dogs."
        assert ctx.sentence_text == "The quick brown fox jumps over lazy dogs."

    def test_n_zero_gives_word_and_sentence(self, demo_layout):
        ctx = context_window(8, demo_layout, 0)
        assert ctx.window_text == "Readers"
        assert ctx.sentence_text == "Readers sometimes revisit text."

    def test_invalid_word_id(self, demo_layout):
        with pytest.raises(KeyError):
            context_window(99, demo_layout, 1)
