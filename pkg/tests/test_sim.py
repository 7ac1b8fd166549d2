import json
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from sara.classifier import PARAGRAPH_COMPREHENSION, UNFAMILIAR_WORD, DifficultyEvent
from sara.gaze import FixationConfig, assign_fixations, detect_fixations, accumulate_dwell
from sara.sim import (
    Episode,
    GroundTruthLabel,
    SimConfig,
    evaluate,
    generate_session,
    make_grid_layout,
    parse_inject_spec,
    write_gaze_jsonl,
)


def ev(kind, anchor, t):
    if kind == UNFAMILIAR_WORD:
        return DifficultyEvent(kind, anchor, t,
                               {"observed_ms": 1.0, "baseline_ms": 1.0, "ratio": 3.0}, 0.5)
    return DifficultyEvent(kind, anchor, t,
                           {"regression_count": 3.0, "window_ms": 5000.0}, 0.5)


class TestGenerateSession:
    def test_no_episodes_no_labels(self, grid_layout):
        _, labels = generate_session(grid_layout, SimConfig(seed=1))
        assert labels == []

    def test_same_seed_identical_streams(self, grid_layout, tmp_path):
        cfg = SimConfig(seed=42, episodes=(Episode(UNFAMILIAR_WORD, 10),))
        s1, l1 = generate_session(grid_layout, cfg)
        s2, l2 = generate_session(grid_layout, cfg)
        assert s1 == s2 and l1 == l2
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_gaze_jsonl(s1, str(p1))
        write_gaze_jsonl(s2, str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_different_seed_differs(self, grid_layout):
        s1, _ = generate_session(grid_layout, SimConfig(seed=1))
        s2, _ = generate_session(grid_layout, SimConfig(seed=2))
        assert s1 != s2

    def test_boosted_word_dwells_far_above_neighbors(self, grid_layout):
        anchor = 20
        cfg = SimConfig(seed=9, episodes=(Episode(UNFAMILIAR_WORD, anchor, {"factor": 5.0}),))
        samples, labels = generate_session(grid_layout, cfg)
        fixations = detect_fixations(samples, FixationConfig())
        hits = assign_fixations(fixations, grid_layout)
        dwell = accumulate_dwell(hits, fixations)
        neighbors = [dwell[w] for w in range(anchor - 5, anchor + 6)
                     if w != anchor and w in dwell]
        assert dwell[anchor] >= 5.0 * statistics.mean(neighbors)
        assert labels[0].kind == UNFAMILIAR_WORD
        assert labels[0].anchor_id == anchor

    def test_labels_span_session(self, grid_layout):
        cfg = SimConfig(seed=5, episodes=(
            Episode(UNFAMILIAR_WORD, 8), Episode(PARAGRAPH_COMPREHENSION, 1)))
        samples, labels = generate_session(grid_layout, cfg)
        t_max = samples[-1].t
        assert len(labels) == 2
        for lb in labels:
            assert 0 <= lb.t_start <= lb.t_end <= t_max

    def test_unknown_anchor_rejected(self, grid_layout):
        with pytest.raises(ValueError, match="anchor"):
            generate_session(grid_layout, SimConfig(
                episodes=(Episode(UNFAMILIAR_WORD, 10_000),)))

    def test_paragraph_too_short_rejected(self):
        tiny = make_grid_layout(n_lines=2, words_per_line=2, lines_per_paragraph=1)
        with pytest.raises(ValueError, match="too short"):
            generate_session(tiny, SimConfig(
                episodes=(Episode(PARAGRAPH_COMPREHENSION, 0, {"count": 4}),)))

    def test_timestamps_strictly_increasing(self, grid_layout):
        samples, _ = generate_session(grid_layout, SimConfig(seed=33))
        ts = [s.t for s in samples]
        assert all(b > a for a, b in zip(ts, ts[1:]))


class TestEvaluate:
    def test_perfect_match(self):
        truth = [GroundTruthLabel(UNFAMILIAR_WORD, 3, 1000.0, 1900.0)]
        events = [ev(UNFAMILIAR_WORD, 3, 1500.0)]
        report = evaluate(events, truth)
        m = report.per_kind[UNFAMILIAR_WORD]
        assert m.precision == 1.0 and m.recall == 1.0 and m.f1 == 1.0

    def test_zero_predictions_convention(self):
        truth = [GroundTruthLabel(UNFAMILIAR_WORD, 3, 1000.0, 1900.0)]
        report = evaluate([], truth)
        m = report.per_kind[UNFAMILIAR_WORD]
        assert m.recall == 0.0
        assert m.precision == 1.0
        assert m.zero_predictions is True

    def test_half_precision_half_recall(self):
        truth = [
            GroundTruthLabel(UNFAMILIAR_WORD, 3, 1000.0, 1900.0),
            GroundTruthLabel(UNFAMILIAR_WORD, 7, 9000.0, 9900.0),
        ]
        events = [ev(UNFAMILIAR_WORD, 3, 1500.0), ev(UNFAMILIAR_WORD, 9, 5000.0)]
        report = evaluate(events, truth)
        m = report.per_kind[UNFAMILIAR_WORD]
        assert m.precision == 0.5
        assert m.recall == 0.5

    def test_kind_mismatch_never_matches(self):
        truth = [GroundTruthLabel(UNFAMILIAR_WORD, 3, 1000.0, 1900.0)]
        events = [ev(PARAGRAPH_COMPREHENSION, 3, 1500.0)]
        report = evaluate(events, truth)
        assert report.per_kind[UNFAMILIAR_WORD].recall == 0.0
        assert report.per_kind[PARAGRAPH_COMPREHENSION].precision == 0.0

    def test_window_padding(self):
        truth = [GroundTruthLabel(UNFAMILIAR_WORD, 3, 1000.0, 2000.0)]
        inside = evaluate([ev(UNFAMILIAR_WORD, 3, 3900.0)], truth, match_window_ms=2000.0)
        outside = evaluate([ev(UNFAMILIAR_WORD, 3, 4100.0)], truth, match_window_ms=2000.0)
        assert inside.per_kind[UNFAMILIAR_WORD].tp == 1
        assert outside.per_kind[UNFAMILIAR_WORD].tp == 0

    def test_one_to_one_matching(self):
        truth = [GroundTruthLabel(UNFAMILIAR_WORD, 3, 1000.0, 2000.0)]
        events = [ev(UNFAMILIAR_WORD, 3, 1200.0), ev(UNFAMILIAR_WORD, 3, 1300.0)]
        m = evaluate(events, truth).per_kind[UNFAMILIAR_WORD]
        assert m.tp == 1 and m.fp == 1

    @given(seed=st.integers(min_value=0, max_value=5000))
    @settings(max_examples=40)
    def test_metrics_permutation_invariant(self, seed):
        import random

        rng = random.Random(seed)
        truth = [GroundTruthLabel(UNFAMILIAR_WORD, i, i * 1000.0, i * 1000.0 + 500.0)
                 for i in range(5)]
        events = [ev(UNFAMILIAR_WORD, rng.randrange(7), rng.uniform(0, 6000.0))
                  for _ in range(6)]
        shuffled = list(events)
        rng.shuffle(shuffled)
        a = evaluate(events, truth).to_dict()
        b = evaluate(shuffled, truth).to_dict()
        assert a == b


class TestInjectSpec:
    def test_word_episode(self):
        epi = parse_inject_spec("unfamiliar_word:7:factor=5")
        assert epi == Episode(UNFAMILIAR_WORD, 7, {"factor": 5.0})

    def test_paragraph_episode_defaults(self):
        epi = parse_inject_spec("paragraph_comprehension:1")
        assert epi.kind == PARAGRAPH_COMPREHENSION
        assert epi.anchor_id == 1
        assert epi.params == {}

    def test_multiple_params(self):
        epi = parse_inject_spec("paragraph_comprehension:0:count=5,window=4000")
        assert epi.params == {"count": 5.0, "window": 4000.0}

    def test_bad_specs(self):
        for bad in ("nope", "unknown:1", "unfamiliar_word:x", "unfamiliar_word:1:factor"):
            with pytest.raises(ValueError):
                parse_inject_spec(bad)


class TestGridLayout:
    def test_structure(self, grid_layout):
        assert grid_layout.n_words == 60
        assert len(grid_layout.lines) == 10
        assert len(grid_layout.paragraphs) == 2
        assert grid_layout.full_text.split() == [
            grid_layout.words[w].text for w in grid_layout.reading_order()]

    def test_serializes_through_layout_format(self, grid_layout):
        from sara.layout import parse_layout

        doc = {
            "image": {"width_px": grid_layout.dims.width_px,
                      "height_px": grid_layout.dims.height_px},
            "words": [
                {"id": w.word_id, "text": w.text, "x": w.x, "y": w.y, "w": w.w, "h": w.h}
                for w in grid_layout.words
            ],
        }
        again = parse_layout(json.dumps(doc))
        assert [l.word_ids for l in again.lines] == [l.word_ids for l in grid_layout.lines]
