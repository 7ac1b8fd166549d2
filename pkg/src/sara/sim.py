"""Synthetic labeled reading sessions and classifier scoring.

The generator walks the layout in reading order, one fixation per
unskipped word, and overlays two kinds of injected difficulty episodes:
an inflated dwell on one anchor word, and a burst of backward
re-fixations into one anchor paragraph. Output is pixel-mode samples
plus ground-truth labels, byte-deterministic under the seed.

Durations and probabilities below are generator conventions at realistic
orders of magnitude, not measurements.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .classifier import PARAGRAPH_COMPREHENSION, UNFAMILIAR_WORD, DifficultyEvent
from .gaze import GazeSample
from .geometry import PixelPoint
from .layout import TextLayout

SHORT_WORD_LEN = 3


@dataclass(frozen=True)
class Episode:
    kind: str  # classifier event kind
    anchor_id: int  # word_id or paragraph_id
    params: Dict[str, float] = field(default_factory=dict)

    def param(self, name: str, default: float) -> float:
        return float(self.params.get(name, default))


@dataclass(frozen=True)
class SimConfig:
    fix_mean_ms: float = 220.0
    fix_sd_ms: float = 50.0
    fix_min_ms: float = 80.0
    jitter_sd_px: float = 2.0
    skip_prob: float = 0.15  # only words of <= SHORT_WORD_LEN characters
    sample_rate_hz: float = 30.0
    saccade_ms: float = 30.0
    # Re-fixations during a comprehension episode are quicker skims.
    refix_scale: float = 0.7
    episodes: Tuple[Episode, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.fix_mean_ms <= 0 or self.fix_min_ms <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("durations and sample rate must be positive")


@dataclass(frozen=True)
class GroundTruthLabel:
    kind: str
    anchor_id: int
    t_start: float
    t_end: float


@dataclass(frozen=True)
class KindMetrics:
    tp: int
    fp: int
    fn: int
    zero_predictions: bool

    @property
    def precision(self) -> float:
        # Undefined precision (no predictions) reports as 1.0 and is
        # flagged via zero_predictions.
        if self.tp + self.fp == 0:
            return 1.0
        return self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        if self.tp + self.fn == 0:
            return 1.0
        return self.tp / (self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        if p + r == 0:
            return 0.0
        return 2 * p * r / (p + r)


@dataclass(frozen=True)
class EvalReport:
    per_kind: Dict[str, KindMetrics]
    overall: KindMetrics

    def to_dict(self) -> dict:
        def enc(m: KindMetrics) -> dict:
            return {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "tp": m.tp,
                "fp": m.fp,
                "fn": m.fn,
                "zero_predictions": m.zero_predictions,
            }

        return {"per_kind": {k: enc(m) for k, m in self.per_kind.items()},
                "overall": enc(self.overall)}


class _SessionWriter:
    """Accumulates samples/labels while tracking the clock."""

    def __init__(self, cfg: SimConfig, rng: random.Random):
        self.cfg = cfg
        self.rng = rng
        self.samples: List[GazeSample] = []
        self.t = 0.0
        self.interval = 1000.0 / cfg.sample_rate_hz

    def fixate(self, cx: float, cy: float, duration_ms: float) -> Tuple[float, float]:
        """Emit one fixation's worth of jittered samples; returns its
        (t_start, t_end). The realized span never drops below fix_min_ms,
        so a detector with the same floor cannot lose the fixation to
        sample-interval rounding."""
        min_steps = math.ceil(self.cfg.fix_min_ms / self.interval)
        steps = max(min_steps, round(duration_ms / self.interval))
        t_start = self.t
        for _ in range(steps + 1):
            x = cx + self.rng.gauss(0.0, self.cfg.jitter_sd_px)
            y = cy + self.rng.gauss(0.0, self.cfg.jitter_sd_px)
            self.samples.append(GazeSample(self.t, PixelPoint(x, y), valid=True))
            self.t += self.interval
        t_end = self.t - self.interval
        self.t = t_end + self.cfg.saccade_ms
        return t_start, t_end


def _draw_duration(cfg: SimConfig, rng: random.Random) -> float:
    return max(cfg.fix_min_ms, rng.gauss(cfg.fix_mean_ms, cfg.fix_sd_ms))


def generate_session(
    layout: TextLayout, cfg: SimConfig
) -> Tuple[List[GazeSample], List[GroundTruthLabel]]:
    """Deterministic under cfg.seed. Raises ValueError for episode anchors
    missing from the layout or paragraphs too short to regress inside."""
    word_boost: Dict[int, float] = {}
    para_episodes: Dict[int, Episode] = {}
    for ep in cfg.episodes:
        if ep.kind == UNFAMILIAR_WORD:
            if not 0 <= ep.anchor_id < layout.n_words:
                raise ValueError(f"episode anchor word {ep.anchor_id} not in layout")
            word_boost[ep.anchor_id] = ep.param("factor", 5.0)
        elif ep.kind == PARAGRAPH_COMPREHENSION:
            if not 0 <= ep.anchor_id < len(layout.paragraphs):
                raise ValueError(f"episode anchor paragraph {ep.anchor_id} not in layout")
            para_episodes[ep.anchor_id] = ep
        else:
            raise ValueError(f"unknown episode kind {ep.kind!r}")

    rng = random.Random(cfg.seed)
    writer = _SessionWriter(cfg, rng)
    labels: List[GroundTruthLabel] = []
    order = layout.reading_order()
    min_back = 2  # matches the classifier default; episodes jump further anyway

    para_end_ordinal = {
        p.paragraph_id: max(layout.ordinal(w) for lid in p.line_range()
                            for w in layout.lines[lid].word_ids)
        for p in layout.paragraphs
    }
    para_start_ordinal = {
        p.paragraph_id: min(layout.ordinal(w) for lid in p.line_range()
                            for w in layout.lines[lid].word_ids)
        for p in layout.paragraphs
    }
    for pid, ep in para_episodes.items():
        count = int(ep.param("count", 4.0))
        span = para_end_ordinal[pid] - para_start_ordinal[pid] + 1
        if span < count + min_back + 1:
            raise ValueError(
                f"paragraph {pid} has {span} words; too short for a "
                f"{count}-regression episode"
            )

    for ordinal, wid in enumerate(order):
        word = layout.word(wid)
        boosted = wid in word_boost
        if (
            not boosted
            and len(word.text.rstrip(".,;:!?")) <= SHORT_WORD_LEN
            and rng.random() < cfg.skip_prob
        ):
            continue
        duration = _draw_duration(cfg, rng)
        if boosted:
            # Clip the base draw from below so an unlucky short draw can
            # never mask the injected anomaly.
            duration = max(duration, cfg.fix_mean_ms + cfg.fix_sd_ms) * word_boost[wid]
        t_start, t_end = writer.fixate(word.cx, word.cy, duration)
        if boosted:
            labels.append(GroundTruthLabel(UNFAMILIAR_WORD, wid, t_start, t_end))

        pid = layout.paragraph_of_word(wid)
        if pid in para_episodes and ordinal == para_end_ordinal[pid]:
            ep = para_episodes.pop(pid)
            labels.append(_replay_regressions(layout, writer, ep, pid,
                                              para_start_ordinal[pid], min_back, rng))
    return writer.samples, labels


def _replay_regressions(
    layout: TextLayout,
    writer: _SessionWriter,
    ep: Episode,
    pid: int,
    start_ordinal: int,
    min_back: int,
    rng: random.Random,
) -> GroundTruthLabel:
    """Backward re-fixation burst: each cycle lands min_back+ words back
    (a regression) then hops forward (not one), so landings stay distinct
    and no single word accrues enough dwell to fake a word event."""
    cfg = writer.cfg
    count = int(ep.param("count", 4.0))
    order = layout.reading_order()
    t_first: Optional[float] = None
    t_last = writer.t
    for i in range(count):
        land = layout.word(order[start_ordinal + i])
        d = _draw_duration(cfg, rng) * cfg.refix_scale
        t_start, t_end = writer.fixate(land.cx, land.cy, d)
        if t_first is None:
            t_first = t_start
        t_last = t_end
        fwd = layout.word(order[start_ordinal + i + min_back + 1])
        d = _draw_duration(cfg, rng) * cfg.refix_scale
        writer.fixate(fwd.cx, fwd.cy, d)
    return GroundTruthLabel(PARAGRAPH_COMPREHENSION, pid, t_first or t_last, t_last)


def evaluate(
    events: Sequence[DifficultyEvent],
    truth: Sequence[GroundTruthLabel],
    match_window_ms: float = 2000.0,
) -> EvalReport:
    """Greedy one-to-one matching in time order: an event matches an
    unmatched label of the same kind and anchor whose padded span contains
    the event time."""
    unmatched = list(sorted(truth, key=lambda l: l.t_start))
    taken = [False] * len(unmatched)
    tp: Dict[str, int] = {k: 0 for k in (UNFAMILIAR_WORD, PARAGRAPH_COMPREHENSION)}
    fp: Dict[str, int] = {k: 0 for k in tp}
    for ev in sorted(events, key=lambda e: (e.t, e.kind, e.anchor_id)):
        hit = None
        for i, label in enumerate(unmatched):
            if taken[i]:
                continue
            if label.kind != ev.kind or label.anchor_id != ev.anchor_id:
                continue
            if label.t_start - match_window_ms <= ev.t <= label.t_end + match_window_ms:
                hit = i
                break
        if hit is None:
            fp[ev.kind] = fp.get(ev.kind, 0) + 1
        else:
            taken[hit] = True
            tp[ev.kind] = tp.get(ev.kind, 0) + 1
    fn: Dict[str, int] = {k: 0 for k in tp}
    for i, label in enumerate(unmatched):
        if not taken[i]:
            fn[label.kind] = fn.get(label.kind, 0) + 1

    per_kind = {}
    kinds = sorted(set(tp) | set(fp) | set(fn))
    for k in kinds:
        n_pred = tp.get(k, 0) + fp.get(k, 0)
        per_kind[k] = KindMetrics(tp.get(k, 0), fp.get(k, 0), fn.get(k, 0),
                                  zero_predictions=n_pred == 0)
    overall = KindMetrics(
        sum(m.tp for m in per_kind.values()),
        sum(m.fp for m in per_kind.values()),
        sum(m.fn for m in per_kind.values()),
        zero_predictions=all(m.zero_predictions for m in per_kind.values()),
    )
    return EvalReport(per_kind=per_kind, overall=overall)


_GRID_VOCAB = [
    "reading", "it", "comprehension", "gaze", "of", "tracking", "word",
    "the", "paragraph", "overlay", "fixation", "to", "dwell", "screen",
    "anchored", "text", "a", "assistance", "regression", "context",
]


def make_grid_layout(
    n_lines: int = 10,
    words_per_line: int = 6,
    lines_per_paragraph: int = 5,
    word_h: float = 22.0,
    line_pitch: float = 34.0,
    paragraph_extra_gap: float = 30.0,
) -> TextLayout:
    """Synthetic single-column layout for simulator experiments.

    Word widths and texts cycle deterministically; a larger vertical gap
    opens after every ``lines_per_paragraph`` lines so paragraph
    segmentation has something to find. Sentences end at paragraph ends.
    """
    from .layout import parse_layout

    words = []
    y = 40.0
    wid = 0
    for li in range(n_lines):
        x = 40.0
        for wi in range(words_per_line):
            text = _GRID_VOCAB[wid % len(_GRID_VOCAB)]
            last_in_para = (
                wi == words_per_line - 1
                and (li % lines_per_paragraph == lines_per_paragraph - 1 or li == n_lines - 1)
            )
            if last_in_para:
                text += "."
            w = 34.0 + 9.0 * len(text)
            words.append({"id": wid, "text": text, "x": x, "y": y, "w": w, "h": word_h})
            x += w + 14.0
            wid += 1
        y += line_pitch
        if li % lines_per_paragraph == lines_per_paragraph - 1:
            y += paragraph_extra_gap
    width = max(w["x"] + w["w"] for w in words) + 40.0
    height = y + 40.0
    doc = {
        "image": {"width_px": int(width), "height_px": int(height)},
        "words": words,
    }
    return parse_layout(json.dumps(doc))


def parse_inject_spec(spec: str) -> Episode:
    """CLI episode spec: ``kind:anchor[:param=value,...]``."""
    parts = spec.split(":", 2)
    if len(parts) < 2:
        raise ValueError(f"bad inject spec {spec!r}; expected kind:anchor[:params]")
    kind, anchor = parts[0].strip(), parts[1].strip()
    if kind not in (UNFAMILIAR_WORD, PARAGRAPH_COMPREHENSION):
        raise ValueError(f"unknown episode kind {kind!r}")
    params: Dict[str, float] = {}
    if len(parts) == 3 and parts[2].strip():
        for item in parts[2].split(","):
            if "=" not in item:
                raise ValueError(f"bad episode parameter {item!r}; expected name=value")
            name, value = item.split("=", 1)
            params[name.strip()] = float(value)
    return Episode(kind=kind, anchor_id=int(anchor), params=params)


def write_gaze_jsonl(samples: Iterable[GazeSample], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(
                {"t": s.t, "x": s.p.x_px, "y": s.p.y_px, "valid": s.valid},
                separators=(",", ":"),
            ))
            fh.write("\n")


def write_truth_jsonl(labels: Iterable[GroundTruthLabel], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lb in labels:
            fh.write(json.dumps(
                {"kind": lb.kind, "anchor_id": lb.anchor_id,
                 "t_start": lb.t_start, "t_end": lb.t_end},
                separators=(",", ":"),
            ))
            fh.write("\n")


def read_truth_jsonl(path: str) -> List[GroundTruthLabel]:
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            labels.append(GroundTruthLabel(
                kind=obj["kind"], anchor_id=int(obj["anchor_id"]),
                t_start=float(obj["t_start"]), t_end=float(obj["t_end"]),
            ))
    return labels
