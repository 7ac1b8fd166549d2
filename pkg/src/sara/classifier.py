"""Reading-difficulty detection from dwell anomalies and regressions.

Two difficulty signals:

* unfamiliar word: a word's cumulative fixation dwell is far above the
  median dwell of its reading-order neighbors and above an absolute floor;
* paragraph comprehension: several regressions (backward jumps in reading
  order, excluding ordinary return-sweeps) land in one paragraph inside a
  short time window.

Batch detectors work over completed session data; IncrementalClassifier
replays the same rules hit by hit and emits each event the moment its
condition first holds, with per-anchor cooldowns.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from statistics import median
from typing import Deque, Dict, List, Optional, Sequence, Tuple

from .gaze import DwellMap, Fixation, ProgressionPoint, WordHit
from .layout import TextLayout

UNFAMILIAR_WORD = "unfamiliar_word"
PARAGRAPH_COMPREHENSION = "paragraph_comprehension"
EVENT_KINDS = (UNFAMILIAR_WORD, PARAGRAPH_COMPREHENSION)

_EVIDENCE_KEYS = {
    UNFAMILIAR_WORD: {"observed_ms", "baseline_ms", "ratio"},
    PARAGRAPH_COMPREHENSION: {"regression_count", "window_ms"},
}


@dataclass(frozen=True)
class ClassifierConfig:
    """Thresholds for both detectors. The defaults are reading-research
    orders of magnitude, not measured constants; tune per deployment."""

    neighbor_window_words: int = 5
    dwell_ratio_threshold: float = 3.0
    min_abs_dwell_ms: float = 600.0
    regression_min_back_words: int = 2
    regression_count_threshold: int = 3
    regression_window_ms: float = 5000.0
    cooldown_ms: float = 30000.0

    def __post_init__(self):
        if min(
            self.neighbor_window_words,
            self.min_abs_dwell_ms,
            self.regression_min_back_words,
            self.regression_count_threshold,
            self.regression_window_ms,
            self.cooldown_ms,
        ) <= 0:
            raise ValueError("all classifier thresholds must be positive")
        if self.dwell_ratio_threshold <= 1:
            raise ValueError("dwell_ratio_threshold must exceed 1")


@dataclass(frozen=True)
class DifficultyEvent:
    kind: str
    anchor_id: int  # word_id or paragraph_id, per kind
    t: float
    evidence: Dict[str, float]
    confidence: float

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if set(self.evidence) != _EVIDENCE_KEYS[self.kind]:
            raise ValueError(
                f"evidence fields {sorted(self.evidence)} inconsistent with {self.kind}"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")

    def key(self) -> Tuple[str, int]:
        """Identity used for online/batch multiset comparison."""
        return (self.kind, self.anchor_id)


@dataclass(frozen=True)
class RegressionRecord:
    t: float
    from_ordinal: int
    to_ordinal: int
    to_word_id: int

    @property
    def back_words(self) -> int:
        return self.from_ordinal - self.to_ordinal


def baseline_dwell(
    dwell: DwellMap, word_id: int, layout: TextLayout, window_words: int
) -> Optional[float]:
    """Median dwell of the word's dwelled reading-order neighbors.

    Looks window_words positions to each side, keeps neighbors with
    dwell > 0, excludes the word itself. None with fewer than three such
    neighbors: too little surrounding evidence to call anything anomalous.
    """
    ordinal = layout.ordinal(word_id)
    order = layout.reading_order()
    values = []
    for k in range(max(0, ordinal - window_words), min(len(order), ordinal + window_words + 1)):
        if k == ordinal:
            continue
        d = dwell.get(order[k], 0.0)
        if d > 0:
            values.append(d)
    if len(values) < 3:
        return None
    return float(median(values))


def _word_flag(
    dwell: DwellMap, word_id: int, layout: TextLayout, cfg: ClassifierConfig
) -> Optional[Tuple[float, float, float]]:
    """(observed, baseline, ratio) when the unfamiliar-word condition
    holds, else None."""
    observed = dwell.get(word_id, 0.0)
    if observed < cfg.min_abs_dwell_ms:
        return None
    base = baseline_dwell(dwell, word_id, layout, cfg.neighbor_window_words)
    if base is None:
        return None
    ratio = observed / base
    if ratio < cfg.dwell_ratio_threshold:
        return None
    return observed, base, ratio


def _word_confidence(ratio: float, cfg: ClassifierConfig) -> float:
    return min(1.0, ratio / (2.0 * cfg.dwell_ratio_threshold))


def _paragraph_confidence(count: int, cfg: ClassifierConfig) -> float:
    return min(1.0, count / (2.0 * cfg.regression_count_threshold))


def detect_unfamiliar_words(
    dwell: DwellMap, layout: TextLayout, cfg: ClassifierConfig, t_ms: float = 0.0
) -> List[DifficultyEvent]:
    """Batch sweep over a final dwell map.

    The dwell map carries no timing, so batch word events are stamped with
    ``t_ms`` (0 by default); the incremental path stamps the triggering
    fixation instead.
    """
    events = []
    for ordinal in range(layout.n_words):
        wid = layout.word_at_ordinal(ordinal)
        flag = _word_flag(dwell, wid, layout, cfg)
        if flag is None:
            continue
        observed, base, ratio = flag
        events.append(
            DifficultyEvent(
                kind=UNFAMILIAR_WORD,
                anchor_id=wid,
                t=t_ms,
                evidence={"observed_ms": observed, "baseline_ms": base, "ratio": ratio},
                confidence=_word_confidence(ratio, cfg),
            )
        )
    return events


def detect_regressions(
    progression: Sequence[ProgressionPoint], layout: TextLayout, cfg: ClassifierConfig
) -> List[RegressionRecord]:
    """Backward jumps of at least regression_min_back_words in global
    reading order. Return-sweeps land forward, so they never qualify."""
    records = []
    prev_ordinal: Optional[int] = None
    for pt in progression:
        wid = layout.lines[pt.line_id].word_ids[pt.word_index_in_line]
        ordinal = layout.ordinal(wid)
        if prev_ordinal is not None and prev_ordinal - ordinal >= cfg.regression_min_back_words:
            records.append(
                RegressionRecord(
                    t=pt.t,
                    from_ordinal=prev_ordinal,
                    to_ordinal=ordinal,
                    to_word_id=wid,
                )
            )
        prev_ordinal = ordinal
    return records


class _ParagraphWindows:
    """Sliding regression windows per paragraph with cooldown, shared by
    the batch and incremental paths so they cannot drift apart."""

    def __init__(self, layout: TextLayout, cfg: ClassifierConfig):
        self.layout = layout
        self.cfg = cfg
        self._times: Dict[int, Deque[float]] = {}
        self._last_event_t: Dict[int, float] = {}

    def add(self, reg: RegressionRecord) -> Optional[DifficultyEvent]:
        pid = self.layout.paragraph_of_word(reg.to_word_id)
        times = self._times.setdefault(pid, deque())
        times.append(reg.t)
        while times and reg.t - times[0] > self.cfg.regression_window_ms:
            times.popleft()
        if len(times) < self.cfg.regression_count_threshold:
            return None
        last = self._last_event_t.get(pid)
        if last is not None and reg.t - last < self.cfg.cooldown_ms:
            return None
        self._last_event_t[pid] = reg.t
        return DifficultyEvent(
            kind=PARAGRAPH_COMPREHENSION,
            anchor_id=pid,
            t=reg.t,
            evidence={
                "regression_count": float(len(times)),
                "window_ms": self.cfg.regression_window_ms,
            },
            confidence=_paragraph_confidence(len(times), self.cfg),
        )


def detect_comprehension_difficulty(
    regressions: Sequence[RegressionRecord],
    progression: Sequence[ProgressionPoint],
    layout: TextLayout,
    cfg: ClassifierConfig,
) -> List[DifficultyEvent]:
    """Paragraph events from a completed regression list: threshold-many
    landings in one paragraph within the sliding window, one event per
    paragraph per cooldown period."""
    del progression  # regressions already carry the landing positions
    windows = _ParagraphWindows(layout, cfg)
    events = []
    for reg in sorted(regressions, key=lambda r: r.t):
        ev = windows.add(reg)
        if ev is not None:
            events.append(ev)
    return events


def classify_batch(
    hits: Sequence[WordHit],
    fixations: Sequence[Fixation],
    layout: TextLayout,
    cfg: ClassifierConfig,
) -> List[DifficultyEvent]:
    """Full offline pipeline: dwell sweep plus regression windows."""
    from .gaze import accumulate_dwell, reading_progression

    dwell = accumulate_dwell(hits, fixations)
    progression = reading_progression(hits, fixations)
    regressions = detect_regressions(progression, layout, cfg)
    events = detect_unfamiliar_words(dwell, layout, cfg)
    events.extend(detect_comprehension_difficulty(regressions, progression, layout, cfg))
    return events


@dataclass
class IncrementalClassifier:
    """Online classifier over a stream of (fixation, hit) pairs.

    Emits the events the batch detectors would newly emit given the
    stream so far. After a hit on word w only w and its ordinal neighbors
    within the baseline window can change flag status, so only those are
    rechecked. Per-session single-writer state.
    """

    layout: TextLayout
    cfg: ClassifierConfig
    dwell: DwellMap = field(default_factory=dict)
    _prev_ordinal: Optional[int] = None
    _word_event_t: Dict[int, float] = field(default_factory=dict)
    _windows: Optional[_ParagraphWindows] = None
    _regressions: List[RegressionRecord] = field(default_factory=list)

    def __post_init__(self):
        self._windows = _ParagraphWindows(self.layout, self.cfg)

    @property
    def regressions(self) -> List[RegressionRecord]:
        return list(self._regressions)

    def feed(self, fixation: Fixation, hit: WordHit) -> List[DifficultyEvent]:
        if hit.word_id is None:
            return []
        events: List[DifficultyEvent] = []
        wid = hit.word_id
        ordinal = self.layout.ordinal(wid)

        # Regression / paragraph window update first: the jump happens at
        # fixation onset, before the dwell accrues.
        if self._prev_ordinal is not None and ordinal != self._prev_ordinal:
            back = self._prev_ordinal - ordinal
            if back >= self.cfg.regression_min_back_words:
                reg = RegressionRecord(
                    t=fixation.t_start,
                    from_ordinal=self._prev_ordinal,
                    to_ordinal=ordinal,
                    to_word_id=wid,
                )
                self._regressions.append(reg)
                ev = self._windows.add(reg)
                if ev is not None:
                    events.append(ev)
        if ordinal != self._prev_ordinal:
            self._prev_ordinal = ordinal

        self.dwell[wid] = self.dwell.get(wid, 0.0) + fixation.duration_ms

        w = self.cfg.neighbor_window_words
        order = self.layout.reading_order()
        for k in range(max(0, ordinal - w), min(len(order), ordinal + w + 1)):
            cand = order[k]
            flag = _word_flag(self.dwell, cand, self.layout, self.cfg)
            if flag is None:
                continue
            last = self._word_event_t.get(cand)
            if last is not None and fixation.t_end - last < self.cfg.cooldown_ms:
                continue
            observed, base, ratio = flag
            self._word_event_t[cand] = fixation.t_end
            events.append(
                DifficultyEvent(
                    kind=UNFAMILIAR_WORD,
                    anchor_id=cand,
                    t=fixation.t_end,
                    evidence={
                        "observed_ms": observed,
                        "baseline_ms": base,
                        "ratio": ratio,
                    },
                    confidence=_word_confidence(ratio, self.cfg),
                )
            )
        return events


def classify_incremental(
    pairs: Sequence[Tuple[Fixation, WordHit]],
    layout: TextLayout,
    cfg: ClassifierConfig,
) -> List[DifficultyEvent]:
    """Run the incremental classifier over a whole stream at once."""
    state = IncrementalClassifier(layout, cfg)
    events: List[DifficultyEvent] = []
    for fixation, hit in pairs:
        events.extend(state.feed(fixation, hit))
    return events
