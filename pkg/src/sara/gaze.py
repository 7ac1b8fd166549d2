"""Pixel-space gaze streams to fixations, word hits, dwell, progression.

Fixation detection is dispersion-threshold (I-DT style): a maximal run of
samples whose bounding box stays small enough, held long enough, becomes
one fixation at the sample centroid. The detector is greedy left-to-right
and fully deterministic, so a brute-force maximal-window search must and
does reproduce it exactly (see tests). A streaming variant emits the same
fixations online.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .geometry import GazeRay, ImageDims, PixelPoint, ScreenPose, WorldPoint, gaze_to_pixel
from .layout import TextLayout, word_at


@dataclass(frozen=True)
class FixationConfig:
    """Defaults assume a ~30 Hz HMD-class tracker; all thresholds are
    configuration, deliberately not constants."""

    dispersion_px: float = 35.0
    min_fix_ms: float = 80.0
    # A sample-to-sample gap longer than this splits any window (blinks,
    # tracking loss).
    max_gap_ms: float = 200.0

    def __post_init__(self):
        if self.dispersion_px <= 0 or self.min_fix_ms <= 0 or self.max_gap_ms <= 0:
            raise ValueError("fixation thresholds must be positive")


@dataclass(frozen=True)
class GazeSample:
    t: float
    p: PixelPoint
    valid: bool = True


@dataclass(frozen=True)
class Fixation:
    fixation_id: int
    centroid: PixelPoint
    t_start: float
    t_end: float
    n_samples: int

    @property
    def duration_ms(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class WordHit:
    fixation_id: int
    word_id: Optional[int]
    line_id: Optional[int] = None
    word_index_in_line: Optional[int] = None


@dataclass(frozen=True)
class ProgressionPoint:
    line_id: int
    word_index_in_line: int
    t: float


DwellMap = Dict[int, float]


def _clean(samples: Iterable[GazeSample]) -> List[GazeSample]:
    """Drop invalid samples and non-increasing timestamps (duplicates and
    out-of-order arrivals are rejected, keeping the earlier sample)."""
    out: List[GazeSample] = []
    last_t = None
    for s in samples:
        if not s.valid:
            continue
        if last_t is not None and s.t <= last_t:
            continue
        out.append(s)
        last_t = s.t
    return out


def _window_fixation(window: Sequence[GazeSample], fixation_id: int) -> Fixation:
    cx = sum(s.p.x_px for s in window) / len(window)
    cy = sum(s.p.y_px for s in window) / len(window)
    return Fixation(
        fixation_id=fixation_id,
        centroid=PixelPoint(cx, cy),
        t_start=window[0].t,
        t_end=window[-1].t,
        n_samples=len(window),
    )


def detect_fixations(
    samples: Sequence[GazeSample], cfg: FixationConfig = FixationConfig()
) -> List[Fixation]:
    """Greedy maximal-window I-DT over a complete sample list.

    From each start index the window extends as far as dispersion
    (bbox width + height) and the inter-sample gap allow; a window that
    meets the duration floor with at least two samples becomes a
    fixation and the scan resumes after it, otherwise the start advances
    by one. Ties therefore always resolve toward the earlier start.
    """
    clean = _clean(samples)
    fixations: List[Fixation] = []
    i = 0
    n = len(clean)
    while i < n:
        min_x = max_x = clean[i].p.x_px
        min_y = max_y = clean[i].p.y_px
        j = i
        while j + 1 < n:
            nxt = clean[j + 1]
            if nxt.t - clean[j].t > cfg.max_gap_ms:
                break
            nmin_x = min(min_x, nxt.p.x_px)
            nmax_x = max(max_x, nxt.p.x_px)
            nmin_y = min(min_y, nxt.p.y_px)
            nmax_y = max(max_y, nxt.p.y_px)
            if (nmax_x - nmin_x) + (nmax_y - nmin_y) > cfg.dispersion_px:
                break
            min_x, max_x, min_y, max_y = nmin_x, nmax_x, nmin_y, nmax_y
            j += 1
        window = clean[i : j + 1]
        if len(window) >= 2 and window[-1].t - window[0].t >= cfg.min_fix_ms:
            fixations.append(_window_fixation(window, len(fixations)))
            i = j + 1
        else:
            i += 1
    return fixations


class StreamingFixationDetector:
    """Online I-DT emitting exactly the fixations of :func:`detect_fixations`.

    A window's maximal extension is only known once a breaking sample
    arrives, so emission lags the stream by one window. Call
    :meth:`flush` at end of stream to resolve the tail. Single-writer
    per stream; independent instances are fully isolated.
    """

    def __init__(self, cfg: FixationConfig = FixationConfig()):
        self.cfg = cfg
        self._buffer: List[GazeSample] = []
        self._last_t: Optional[float] = None
        self._next_id = 0

    def feed(self, sample: GazeSample) -> List[Fixation]:
        if not sample.valid:
            return []
        if self._last_t is not None and sample.t <= self._last_t:
            return []
        self._last_t = sample.t
        self._buffer.append(sample)
        return self._drain(final=False)

    def flush(self) -> List[Fixation]:
        out = self._drain(final=True)
        self._buffer.clear()
        return out

    def _maximal_end(self, start: int) -> int:
        buf = self._buffer
        min_x = max_x = buf[start].p.x_px
        min_y = max_y = buf[start].p.y_px
        j = start
        while j + 1 < len(buf):
            nxt = buf[j + 1]
            if nxt.t - buf[j].t > self.cfg.max_gap_ms:
                break
            nmin_x = min(min_x, nxt.p.x_px)
            nmax_x = max(max_x, nxt.p.x_px)
            nmin_y = min(min_y, nxt.p.y_px)
            nmax_y = max(max_y, nxt.p.y_px)
            if (nmax_x - nmin_x) + (nmax_y - nmin_y) > self.cfg.dispersion_px:
                break
            min_x, max_x, min_y, max_y = nmin_x, nmax_x, nmin_y, nmax_y
            j += 1
        return j

    def _drain(self, final: bool) -> List[Fixation]:
        emitted: List[Fixation] = []
        while self._buffer:
            j = self._maximal_end(0)
            # Window still open at the buffer tail: future samples may
            # extend it, so defer unless the stream has ended.
            if j == len(self._buffer) - 1 and not final:
                break
            window = self._buffer[: j + 1]
            if len(window) >= 2 and window[-1].t - window[0].t >= self.cfg.min_fix_ms:
                emitted.append(_window_fixation(window, self._next_id))
                self._next_id += 1
                del self._buffer[: j + 1]
            else:
                del self._buffer[0]
        return emitted


def assign_fixations(
    fixations: Sequence[Fixation], layout: TextLayout, slack_px: float = 4.0
) -> List[WordHit]:
    """Map each fixation centroid to a word (or none), preserving order."""
    hits: List[WordHit] = []
    for f in fixations:
        wid = word_at(f.centroid, layout, slack_px)
        if wid is None:
            hits.append(WordHit(f.fixation_id, None))
        else:
            hits.append(
                WordHit(
                    fixation_id=f.fixation_id,
                    word_id=wid,
                    line_id=layout.line_of(wid),
                    word_index_in_line=layout.index_in_line(wid),
                )
            )
    return hits


def accumulate_dwell(
    hits: Sequence[WordHit], fixations: Sequence[Fixation]
) -> DwellMap:
    """Cumulative fixation duration per word; revisits add up, off-text
    fixations contribute nothing."""
    by_id = {f.fixation_id: f for f in fixations}
    dwell: DwellMap = {}
    for h in hits:
        if h.word_id is None:
            continue
        f = by_id[h.fixation_id]
        dwell[h.word_id] = dwell.get(h.word_id, 0.0) + f.duration_ms
    return dwell


def reading_progression(
    hits: Sequence[WordHit], fixations: Sequence[Fixation]
) -> List[ProgressionPoint]:
    """On-text hits projected to reading positions, consecutive duplicates
    collapsed (the first occurrence keeps its timestamp)."""
    by_id = {f.fixation_id: f for f in fixations}
    points: List[ProgressionPoint] = []
    for h in hits:
        if h.word_id is None:
            continue
        pos = (h.line_id, h.word_index_in_line)
        if points and (points[-1].line_id, points[-1].word_index_in_line) == pos:
            continue
        points.append(ProgressionPoint(h.line_id, h.word_index_in_line, by_id[h.fixation_id].t_start))
    return points


class GazeStreamError(ValueError):
    """A gaze record file line could not be parsed."""


def parse_pixel_record(obj: dict) -> GazeSample:
    return GazeSample(
        t=float(obj["t"]),
        p=PixelPoint(float(obj["x"]), float(obj["y"])),
        valid=bool(obj.get("valid", True)),
    )


def parse_ray_record(obj: dict) -> Tuple[float, Optional[GazeRay], bool]:
    """Returns (t, ray or None for invalid/zero direction, valid flag).
    Directions are normalized on ingest; serialized rays routinely carry
    rounding error."""
    t = float(obj["t"])
    valid = bool(obj.get("valid", True))
    d = (float(obj["dx"]), float(obj["dy"]), float(obj["dz"]))
    norm = (d[0] ** 2 + d[1] ** 2 + d[2] ** 2) ** 0.5
    if norm == 0.0:
        return t, None, False
    origin = WorldPoint(float(obj["ox"]), float(obj["oy"]), float(obj["oz"]))
    ray = GazeRay(origin, (d[0] / norm, d[1] / norm, d[2] / norm), t)
    return t, ray, valid


def read_gaze_file(
    path: str,
    fmt: str = "pixel",
    pose: Optional[ScreenPose] = None,
    dims: Optional[ImageDims] = None,
) -> List[GazeSample]:
    """Load a line-delimited JSON gaze recording.

    ``fmt`` is "pixel" or "ray"; ray mode requires the screen pose and
    image dims and marks plane misses as invalid samples. Malformed lines
    raise GazeStreamError naming the line, before any processing starts.
    """
    if fmt not in ("pixel", "ray"):
        raise ValueError(f"unknown gaze format {fmt!r}")
    if fmt == "ray" and (pose is None or dims is None):
        raise ValueError("ray-mode gaze needs a screen pose and image dims")
    samples: List[GazeSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                if fmt == "pixel":
                    samples.append(parse_pixel_record(obj))
                else:
                    t, ray, valid = parse_ray_record(obj)
                    px = gaze_to_pixel(ray, pose, dims) if (valid and ray) else None
                    if px is None:
                        samples.append(GazeSample(t, PixelPoint(0.0, 0.0), valid=False))
                    else:
                        samples.append(GazeSample(t, px, valid=True))
            except (KeyError, ValueError, TypeError) as e:
                raise GazeStreamError(f"{path}:{lineno}: {e}") from e
    return samples
