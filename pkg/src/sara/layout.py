"""Text layout: word bounding boxes, reading order, spatial queries.

Ingests OCR-style word boxes from a JSON document, reconstructs lines and
paragraphs when the document does not declare them, and answers the two
queries the rest of the pipeline needs: which word sits under a pixel
point, and what textual context surrounds a word. Single-column,
left-to-right scripts only; multi-column documents fail validation
rather than yielding a wrong reading order.

Layout file format (UTF-8 JSON)::

    {
      "image": {"width_px": int, "height_px": int},
      "words": [{"id": int, "text": str, "x": num, "y": num, "w": num, "h": num}, ...],
      "lines": [[word ids], ...],          # optional
      "paragraphs": [[line indices], ...]  # optional
    }
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from statistics import median
from typing import Dict, List, Optional, Sequence, Tuple

from .geometry import ImageDims, PixelPoint

# Words whose vertical centers differ by less than this fraction of the
# median box height share a line.
LINE_CLUSTER_FRAC = 0.6
# A vertical gap larger than this multiple of the median inter-line gap
# starts a new paragraph.
PARAGRAPH_GAP_FRAC = 1.8
# A within-line horizontal gap wider than this fraction of the image
# width is taken as evidence of a second column, which is unsupported.
MULTI_COLUMN_GAP_FRAC = 0.30
# Default bbox inflation for hit-testing; eye-tracker jitter exceeds
# glyph gaps.
DEFAULT_HIT_SLACK_PX = 4.0

_SENTENCE_END = re.compile(r"[.!?]$")


class LayoutParseError(ValueError):
    """The document is not syntactically valid layout JSON."""


class LayoutValidationError(ValueError):
    """The document parsed but violates a layout invariant."""

    def __init__(self, message: str, word_id: Optional[int] = None):
        super().__init__(message if word_id is None else f"word {word_id}: {message}")
        self.word_id = word_id


@dataclass(frozen=True)
class WordBox:
    word_id: int
    text: str
    x: float
    y: float
    w: float
    h: float

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h


@dataclass(frozen=True)
class Line:
    line_id: int
    word_ids: Tuple[int, ...]
    top_px: float
    bottom_px: float


@dataclass(frozen=True)
class Paragraph:
    paragraph_id: int
    first_line: int
    last_line: int  # inclusive

    def line_range(self) -> range:
        return range(self.first_line, self.last_line + 1)


@dataclass(frozen=True)
class ContextWindow:
    word_id: int
    window_text: str
    sentence_text: str
    first_word_id: int
    last_word_id: int


@dataclass
class TextLayout:
    """Immutable after construction; queries are pure and thread-safe."""

    dims: ImageDims
    words: List[WordBox]
    lines: List[Line]
    paragraphs: List[Paragraph]
    full_text: str = field(default="")

    # derived lookups, filled in __post_init__
    _line_of_word: Dict[int, int] = field(default_factory=dict, repr=False)
    _index_in_line: Dict[int, int] = field(default_factory=dict, repr=False)
    _ordinal_of_word: Dict[int, int] = field(default_factory=dict, repr=False)
    _reading_order: List[int] = field(default_factory=list, repr=False)
    _paragraph_of_line: Dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        order: List[int] = []
        for line in self.lines:
            for idx, wid in enumerate(line.word_ids):
                self._line_of_word[wid] = line.line_id
                self._index_in_line[wid] = idx
                self._ordinal_of_word[wid] = len(order)
                order.append(wid)
        self._reading_order = order
        for para in self.paragraphs:
            for lid in para.line_range():
                self._paragraph_of_line[lid] = para.paragraph_id
        if not self.full_text:
            self.full_text = " ".join(self.words[i].text for i in order)

    @property
    def n_words(self) -> int:
        return len(self.words)

    def word(self, word_id: int) -> WordBox:
        try:
            return self.words[word_id]
        except IndexError:
            raise KeyError(f"unknown word_id {word_id}") from None

    def reading_order(self) -> Sequence[int]:
        return self._reading_order

    def ordinal(self, word_id: int) -> int:
        return self._ordinal_of_word[word_id]

    def word_at_ordinal(self, ordinal: int) -> int:
        return self._reading_order[ordinal]

    def line_of(self, word_id: int) -> int:
        return self._line_of_word[word_id]

    def index_in_line(self, word_id: int) -> int:
        return self._index_in_line[word_id]

    def paragraph_of_line(self, line_id: int) -> int:
        return self._paragraph_of_line[line_id]

    def paragraph_of_word(self, word_id: int) -> int:
        return self._paragraph_of_line[self._line_of_word[word_id]]

    def paragraph_text(self, paragraph_id: int) -> str:
        para = self.paragraphs[paragraph_id]
        parts = []
        for lid in para.line_range():
            parts.extend(self.words[w].text for w in self.lines[lid].word_ids)
        return " ".join(parts)


def build_reading_order(words: Sequence[WordBox]) -> List[Line]:
    """Cluster words into left-to-right lines, top to bottom.

    Single-linkage over vertical centers: consecutive centers closer than
    LINE_CLUSTER_FRAC x median box height stay in one line. Input order is
    irrelevant; the result depends only on the geometry.
    """
    if not words:
        raise ValueError("no words to order")
    med_h = median(w.h for w in words)
    threshold = LINE_CLUSTER_FRAC * med_h
    by_cy = sorted(words, key=lambda w: (w.cy, w.cx, w.word_id))
    clusters: List[List[WordBox]] = [[by_cy[0]]]
    for prev, cur in zip(by_cy, by_cy[1:]):
        if cur.cy - prev.cy < threshold:
            clusters[-1].append(cur)
        else:
            clusters.append([cur])
    clusters.sort(key=lambda c: min(w.y for w in c))
    lines = []
    for i, cluster in enumerate(clusters):
        cluster.sort(key=lambda w: (w.cx, w.word_id))
        lines.append(
            Line(
                line_id=i,
                word_ids=tuple(w.word_id for w in cluster),
                top_px=min(w.y for w in cluster),
                bottom_px=max(w.bottom for w in cluster),
            )
        )
    return lines


def segment_paragraphs(lines: Sequence[Line]) -> List[Paragraph]:
    """Split the line sequence into paragraphs at outsized vertical gaps.

    A break goes between consecutive lines whose gap exceeds
    PARAGRAPH_GAP_FRAC x the median inter-line gap. Fewer than three
    lines always form a single paragraph.
    """
    if not lines:
        raise ValueError("no lines to segment")
    if len(lines) < 3:
        return [Paragraph(0, 0, len(lines) - 1)]
    gaps = [nxt.top_px - prev.bottom_px for prev, nxt in zip(lines, lines[1:])]
    threshold = PARAGRAPH_GAP_FRAC * median(gaps)
    breaks = [i for i, g in enumerate(gaps) if g > threshold]
    paragraphs = []
    start = 0
    for b in breaks:
        paragraphs.append(Paragraph(len(paragraphs), start, b))
        start = b + 1
    paragraphs.append(Paragraph(len(paragraphs), start, len(lines) - 1))
    return paragraphs


def _validate(
    dims: ImageDims,
    words: Sequence[WordBox],
    lines: Sequence[Line],
    paragraphs: Sequence[Paragraph],
) -> None:
    for wb in words:
        if not wb.text:
            raise LayoutValidationError("empty text", wb.word_id)
        if wb.w <= 0 or wb.h <= 0:
            raise LayoutValidationError("non-positive box extent", wb.word_id)
        if wb.x < 0 or wb.y < 0 or wb.right > dims.width_px or wb.bottom > dims.height_px:
            raise LayoutValidationError("box outside image bounds", wb.word_id)

    seen: Dict[int, bool] = {}
    prev_top = None
    prev_cy = None
    for line in lines:
        if not line.word_ids:
            raise LayoutValidationError(f"line {line.line_id} is empty")
        prev_cx = None
        prev_word = None
        for wid in line.word_ids:
            if wid in seen:
                raise LayoutValidationError("assigned to more than one line", wid)
            seen[wid] = True
            wb = words[wid]
            if prev_cx is not None and wb.cx <= prev_cx:
                raise LayoutValidationError(
                    "x-centers not strictly increasing within line", wid
                )
            if prev_word is not None:
                gap = wb.x - prev_word.right
                if gap > MULTI_COLUMN_GAP_FRAC * dims.width_px:
                    raise LayoutValidationError(
                        "horizontal gap suggests a second column; "
                        "multi-column layouts are not supported",
                        wid,
                    )
            prev_cx = wb.cx
            prev_word = wb
        cy = sum(words[w].cy for w in line.word_ids) / len(line.word_ids)
        if prev_top is not None and (line.top_px < prev_top or cy <= prev_cy):
            raise LayoutValidationError(
                f"line {line.line_id} band not below its predecessor"
            )
        prev_top = line.top_px
        prev_cy = cy
    if len(seen) != len(words):
        missing = next(w.word_id for w in words if w.word_id not in seen)
        raise LayoutValidationError("not assigned to any line", missing)

    covered = []
    for para in paragraphs:
        if para.first_line > para.last_line:
            raise LayoutValidationError(f"paragraph {para.paragraph_id} is empty")
        covered.extend(para.line_range())
    if covered != list(range(len(lines))):
        raise LayoutValidationError("paragraphs do not partition the line sequence")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise LayoutParseError(f"{where}: missing field '{key}'")
    return obj[key]


def parse_layout(document: bytes | str) -> TextLayout:
    """Parse and validate a layout document.

    Missing ``lines``/``paragraphs`` are reconstructed geometrically via
    :func:`build_reading_order` and :func:`segment_paragraphs`.
    """
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as e:
        raise LayoutParseError(f"invalid JSON at line {e.lineno} col {e.colno}: {e.msg}")
    if not isinstance(doc, dict):
        raise LayoutParseError("top-level value must be an object")

    image = _require(doc, "image", "document")
    try:
        dims = ImageDims(int(_require(image, "width_px", "image")),
                         int(_require(image, "height_px", "image")))
    except ValueError as e:
        raise LayoutParseError(f"image: {e}")

    raw_words = _require(doc, "words", "document")
    if not isinstance(raw_words, list) or not raw_words:
        raise LayoutParseError("'words' must be a non-empty array")
    words: List[Optional[WordBox]] = [None] * len(raw_words)
    for i, rw in enumerate(raw_words):
        where = f"words[{i}]"
        wid = int(rw["id"]) if "id" in rw else i
        if wid < 0 or wid >= len(raw_words) or words[wid] is not None:
            raise LayoutParseError(f"{where}: ids must be dense and unique, got {wid}")
        words[wid] = WordBox(
            word_id=wid,
            text=str(_require(rw, "text", where)),
            x=float(_require(rw, "x", where)),
            y=float(_require(rw, "y", where)),
            w=float(_require(rw, "w", where)),
            h=float(_require(rw, "h", where)),
        )
    boxes: List[WordBox] = words  # type: ignore[assignment]

    if "lines" in doc and doc["lines"] is not None:
        lines = []
        for i, ids in enumerate(doc["lines"]):
            if not ids:
                raise LayoutParseError(f"lines[{i}] is empty")
            for wid in ids:
                if not isinstance(wid, int) or wid < 0 or wid >= len(boxes):
                    raise LayoutParseError(f"lines[{i}]: bad word id {wid!r}")
            lines.append(
                Line(
                    line_id=i,
                    word_ids=tuple(ids),
                    top_px=min(boxes[w].y for w in ids),
                    bottom_px=max(boxes[w].bottom for w in ids),
                )
            )
    else:
        lines = build_reading_order(boxes)

    if "paragraphs" in doc and doc["paragraphs"] is not None:
        paragraphs = []
        for i, lids in enumerate(doc["paragraphs"]):
            if not lids:
                raise LayoutParseError(f"paragraphs[{i}] is empty")
            if list(lids) != list(range(min(lids), max(lids) + 1)):
                raise LayoutParseError(f"paragraphs[{i}]: line indices not contiguous")
            paragraphs.append(Paragraph(i, min(lids), max(lids)))
    else:
        paragraphs = segment_paragraphs(lines)

    _validate(dims, boxes, lines, paragraphs)
    return TextLayout(dims=dims, words=boxes, lines=lines, paragraphs=paragraphs)


def word_at(
    p: PixelPoint, layout: TextLayout, slack_px: float = DEFAULT_HIT_SLACK_PX
) -> Optional[int]:
    """Word whose (slack-inflated) box contains ``p``.

    Ties go to the box with the nearest center, then the smallest id.
    """
    if slack_px < 0:
        raise ValueError("slack_px must be >= 0")
    best: Optional[Tuple[float, int]] = None
    for wb in layout.words:
        if (
            wb.x - slack_px <= p.x_px <= wb.right + slack_px
            and wb.y - slack_px <= p.y_px <= wb.bottom + slack_px
        ):
            d2 = (p.x_px - wb.cx) ** 2 + (p.y_px - wb.cy) ** 2
            key = (d2, wb.word_id)
            if best is None or key < best:
                best = key
    return None if best is None else best[1]


def context_window(word_id: int, layout: TextLayout, n_words: int) -> ContextWindow:
    """The ``n_words`` reading-order neighbors on each side, plus the
    enclosing sentence (terminator + whitespace split, deliberately naive)."""
    if n_words < 0:
        raise ValueError("n_words must be >= 0")
    try:
        ordinal = layout.ordinal(word_id)
    except KeyError:
        raise KeyError(f"unknown word_id {word_id}") from None
    order = layout.reading_order()
    lo = max(0, ordinal - n_words)
    hi = min(len(order) - 1, ordinal + n_words)
    window_ids = [order[i] for i in range(lo, hi + 1)]

    s_lo = ordinal
    while s_lo > 0 and not _SENTENCE_END.search(layout.words[order[s_lo - 1]].text):
        s_lo -= 1
    s_hi = ordinal
    while s_hi < len(order) - 1 and not _SENTENCE_END.search(
        layout.words[order[s_hi]].text
    ):
        s_hi += 1
    sentence_ids = [order[i] for i in range(s_lo, s_hi + 1)]

    return ContextWindow(
        word_id=word_id,
        window_text=" ".join(layout.words[w].text for w in window_ids),
        sentence_text=" ".join(layout.words[w].text for w in sentence_ids),
        first_word_id=window_ids[0],
        last_word_id=window_ids[-1],
    )
