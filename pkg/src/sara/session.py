"""Session orchestration: config, the end-to-end pipeline, replay, analyze.

A session is one reader, one layout, one gaze stream. The pipeline is
strictly incremental (the live server feeds it message by message) and
replay mode just drives it from a recorded file, so the two modes cannot
diverge. Every derived envelope is stamped with the session time of the
sample that triggered it, never wall-clock, which is what makes replay
logs byte-reproducible with the mock LLM client.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

from . import assist as assist_mod
from .assist import (
    AssistError,
    AssistRequest,
    AssistanceCard,
    DispatchRecord,
    RetryPolicy,
    UserPrefs,
    request_assistance,
    should_dispatch,
)
from .classifier import (
    PARAGRAPH_COMPREHENSION,
    UNFAMILIAR_WORD,
    ClassifierConfig,
    DifficultyEvent,
    IncrementalClassifier,
)
from .gaze import (
    FixationConfig,
    Fixation,
    GazeSample,
    StreamingFixationDetector,
    WordHit,
    assign_fixations,
    read_gaze_file,
)
from .geometry import Quaternion, ScreenPose, WorldPoint
from .layout import TextLayout, context_window, parse_layout
from .llm import HttpChatClient, LLMClient, MockLLMClient


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GazeInput:
    mode: str = "file"  # "file" | "live"
    path: Optional[str] = None
    format: str = "pixel"  # "pixel" | "ray"


@dataclass(frozen=True)
class LLMSettings:
    backend: str = "mock"  # "mock" | "http"
    model: str = "mock-1"
    endpoint: Optional[str] = None
    timeout_s: float = 30.0
    max_attempts: int = 3
    template_path: Optional[str] = None
    # Mock knobs, used by fixtures and tests.
    mock_fail_times: int = 0
    in_flight_cap: int = 2


@dataclass(frozen=True)
class ServeSettings:
    heartbeat_s: float = 5.0
    log_dir: Optional[str] = None


@dataclass(frozen=True)
class SessionConfig:
    layout_path: str
    gaze: GazeInput = GazeInput()
    screen: Optional[ScreenPose] = None  # required for ray-format gaze
    fixation: FixationConfig = FixationConfig()
    classifier: ClassifierConfig = ClassifierConfig()
    prefs: UserPrefs = UserPrefs()
    llm: LLMSettings = LLMSettings()
    hit_slack_px: float = 4.0
    assist_cooldown_ms: float = 30000.0
    log_path: Optional[str] = None
    seed: int = 0
    sim: Dict[str, Any] = field(default_factory=dict)
    serve: ServeSettings = ServeSettings()


def _screen_from_dict(obj: dict) -> ScreenPose:
    c = obj["center"]
    q = obj["orientation"]
    return ScreenPose(
        center=WorldPoint(float(c[0]), float(c[1]), float(c[2])),
        orientation=Quaternion(float(q[0]), float(q[1]), float(q[2]), float(q[3])).normalized(),
        width_m=float(obj["width_m"]),
        height_m=float(obj["height_m"]),
    )


def config_from_dict(doc: dict, base_dir: str = ".") -> SessionConfig:
    """Build a SessionConfig from parsed JSON, resolving relative paths
    against the config file's directory."""

    def respath(p: Optional[str]) -> Optional[str]:
        if p is None:
            return None
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(base_dir, p))

    try:
        gaze = GazeInput(**doc.get("gaze", {}))
        if gaze.mode not in ("file", "live"):
            raise ConfigError(f"gaze.mode must be 'file' or 'live', got {gaze.mode!r}")
        if gaze.format not in ("pixel", "ray"):
            raise ConfigError(f"gaze.format must be 'pixel' or 'ray', got {gaze.format!r}")
        if gaze.mode == "file" and not gaze.path:
            raise ConfigError("gaze.mode 'file' requires gaze.path")
        if gaze.mode == "live" and gaze.path:
            raise ConfigError("gaze.mode 'live' takes no gaze.path")
        gaze = replace(gaze, path=respath(gaze.path))
        screen = _screen_from_dict(doc["screen"]) if doc.get("screen") else None
        if gaze.format == "ray" and screen is None:
            raise ConfigError("ray-format gaze requires a 'screen' pose")
        cfg = SessionConfig(
            layout_path=respath(doc["layout_path"]),
            gaze=gaze,
            screen=screen,
            fixation=FixationConfig(**doc.get("fixation", {})),
            classifier=ClassifierConfig(**doc.get("classifier", {})),
            prefs=UserPrefs(**doc.get("prefs", {})),
            llm=LLMSettings(**doc.get("llm", {})),
            hit_slack_px=float(doc.get("hit_slack_px", 4.0)),
            assist_cooldown_ms=float(doc.get("assist_cooldown_ms", 30000.0)),
            log_path=respath(doc.get("log_path")),
            seed=int(doc.get("seed", 0)),
            sim=doc.get("sim", {}),
            serve=ServeSettings(**doc.get("serve", {})),
        )
    except KeyError as e:
        raise ConfigError(f"config missing field {e}") from e
    except TypeError as e:
        raise ConfigError(f"bad config field: {e}") from e
    return cfg


def load_session_config(path: str) -> SessionConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")
    cfg = config_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))
    if not os.path.exists(cfg.layout_path):
        raise ConfigError(f"layout file not found: {cfg.layout_path}")
    if cfg.gaze.mode == "file" and not os.path.exists(cfg.gaze.path):
        raise ConfigError(f"gaze file not found: {cfg.gaze.path}")
    return cfg


def make_llm_client(settings: LLMSettings) -> LLMClient:
    if settings.backend == "mock":
        return MockLLMClient(fail_times=settings.mock_fail_times, model_name=settings.model)
    if settings.backend == "http":
        if not settings.endpoint:
            raise ConfigError("http LLM backend requires an endpoint URL")
        return HttpChatClient(
            endpoint=settings.endpoint,
            model_name=settings.model,
            timeout_s=settings.timeout_s,
        )
    raise ConfigError(f"unknown llm backend {settings.backend!r}")


# ---------------------------------------------------------------------------
# Event envelopes

PAYLOAD_KINDS = (
    "GazeAccepted",
    "FixationEnded",
    "WordHit",
    "DifficultyDetected",
    "AssistRequested",
    "AssistDelivered",
    "AssistFailed",
    "SessionEnded",
)


@dataclass(frozen=True)
class EventEnvelope:
    seq: int
    t: float
    payload: Dict[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "t": self.t, "payload": self.payload},
            sort_keys=True,
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(line: str) -> "EventEnvelope":
        obj = json.loads(line)
        return EventEnvelope(seq=int(obj["seq"]), t=float(obj["t"]), payload=obj["payload"])


class SessionPipeline:
    """Incremental pipeline for one session: samples in, envelopes out.

    Single-writer: feed from one logical stream only. Assist requests go
    through a bounded worker pool but are awaited at the dispatch point,
    so envelope order is a pure function of the input stream.
    """

    def __init__(
        self,
        layout: TextLayout,
        cfg: SessionConfig,
        client: Optional[LLMClient] = None,
        emit: Optional[Callable[[EventEnvelope], None]] = None,
    ):
        self.layout = layout
        self.cfg = cfg
        self.client = client if client is not None else make_llm_client(cfg.llm)
        self.templates = assist_mod.load_templates(cfg.llm.template_path)
        self.detector = StreamingFixationDetector(cfg.fixation)
        self.classifier = IncrementalClassifier(layout, cfg.classifier)
        self.policy = RetryPolicy(max_attempts=cfg.llm.max_attempts)
        self.history: List[DispatchRecord] = []
        self.pool = ThreadPoolExecutor(max_workers=max(1, cfg.llm.in_flight_cap))
        self.emit = emit
        self._seq = 0
        self._last_t = 0.0
        self._last_sample_t: Optional[float] = None
        self._card_counter = 0
        self.totals = {
            "samples_accepted": 0,
            "fixations": 0,
            "word_hits": 0,
            "difficulty_events": 0,
            "cards_delivered": 0,
            "assist_failures": 0,
        }
        self._closed = False

    def _envelope(self, t: float, payload: Dict[str, Any]) -> EventEnvelope:
        env = EventEnvelope(seq=self._seq, t=max(t, self._last_t), payload=payload)
        self._seq += 1
        self._last_t = env.t
        if self.emit:
            self.emit(env)
        return env

    def feed_sample(self, sample: GazeSample) -> List[EventEnvelope]:
        if self._closed:
            raise RuntimeError("session already ended")
        if not sample.valid:
            return []
        if self._last_sample_t is not None and sample.t <= self._last_sample_t:
            return []
        self._last_sample_t = sample.t
        out: List[EventEnvelope] = []
        # Fixations complete strictly before the breaking sample, so their
        # envelopes go out first to keep t non-decreasing.
        for fixation in self.detector.feed(sample):
            out.extend(self._on_fixation(fixation))
        self.totals["samples_accepted"] += 1
        out.append(
            self._envelope(
                sample.t,
                {"kind": "GazeAccepted", "t": sample.t,
                 "x_px": sample.p.x_px, "y_px": sample.p.y_px},
            )
        )
        return out

    def finish(self) -> List[EventEnvelope]:
        if self._closed:
            return []
        self._closed = True
        out: List[EventEnvelope] = []
        for fixation in self.detector.flush():
            out.extend(self._on_fixation(fixation))
        self.pool.shutdown(wait=True)
        out.append(
            self._envelope(self._last_t, {"kind": "SessionEnded", "totals": dict(self.totals)})
        )
        return out

    # -- internals ----------------------------------------------------

    def _on_fixation(self, fixation: Fixation) -> List[EventEnvelope]:
        out: List[EventEnvelope] = []
        self.totals["fixations"] += 1
        out.append(
            self._envelope(
                fixation.t_end,
                {
                    "kind": "FixationEnded",
                    "fixation_id": fixation.fixation_id,
                    "t_start": fixation.t_start,
                    "t_end": fixation.t_end,
                    "n_samples": fixation.n_samples,
                    "x_px": fixation.centroid.x_px,
                    "y_px": fixation.centroid.y_px,
                },
            )
        )
        hit = assign_fixations([fixation], self.layout, self.cfg.hit_slack_px)[0]
        if hit.word_id is not None:
            self.totals["word_hits"] += 1
        out.append(
            self._envelope(
                fixation.t_end,
                {
                    "kind": "WordHit",
                    "fixation_id": hit.fixation_id,
                    "word_id": hit.word_id,
                    "line_id": hit.line_id,
                    "word_index_in_line": hit.word_index_in_line,
                },
            )
        )
        for event in self.classifier.feed(fixation, hit):
            out.extend(self._on_difficulty(event))
        return out

    def _on_difficulty(self, event: DifficultyEvent) -> List[EventEnvelope]:
        out: List[EventEnvelope] = []
        self.totals["difficulty_events"] += 1
        out.append(
            self._envelope(
                event.t,
                {
                    "kind": "DifficultyDetected",
                    "difficulty": event.kind,
                    "anchor_id": event.anchor_id,
                    "t": event.t,
                    "evidence": dict(event.evidence),
                    "confidence": event.confidence,
                },
            )
        )
        if should_dispatch(self.history, event, self.cfg.assist_cooldown_ms):
            out.extend(self.dispatch_assist(event))
        return out

    def request_for_event(
        self, event: DifficultyEvent, prefs: Optional[UserPrefs] = None
    ) -> AssistRequest:
        prefs = prefs or self.cfg.prefs
        if event.kind == UNFAMILIAR_WORD:
            ctx = context_window(event.anchor_id, self.layout, n_words=0)
            return AssistRequest(
                event=event,
                anchor_text=self.layout.word(event.anchor_id).text,
                context=ctx.sentence_text,
                prefs=prefs,
            )
        text = self.layout.paragraph_text(event.anchor_id)
        return AssistRequest(event=event, anchor_text=text, context=text, prefs=prefs)

    def dispatch_assist(
        self, event: DifficultyEvent, prefs: Optional[UserPrefs] = None
    ) -> List[EventEnvelope]:
        """Dispatch one assistance request and wait for its outcome.

        Submission goes through the bounded pool (the in-flight cap), but
        the pipeline blocks on the future so that delivery envelopes land
        at a deterministic point in the stream.
        """
        out: List[EventEnvelope] = []
        req = self.request_for_event(event, prefs)
        anchor_kind = req.anchor_kind
        self.history.append(DispatchRecord(anchor_kind, event.anchor_id, event.t, "in_flight"))
        out.append(
            self._envelope(
                event.t,
                {
                    "kind": "AssistRequested",
                    "anchor_kind": anchor_kind,
                    "anchor_id": event.anchor_id,
                    "assist_kind": assist_mod.resolve_kind(req),
                },
            )
        )
        card_id = self._card_counter
        self._card_counter += 1
        future = self.pool.submit(
            request_assistance, req, self.client, self.policy, self.templates, card_id
        )
        try:
            card: AssistanceCard = future.result()
        except AssistError as e:
            self.totals["assist_failures"] += 1
            self.history.append(DispatchRecord(anchor_kind, event.anchor_id, event.t, "failed"))
            out.append(
                self._envelope(
                    event.t,
                    {
                        "kind": "AssistFailed",
                        "anchor_kind": anchor_kind,
                        "anchor_id": event.anchor_id,
                        "error": type(e).__name__,
                        "message": str(e),
                    },
                )
            )
            return out
        self.totals["cards_delivered"] += 1
        self.history.append(DispatchRecord(anchor_kind, event.anchor_id, event.t, "delivered"))
        out.append(
            self._envelope(
                event.t,
                {
                    "kind": "AssistDelivered",
                    "card": {
                        "card_id": card.card_id,
                        "anchor_kind": card.anchor_kind,
                        "anchor_id": card.anchor_id,
                        "assist_kind": card.kind,
                        "content": card.content,
                        "source_model": card.source_model,
                        "t_created": card.t_created,
                    },
                },
            )
        )
        return out


def load_layout_file(path: str) -> TextLayout:
    with open(path, "rb") as fh:
        return parse_layout(fh.read())


def run_replay(cfg: SessionConfig, client: Optional[LLMClient] = None) -> List[EventEnvelope]:
    """Run the full pipeline over a recorded gaze file.

    Inputs are validated and fully parsed before any envelope is produced;
    the log (if configured) is written as line-delimited JSON envelopes.
    """
    if cfg.gaze.mode != "file":
        raise ConfigError("run_replay requires gaze.mode 'file'")
    layout = load_layout_file(cfg.layout_path)
    samples = read_gaze_file(
        cfg.gaze.path,
        fmt=cfg.gaze.format,
        pose=cfg.screen,
        dims=layout.dims,
    )
    envelopes: List[EventEnvelope] = []
    pipeline = SessionPipeline(layout, cfg, client=client, emit=envelopes.append)
    for s in samples:
        pipeline.feed_sample(s)
    pipeline.finish()
    if cfg.log_path:
        write_log(envelopes, cfg.log_path)
    return envelopes


def write_log(envelopes: List[EventEnvelope], path: str) -> None:
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for env in envelopes:
            fh.write(env.to_json())
            fh.write("\n")


def read_log(path: str) -> Tuple[List[EventEnvelope], List[str]]:
    """Parse a log file; corrupt lines become warnings, not failures."""
    envelopes: List[EventEnvelope] = []
    warnings: List[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                envelopes.append(EventEnvelope.from_json(line))
            except (ValueError, KeyError, TypeError) as e:
                warnings.append(f"line {lineno}: {e}")
    return envelopes, warnings


DWELL_HISTOGRAM_BUCKET_MS = 100.0


def analyze(log_path: str) -> Dict[str, Any]:
    """Summarize a session log: envelope counts, difficulty events by
    kind, per-word dwell histogram, mean time from detection to delivered
    card. Corrupt lines are reported as warnings and skipped."""
    envelopes, warnings = read_log(log_path)
    counts: Dict[str, int] = {k: 0 for k in PAYLOAD_KINDS}
    events_by_kind = {UNFAMILIAR_WORD: 0, PARAGRAPH_COMPREHENSION: 0}
    fix_durations: Dict[int, float] = {}
    dwell: Dict[int, float] = {}
    detected_at: Dict[Tuple[str, int], float] = {}
    assist_latencies: List[float] = []
    for env in envelopes:
        kind = env.payload.get("kind")
        if kind not in counts:
            warnings.append(f"seq {env.seq}: unknown payload kind {kind!r}")
            continue
        counts[kind] += 1
        p = env.payload
        if kind == "FixationEnded":
            fix_durations[p["fixation_id"]] = p["t_end"] - p["t_start"]
        elif kind == "WordHit" and p.get("word_id") is not None:
            dur = fix_durations.get(p["fixation_id"], 0.0)
            dwell[p["word_id"]] = dwell.get(p["word_id"], 0.0) + dur
        elif kind == "DifficultyDetected":
            events_by_kind[p["difficulty"]] = events_by_kind.get(p["difficulty"], 0) + 1
            detected_at[(p["difficulty"], p["anchor_id"])] = p["t"]
        elif kind == "AssistDelivered":
            card = p["card"]
            d_kind = UNFAMILIAR_WORD if card["anchor_kind"] == "word" else PARAGRAPH_COMPREHENSION
            t0 = detected_at.get((d_kind, card["anchor_id"]))
            if t0 is not None:
                assist_latencies.append(env.t - t0)

    histogram: Dict[str, int] = {}
    for v in dwell.values():
        bucket = int(v // DWELL_HISTOGRAM_BUCKET_MS) * int(DWELL_HISTOGRAM_BUCKET_MS)
        key = f"{bucket}-{bucket + int(DWELL_HISTOGRAM_BUCKET_MS) - 1}"
        histogram[key] = histogram.get(key, 0) + 1

    return {
        "envelopes": len(envelopes),
        "counts": counts,
        "difficulty_by_kind": events_by_kind,
        "distinct_words_dwelled": len(dwell),
        "dwell_histogram_ms": dict(sorted(histogram.items(), key=lambda kv: int(kv[0].split("-")[0]))),
        "mean_time_to_assistance_ms": (
            sum(assist_latencies) / len(assist_latencies) if assist_latencies else None
        ),
        "warnings": warnings,
    }


def render_analysis(report: Dict[str, Any]) -> str:
    lines = [
        f"envelopes: {report['envelopes']}",
        "counts:",
    ]
    for k, v in report["counts"].items():
        lines.append(f"  {k}: {v}")
    lines.append("difficulty events:")
    for k, v in report["difficulty_by_kind"].items():
        lines.append(f"  {k}: {v}")
    lines.append(f"distinct words dwelled: {report['distinct_words_dwelled']}")
    lines.append("dwell histogram (ms):")
    for k, v in report["dwell_histogram_ms"].items():
        lines.append(f"  {k}: {v}")
    mt = report["mean_time_to_assistance_ms"]
    lines.append(f"mean time to assistance: {'n/a' if mt is None else f'{mt:.1f} ms'}")
    if report["warnings"]:
        lines.append(f"warnings ({len(report['warnings'])}):")
        for w in report["warnings"]:
            lines.append(f"  {w}")
    return "\n".join(lines)
