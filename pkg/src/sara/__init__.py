"""Gaze-driven reading difficulty detection with anchored LLM assistance.

Pipeline: world-space gaze rays (or raw pixel gaze) -> fixations ->
word hits and dwell -> difficulty events (unfamiliar words, paragraph
comprehension) -> anchored assistance cards. Replay, live-serve, and
simulated modes share one incremental pipeline.
"""

from .geometry import (
    GazeRay,
    ImageDims,
    PixelPoint,
    Quaternion,
    ScreenPose,
    WorldPoint,
    gaze_to_pixel,
    intersect_ray_screen,
    pixel_to_screen_local,
    screen_local_to_pixel,
    world_to_screen_local,
)
from .layout import (
    Line,
    Paragraph,
    TextLayout,
    WordBox,
    build_reading_order,
    context_window,
    parse_layout,
    segment_paragraphs,
    word_at,
)
from .gaze import (
    DwellMap,
    Fixation,
    FixationConfig,
    GazeSample,
    StreamingFixationDetector,
    WordHit,
    accumulate_dwell,
    assign_fixations,
    detect_fixations,
    reading_progression,
)
from .classifier import (
    ClassifierConfig,
    DifficultyEvent,
    IncrementalClassifier,
    baseline_dwell,
    classify_batch,
    classify_incremental,
    detect_comprehension_difficulty,
    detect_regressions,
    detect_unfamiliar_words,
)
from .assist import (
    AssistanceCard,
    AssistRequest,
    RetryPolicy,
    UserPrefs,
    build_prompt,
    request_assistance,
    should_dispatch,
)
from .llm import HttpChatClient, MockLLMClient
from .session import (
    EventEnvelope,
    SessionConfig,
    SessionPipeline,
    analyze,
    load_session_config,
    run_replay,
)
from .sim import Episode, SimConfig, evaluate, generate_session

__version__ = "0.1.0"
