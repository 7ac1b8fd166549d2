#!/usr/bin/env python3
"""Regenerate the committed fixtures under fixtures/.

Everything here is hand-derived and deterministic: a 12-word demo layout
(3 lines, 2 paragraphs), three pixel-mode gaze recordings (easy_read,
hard_word, regress_para), a ray-mode twin of hard_word, ground-truth
labels, and session configs wired to the mock LLM client.

The hard_word dwell pattern is chosen so the flagged word's evidence is
exact: 900 ms observed vs a neighbor median of 200 ms, ratio 4.5.
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")

# word: (text, x, y, w, h); three lines, paragraph break before line 3.
WORDS = [
    ("The", 40, 100, 60, 24),
    ("quick", 115, 100, 80, 24),
    ("brown", 210, 100, 85, 24),
    ("fox", 310, 100, 55, 24),
    ("jumps", 40, 140, 85, 24),
    ("over", 140, 140, 70, 24),
    ("lazy", 225, 140, 60, 24),
    ("dogs.", 300, 140, 75, 24),
    ("Readers", 40, 364, 110, 24),
    ("sometimes", 165, 364, 140, 24),
    ("revisit", 320, 364, 95, 24),
    ("text.", 430, 364, 70, 24),
]
DIMS = (800, 600)
LINES = [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11]]
PARAGRAPHS = [[0, 1], [2]]

BASE_DWELL = [200, 180, 200, 220, 190, 200, 210, 200, 180, 220, 200, 200]
HARD_WORD = 5
HARD_DWELL = 900

SAMPLE_STEP_MS = 10
SACCADE_MS = 30

# Ray-mode camera: eye 0.6 m in front of a 0.4 x 0.3 m screen at the
# world origin, identity orientation.
EYE = (0.0, 0.0, 0.6)
SCREEN = {"center": [0.0, 0.0, 0.0], "orientation": [1.0, 0.0, 0.0, 0.0],
          "width_m": 0.4, "height_m": 0.3}


def center(word_id):
    _, x, y, w, h = WORDS[word_id]
    return (x + w / 2.0, y + h / 2.0)


def layout_doc():
    return {
        "image": {"width_px": DIMS[0], "height_px": DIMS[1]},
        "words": [
            {"id": i, "text": t, "x": x, "y": y, "w": w, "h": h}
            for i, (t, x, y, w, h) in enumerate(WORDS)
        ],
        "lines": LINES,
        "paragraphs": PARAGRAPHS,
    }


class Stream:
    def __init__(self):
        self.samples = []
        self.t = 0

    def fixate(self, word_id, duration_ms):
        """Samples every SAMPLE_STEP_MS at the exact word center, so the
        fixation duration equals duration_ms to the millisecond."""
        cx, cy = center(word_id)
        t_start = self.t
        for k in range(duration_ms // SAMPLE_STEP_MS + 1):
            self.samples.append({"t": self.t, "x": cx, "y": cy, "valid": True})
            self.t += SAMPLE_STEP_MS
        t_end = self.t - SAMPLE_STEP_MS
        self.t = t_end + SACCADE_MS
        return t_start, t_end


def write_jsonl(rows, path):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def pixel_to_ray(sample):
    """Convert a pixel-mode sample to a world ray from EYE through the
    matching point on the screen plane."""
    w_px, h_px = DIMS
    u = (sample["x"] - w_px / 2.0) * (SCREEN["width_m"] / w_px)
    v = (h_px / 2.0 - sample["y"]) * (SCREEN["height_m"] / h_px)
    d = (u - EYE[0], v - EYE[1], 0.0 - EYE[2])
    n = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
    return {
        "t": sample["t"],
        "ox": EYE[0], "oy": EYE[1], "oz": EYE[2],
        "dx": d[0] / n, "dy": d[1] / n, "dz": d[2] / n,
        "valid": sample["valid"],
    }


def easy_read():
    s = Stream()
    for wid, d in enumerate(BASE_DWELL):
        s.fixate(wid, d)
    return s.samples, []


def hard_word():
    s = Stream()
    labels = []
    for wid, d in enumerate(BASE_DWELL):
        if wid == HARD_WORD:
            t0, t1 = s.fixate(wid, HARD_DWELL)
            labels.append({"kind": "unfamiliar_word", "anchor_id": wid,
                           "t_start": t0, "t_end": t1})
        else:
            s.fixate(wid, d)
    return s.samples, labels


def regress_para():
    s = Stream()
    for wid in range(8):  # paragraph 0 in order
        s.fixate(wid, BASE_DWELL[wid])
    # Backward re-fixation burst into paragraph 0: landings on 1, 2, 3
    # are regressions (back 6, 2, 2); the hops to 4 and 5 are forward.
    t0, _ = s.fixate(1, 150)
    s.fixate(4, 150)
    s.fixate(2, 150)
    s.fixate(5, 150)
    _, t1 = s.fixate(3, 150)
    labels = [{"kind": "paragraph_comprehension", "anchor_id": 0,
               "t_start": t0, "t_end": t1}]
    for wid in range(8, 12):
        s.fixate(wid, BASE_DWELL[wid])
    return s.samples, labels


def session_config(name, gaze_file, fmt="pixel", screen=None):
    cfg = {
        "layout_path": "layout_demo.json",
        "gaze": {"mode": "file", "path": gaze_file, "format": fmt},
        "fixation": {"dispersion_px": 35.0, "min_fix_ms": 80.0, "max_gap_ms": 200.0},
        "classifier": {
            "neighbor_window_words": 5,
            "dwell_ratio_threshold": 3.0,
            "min_abs_dwell_ms": 600,
            "regression_min_back_words": 2,
            "regression_count_threshold": 3,
            "regression_window_ms": 5000,
            "cooldown_ms": 30000,
        },
        "prefs": {"assistance_mode": "definition", "max_card_chars": 300},
        "llm": {"backend": "mock", "model": "mock-1"},
        "log_path": f"../out/{name}.log.jsonl",
        "seed": 7,
    }
    if screen is not None:
        cfg["screen"] = screen
    return cfg


def main():
    os.makedirs(FIXTURES, exist_ok=True)

    with open(os.path.join(FIXTURES, "layout_demo.json"), "w", encoding="utf-8") as fh:
        json.dump(layout_doc(), fh, indent=2)
        fh.write("\n")

    for name, builder in [("easy_read", easy_read), ("hard_word", hard_word),
                          ("regress_para", regress_para)]:
        samples, labels = builder()
        write_jsonl(samples, os.path.join(FIXTURES, f"{name}.jsonl"))
        write_jsonl(labels, os.path.join(FIXTURES, f"truth_{name}.jsonl"))
        with open(os.path.join(FIXTURES, f"session_{name}.json"), "w") as fh:
            json.dump(session_config(name, f"{name}.jsonl"), fh, indent=2)
            fh.write("\n")

    hard_samples, _ = hard_word()
    write_jsonl([pixel_to_ray(s) for s in hard_samples],
                os.path.join(FIXTURES, "hard_word_ray.jsonl"))
    with open(os.path.join(FIXTURES, "session_hard_word_ray.json"), "w") as fh:
        json.dump(session_config("hard_word_ray", "hard_word_ray.jsonl",
                                 fmt="ray", screen=SCREEN), fh, indent=2)
        fh.write("\n")

    live = session_config("live", None)
    live["gaze"] = {"mode": "live", "format": "pixel"}
    del live["log_path"]
    live["serve"] = {"heartbeat_s": 5.0}
    with open(os.path.join(FIXTURES, "session_live.json"), "w") as fh:
        json.dump(live, fh, indent=2)
        fh.write("\n")

    print(f"fixtures written to {os.path.abspath(FIXTURES)}")


if __name__ == "__main__":
    main()
