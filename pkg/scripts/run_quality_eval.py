#!/usr/bin/env python3
"""Detection-quality experiment: sweep seeded simulated sessions and
report per-kind precision/recall, plus a clean-session false-positive
control. This is the long-form version of the acceptance check, with
knobs for session count, episode mix, and layout size.

Usage:
    python3 scripts/run_quality_eval.py --sessions 200 --episodes-per-kind 40
"""

import argparse
import json
import os
import random
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sara.classifier import (  # noqa: E402
    PARAGRAPH_COMPREHENSION,
    UNFAMILIAR_WORD,
    ClassifierConfig,
    classify_incremental,
)
from sara.gaze import FixationConfig, assign_fixations, detect_fixations  # noqa: E402
from sara.sim import Episode, SimConfig, evaluate, generate_session, make_grid_layout  # noqa: E402


def run_pipeline(layout, samples, fcfg, ccfg):
    fixations = detect_fixations(samples, fcfg)
    hits = assign_fixations(fixations, layout)
    return classify_incremental(list(zip(fixations, hits)), layout, ccfg)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sessions", type=int, default=100)
    ap.add_argument("--episodes-per-kind", type=int, default=20)
    ap.add_argument("--clean-sessions", type=int, default=100)
    ap.add_argument("--lines", type=int, default=10)
    ap.add_argument("--words-per-line", type=int, default=6)
    ap.add_argument("--factor", type=float, default=5.0, help="Dwell boost factor.")
    ap.add_argument("--regressions", type=int, default=4, help="Regressions per episode.")
    ap.add_argument("--base-seed", type=int, default=0)
    ap.add_argument("--match-window-ms", type=float, default=2000.0)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    layout = make_grid_layout(n_lines=args.lines, words_per_line=args.words_per_line)
    fcfg = FixationConfig()
    ccfg = ClassifierConfig()

    t0 = time.perf_counter()
    tp = {UNFAMILIAR_WORD: 0, PARAGRAPH_COMPREHENSION: 0}
    fp = dict(tp)
    fn = dict(tp)
    per_kind_budget = min(args.episodes_per_kind, args.sessions // 2)
    for i in range(args.sessions):
        rng = random.Random(args.base_seed * 1_000_003 + i)
        episodes = []
        if i < per_kind_budget:
            anchor = rng.randrange(6, layout.n_words - 6)
            episodes.append(Episode(UNFAMILIAR_WORD, anchor, {"factor": args.factor}))
        elif i < 2 * per_kind_budget:
            pid = rng.randrange(len(layout.paragraphs))
            episodes.append(Episode(PARAGRAPH_COMPREHENSION, pid,
                                    {"count": args.regressions}))
        cfg = SimConfig(seed=args.base_seed * 7_919 + 100_000 + i,
                        episodes=tuple(episodes))
        samples, labels = generate_session(layout, cfg)
        report = evaluate(run_pipeline(layout, samples, fcfg, ccfg), labels,
                          match_window_ms=args.match_window_ms)
        for kind, m in report.per_kind.items():
            tp[kind] += m.tp
            fp[kind] += m.fp
            fn[kind] += m.fn

    noisy = 0
    for i in range(args.clean_sessions):
        samples, _ = generate_session(
            layout, SimConfig(seed=args.base_seed * 104_729 + 500_000 + i))
        if run_pipeline(layout, samples, fcfg, ccfg):
            noisy += 1
    elapsed = time.perf_counter() - t0

    results = {"elapsed_s": round(elapsed, 2), "per_kind": {}, "clean": {
        "sessions": args.clean_sessions,
        "with_events": noisy,
        "silent_fraction": 1.0 - noisy / max(1, args.clean_sessions),
    }}
    for kind in tp:
        p = tp[kind] / max(1, tp[kind] + fp[kind])
        r = tp[kind] / max(1, tp[kind] + fn[kind])
        results["per_kind"][kind] = {
            "tp": tp[kind], "fp": fp[kind], "fn": fn[kind],
            "precision": round(p, 4), "recall": round(r, 4),
        }

    if args.json:
        print(json.dumps(results, indent=2, sort_keys=True))
        return
    print(f"sessions: {args.sessions} ({per_kind_budget} episodes/kind), "
          f"clean control: {args.clean_sessions}, elapsed {elapsed:.1f}s")
    for kind, m in results["per_kind"].items():
        print(f"  {kind}: precision {m['precision']:.3f} recall {m['recall']:.3f} "
              f"(tp {m['tp']} fp {m['fp']} fn {m['fn']})")
    c = results["clean"]
    print(f"  clean sessions with events: {c['with_events']}/{c['sessions']} "
          f"(silent {c['silent_fraction']:.1%})")


if __name__ == "__main__":
    main()
