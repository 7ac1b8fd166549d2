"""Command line interface: replay, serve, simulate, evaluate, analyze."""

from __future__ import annotations

import json
import sys

import click

from .session import (
    ConfigError,
    analyze as analyze_log,
    load_session_config,
    read_log,
    render_analysis,
    run_replay,
)
from .sim import (
    SimConfig,
    Episode,
    evaluate as score_events,
    generate_session,
    parse_inject_spec,
    read_truth_jsonl,
    write_gaze_jsonl,
    write_truth_jsonl,
)
from .classifier import DifficultyEvent
from .session import load_layout_file


@click.group()
def main():
    """Reading-assistance pipeline: gaze in, anchored help out."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def replay(config_path):
    """Run the pipeline over a recorded gaze file."""
    try:
        cfg = load_session_config(config_path)
        envelopes = run_replay(cfg)
    except (ConfigError, ValueError) as e:
        raise click.ClickException(str(e))
    click.echo(f"replay complete: {len(envelopes)} envelopes", err=True)
    if cfg.log_path:
        click.echo(f"log written to {cfg.log_path}", err=True)
    else:
        for env in envelopes:
            click.echo(env.to_json())


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--port", default=8765, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(config_path, port, host):
    """Serve live sessions over websockets."""
    from .server import run_serve

    try:
        cfg = load_session_config(config_path)
        click.echo(f"listening on ws://{host}:{port}", err=True)
        run_serve(cfg, host=host, port=port)
    except (ConfigError, ValueError) as e:
        raise click.ClickException(str(e))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=None, type=int, help="Override the config seed.")
@click.option("--inject", "injects", multiple=True,
              help="Episode spec kind:anchor[:param=value,...]; repeatable.")
@click.option("--out-gaze", default=None, type=click.Path(),
              help="Gaze output path (default from config sim.gaze_out).")
@click.option("--out-truth", default=None, type=click.Path(),
              help="Truth output path (default from config sim.truth_out).")
def simulate(config_path, seed, injects, out_gaze, out_truth):
    """Generate a synthetic labeled session for the configured layout."""
    try:
        cfg = load_session_config(config_path)
        layout = load_layout_file(cfg.layout_path)
        sim_doc = dict(cfg.sim)
        gaze_out = out_gaze or sim_doc.pop("gaze_out", "sim_gaze.jsonl")
        truth_out = out_truth or sim_doc.pop("truth_out", "sim_truth.jsonl")
        episodes = [Episode(**e) for e in sim_doc.pop("episodes", [])]
        episodes.extend(parse_inject_spec(s) for s in injects)
        sim_cfg = SimConfig(
            **sim_doc,
            episodes=tuple(episodes),
            seed=cfg.seed if seed is None else seed,
        )
        samples, labels = generate_session(layout, sim_cfg)
        write_gaze_jsonl(samples, gaze_out)
        write_truth_jsonl(labels, truth_out)
    except (ConfigError, ValueError, TypeError) as e:
        raise click.ClickException(str(e))
    click.echo(f"wrote {len(samples)} samples to {gaze_out}", err=True)
    click.echo(f"wrote {len(labels)} labels to {truth_out}", err=True)


def _events_from_log(path: str):
    envelopes, warnings = read_log(path)
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    events = []
    for env in envelopes:
        p = env.payload
        if p.get("kind") == "DifficultyDetected":
            events.append(DifficultyEvent(
                kind=p["difficulty"], anchor_id=p["anchor_id"], t=p["t"],
                evidence=p["evidence"], confidence=p["confidence"],
            ))
    return events


@main.command("evaluate")
@click.option("--events", "events_path", required=True, type=click.Path(exists=True),
              help="Session event log (envelope JSONL).")
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True),
              help="Ground-truth label JSONL.")
@click.option("--window-ms", default=2000.0, show_default=True, type=float)
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
def evaluate_cmd(events_path, truth_path, window_ms, as_json):
    """Score detected events against ground-truth labels."""
    events = _events_from_log(events_path)
    truth = read_truth_jsonl(truth_path)
    report = score_events(events, truth, match_window_ms=window_ms)
    doc = report.to_dict()
    if as_json:
        click.echo(json.dumps(doc, indent=2, sort_keys=True))
        return
    for kind, m in doc["per_kind"].items():
        flag = " (no predictions)" if m["zero_predictions"] else ""
        click.echo(
            f"{kind}: precision {m['precision']:.3f} recall {m['recall']:.3f} "
            f"f1 {m['f1']:.3f} (tp {m['tp']} fp {m['fp']} fn {m['fn']}){flag}"
        )
    o = doc["overall"]
    click.echo(f"overall: precision {o['precision']:.3f} recall {o['recall']:.3f} f1 {o['f1']:.3f}")


@main.command()
@click.argument("log_path", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
def analyze(log_path, as_json):
    """Summarize a session event log."""
    report = analyze_log(log_path)
    if as_json:
        click.echo(json.dumps(report, indent=2, sort_keys=True))
    else:
        click.echo(render_analysis(report))


if __name__ == "__main__":
    sys.exit(main())
