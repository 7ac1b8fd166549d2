/**
 * Gaze sources: the cursor sampled at a fixed rate (desk-scale stand-in
 * for an eye tracker) or a recorded gaze file replayed at true timing.
 * Both emit pixel-mode GazeSample messages in layout coordinates.
 */

import { GazeSampleMsg, makeGazeSample } from "./protocol.js";

export type GazeSink = (msg: GazeSampleMsg) => void;

export interface CursorStreamerOptions {
  rateHz?: number;
  /** Monotonic clock in ms; injectable for tests. */
  now?: () => number;
  /** Overrides document.hidden; samples while hidden are marked invalid. */
  isVisible?: () => boolean;
}

export class CursorGazeStreamer {
  private readonly rateHz: number;
  private readonly now: () => number;
  private readonly isVisible: () => boolean;
  private timer: ReturnType<typeof setInterval> | null = null;
  private t0 = 0;
  private pos: { x: number; y: number } | null = null;
  private detach: (() => void) | null = null;

  constructor(opts: CursorStreamerOptions = {}) {
    this.rateHz = opts.rateHz ?? 30;
    this.now = opts.now ?? (() => performance.now());
    this.isVisible =
      opts.isVisible ??
      (() => (typeof document === "undefined" ? true : !document.hidden));
  }

  /** Track the cursor over a rendered layout container. Coordinates are
   * translated from client space into layout pixels (the container is
   * rendered 1:1, so only the offset matters plus any page scale). */
  attach(container: HTMLElement): void {
    const onMove = (ev: MouseEvent) => {
      const rect = container.getBoundingClientRect();
      const scaleX = rect.width > 0 ? container.offsetWidth / rect.width : 1;
      const scaleY = rect.height > 0 ? container.offsetHeight / rect.height : 1;
      this.pos = {
        x: (ev.clientX - rect.left) * scaleX,
        y: (ev.clientY - rect.top) * scaleY,
      };
    };
    container.addEventListener("mousemove", onMove);
    this.detach = () => container.removeEventListener("mousemove", onMove);
  }

  /** Direct position injection, used by scripted paths and tests. */
  setPosition(x: number, y: number): void {
    this.pos = { x, y };
  }

  start(sink: GazeSink): void {
    if (this.timer !== null) return;
    this.t0 = this.now();
    this.timer = setInterval(() => {
      if (this.pos === null) return; // nothing to report yet
      const t = this.now() - this.t0;
      sink(makeGazeSample(t, this.pos.x, this.pos.y, this.isVisible()));
    }, 1000 / this.rateHz);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    if (this.detach) {
      this.detach();
      this.detach = null;
    }
  }
}

export interface ReplayRecord {
  t: number;
  x: number;
  y: number;
  valid?: boolean;
}

export function parseGazeFile(text: string): ReplayRecord[] {
  const records: ReplayRecord[] = [];
  text.split("\n").forEach((line, i) => {
    const trimmed = line.trim();
    if (!trimmed) return;
    let obj: unknown;
    try {
      obj = JSON.parse(trimmed);
    } catch (e) {
      throw new Error(`gaze file line ${i + 1}: ${(e as Error).message}`);
    }
    const r = obj as Record<string, unknown>;
    if (typeof r.t !== "number" || typeof r.x !== "number" || typeof r.y !== "number") {
      throw new Error(`gaze file line ${i + 1}: needs numeric t, x, y`);
    }
    records.push({ t: r.t, x: r.x, y: r.y, valid: r.valid !== false });
  });
  return records;
}

/** Replays a recorded stream at true timing (or faster via `speed`). */
export class ReplayGazeStreamer {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private readonly records: ReplayRecord[],
    private readonly speed = 1.0,
  ) {}

  start(sink: GazeSink, onDone?: () => void): void {
    this.stopped = false;
    let i = 0;
    const step = () => {
      if (this.stopped) return;
      if (i >= this.records.length) {
        this.timer = null;
        onDone?.();
        return;
      }
      const rec = this.records[i];
      sink(makeGazeSample(rec.t, rec.x, rec.y, rec.valid !== false));
      i += 1;
      if (i < this.records.length) {
        const wait = (this.records[i].t - rec.t) / this.speed;
        this.timer = setTimeout(step, Math.max(0, wait));
      } else {
        this.timer = setTimeout(step, 0);
      }
    };
    step();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
