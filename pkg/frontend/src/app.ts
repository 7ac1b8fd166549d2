/**
 * Browser entry point: load a layout file, connect to a sara server,
 * stream cursor-as-gaze (or replay a recording), and render assistance
 * overlays. All the logic lives in the sibling modules; this file only
 * wires DOM controls to them.
 */

import { ReaderConnection, ConnectionStatus } from "./connection.js";
import { CursorGazeStreamer, ReplayGazeStreamer, parseGazeFile } from "./gazeStreamer.js";
import { renderLayout, RenderedLayout, LayoutError } from "./layoutRenderer.js";
import { OverlayManager } from "./overlay.js";
import { LayoutDoc, Prefs } from "./protocol.js";

interface Controls {
  server: HTMLInputElement;
  mode: HTMLSelectElement;
  language: HTMLInputElement;
  layoutFile: HTMLInputElement;
  replayFile: HTMLInputElement;
  connect: HTMLButtonElement;
  status: HTMLElement;
  banner: HTMLElement;
  reader: HTMLElement;
}

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

function showBanner(banner: HTMLElement, message: string): void {
  banner.textContent = message;
  banner.style.display = message ? "block" : "none";
}

function statusLine(status: ConnectionStatus): string {
  switch (status.state) {
    case "connecting":
      return "connecting…";
    case "open":
      return "connected";
    case "reconnecting":
      return `connection lost ${Math.round(status.gapMs / 1000)}s ago; ` +
        `retry ${status.attempt} in ${status.delayMs}ms`;
    case "closed":
      return "disconnected";
  }
}

export function boot(): void {
  const controls: Controls = {
    server: $("server-url"),
    mode: $("assist-mode"),
    language: $("target-language"),
    layoutFile: $("layout-file"),
    replayFile: $("replay-file"),
    connect: $("connect-btn"),
    status: $("status"),
    banner: $("error-banner"),
    reader: $("reader"),
  };

  let connection: ReaderConnection | null = null;
  let cursor: CursorGazeStreamer | null = null;
  let replay: ReplayGazeStreamer | null = null;
  let rendered: RenderedLayout | null = null;

  const stopStreams = () => {
    cursor?.stop();
    replay?.stop();
    connection?.close();
    cursor = null;
    replay = null;
    connection = null;
  };

  controls.connect.addEventListener("click", async () => {
    stopStreams();
    showBanner(controls.banner, "");
    const file = controls.layoutFile.files?.[0];
    if (!file) {
      showBanner(controls.banner, "Choose a layout file first.");
      return;
    }
    let doc: LayoutDoc;
    try {
      doc = JSON.parse(await file.text()) as LayoutDoc;
      rendered = renderLayout(doc, controls.reader);
    } catch (e) {
      const msg = e instanceof LayoutError ? e.message : `Layout file unreadable: ${e}`;
      showBanner(controls.banner, msg);
      return;
    }

    const prefs: Prefs = {
      assistance_mode: controls.mode.value as Prefs["assistance_mode"],
      target_language: controls.language.value || undefined,
    };
    const overlay = new OverlayManager(rendered, {
      onOverride: (msg) => connection?.send(msg),
      targetLanguage: () => controls.language.value || "en",
    });

    connection = new ReaderConnection(
      controls.server.value,
      { kind: "SessionInit", layout: doc, prefs, gaze_format: "pixel" },
      {
        onEnvelope: (env) => overlay.handleEnvelope(env),
        onStatus: (status) => {
          controls.status.textContent = statusLine(status);
          if (status.state === "open") startGaze();
        },
      },
    );
    connection.connect();

    const startGaze = () => {
      cursor?.stop();
      replay?.stop();
      const replayFile = controls.replayFile.files?.[0];
      if (replayFile) {
        replayFile.text().then((text) => {
          replay = new ReplayGazeStreamer(parseGazeFile(text));
          replay.start((msg) => connection?.send(msg));
        }).catch((e) => showBanner(controls.banner, `Replay file: ${e}`));
      } else {
        cursor = new CursorGazeStreamer();
        cursor.attach(controls.reader);
        cursor.start((msg) => connection?.send(msg));
      }
    };
  });

  window.addEventListener("beforeunload", () => {
    connection?.send({ kind: "EndSession" });
    stopStreams();
  });
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
