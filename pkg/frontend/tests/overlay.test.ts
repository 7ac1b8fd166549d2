// @vitest-environment jsdom
import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { beforeEach, describe, expect, it, vi } from "vitest";

import { renderLayout, RenderedLayout } from "../src/layoutRenderer.js";
import { OverlayManager, anchorKey } from "../src/overlay.js";
import { AssistOverrideMsg, CardPayload, Envelope } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const demoDoc = () =>
  JSON.parse(readFileSync(join(here, "..", "..", "fixtures", "layout_demo.json"), "utf-8"));

const card = (over: Partial<CardPayload> = {}): CardPayload => ({
  card_id: 0,
  anchor_kind: "word",
  anchor_id: 5,
  assist_kind: "definition",
  content: "A short definition.",
  source_model: "mock-1",
  t_created: 1000,
  ...over,
});

const delivered = (c: CardPayload, seq = 0): Envelope => ({
  seq,
  t: c.t_created,
  payload: { kind: "AssistDelivered", card: c as unknown as Record<string, unknown> },
});

describe("OverlayManager", () => {
  let rendered: RenderedLayout;
  let clock: number;
  const now = () => clock;

  beforeEach(() => {
    document.body.innerHTML = "";
    const host = document.createElement("div");
    document.body.appendChild(host);
    rendered = renderLayout(demoDoc(), host);
    clock = 0;
  });

  it("renders a word card below its anchor bbox", () => {
    const overlay = new OverlayManager(rendered, { now });
    overlay.handleEnvelope(delivered(card()));
    const el = overlay.visibleCard(anchorKey("word", 5))!;
    expect(el).not.toBeNull();
    const box = rendered.wordBox(5)!;
    expect(el.style.left).toBe(`${box.x}px`);
    expect(el.style.top).toBe(`${box.y + box.h + 6}px`);
    expect(el.querySelector(".sara-card-content")!.textContent)
      .toBe("A short definition.");
  });

  it("renders a paragraph card alongside the paragraph", () => {
    const overlay = new OverlayManager(rendered, { now });
    overlay.handleEnvelope(delivered(card({
      anchor_kind: "paragraph", anchor_id: 0, assist_kind: "simplification",
    })));
    const el = overlay.visibleCard(anchorKey("paragraph", 0))!;
    const box = rendered.paragraphBox(0)!;
    expect(el.style.left).toBe(`${box.x + box.w + 16}px`);
    expect(el.style.top).toBe(`${box.y}px`);
  });

  it("keeps at most one card per anchor", () => {
    const overlay = new OverlayManager(rendered, { now });
    overlay.handleEnvelope(delivered(card({ content: "first" })));
    overlay.handleEnvelope(delivered(card({ content: "second", card_id: 1 }), 1));
    expect(overlay.visibleAnchors()).toEqual([anchorKey("word", 5)]);
    expect(overlay.visibleCard(anchorKey("word", 5))!
      .querySelector(".sara-card-content")!.textContent).toBe("second");
  });

  it("dismiss removes the card and suppresses re-display within cooldown", () => {
    const overlay = new OverlayManager(rendered, { now, dismissCooldownMs: 30000 });
    overlay.handleEnvelope(delivered(card()));
    const el = overlay.visibleCard(anchorKey("word", 5))!;
    (el.querySelector(".sara-dismiss") as HTMLButtonElement).click();
    expect(overlay.visibleCard(anchorKey("word", 5))).toBeNull();

    clock = 5000; // within cooldown
    overlay.handleEnvelope(delivered(card({ card_id: 2 }), 2));
    expect(overlay.visibleCard(anchorKey("word", 5))).toBeNull();

    clock = 31000; // past cooldown
    overlay.handleEnvelope(delivered(card({ card_id: 3 }), 3));
    expect(overlay.visibleCard(anchorKey("word", 5))).not.toBeNull();
  });

  it("ignores envelopes for unknown anchors with a console diagnostic", () => {
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    const overlay = new OverlayManager(rendered, { now });
    overlay.handleEnvelope(delivered(card({ anchor_id: 999 })));
    expect(overlay.visibleAnchors()).toEqual([]);
    expect(warn).toHaveBeenCalled();
    warn.mockRestore();
  });

  it("re-ask buttons send a preference override for the anchor", () => {
    const sent: AssistOverrideMsg[] = [];
    const overlay = new OverlayManager(rendered, {
      now,
      onOverride: (msg) => sent.push(msg),
      targetLanguage: () => "de",
    });
    overlay.handleEnvelope(delivered(card()));
    const el = overlay.visibleCard(anchorKey("word", 5))!;
    (el.querySelector(".sara-reask-trans") as HTMLButtonElement).click();
    expect(sent).toEqual([{
      kind: "AssistOverride",
      anchor_kind: "word",
      anchor_id: 5,
      mode: "translation",
      target_language: "de",
    }]);
  });

  it("failure envelopes render a retry affordance", () => {
    const sent: AssistOverrideMsg[] = [];
    const overlay = new OverlayManager(rendered, { now, onOverride: (m) => sent.push(m) });
    overlay.handleEnvelope({
      seq: 0, t: 100,
      payload: { kind: "AssistFailed", anchor_kind: "word", anchor_id: 5,
                 error: "AssistTimeout", message: "no reply" },
    });
    const el = overlay.visibleCard(anchorKey("word", 5))!;
    expect(el.classList.contains("sara-card-failed")).toBe(true);
    expect(el.textContent).toContain("no reply");
    (el.querySelector(".sara-retry") as HTMLButtonElement).click();
    expect(sent).toEqual([{ kind: "AssistOverride", anchor_kind: "word", anchor_id: 5 }]);
    expect(overlay.visibleCard(anchorKey("word", 5))).toBeNull();
  });

  it("every visible anchor corresponds to a rendered word or paragraph", () => {
    const overlay = new OverlayManager(rendered, { now });
    overlay.handleEnvelope(delivered(card()));
    overlay.handleEnvelope(delivered(card({
      anchor_kind: "paragraph", anchor_id: 1, assist_kind: "simplification",
    }), 1));
    for (const key of overlay.visibleAnchors()) {
      const [kind, idStr] = key.split(":");
      const id = Number(idStr);
      const box = kind === "word" ? rendered.wordBox(id) : rendered.paragraphBox(id);
      expect(box).not.toBeNull();
    }
  });
});
