/**
 * Assistance card overlays anchored to words and paragraphs.
 *
 * Word cards render below their word's box so unread text above stays
 * clear; paragraph cards render alongside the paragraph. At most one
 * card per anchor is visible; dismissing a card suppresses re-display
 * for that anchor for a cooldown period; failure envelopes render a
 * retry affordance that re-requests assistance via AssistOverride.
 */

import { RenderedLayout, Box } from "./layoutRenderer.js";
import { AssistOverrideMsg, CardPayload, Envelope } from "./protocol.js";

export type AnchorKey = string; // "word:5" | "paragraph:0"

export const anchorKey = (kind: "word" | "paragraph", id: number): AnchorKey =>
  `${kind}:${id}`;

export interface OverlayOptions {
  /** Suppress re-display of a dismissed anchor for this long (ms). */
  dismissCooldownMs?: number;
  now?: () => number;
  /** Called when the reader asks to re-request help for an anchor. */
  onOverride?: (msg: AssistOverrideMsg) => void;
  targetLanguage?: () => string;
}

interface CardState {
  el: HTMLElement;
  payload: CardPayload | null; // null for failure cards
}

export class OverlayManager {
  private readonly cards = new Map<AnchorKey, CardState>();
  private readonly dismissedAt = new Map<AnchorKey, number>();
  private readonly cooldownMs: number;
  private readonly now: () => number;

  constructor(
    private readonly layout: RenderedLayout,
    private readonly opts: OverlayOptions = {},
  ) {
    this.cooldownMs = opts.dismissCooldownMs ?? 30000;
    this.now = opts.now ?? (() => Date.now());
  }

  handleEnvelope(env: Envelope): void {
    const kind = env.payload.kind;
    if (kind === "AssistDelivered") {
      this.showCard(env.payload.card as unknown as CardPayload);
    } else if (kind === "AssistFailed") {
      this.showFailure(
        env.payload.anchor_kind as "word" | "paragraph",
        env.payload.anchor_id as number,
        String(env.payload.message ?? "assistance failed"),
      );
    }
  }

  private anchorBox(kind: "word" | "paragraph", id: number): Box | null {
    return kind === "word" ? this.layout.wordBox(id) : this.layout.paragraphBox(id);
  }

  private suppressed(key: AnchorKey): boolean {
    const at = this.dismissedAt.get(key);
    return at !== undefined && this.now() - at < this.cooldownMs;
  }

  showCard(card: CardPayload): void {
    const key = anchorKey(card.anchor_kind, card.anchor_id);
    const box = this.anchorBox(card.anchor_kind, card.anchor_id);
    if (box === null) {
      console.warn(`sara: card for unknown anchor ${key}, ignoring`);
      return;
    }
    if (this.suppressed(key)) {
      console.info(`sara: card for ${key} suppressed (dismissed recently)`);
      return;
    }
    this.remove(key);
    const el = this.buildCardEl(key, card, box);
    this.layout.container.appendChild(el);
    this.cards.set(key, { el, payload: card });
  }

  showFailure(kind: "word" | "paragraph", id: number, message: string): void {
    const key = anchorKey(kind, id);
    const box = this.anchorBox(kind, id);
    if (box === null) {
      console.warn(`sara: failure for unknown anchor ${key}, ignoring`);
      return;
    }
    this.remove(key);
    const el = document.createElement("div");
    el.className = "sara-card sara-card-failed";
    el.dataset.anchor = key;
    this.position(el, kind, box);
    const text = document.createElement("div");
    text.className = "sara-card-content";
    text.textContent = `Assistance failed: ${message}`;
    el.appendChild(text);
    el.appendChild(this.button("Retry", "sara-retry", () => {
      this.remove(key);
      this.opts.onOverride?.({
        kind: "AssistOverride",
        anchor_kind: kind,
        anchor_id: id,
      });
    }));
    el.appendChild(this.button("×", "sara-dismiss", () => this.dismiss(key)));
    this.layout.container.appendChild(el);
    this.cards.set(key, { el, payload: null });
  }

  private buildCardEl(key: AnchorKey, card: CardPayload, box: Box): HTMLElement {
    const el = document.createElement("div");
    el.className = `sara-card sara-card-${card.assist_kind}`;
    el.dataset.anchor = key;
    el.dataset.cardId = String(card.card_id);
    this.position(el, card.anchor_kind, box);

    const label = document.createElement("div");
    label.className = "sara-card-kind";
    label.textContent = card.assist_kind;
    el.appendChild(label);

    const content = document.createElement("div");
    content.className = "sara-card-content";
    content.textContent = card.content;
    el.appendChild(content);

    const controls = document.createElement("div");
    controls.className = "sara-card-controls";
    const reAsk = (mode: "definition" | "translation") => () => {
      this.opts.onOverride?.({
        kind: "AssistOverride",
        anchor_kind: card.anchor_kind,
        anchor_id: card.anchor_id,
        mode,
        ...(mode === "translation"
          ? { target_language: this.opts.targetLanguage?.() ?? "en" }
          : {}),
      });
    };
    if (card.anchor_kind === "word") {
      if (card.assist_kind !== "definition") {
        controls.appendChild(this.button("As definition", "sara-reask-def",
                                         reAsk("definition")));
      }
      if (card.assist_kind !== "translation") {
        controls.appendChild(this.button("As translation", "sara-reask-trans",
                                         reAsk("translation")));
      }
    }
    controls.appendChild(this.button("×", "sara-dismiss", () => this.dismiss(key)));
    el.appendChild(controls);
    return el;
  }

  private position(el: HTMLElement, kind: "word" | "paragraph", box: Box): void {
    el.style.position = "absolute";
    if (kind === "word") {
      // below the word so unread text above stays unobscured
      el.style.left = `${box.x}px`;
      el.style.top = `${box.y + box.h + 6}px`;
    } else {
      // alongside the paragraph (original text stays visible)
      el.style.left = `${box.x + box.w + 16}px`;
      el.style.top = `${box.y}px`;
    }
  }

  private button(label: string, cls: string, onClick: () => void): HTMLElement {
    const b = document.createElement("button");
    b.className = cls;
    b.type = "button";
    b.textContent = label;
    b.addEventListener("click", onClick);
    return b;
  }

  dismiss(key: AnchorKey): void {
    this.dismissedAt.set(key, this.now());
    this.remove(key);
  }

  private remove(key: AnchorKey): void {
    const state = this.cards.get(key);
    if (state) {
      state.el.remove();
      this.cards.delete(key);
    }
  }

  visibleCard(key: AnchorKey): HTMLElement | null {
    return this.cards.get(key)?.el ?? null;
  }

  visibleAnchors(): AnchorKey[] {
    return [...this.cards.keys()];
  }
}
