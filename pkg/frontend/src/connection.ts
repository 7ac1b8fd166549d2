/**
 * Websocket session wrapper: sends SessionInit on open, validates every
 * outgoing message against the protocol schema, splits incoming traffic
 * into envelopes and control messages, and reconnects with exponential
 * backoff after unexpected closes (reporting the gap to the UI).
 */

import { reconnectDelayMs } from "./backoff.js";
import {
  ClientMessage,
  Envelope,
  ControlMessage,
  SessionInitMsg,
  parseServerMessage,
  validateClientMessage,
} from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(code?: number, reason?: string): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface ConnectionEvents {
  onEnvelope?: (env: Envelope) => void;
  onControl?: (msg: ControlMessage) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

export type ConnectionStatus =
  | { state: "connecting"; attempt: number }
  | { state: "open" }
  | { state: "reconnecting"; attempt: number; delayMs: number; gapMs: number }
  | { state: "closed" };

export interface ConnectionOptions extends ConnectionEvents {
  wsFactory?: WebSocketFactory;
  maxReconnectAttempts?: number;
  baseBackoffMs?: number;
  now?: () => number;
}

const defaultFactory: WebSocketFactory = (url) =>
  new WebSocket(url) as unknown as WebSocketLike;

export class ReaderConnection {
  private ws: WebSocketLike | null = null;
  private readonly factory: WebSocketFactory;
  private readonly maxAttempts: number;
  private readonly baseBackoffMs: number;
  private readonly now: () => number;
  private attempt = 0;
  private closedByUs = false;
  private lastOpenLostAt: number | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly init: SessionInitMsg,
    private readonly events: ConnectionOptions = {},
  ) {
    this.factory = events.wsFactory ?? defaultFactory;
    this.maxAttempts = events.maxReconnectAttempts ?? 6;
    this.baseBackoffMs = events.baseBackoffMs ?? 500;
    this.now = events.now ?? (() => Date.now());
  }

  connect(): void {
    this.closedByUs = false;
    this.open(0);
  }

  private open(attempt: number): void {
    this.events.onStatus?.({ state: "connecting", attempt });
    const ws = this.factory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.attempt = 0;
      this.sendRaw(this.init);
      this.events.onStatus?.({ state: "open" });
    };
    ws.onmessage = (ev) => {
      let parsed;
      try {
        parsed = parseServerMessage(String(ev.data));
      } catch (e) {
        console.warn("sara: dropping unparseable server message:", e);
        return;
      }
      if (parsed.type === "envelope") this.events.onEnvelope?.(parsed.envelope);
      else this.events.onControl?.(parsed.control);
    };
    ws.onclose = () => {
      this.ws = null;
      if (this.closedByUs) {
        this.events.onStatus?.({ state: "closed" });
        return;
      }
      if (this.lastOpenLostAt === null) this.lastOpenLostAt = this.now();
      this.attempt += 1;
      if (this.attempt > this.maxAttempts) {
        this.events.onStatus?.({ state: "closed" });
        return;
      }
      const delayMs = reconnectDelayMs(this.attempt, this.baseBackoffMs);
      this.events.onStatus?.({
        state: "reconnecting",
        attempt: this.attempt,
        delayMs,
        gapMs: this.now() - this.lastOpenLostAt,
      });
      this.reconnectTimer = setTimeout(() => this.open(this.attempt), delayMs);
    };
    ws.onerror = () => {
      // close handler owns recovery; errors alone carry no extra state
    };
  }

  /** Validates and sends; returns false (and sends nothing) on schema
   * violations so a buggy caller cannot emit a non-conformant message. */
  send(msg: ClientMessage): boolean {
    const problems = validateClientMessage(msg);
    if (problems.length > 0) {
      console.error("sara: refusing to send invalid message:", problems);
      return false;
    }
    if (this.ws === null) return false;
    this.sendRaw(msg);
    return true;
  }

  private sendRaw(msg: ClientMessage): void {
    this.ws?.send(JSON.stringify(msg));
  }

  close(): void {
    this.closedByUs = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.ws?.close(1000, "client closed");
  }
}
