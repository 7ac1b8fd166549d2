/**
 * Wire types for the live reading session protocol, plus validators.
 *
 * One JSON object per websocket message. Client -> server messages are
 * SessionInit, GazeSample, AssistOverride, EndSession. Server -> client
 * messages are either event envelopes {seq, t, payload} (identical to
 * replay log lines) or control messages (SessionReady, Heartbeat,
 * ProtocolError) that sit outside the envelope sequence.
 */

export interface LayoutWord {
  id: number;
  text: string;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface LayoutDoc {
  image: { width_px: number; height_px: number };
  words: LayoutWord[];
  lines?: number[][];
  paragraphs?: number[][];
}

export interface Prefs {
  assistance_mode?: "definition" | "translation" | "auto";
  target_language?: string;
  max_card_chars?: number;
}

export interface SessionInitMsg {
  kind: "SessionInit";
  layout: LayoutDoc;
  prefs?: Prefs;
  gaze_format?: "pixel";
}

export interface GazeSampleMsg {
  kind: "GazeSample";
  t: number;
  x: number;
  y: number;
  valid: boolean;
}

export interface AssistOverrideMsg {
  kind: "AssistOverride";
  anchor_kind: "word" | "paragraph";
  anchor_id: number;
  mode?: "definition" | "translation";
  target_language?: string;
}

export interface EndSessionMsg {
  kind: "EndSession";
}

export type ClientMessage =
  | SessionInitMsg
  | GazeSampleMsg
  | AssistOverrideMsg
  | EndSessionMsg;

export interface CardPayload {
  card_id: number;
  anchor_kind: "word" | "paragraph";
  anchor_id: number;
  assist_kind: "definition" | "translation" | "simplification";
  content: string;
  source_model: string;
  t_created: number;
}

export interface Envelope {
  seq: number;
  t: number;
  payload: { kind: string } & Record<string, unknown>;
}

export interface ControlMessage {
  kind: "SessionReady" | "Heartbeat" | "ProtocolError";
  [key: string]: unknown;
}

export type ServerMessage =
  | { type: "envelope"; envelope: Envelope }
  | { type: "control"; control: ControlMessage };

const isNum = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

/** Returns a list of problems; empty means the message conforms. */
export function validateClientMessage(msg: unknown): string[] {
  if (typeof msg !== "object" || msg === null) return ["message must be an object"];
  const m = msg as Record<string, unknown>;
  const errs: string[] = [];
  switch (m.kind) {
    case "SessionInit": {
      const layoutErrs = validateLayoutDoc(m.layout);
      errs.push(...layoutErrs.map((e) => `layout: ${e}`));
      break;
    }
    case "GazeSample": {
      if (!isNum(m.t) || m.t < 0) errs.push("t must be a non-negative number");
      if (!isNum(m.x)) errs.push("x must be a number");
      if (!isNum(m.y)) errs.push("y must be a number");
      if (typeof m.valid !== "boolean") errs.push("valid must be a boolean");
      break;
    }
    case "AssistOverride": {
      if (m.anchor_kind !== "word" && m.anchor_kind !== "paragraph")
        errs.push("anchor_kind must be 'word' or 'paragraph'");
      if (!isNum(m.anchor_id) || !Number.isInteger(m.anchor_id) || (m.anchor_id as number) < 0)
        errs.push("anchor_id must be a non-negative integer");
      if (m.mode !== undefined && m.mode !== "definition" && m.mode !== "translation")
        errs.push("mode must be 'definition' or 'translation'");
      if (m.mode === "translation" && typeof m.target_language !== "string")
        errs.push("translation override needs target_language");
      break;
    }
    case "EndSession":
      break;
    default:
      errs.push(`unknown client message kind ${String(m.kind)}`);
  }
  return errs;
}

export function validateLayoutDoc(doc: unknown): string[] {
  if (typeof doc !== "object" || doc === null) return ["layout must be an object"];
  const d = doc as Record<string, unknown>;
  const errs: string[] = [];
  const image = d.image as Record<string, unknown> | undefined;
  if (!image || !isNum(image.width_px) || !isNum(image.height_px) ||
      (image.width_px as number) < 1 || (image.height_px as number) < 1) {
    errs.push("image.width_px/height_px must be numbers >= 1");
  }
  if (!Array.isArray(d.words) || d.words.length === 0) {
    errs.push("words must be a non-empty array");
    return errs;
  }
  d.words.forEach((w, i) => {
    const word = w as Record<string, unknown>;
    if (!isNum(word.x) || !isNum(word.y) || !isNum(word.w) || !isNum(word.h) ||
        (word.w as number) <= 0 || (word.h as number) <= 0) {
      errs.push(`words[${i}]: bad box`);
    }
    if (typeof word.text !== "string" || word.text.length === 0) {
      errs.push(`words[${i}]: text must be a non-empty string`);
    }
  });
  return errs;
}

/** Parse one raw server message; throws on malformed JSON or shape. */
export function parseServerMessage(raw: string): ServerMessage {
  const obj = JSON.parse(raw) as Record<string, unknown>;
  if (typeof obj !== "object" || obj === null) throw new Error("not an object");
  if ("payload" in obj) {
    const payload = obj.payload as Record<string, unknown>;
    if (!isNum(obj.seq) || !isNum(obj.t) || typeof payload?.kind !== "string") {
      throw new Error("malformed envelope");
    }
    return { type: "envelope", envelope: obj as unknown as Envelope };
  }
  if (typeof obj.kind !== "string") throw new Error("message has neither payload nor kind");
  return { type: "control", control: obj as unknown as ControlMessage };
}

export function makeGazeSample(t: number, x: number, y: number, valid = true): GazeSampleMsg {
  return { kind: "GazeSample", t, x, y, valid };
}
