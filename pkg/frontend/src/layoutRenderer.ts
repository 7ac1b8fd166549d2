/**
 * Renders a layout document as absolutely positioned word spans, 1:1
 * with layout pixels, and derives the line/paragraph grouping needed to
 * anchor paragraph cards. When the document does not declare lines or
 * paragraphs they are reconstructed with the same geometric rules the
 * server uses (vertical-center clustering, outsized-gap paragraph
 * breaks), so anchors agree between the two sides.
 */

import { LayoutDoc, LayoutWord, validateLayoutDoc } from "./protocol.js";

export class LayoutError extends Error {}

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface RenderedLayout {
  doc: LayoutDoc;
  container: HTMLElement;
  wordEls: Map<number, HTMLElement>;
  /** word ids per line, reading order */
  lines: number[][];
  /** line indices per paragraph */
  paragraphs: number[][];
  wordBox(id: number): Box | null;
  paragraphBox(id: number): Box | null;
}

const median = (values: number[]): number => {
  const s = [...values].sort((a, b) => a - b);
  const mid = Math.floor(s.length / 2);
  return s.length % 2 ? s[mid] : (s[mid - 1] + s[mid]) / 2;
};

const cy = (w: LayoutWord) => w.y + w.h / 2;
const cx = (w: LayoutWord) => w.x + w.w / 2;

export function deriveLines(words: LayoutWord[]): number[][] {
  const threshold = 0.6 * median(words.map((w) => w.h));
  const sorted = [...words].sort((a, b) => cy(a) - cy(b) || cx(a) - cx(b));
  const clusters: LayoutWord[][] = [[sorted[0]]];
  for (let i = 1; i < sorted.length; i++) {
    if (cy(sorted[i]) - cy(sorted[i - 1]) < threshold) {
      clusters[clusters.length - 1].push(sorted[i]);
    } else {
      clusters.push([sorted[i]]);
    }
  }
  clusters.sort((a, b) => Math.min(...a.map((w) => w.y)) - Math.min(...b.map((w) => w.y)));
  return clusters.map((c) => c.sort((a, b) => cx(a) - cx(b)).map((w) => w.id));
}

export function deriveParagraphs(words: LayoutWord[], lines: number[][]): number[][] {
  if (lines.length < 3) return [lines.map((_, i) => i)];
  const byId = new Map(words.map((w) => [w.id, w]));
  const top = (line: number[]) => Math.min(...line.map((id) => byId.get(id)!.y));
  const bottom = (line: number[]) =>
    Math.max(...line.map((id) => byId.get(id)!.y + byId.get(id)!.h));
  const gaps = lines.slice(1).map((line, i) => top(line) - bottom(lines[i]));
  const threshold = 1.8 * median(gaps);
  const paragraphs: number[][] = [[0]];
  gaps.forEach((gap, i) => {
    if (gap > threshold) paragraphs.push([]);
    paragraphs[paragraphs.length - 1].push(i + 1);
  });
  return paragraphs;
}

export function renderLayout(rawDoc: unknown, container: HTMLElement): RenderedLayout {
  const problems = validateLayoutDoc(rawDoc);
  if (problems.length > 0) {
    throw new LayoutError(`invalid layout file: ${problems.join("; ")}`);
  }
  const doc = rawDoc as LayoutDoc;

  container.textContent = "";
  container.classList.add("sara-layout");
  container.style.position = "relative";
  container.style.width = `${doc.image.width_px}px`;
  container.style.height = `${doc.image.height_px}px`;

  const wordEls = new Map<number, HTMLElement>();
  for (const word of doc.words) {
    const el = document.createElement("span");
    el.className = "sara-word";
    el.dataset.wordId = String(word.id);
    el.textContent = word.text;
    el.style.position = "absolute";
    el.style.left = `${word.x}px`;
    el.style.top = `${word.y}px`;
    el.style.width = `${word.w}px`;
    el.style.height = `${word.h}px`;
    el.style.fontSize = `${Math.round(word.h * 0.72)}px`;
    el.style.lineHeight = `${word.h}px`;
    container.appendChild(el);
    wordEls.set(word.id, el);
  }

  const lines = doc.lines && doc.lines.length > 0 ? doc.lines : deriveLines(doc.words);
  const paragraphs =
    doc.paragraphs && doc.paragraphs.length > 0
      ? doc.paragraphs
      : deriveParagraphs(doc.words, lines);

  const byId = new Map(doc.words.map((w) => [w.id, w]));
  const wordBox = (id: number): Box | null => {
    const w = byId.get(id);
    return w ? { x: w.x, y: w.y, w: w.w, h: w.h } : null;
  };
  const paragraphBox = (id: number): Box | null => {
    const lineIdxs = paragraphs[id];
    if (!lineIdxs) return null;
    const ids = lineIdxs.flatMap((li) => lines[li]);
    const boxes = ids.map((wid) => byId.get(wid)!);
    const x0 = Math.min(...boxes.map((b) => b.x));
    const y0 = Math.min(...boxes.map((b) => b.y));
    const x1 = Math.max(...boxes.map((b) => b.x + b.w));
    const y1 = Math.max(...boxes.map((b) => b.y + b.h));
    return { x: x0, y: y0, w: x1 - x0, h: y1 - y0 };
  };

  return { doc, container, wordEls, lines, paragraphs, wordBox, paragraphBox };
}
