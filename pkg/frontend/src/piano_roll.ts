/** Piano-roll scene building and rendering.
 *
 * Scene building (viewport culling + note-to-rectangle mapping) is separated
 * from drawing so it can be profiled and tested without a browser canvas.
 * Time runs along x, pitch along y, velocity maps to opacity.
 */

import type { NoteData, SelectionWindow } from "./types.js";

export interface Viewport {
  /** Leftmost visible time in seconds. */
  timeOrigin: number;
  /** Zoom: how many pixels one second occupies. */
  pixelsPerSecond: number;
  /** Highest visible MIDI pitch (top edge). */
  pitchTop: number;
  /** Lowest visible MIDI pitch (bottom edge). */
  pitchBottom: number;
  width: number;
  height: number;
}

export interface NoteRect {
  x: number;
  y: number;
  w: number;
  h: number;
  alpha: number;
}

/** Minimal drawing surface; CanvasRenderingContext2D satisfies it via an
 * adapter, tests use a counting stub. */
export interface Draw2D {
  clear(width: number, height: number): void;
  fillRect(x: number, y: number, w: number, h: number, alpha: number, color: string): void;
  line(x0: number, y0: number, x1: number, y1: number, color: string): void;
  text(value: string, x: number, y: number, color: string): void;
}

export interface RenderStats {
  visibleNotes: number;
  drawCalls: number;
}

export function defaultViewport(width: number, height: number): Viewport {
  return {
    timeOrigin: 0,
    pixelsPerSecond: 40,
    pitchTop: 96,
    pitchBottom: 24,
    width,
    height,
  };
}

export function zoomViewport(view: Viewport, factor: number, anchorTime?: number): Viewport {
  const anchor = anchorTime ?? view.timeOrigin + view.width / view.pixelsPerSecond / 2;
  const pixelsPerSecond = view.pixelsPerSecond * factor;
  const timeOrigin = anchor - (anchor - view.timeOrigin) / factor;
  return { ...view, pixelsPerSecond, timeOrigin };
}

export function panViewport(view: Viewport, deltaSeconds: number): Viewport {
  return { ...view, timeOrigin: Math.max(0, view.timeOrigin + deltaSeconds) };
}

export function timeAtPixel(view: Viewport, x: number): number {
  return view.timeOrigin + x / view.pixelsPerSecond;
}

export function pixelAtTime(view: Viewport, t: number): number {
  return (t - view.timeOrigin) * view.pixelsPerSecond;
}

/** Visible note rectangles for a viewport over onset-sorted notes. */
export function buildScene(notes: NoteData[], view: Viewport): NoteRect[] {
  const t0 = view.timeOrigin;
  const t1 = t0 + view.width / view.pixelsPerSecond;
  const pitchSpan = view.pitchTop - view.pitchBottom + 1;
  const rowHeight = view.height / pitchSpan;
  const rects: NoteRect[] = [];

  // Notes are sorted by onset: binary-search the first candidate whose end
  // could still reach t0, then walk forward until onsets pass t1.
  let lo = 0;
  let hi = notes.length;
  while (lo < hi) {
    const mid = (lo + hi) >> 1;
    if (notes[mid].onset_s < t0 - MAX_REASONABLE_DURATION_S) lo = mid + 1;
    else hi = mid;
  }
  for (let i = lo; i < notes.length; i++) {
    const note = notes[i];
    if (note.onset_s >= t1) break;
    if (note.onset_s + note.duration_s <= t0) continue;
    if (note.pitch < view.pitchBottom || note.pitch > view.pitchTop) continue;
    const x = pixelAtTime(view, note.onset_s);
    const w = Math.max(1, note.duration_s * view.pixelsPerSecond);
    const y = (view.pitchTop - note.pitch) * rowHeight;
    rects.push({
      x,
      y,
      w,
      h: Math.max(1, rowHeight - 1),
      alpha: 0.25 + 0.75 * (note.velocity / 127),
    });
  }
  return rects;
}

const MAX_REASONABLE_DURATION_S = 30;

export interface LaneOptions {
  color: string;
  selectionColor?: string;
  emptyNotice?: string;
}

/** One stacked lane (theme or performance) with an optional selection. */
export class PianoRollLane {
  private notes: NoteData[] = [];

  constructor(
    private readonly draw: Draw2D,
    private readonly options: LaneOptions,
  ) {}

  setNotes(notes: NoteData[]): void {
    this.notes = [...notes].sort((a, b) => a.onset_s - b.onset_s);
  }

  noteCount(): number {
    return this.notes.length;
  }

  render(view: Viewport, selection?: SelectionWindow | null, playhead?: number | null): RenderStats {
    this.draw.clear(view.width, view.height);
    let drawCalls = 1;
    if (this.notes.length === 0) {
      this.draw.text(
        this.options.emptyNotice ?? "no notes loaded",
        8,
        view.height / 2,
        "#888",
      );
      return { visibleNotes: 0, drawCalls: drawCalls + 1 };
    }
    const rects = buildScene(this.notes, view);
    for (const rect of rects) {
      this.draw.fillRect(rect.x, rect.y, rect.w, rect.h, rect.alpha, this.options.color);
      drawCalls++;
    }
    if (selection) {
      const x0 = pixelAtTime(view, selection.start_s);
      const x1 = pixelAtTime(view, selection.end_s);
      const color = this.options.selectionColor ?? "#2266cc";
      this.draw.fillRect(x0, 0, Math.max(1, x1 - x0), view.height, 0.15, color);
      this.draw.line(x0, 0, x0, view.height, color);
      this.draw.line(x1, 0, x1, view.height, color);
      drawCalls += 3;
    }
    if (playhead !== undefined && playhead !== null) {
      const x = pixelAtTime(view, playhead);
      if (x >= 0 && x <= view.width) {
        this.draw.line(x, 0, x, view.height, "#cc3333");
        drawCalls++;
      }
    }
    return { visibleNotes: rects.length, drawCalls };
  }
}

export type SelectionHandle = "start" | "end" | null;

const HANDLE_GRAB_PX = 6;

/** Which selection edge a pointer position grabs, if any. */
export function hitTestSelection(
  view: Viewport,
  selection: SelectionWindow,
  x: number,
): SelectionHandle {
  const x0 = pixelAtTime(view, selection.start_s);
  const x1 = pixelAtTime(view, selection.end_s);
  if (Math.abs(x - x0) <= HANDLE_GRAB_PX) return "start";
  if (Math.abs(x - x1) <= HANDLE_GRAB_PX) return "end";
  return null;
}

/** Drag one selection edge to a new pixel, keeping end > start. */
export function dragSelection(
  view: Viewport,
  selection: SelectionWindow,
  handle: Exclude<SelectionHandle, null>,
  x: number,
  snapGrid?: number,
): SelectionWindow {
  let t = Math.max(0, timeAtPixel(view, x));
  if (snapGrid && snapGrid > 0) {
    t = Math.round(t / snapGrid) * snapGrid;
  }
  const minLength = snapGrid ?? 0.01;
  if (handle === "start") {
    return { start_s: Math.min(t, selection.end_s - minLength), end_s: selection.end_s };
  }
  return { start_s: selection.start_s, end_s: Math.max(t, selection.start_s + minLength) };
}
