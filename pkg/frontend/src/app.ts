/** DOM wiring: panels, stacked piano-roll lanes, transport, and save flow. */

import { ApiClient } from "./api.js";
import {
  Draw2D,
  PianoRollLane,
  Viewport,
  defaultViewport,
  dragSelection,
  hitTestSelection,
  panViewport,
  SelectionHandle,
  zoomViewport,
} from "./piano_roll.js";
import { LaneName, Player, SilentSink, WebAudioSink } from "./player.js";
import { SNAP_GRID_S, WorkbenchSession, validWindow } from "./state.js";
import type { NoteData } from "./types.js";

class CanvasDraw implements Draw2D {
  constructor(private readonly ctx: CanvasRenderingContext2D) {}

  clear(width: number, height: number): void {
    this.ctx.clearRect(0, 0, width, height);
    this.ctx.fillStyle = "#16181d";
    this.ctx.fillRect(0, 0, width, height);
  }

  fillRect(x: number, y: number, w: number, h: number, alpha: number, color: string): void {
    this.ctx.globalAlpha = alpha;
    this.ctx.fillStyle = color;
    this.ctx.fillRect(x, y, w, h);
    this.ctx.globalAlpha = 1;
  }

  line(x0: number, y0: number, x1: number, y1: number, color: string): void {
    this.ctx.strokeStyle = color;
    this.ctx.beginPath();
    this.ctx.moveTo(x0, y0);
    this.ctx.lineTo(x1, y1);
    this.ctx.stroke();
  }

  text(value: string, x: number, y: number, color: string): void {
    this.ctx.fillStyle = color;
    this.ctx.font = "12px sans-serif";
    this.ctx.fillText(value, x, y);
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export class App {
  private readonly api: ApiClient;
  private readonly session: WorkbenchSession;
  private readonly player: Player;
  private themeLane!: PianoRollLane;
  private perfLane!: PianoRollLane;
  private themeView: Viewport = defaultViewport(900, 160);
  private perfView: Viewport = defaultViewport(900, 240);
  private dragging: SelectionHandle = null;
  private perfCanvas!: HTMLCanvasElement;
  private lists!: {
    standards: HTMLElement;
    segments: HTMLElement;
    performances: HTMLElement;
    candidates: HTMLElement;
    pairs: HTMLElement;
  };
  private banner!: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    api: ApiClient = new ApiClient(""),
  ) {
    this.api = api;
    this.session = new WorkbenchSession(api);
    let sink;
    try {
      sink = new WebAudioSink(new AudioContext());
    } catch {
      sink = new SilentSink();
    }
    this.player = new Player(sink);
    this.buildLayout();
  }

  async start(): Promise<void> {
    await this.session.start();
    this.renderLists();
    this.renderLanes();
    requestAnimationFrame(() => this.tick());
  }

  private buildLayout(): void {
    this.root.innerHTML = "";
    const sidebar = el("div", "sidebar");
    const main = el("div", "main");
    this.root.append(sidebar, main);

    this.banner = el("div", "banner");
    main.append(this.banner);

    this.lists = {
      standards: this.panel(sidebar, "Standards"),
      segments: this.panel(sidebar, "Segments"),
      performances: this.panel(sidebar, "Performances"),
      candidates: this.panel(sidebar, "Candidates"),
      pairs: this.panel(sidebar, "Saved pairs"),
    };

    const themeCanvas = el("canvas", "lane");
    themeCanvas.width = this.themeView.width;
    themeCanvas.height = this.themeView.height;
    this.perfCanvas = el("canvas", "lane");
    this.perfCanvas.width = this.perfView.width;
    this.perfCanvas.height = this.perfView.height;
    main.append(el("div", "lane-label", "Theme segment"), themeCanvas);
    main.append(el("div", "lane-label", "Performance"), this.perfCanvas);

    this.themeLane = new PianoRollLane(
      new CanvasDraw(themeCanvas.getContext("2d")!),
      { color: "#4f87d6", emptyNotice: "select a segment" },
    );
    this.perfLane = new PianoRollLane(
      new CanvasDraw(this.perfCanvas.getContext("2d")!),
      { color: "#d6a34f", emptyNotice: "select a performance" },
    );

    const controls = el("div", "controls");
    const playTheme = el("button", "", "Play theme");
    const playPerf = el("button", "", "Play window");
    const stop = el("button", "", "Stop");
    const zoomIn = el("button", "", "Zoom +");
    const zoomOut = el("button", "", "Zoom -");
    const save = el("button", "save", "Save pair");
    controls.append(playTheme, playPerf, stop, zoomIn, zoomOut, save);
    main.append(controls);

    playTheme.onclick = () => this.playLane("original", 0);
    playPerf.onclick = () => {
      const from = this.session.state.window?.start_s ?? 0;
      this.playLane("performance", from);
    };
    stop.onclick = () => this.player.stop();
    zoomIn.onclick = () => this.zoom(2);
    zoomOut.onclick = () => this.zoom(0.5);
    save.onclick = () => void this.savePair();

    this.perfCanvas.onpointerdown = (event) => this.pointerDown(event);
    this.perfCanvas.onpointermove = (event) => this.pointerMove(event);
    this.perfCanvas.onpointerup = () => (this.dragging = null);
    this.perfCanvas.onwheel = (event) => {
      event.preventDefault();
      this.perfView = panViewport(
        this.perfView,
        event.deltaY / this.perfView.pixelsPerSecond,
      );
      this.renderLanes();
    };
  }

  private panel(parent: HTMLElement, title: string): HTMLElement {
    const box = el("div", "panel");
    box.append(el("div", "panel-title", title));
    const body = el("div", "panel-body");
    box.append(body);
    parent.append(box);
    return body;
  }

  private renderLists(): void {
    const state = this.session.state;
    this.fillList(this.lists.standards, state.standards, (s) => `${s.title} (${s.segments})`,
      (s) => s.id === state.selectedStandard,
      async (s) => {
        await this.session.selectStandard(s.id);
        this.renderLists();
      });
    this.fillList(this.lists.segments, state.segments, (s) => `${s.id} · bar ${s.start_bar}`,
      (s) => s.id === state.selectedSegment,
      async (s) => {
        this.session.selectSegment(s.id);
        this.themeLane.setNotes(s.notes);
        this.player.load("original", s.notes);
        if (state.selectedPerformance) await this.loadCandidates();
        this.renderLists();
        this.renderLanes();
      });
    this.fillList(this.lists.performances, state.performances,
      (p) => `${p.performer} — ${p.title}`,
      (p) => p.id === state.selectedPerformance,
      async (p) => {
        this.session.selectPerformance(p.id);
        const notes: NoteData[] = await this.api.performanceNotes(p.id);
        this.perfLane.setNotes(notes);
        this.player.load("performance", notes);
        if (state.selectedSegment) await this.loadCandidates();
        this.renderLists();
        this.renderLanes();
      });
    this.fillList(this.lists.candidates, state.candidates,
      (c, i) => `#${i + 1} ${c.value.toFixed(3)} [${c.start_s.toFixed(1)}, ${c.end_s.toFixed(1)}]`,
      () => false,
      (c, i) => {
        this.session.applyCandidate(i);
        this.renderLanes();
      });
    this.fillList(this.lists.pairs, state.pairs, (p) => `${p.id}`,
      () => false,
      () => undefined);
    this.renderBanner();
  }

  private fillList<T>(
    body: HTMLElement,
    items: T[],
    label: (item: T, index: number) => string,
    isActive: (item: T) => boolean,
    onClick: (item: T, index: number) => unknown,
  ): void {
    body.innerHTML = "";
    items.forEach((item, index) => {
      const row = el("div", isActive(item) ? "row active" : "row", label(item, index));
      row.onclick = () => void onClick(item, index);
      body.append(row);
    });
  }

  private async loadCandidates(): Promise<void> {
    await this.session.fetchCandidates(20);
    this.renderLists();
  }

  private renderBanner(): void {
    const banner = this.session.state.banner;
    this.banner.textContent = banner ? banner.message : "";
    this.banner.className = banner ? `banner ${banner.kind}` : "banner";
  }

  private renderLanes(): void {
    this.themeLane.render(this.themeView, null, null);
    this.perfLane.render(this.perfView, this.session.state.window, this.player.position());
  }

  private zoom(factor: number): void {
    this.perfView = zoomViewport(this.perfView, factor);
    this.renderLanes();
  }

  private playLane(lane: LaneName, from: number): void {
    const state = this.player.play(lane, from);
    if (state.audioWarning) {
      this.session.state.banner = {
        kind: "error",
        message: "audio unavailable; visual-only playback",
      };
      this.renderBanner();
    }
  }

  private async savePair(): Promise<void> {
    if (!validWindow(this.session.state.window)) return;
    await this.session.savePair("workbench");
    this.renderLists();
  }

  private pointerDown(event: PointerEvent): void {
    const window = this.session.state.window;
    const x = event.offsetX;
    if (window) {
      this.dragging = hitTestSelection(this.perfView, window, x);
      if (this.dragging) return;
    }
    const t = this.perfView.timeOrigin + x / this.perfView.pixelsPerSecond;
    this.session.adjustWindow({ start_s: t, end_s: t + SNAP_GRID_S }, true);
    this.dragging = "end";
    this.renderLanes();
  }

  private pointerMove(event: PointerEvent): void {
    if (!this.dragging) return;
    const window = this.session.state.window;
    if (!window) return;
    const next = dragSelection(
      this.perfView,
      window,
      this.dragging,
      event.offsetX,
      SNAP_GRID_S,
    );
    this.session.adjustWindow(next);
    this.renderLanes();
  }

  private tick(): void {
    if (this.player.snapshot().playing) {
      this.renderLanes();
    }
    requestAnimationFrame(() => this.tick());
  }
}
