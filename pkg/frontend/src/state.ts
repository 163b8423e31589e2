/** View state and the workbench session flow.
 *
 * The client holds no authoritative data: every list and every score comes
 * from the server, and reloading reconstructs everything from the API.
 */

import { ApiClient, ApiRequestError } from "./api.js";
import type {
  Candidate,
  PairInfo,
  PerformanceInfo,
  SegmentInfo,
  SelectionWindow,
  StandardInfo,
} from "./types.js";

export interface Banner {
  kind: "info" | "error";
  message: string;
}

export interface ViewState {
  standards: StandardInfo[];
  selectedStandard: string | null;
  segments: SegmentInfo[];
  selectedSegment: string | null;
  performances: PerformanceInfo[];
  selectedPerformance: string | null;
  window: SelectionWindow | null;
  candidates: Candidate[];
  pairs: PairInfo[];
  banner: Banner | null;
}

export function initialState(): ViewState {
  return {
    standards: [],
    selectedStandard: null,
    segments: [],
    selectedSegment: null,
    performances: [],
    selectedPerformance: null,
    window: null,
    candidates: [],
    pairs: [],
    banner: null,
  };
}

export function validWindow(window: SelectionWindow | null): window is SelectionWindow {
  return window !== null && window.end_s > window.start_s;
}

export const SNAP_GRID_S = 0.1;

export function snapWindow(window: SelectionWindow, grid = SNAP_GRID_S): SelectionWindow {
  const start = Math.round(window.start_s / grid) * grid;
  let end = Math.round(window.end_s / grid) * grid;
  if (end <= start) end = start + grid;
  return { start_s: start, end_s: end };
}

/** Drives the matching workflow against the API; used by the UI and by the
 * scripted-session test. */
export class WorkbenchSession {
  state: ViewState = initialState();

  constructor(private readonly api: ApiClient) {}

  async start(): Promise<void> {
    const [standards, performances, pairs] = await Promise.all([
      this.api.listStandards(),
      this.api.listPerformances(),
      this.api.listPairs(),
    ]);
    this.state = { ...initialState(), standards, performances, pairs };
  }

  async selectStandard(standardId: string): Promise<void> {
    if (!this.state.standards.some((s) => s.id === standardId)) {
      throw new Error(`unknown standard ${standardId}`);
    }
    const segments = await this.api.listSegments(standardId);
    this.state = {
      ...this.state,
      selectedStandard: standardId,
      segments,
      selectedSegment: null,
      candidates: [],
    };
  }

  selectSegment(segmentId: string): SegmentInfo {
    const segment = this.state.segments.find((s) => s.id === segmentId);
    if (!segment) throw new Error(`unknown segment ${segmentId}`);
    this.state = { ...this.state, selectedSegment: segmentId, candidates: [] };
    return segment;
  }

  selectPerformance(performanceId: string): PerformanceInfo {
    const performance = this.state.performances.find((p) => p.id === performanceId);
    if (!performance) throw new Error(`unknown performance ${performanceId}`);
    this.state = { ...this.state, selectedPerformance: performanceId, candidates: [] };
    return performance;
  }

  /** Ranked windows from the server; values are displayed verbatim. */
  async fetchCandidates(topK = 20): Promise<Candidate[]> {
    const { selectedSegment, selectedPerformance } = this.state;
    if (!selectedSegment || !selectedPerformance) {
      throw new Error("select a segment and a performance first");
    }
    const candidates = await this.api.candidates(
      selectedSegment,
      selectedPerformance,
      topK,
    );
    this.state = { ...this.state, candidates };
    return candidates;
  }

  /** Jump the selection window to a ranked candidate. */
  applyCandidate(index: number): SelectionWindow {
    const candidate = this.state.candidates[index];
    if (!candidate) throw new Error(`no candidate at rank ${index}`);
    const window = { start_s: candidate.start_s, end_s: candidate.end_s };
    this.state = { ...this.state, window, banner: null };
    return window;
  }

  adjustWindow(window: SelectionWindow, snap = false): SelectionWindow {
    const next = snap ? snapWindow(window) : window;
    if (!validWindow(next)) throw new Error("window end must be after start");
    this.state = { ...this.state, window: next };
    return next;
  }

  /** POST the pair; on success refresh the list, on failure surface the
   * server message without losing the selection. */
  async savePair(annotator: string): Promise<PairInfo | null> {
    const { selectedSegment, selectedPerformance, window } = this.state;
    if (!selectedSegment || !selectedPerformance || !validWindow(window)) {
      throw new Error("nothing to save: need segment, performance, and window");
    }
    try {
      const saved = await this.api.savePair({
        original_id: selectedSegment,
        performance_id: selectedPerformance,
        start_s: window.start_s,
        end_s: window.end_s,
        annotator,
      });
      const pairs = await this.api.listPairs();
      this.state = {
        ...this.state,
        pairs,
        banner: { kind: "info", message: `saved ${saved.pair.id}` },
      };
      return saved.pair;
    } catch (error) {
      if (error instanceof ApiRequestError) {
        this.state = {
          ...this.state,
          banner: { kind: "error", message: `${error.code}: ${error.message}` },
        };
        return null;
      }
      throw error;
    }
  }

  async deletePair(pairId: string): Promise<void> {
    await this.api.deletePair(pairId);
    const pairs = await this.api.listPairs();
    this.state = { ...this.state, pairs };
  }
}
