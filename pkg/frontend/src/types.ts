/** Shared data shapes; all mirror the server's JSON bodies verbatim. */

export interface NoteData {
  pitch: number;
  onset_s: number;
  duration_s: number;
  velocity: number;
}

export interface StandardInfo {
  id: string;
  title: string;
  segments: number;
}

export interface SegmentInfo {
  id: string;
  start_bar: number;
  n_beats: number;
  duration_s: number;
  notes: NoteData[];
}

export interface PerformanceInfo {
  id: string;
  title: string;
  standard_title: string;
  performer: string;
  duration_s: number;
  n_notes: number;
}

export interface Candidate {
  start_s: number;
  end_s: number;
  value: number;
  melodic: number;
  harmonic: number;
}

export interface PairInfo {
  id: string;
  original_id: string;
  variation_id: string;
  standard_title: string;
  performer: string;
  performance_id: string;
  created_at: string;
  annotator: string;
}

export interface PairReview {
  pair: PairInfo;
  alignment: { cost: number; n_aligned: number; pairs: [number | null, number | null][] };
  average_deviation: number | null;
  features: Record<string, Record<string, number>>;
}

export interface SelectionWindow {
  start_s: number;
  end_s: number;
}
