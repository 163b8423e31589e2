/** Typed client for the workbench HTTP API. */

import type {
  Candidate,
  NoteData,
  PairInfo,
  PairReview,
  PerformanceInfo,
  SegmentInfo,
  StandardInfo,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let code = "internal";
      let message = `HTTP ${response.status}`;
      try {
        const body = await response.json();
        if (body && body.error) {
          code = body.error.code ?? code;
          message = body.error.message ?? message;
        } else if (body && body.detail) {
          code = "invalid";
          message = JSON.stringify(body.detail);
        }
      } catch {
        // non-JSON error body; keep the defaults
      }
      throw new ApiRequestError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  listStandards(): Promise<StandardInfo[]> {
    return this.request("/api/standards");
  }

  listSegments(standardId: string): Promise<SegmentInfo[]> {
    return this.request(`/api/standards/${encodeURIComponent(standardId)}/segments`);
  }

  listPerformances(): Promise<PerformanceInfo[]> {
    return this.request("/api/performances");
  }

  async performanceNotes(
    performanceId: string,
    startS?: number,
    endS?: number,
  ): Promise<NoteData[]> {
    const params = new URLSearchParams();
    if (startS !== undefined) params.set("start_s", String(startS));
    if (endS !== undefined) params.set("end_s", String(endS));
    const query = params.size ? `?${params}` : "";
    const body = await this.request<{ notes: NoteData[] }>(
      `/api/performances/${encodeURIComponent(performanceId)}/notes${query}`,
    );
    return body.notes;
  }

  candidates(
    segmentId: string,
    performanceId: string,
    topK = 20,
  ): Promise<Candidate[]> {
    const params = new URLSearchParams({
      performance_id: performanceId,
      top_k: String(topK),
    });
    return this.request(
      `/api/segments/${encodeURIComponent(segmentId)}/candidates?${params}`,
    );
  }

  savePair(body: {
    original_id: string;
    performance_id: string;
    start_s: number;
    end_s: number;
    annotator: string;
  }): Promise<{ pair: PairInfo }> {
    return this.request("/api/pairs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listPairs(): Promise<PairInfo[]> {
    return this.request("/api/pairs");
  }

  deletePair(pairId: string): Promise<{ deleted: string }> {
    return this.request(`/api/pairs/${encodeURIComponent(pairId)}`, {
      method: "DELETE",
    });
  }

  reviewPair(pairId: string): Promise<PairReview> {
    return this.request(`/api/pairs/${encodeURIComponent(pairId)}/review`);
  }

  midiUrl(itemId: string): string {
    return `${this.baseUrl}/api/midi/${encodeURIComponent(itemId)}`;
  }
}
