/** Thin typed client for the session service. */

export const FEATURES = ["vgg", "iod", "cade", "arpose", "stat", "gender"] as const;
export type Feature = (typeof FEATURES)[number];
export type Weights = Record<Feature, number>;

export interface RankedItem {
  image_id: string;
  score: number;
  breakdown: Record<Feature, number>;
}

export interface RankResponse {
  session_id: string;
  weights: Weights;
  results: RankedItem[];
}

export interface SessionSummary {
  genre: string;
  category: string | null;
  person_present: boolean;
  top_objects: { class_id: number; name: string; weight: number }[];
  pose_clusters: { cluster: number; membership: number }[];
}

export interface CreateSessionResponse {
  session_id: string;
  image_id: string;
  summary: SessionSummary;
}

export interface ShotScore {
  shot_id: string;
  score: number;
}

export interface ShotsResponse {
  session_id: string;
  favorite: string;
  favorite_index: number;
  scores: ShotScore[];
  pose_shot: { index: number; shot_id: string } | null;
}

export interface ServiceErrorBody {
  code: string;
  message: string;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  private rankController: AbortController | null = null;

  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    signal?: AbortSignal,
  ): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
      signal,
    });
    const text = await response.text();
    if (!response.ok) {
      let code = "error";
      let message = text || response.statusText;
      try {
        const parsed = JSON.parse(text) as ServiceErrorBody;
        code = parsed.code ?? code;
        message = parsed.message ?? message;
      } catch {
        // non-JSON error body; keep the raw text
      }
      throw new ServiceError(response.status, code, message);
    }
    return JSON.parse(text) as T;
  }

  modelInfo(): Promise<{ rows: number; blocks: Record<string, number> }> {
    return this.request("GET", "/model");
  }

  createSession(payload: { image_id?: string; bundle?: unknown }): Promise<CreateSessionResponse> {
    return this.request("POST", "/sessions", payload);
  }

  /**
   * Rank with latest-wins semantics: a new call aborts the previous
   * in-flight one so stale galleries never land.
   */
  rank(sessionId: string, weights: Partial<Weights>, topK: number): Promise<RankResponse> {
    this.rankController?.abort();
    const controller = new AbortController();
    this.rankController = controller;
    return this.request<RankResponse>(
      "POST",
      `/sessions/${sessionId}/rank`,
      { weights, top_k: topK },
      controller.signal,
    ).finally(() => {
      if (this.rankController === controller) this.rankController = null;
    });
  }

  setStyleSet(sessionId: string, preferred: string[], ignored: string[]): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/style-set`, { preferred, ignored });
  }

  submitShots(sessionId: string, shots: unknown[], weights?: Partial<Weights>): Promise<ShotsResponse> {
    const body: Record<string, unknown> = { shots };
    if (weights) body.weights = weights;
    return this.request("POST", `/sessions/${sessionId}/shots`, body);
  }

  imageUrl(imageId: string): string {
    return `${this.baseUrl}/images/${encodeURIComponent(imageId)}`;
  }
}
