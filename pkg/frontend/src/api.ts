/** Typed client for the practice service HTTP API. */

export interface Sentence {
  id: string;
  text: string;
  audio?: string | null;
}

export interface FeedbackItem {
  word: string;
  issue: string;
  suggestion: string;
  pair_count: number;
}

export interface FeedbackPayload {
  session_id: string;
  sentence_id: string;
  items: FeedbackItem[];
  transcript: string | null;
  latency_ms: number;
  parse_failed: boolean;
  raw: string;
}

export interface SessionEvent {
  sentence_id: string;
  ts: number;
  items: FeedbackItem[];
  transcript: string | null;
}

export interface SessionLog {
  session_id: string;
  events: SessionEvent[];
}

export interface Health {
  status: string;
  system: string | null;
  sentences: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface SubmitTarget {
  sentenceId?: string;
  canonicalText?: string;
}

export class PracticeClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // wrap the global so the browser binding keeps its window receiver
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  async health(): Promise<Health> {
    return this.json(await this.fetchImpl(`${this.base}/healthz`));
  }

  async sentences(offset = 0, limit?: number): Promise<Sentence[]> {
    const params = new URLSearchParams({ offset: String(offset) });
    if (limit !== undefined) {
      params.set("limit", String(limit));
    }
    return this.json(await this.fetchImpl(`${this.base}/sentences?${params}`));
  }

  async submitClip(clip: Blob, target: SubmitTarget, sessionId?: string): Promise<FeedbackPayload> {
    const form = new FormData();
    form.append("audio", clip, "clip.wav");
    if (target.sentenceId !== undefined) {
      form.append("sentence_id", target.sentenceId);
    }
    if (target.canonicalText !== undefined) {
      form.append("canonical_text", target.canonicalText);
    }
    if (sessionId !== undefined) {
      form.append("session_id", sessionId);
    }
    return this.json(await this.fetchImpl(`${this.base}/feedback`, { method: "POST", body: form }));
  }

  async session(sessionId: string): Promise<SessionLog> {
    return this.json(await this.fetchImpl(`${this.base}/session/${encodeURIComponent(sessionId)}`));
  }

  private async json<T>(response: Response): Promise<T> {
    if (!response.ok) {
      let detail = response.statusText || `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (typeof body?.detail === "string") {
          detail = body.detail;
        }
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(detail, response.status);
    }
    return (await response.json()) as T;
  }
}
