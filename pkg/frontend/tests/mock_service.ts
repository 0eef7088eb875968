/** In-memory stand-in for the practice service, speaking the same JSON shapes. */

import type { FeedbackItem, Sentence, SessionEvent } from "../src/api.js";

export interface ScriptEntry {
  items: FeedbackItem[];
  transcript?: string | null;
  parse_failed?: boolean;
  raw?: string;
}

export interface ReceivedClip {
  sentenceId: string | null;
  sessionId: string | null;
  bytes: Uint8Array;
}

export class MockService {
  readonly sentences: Sentence[];
  readonly received: ReceivedClip[] = [];
  readonly sessions = new Map<string, SessionEvent[]>();

  private readonly script = new Map<string, ScriptEntry[]>();
  private readonly failQueue: { status: number; detail: string }[] = [];
  private gate: Promise<void> | null = null;
  private sessionCounter = 0;

  constructor(sentences: Sentence[]) {
    this.sentences = sentences;
  }

  /** Queue a feedback reply for a sentence; the last entry repeats. */
  respondWith(sentenceId: string, entry: ScriptEntry): void {
    const queue = this.script.get(sentenceId) ?? [];
    queue.push(entry);
    this.script.set(sentenceId, queue);
  }

  failNextWith(status: number, detail: string): void {
    this.failQueue.push({ status, detail });
  }

  /** Pause /feedback responses until the returned release function is called. */
  holdFeedback(): () => void {
    let release: () => void = () => undefined;
    this.gate = new Promise((resolve) => {
      release = resolve;
    });
    return () => {
      release();
      this.gate = null;
    };
  }

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, "http://mock");
    const method = (init?.method ?? "GET").toUpperCase();
    if (method === "GET" && url.pathname === "/healthz") {
      return json({ status: "ok", system: "mock", sentences: this.sentences.length });
    }
    if (method === "GET" && url.pathname === "/sentences") {
      const offset = Number(url.searchParams.get("offset") ?? "0");
      const limitRaw = url.searchParams.get("limit");
      const end = limitRaw === null ? undefined : offset + Number(limitRaw);
      return json(this.sentences.slice(offset, end));
    }
    if (method === "POST" && url.pathname === "/feedback") {
      return this.feedback(init);
    }
    const sessionMatch = url.pathname.match(/^\/session\/(.+)$/);
    if (method === "GET" && sessionMatch) {
      const id = decodeURIComponent(sessionMatch[1]);
      const events = this.sessions.get(id);
      if (!events) {
        return json({ detail: `unknown session '${id}'` }, 404);
      }
      return json({ session_id: id, events });
    }
    return json({ detail: "not found" }, 404);
  };

  private async feedback(init?: RequestInit): Promise<Response> {
    if (this.gate) {
      await this.gate;
    }
    const form = init?.body as FormData;
    const clip = form.get("audio") as Blob | null;
    const sentenceId = (form.get("sentence_id") as string | null) ?? null;
    const sessionId = (form.get("session_id") as string | null) ?? null;
    const bytes = clip ? new Uint8Array(await clip.arrayBuffer()) : new Uint8Array();
    this.received.push({ sentenceId, sessionId, bytes });
    const failure = this.failQueue.shift();
    if (failure) {
      return json({ detail: failure.detail }, failure.status);
    }
    if (!clip) {
      return json({ detail: "audio file missing" }, 400);
    }
    if (ascii(bytes, 0) !== "RIFF" || ascii(bytes, 8) !== "WAVE") {
      return json({ detail: "upload is not a playable WAV clip" }, 400);
    }
    if (sentenceId === null) {
      return json({ detail: "provide sentence_id or canonical_text" }, 400);
    }
    if (!this.sentences.some((s) => s.id === sentenceId)) {
      return json({ detail: `unknown sentence '${sentenceId}'` }, 404);
    }
    const queue = this.script.get(sentenceId) ?? [];
    const entry = queue.length > 1 ? queue.shift()! : (queue[0] ?? { items: [] });
    const sid = sessionId ?? `s-${++this.sessionCounter}`;
    const events = this.sessions.get(sid) ?? [];
    events.push({
      sentence_id: sentenceId,
      ts: events.length + 1,
      items: entry.items,
      transcript: entry.transcript ?? null,
    });
    this.sessions.set(sid, events);
    return json({
      session_id: sid,
      sentence_id: sentenceId,
      items: entry.items,
      transcript: entry.transcript ?? null,
      latency_ms: 12.5,
      parse_failed: entry.parse_failed ?? false,
      raw: entry.raw ?? "",
    });
  }
}

function ascii(bytes: Uint8Array, offset: number): string {
  return String.fromCharCode(...bytes.slice(offset, offset + 4));
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}
