import { describe, expect, it } from "vitest";

import { ApiError, PracticeClient } from "../src/api.js";
import { encodeWavPcm16 } from "../src/wav.js";
import { INFERENCE_ITEMS, SENTENCES } from "./fixtures.js";
import { MockService } from "./mock_service.js";

function wavClip(): Blob {
  return new Blob([encodeWavPcm16(new Float32Array(160), 16000)], { type: "audio/wav" });
}

describe("PracticeClient", () => {
  it("lists sentences and forwards the paging window", async () => {
    const mock = new MockService(SENTENCES);
    const client = new PracticeClient("http://mock", mock.fetch);
    expect(await client.sentences()).toEqual(SENTENCES);
    expect(await client.sentences(1, 1)).toEqual([SENTENCES[1]]);
  });

  it("reports service health", async () => {
    const mock = new MockService(SENTENCES);
    const client = new PracticeClient("http://mock/", mock.fetch);
    expect(await client.health()).toEqual({ status: "ok", system: "mock", sentences: 2 });
  });

  it("submits a clip as multipart form data and returns the documented payload shape", async () => {
    const mock = new MockService(SENTENCES);
    mock.respondWith("u0", { items: INFERENCE_ITEMS, transcript: "the men stirred" });
    const client = new PracticeClient("http://mock", mock.fetch);
    const payload = await client.submitClip(wavClip(), { sentenceId: "u0" });
    expect(Object.keys(payload).sort()).toEqual([
      "items",
      "latency_ms",
      "parse_failed",
      "raw",
      "sentence_id",
      "session_id",
      "transcript",
    ]);
    expect(payload.items).toEqual(INFERENCE_ITEMS);
    for (const item of payload.items) {
      expect(Object.keys(item).sort()).toEqual(["issue", "pair_count", "suggestion", "word"]);
    }
    expect(mock.received).toHaveLength(1);
    expect(mock.received[0].sentenceId).toBe("u0");
    expect(mock.received[0].sessionId).toBeNull();
  });

  it("threads the session id through follow-up submissions", async () => {
    const mock = new MockService(SENTENCES);
    const client = new PracticeClient("http://mock", mock.fetch);
    const first = await client.submitClip(wavClip(), { sentenceId: "u0" });
    await client.submitClip(wavClip(), { sentenceId: "u0" }, first.session_id);
    expect(mock.received[1].sessionId).toBe(first.session_id);
    const log = await client.session(first.session_id);
    expect(log.events).toHaveLength(2);
    expect(log.events.map((e) => e.ts)).toEqual([1, 2]);
  });

  it("maps error bodies onto ApiError with the service detail", async () => {
    const mock = new MockService(SENTENCES);
    mock.failNextWith(502, "chat endpoint failed after 3 attempts");
    const client = new PracticeClient("http://mock", mock.fetch);
    const err = await client.submitClip(wavClip(), { sentenceId: "u0" }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(502);
    expect(err.message).toBe("chat endpoint failed after 3 attempts");
  });

  it("rejects unknown sessions with a 404", async () => {
    const mock = new MockService(SENTENCES);
    const client = new PracticeClient("http://mock", mock.fetch);
    const err = await client.session("nope").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
  });
});
