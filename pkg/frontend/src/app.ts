/** Single-page practice loop: pick a sentence, record a reading, study the feedback. */

import {
  ApiError,
  PracticeClient,
  type FetchLike,
  type Sentence,
  type SessionEvent,
} from "./api.js";
import { MicRecorder, type Recorder } from "./recorder.js";
import { clipFromRecording } from "./wav.js";
import { escapeHtml, formatArpabet, toFeedbackView, type FeedbackView, type WordView } from "./view.js";

export type Phase = "idle" | "recording" | "awaiting" | "feedback" | "error";

export interface AppOptions {
  /** Base URL of the practice service. The only configuration the page takes. */
  baseUrl: string;
  /** Test seams; the browser build uses the microphone and window.fetch. */
  recorderFactory?: () => Recorder;
  fetchImpl?: FetchLike;
}

export interface AppState {
  phase: Phase;
  sentences: Sentence[];
  selectedId: string | null;
  sessionId: string | null;
  attempts: number;
  view: FeedbackView | null;
  history: SessionEvent[];
  error: string | null;
  lastClip: Blob | null;
}

export class PracticeApp {
  readonly client: PracticeClient;
  readonly state: AppState = {
    phase: "idle",
    sentences: [],
    selectedId: null,
    sessionId: null,
    attempts: 0,
    view: null,
    history: [],
    error: null,
    lastClip: null,
  };

  private readonly root: HTMLElement;
  private readonly recorderFactory: () => Recorder;
  private recorder: Recorder | null = null;

  constructor(root: HTMLElement, options: AppOptions) {
    this.root = root;
    this.client = new PracticeClient(options.baseUrl, options.fetchImpl);
    this.recorderFactory = options.recorderFactory ?? (() => new MicRecorder());
  }

  async init(): Promise<void> {
    try {
      this.state.sentences = await this.client.sentences();
      this.state.selectedId = this.state.sentences[0]?.id ?? null;
    } catch (err) {
      this.state.phase = "error";
      this.state.error = describeError(err);
    }
    this.render();
  }

  selectedSentence(): Sentence | null {
    return this.state.sentences.find((s) => s.id === this.state.selectedId) ?? null;
  }

  /** One button drives the loop: start recording, then stop and submit. */
  async toggleRecording(): Promise<void> {
    if (this.state.phase === "recording") {
      await this.stopAndSubmit();
      return;
    }
    if (this.state.phase === "awaiting") {
      return; // a submission is already in flight
    }
    if (!this.selectedSentence()) {
      this.state.phase = "error";
      this.state.error = "Pick a sentence before recording.";
      this.render();
      return;
    }
    const recorder = this.recorderFactory();
    try {
      await recorder.start();
    } catch (err) {
      this.state.phase = "error";
      this.state.error = describeMicError(err);
      this.render();
      return;
    }
    this.recorder = recorder;
    this.state.phase = "recording";
    this.state.error = null;
    this.render();
  }

  /** Resubmit the clip that just failed. */
  async retry(): Promise<void> {
    if (!this.state.lastClip || this.state.phase === "awaiting") {
      return;
    }
    await this.submit(this.state.lastClip);
  }

  render(): void {
    this.root.innerHTML = `
      <div class="practice">
        ${renderPicker(this.state)}
        ${renderSentence(this.state)}
        ${renderControls(this.state)}
        ${renderOutcome(this.state)}
        ${renderHistory(this.state.history, this.state.selectedId)}
      </div>`;
    this.wire();
  }

  private async stopAndSubmit(): Promise<void> {
    if (!this.recorder) {
      return;
    }
    const recorder = this.recorder;
    this.recorder = null;
    const { samples, sampleRate } = await recorder.stop();
    await this.submit(clipFromRecording(samples, sampleRate));
  }

  private async submit(clip: Blob): Promise<void> {
    if (this.state.phase === "awaiting") {
      return; // at most one in-flight submission
    }
    const sentence = this.selectedSentence();
    if (!sentence) {
      return;
    }
    this.state.phase = "awaiting";
    this.state.error = null;
    this.state.lastClip = clip;
    this.render();
    try {
      const payload = await this.client.submitClip(
        clip,
        { sentenceId: sentence.id },
        this.state.sessionId ?? undefined,
      );
      this.state.sessionId = payload.session_id;
      this.state.attempts += 1;
      this.state.view = toFeedbackView(sentence.text, payload, this.state.attempts);
      this.state.history = (await this.client.session(payload.session_id)).events;
      this.state.phase = "feedback";
    } catch (err) {
      this.state.phase = "error";
      this.state.error = describeError(err);
    }
    this.render();
  }

  private wire(): void {
    const pick = this.root.querySelector<HTMLSelectElement>("#sentence-pick");
    pick?.addEventListener("change", () => this.handleSelect(pick.value));
    this.root.querySelector("#record-btn")?.addEventListener("click", () => void this.toggleRecording());
    this.root.querySelector("#retry-btn")?.addEventListener("click", () => void this.retry());
  }

  private handleSelect(id: string): void {
    if (this.state.phase === "recording" || this.state.phase === "awaiting") {
      return;
    }
    this.state.selectedId = id;
    this.state.view = null;
    this.state.lastClip = null;
    if (this.state.phase === "feedback" || this.state.phase === "error") {
      this.state.phase = "idle";
    }
    this.render();
  }
}

function describeMicError(err: unknown): string {
  if (err instanceof DOMException && (err.name === "NotAllowedError" || err.name === "SecurityError")) {
    return "Microphone access was denied. Allow it in the browser settings and try again.";
  }
  const detail = err instanceof Error ? err.message : String(err);
  return `Could not start recording: ${detail}`;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.status >= 500
      ? `The service failed (${err.status}): ${err.message}. Retry in a moment.`
      : err.message;
  }
  const detail = err instanceof Error ? err.message : String(err);
  return `Could not reach the service: ${detail}`;
}

function renderPicker(state: AppState): string {
  if (state.sentences.length === 0) {
    return "";
  }
  const busy = state.phase === "recording" || state.phase === "awaiting";
  const options = state.sentences
    .map(
      (s) =>
        `<option value="${escapeHtml(s.id)}"${s.id === state.selectedId ? " selected" : ""}>${escapeHtml(s.text)}</option>`,
    )
    .join("");
  return `<select id="sentence-pick"${busy ? " disabled" : ""}>${options}</select>`;
}

function renderSentence(state: AppState): string {
  const sentence = state.sentences.find((s) => s.id === state.selectedId);
  if (!sentence) {
    return `<p class="sentence empty" id="sentence-text">No sentences available.</p>`;
  }
  const words =
    state.view && state.phase === "feedback"
      ? state.view.words.map(wordSpan)
      : sentence.text
          .split(/\s+/)
          .filter(Boolean)
          .map((text) => `<span class="word">${escapeHtml(text)}</span>`);
  return `<p class="sentence" id="sentence-text">${words.join(" ")}</p>`;
}

function wordSpan(word: WordView): string {
  return `<span class="${word.flagged ? "word flagged" : "word"}">${escapeHtml(word.text)}</span>`;
}

const BUTTON_LABELS: Record<Phase, string> = {
  idle: "Record",
  recording: "Stop and submit",
  awaiting: "Scoring...",
  feedback: "Record again",
  error: "Record",
};

const STATUS_LINES: Record<Phase, string> = {
  idle: "Read the sentence aloud and the service will point out rough words.",
  recording: "Recording. Click again when you are done.",
  awaiting: "Scoring your reading...",
  feedback: "",
  error: "",
};

function renderControls(state: AppState): string {
  const disabled = state.phase === "awaiting" || state.sentences.length === 0;
  return `
    <div class="controls">
      <button id="record-btn"${disabled ? " disabled" : ""}>${BUTTON_LABELS[state.phase]}</button>
      <span id="status">${escapeHtml(STATUS_LINES[state.phase])}</span>
    </div>`;
}

function renderOutcome(state: AppState): string {
  if (state.phase === "error" && state.error) {
    const retry = state.lastClip ? `<button id="retry-btn">Retry</button>` : "";
    return `<div class="error" id="error-box"><p>${escapeHtml(state.error)}</p>${retry}</div>`;
  }
  if (state.phase !== "feedback" || !state.view) {
    return "";
  }
  const view = state.view;
  if (view.parseFailed) {
    return `
      <div class="outcome" id="outcome">
        <p class="parse-note">The reply could not be interpreted this time. Record again for fresh feedback.</p>
      </div>`;
  }
  const transcript = view.transcript
    ? `<p class="transcript">Heard: "${escapeHtml(view.transcript)}"</p>`
    : "";
  const flagged = view.words.filter((w) => w.flagged);
  if (flagged.length === 0 && view.extras.length === 0) {
    return `
      <div class="outcome" id="outcome">
        <p class="all-clear">No problem. Every word sounded right.</p>
        ${transcript}
      </div>`;
  }
  const cards = [
    ...flagged.map((w) => card(w.text, w.issue ?? "", w.suggestion ?? "")),
    ...view.extras.map((item) => card(item.word, item.issue, item.suggestion)),
  ].join("");
  return `<div class="outcome" id="outcome">${transcript}<div class="cards">${cards}</div></div>`;
}

function card(word: string, issue: string, suggestion: string): string {
  return `
    <div class="card">
      <div class="card-word">${escapeHtml(word)}</div>
      <div class="card-issue">${escapeHtml(issue)}</div>
      <div class="card-suggestion">${formatArpabet(suggestion)}</div>
    </div>`;
}

/** Attempt timeline; flags the downward trend when re-recordings keep improving. */
export function renderHistory(events: SessionEvent[], currentSentenceId: string | null): string {
  if (events.length === 0) {
    return `<div class="history" id="history"><p class="empty">No attempts yet.</p></div>`;
  }
  const rows = events
    .map((event, index) => {
      const count = event.items.length;
      return `<li class="attempt" data-flags="${count}">Attempt ${index + 1}: ${count} flagged word${count === 1 ? "" : "s"}</li>`;
    })
    .join("");
  const trend = improving(events, currentSentenceId)
    ? `<p class="trend" id="trend">Fewer flags every attempt. Keep going.</p>`
    : "";
  return `<div class="history" id="history"><h3>Attempts</h3><ol>${rows}</ol>${trend}</div>`;
}

function improving(events: SessionEvent[], sentenceId: string | null): boolean {
  const counts = events
    .filter((event) => sentenceId === null || event.sentence_id === sentenceId)
    .map((event) => event.items.length);
  if (counts.length < 2) {
    return false;
  }
  for (let i = 1; i < counts.length; i++) {
    if (counts[i] > counts[i - 1]) {
      return false;
    }
  }
  return counts[counts.length - 1] < counts[0];
}
