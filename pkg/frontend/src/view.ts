/** Mapping from service feedback payloads to a renderable view model. */

import type { FeedbackItem, FeedbackPayload } from "./api.js";

export interface WordView {
  /** Surface form from the canonical sentence, punctuation included. */
  text: string;
  flagged: boolean;
  issue?: string;
  suggestion?: string;
  pairCount?: number;
}

export interface FeedbackView {
  /** Every canonical word in sentence order, flagged or not. */
  words: WordView[];
  /** Items whose word did not line up with the canonical sentence. Still shown, never dropped. */
  extras: FeedbackItem[];
  transcript: string | null;
  attempt: number;
  parseFailed: boolean;
}

/** Lowercase and strip edge punctuation, the same word identity the service uses. */
export function displayKey(surface: string): string {
  return surface
    .trim()
    .toLowerCase()
    .replace(/^[^a-z0-9']+/, "")
    .replace(/[^a-z0-9']+$/, "");
}

/**
 * Attach service-flagged words to their canonical positions for highlighting.
 *
 * The service decides what is flagged; nothing is rescored here. Issue and
 * suggestion strings pass through verbatim. Duplicate words consume canonical
 * positions left to right.
 */
export function toFeedbackView(canonicalText: string, payload: FeedbackPayload, attempt: number): FeedbackView {
  const words: WordView[] = canonicalText
    .split(/\s+/)
    .filter((text) => text.length > 0)
    .map((text) => ({ text, flagged: false }));
  const extras: FeedbackItem[] = [];
  for (const item of payload.items) {
    const key = displayKey(item.word);
    const slot = words.find((w) => !w.flagged && displayKey(w.text) === key);
    if (slot) {
      slot.flagged = true;
      slot.issue = item.issue;
      slot.suggestion = item.suggestion;
      slot.pairCount = item.pair_count;
    } else {
      extras.push(item);
    }
  }
  return {
    words,
    extras,
    transcript: payload.transcript,
    attempt,
    parseFailed: payload.parse_failed,
  };
}

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => ESCAPES[ch]);
}

// ARPAbet runs look like /DH/ or /ST EY R D/: uppercase tokens between slashes.
const ARPABET = /\/[A-Z][A-Z0-9]*(?: [A-Z][A-Z0-9]*)*\//g;

/** Escape text for HTML and wrap ARPAbet fragments in a monospace <code> element. */
export function formatArpabet(text: string): string {
  return escapeHtml(text).replace(ARPABET, (run) => `<code class="arpabet">${run}</code>`);
}
