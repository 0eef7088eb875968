import type { FeedbackItem, Sentence } from "../src/api.js";

export const CANONICAL = "The men stared into each other's face.";

export const SENTENCES: Sentence[] = [
  { id: "u0", text: CANONICAL },
  { id: "u1", text: "Then he stepped back with a low cry of pleasure." },
];

// Sample cascade answer for the canonical sentence: four flagged words.
export const INFERENCE_ITEMS: FeedbackItem[] = [
  {
    word: "the",
    issue: '"DH" was replaced with "D", indicating a substitution error.',
    suggestion:
      'Practice the distinction between /DH/ and /D/ with pairs like "THY" (/DH AY/) vs. "DIE" (/D AY/).',
    pair_count: 1,
  },
  {
    word: "stared",
    issue: '"R" was deleted, indicating a deletion error.',
    suggestion: 'Ensure the /R/ sound is pronounced by practicing words like "RED" (/R EH D/).',
    pair_count: 1,
  },
  {
    word: "into",
    issue: '"IH" was replaced with "IY", indicating a substitution error.',
    suggestion:
      'Practice the distinction between /IH/ and /IY/ with pairs like "BIT" (/B IH T/) vs. "BEET" (/B IY T/).',
    pair_count: 1,
  },
  {
    word: "other's",
    issue: '"Z" was replaced with "S", indicating a substitution error.',
    suggestion:
      'Practice the distinction between /Z/ and /S/ with pairs like "ZOO" (/Z UW/) vs. "SUE" (/S UW/).',
    pair_count: 1,
  },
];
