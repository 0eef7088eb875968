"""Detection and text-similarity metrics for pronunciation feedback.

Word-level mispronunciation detection is scored against per-word flags
derived from the annotations; suggestion quality is scored by comparing the
rendered feedback text against the reference feedback with BLEU-2, ROUGE-L,
and a greedy embedding-match F1. All text metrics are implemented here
directly so their exact conventions (clipping, smoothing, brevity penalty)
stay pinned down and testable against independent oracles.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Protocol, Sequence

import numpy as np

from .annotations import normalize_word

__all__ = [
    "EmptyCorpus",
    "DetectionCounts",
    "DetectionSummary",
    "SuggestionScores",
    "MetricReport",
    "score_detection",
    "aggregate",
    "f1_score",
    "percent",
    "tokenize",
    "bleu2",
    "rouge_l",
    "wer",
    "semantic_f1",
    "OneHotEmbedder",
    "render_comparison_doc",
    "score_suggestions",
    "mean_suggestion_scores",
]


class EmptyCorpus(ValueError):
    """Raised when aggregating over zero scored utterances."""


@dataclass(frozen=True)
class DetectionCounts:
    """Word-level confusion counts for one utterance (or a micro sum).

    ``tp``/``fp``/``fn``/``tn`` are counted over canonical word positions;
    ``extra_words`` counts predicted words that matched no canonical
    position and ``predicted_total`` the number of predicted words.
    """

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    extra_words: int = 0
    predicted_total: int = 0

    def __add__(self, other: "DetectionCounts") -> "DetectionCounts":
        return DetectionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
            self.tn + other.tn,
            self.extra_words + other.extra_words,
            self.predicted_total + other.predicted_total,
        )


def score_detection(
    canonical: Sequence[tuple[str, bool]], predicted: Iterable[str]
) -> DetectionCounts:
    """Score predicted mispronounced words against per-position flags.

    ``canonical`` is the utterance's word sequence with its ground-truth
    mispronunciation flags. Each predicted word is matched case-insensitively
    to the first not-yet-consumed canonical position with the same surface
    (left to right); matched positions get a predicted flag of 1, all other
    positions 0. Predicted words that match nothing are counted as
    ``extra_words`` and enter no confusion cell.
    """
    canon = [(normalize_word(word), bool(flag)) for word, flag in canonical]
    predicted_flags = [False] * len(canon)
    consumed = [False] * len(canon)
    extra = 0
    total = 0
    for raw in predicted:
        total += 1
        word = normalize_word(raw)
        for i, (surface, _) in enumerate(canon):
            if not consumed[i] and surface == word:
                consumed[i] = True
                predicted_flags[i] = True
                break
        else:
            extra += 1
    tp = fp = fn = tn = 0
    for (_, flag), hat in zip(canon, predicted_flags):
        if flag and hat:
            tp += 1
        elif not flag and hat:
            fp += 1
        elif flag and not hat:
            fn += 1
        else:
            tn += 1
    return DetectionCounts(tp, fp, fn, tn, extra, total)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class DetectionSummary:
    """Micro-aggregated detection metrics, as fractions in [0, 1]."""

    precision: float
    recall: float
    f1: float
    ewr: float
    counts: DetectionCounts


def aggregate(per_utterance: Iterable[DetectionCounts]) -> DetectionSummary:
    """Micro-aggregate: sum counts across the corpus, then compute rates.

    Zero denominators yield 0.0 rather than an error; an empty corpus raises
    :class:`EmptyCorpus`.
    """
    counts = None
    for c in per_utterance:
        counts = c if counts is None else counts + c
    if counts is None:
        raise EmptyCorpus("no utterances to aggregate")
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    ewr = counts.extra_words / counts.predicted_total if counts.predicted_total else 0.0
    return DetectionSummary(precision, recall, f1_score(precision, recall), ewr, counts)


def percent(fraction: float, decimals: int = 1) -> float:
    """Render a fraction as a percentage, rounding half away from zero."""
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(fraction * 100)).quantize(quantum, rounding=ROUND_HALF_UP))


# ---------------------------------------------------------------------------
# Text similarity metrics

def tokenize(text: str | Sequence[str]) -> list[str]:
    """Lowercased whitespace tokenization; punctuation stays attached.

    A pre-tokenized sequence passes through (lowercased) unchanged.
    """
    if isinstance(text, str):
        return text.lower().split()
    return [tok.lower() for tok in text]


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu2(candidate: str, reference: str) -> float:
    """BLEU-2: clipped modified 1/2-gram precisions, geometric mean, and a
    brevity penalty when the candidate is shorter than the reference.

    An order with zero matches is smoothed to ``1 / (2 * count)`` where
    ``count`` is the candidate's n-gram count for that order (floored at 1
    so one-token candidates still score). Empty candidate or reference
    scores 0.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    precisions = []
    for n in (1, 2):
        cand_counts = _ngram_counts(cand, n)
        ref_counts = _ngram_counts(ref, n)
        total = sum(cand_counts.values())
        clipped = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        if clipped == 0:
            precisions.append(1.0 / (2 * max(total, 1)))
        else:
            precisions.append(clipped / total)
    score = math.sqrt(precisions[0] * precisions[1])
    if len(cand) < len(ref):
        score *= math.exp(1.0 - len(ref) / len(cand))
    return score


def rouge_l(candidate: str, reference: str) -> float:
    """ROUGE-L F1 over word tokens (beta = 1). Empty input scores 0."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    # Two-row LCS table.
    prev = [0] * (len(ref) + 1)
    for c_tok in cand:
        cur = [0]
        for j, r_tok in enumerate(ref, 1):
            if c_tok == r_tok:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[-1]))
        prev = cur
    lcs = prev[-1]
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return f1_score(precision, recall)


def wer(reference: str, hypothesis: str) -> float:
    """Word error rate: unit-cost edit distance over the reference length.

    The reference must be non-empty; the rate can exceed 1.0 when the
    hypothesis inserts more words than the reference holds.
    """
    ref = tokenize(reference)
    hyp = tokenize(hypothesis)
    if not ref:
        raise ValueError("word error rate needs a non-empty reference")
    prev = list(range(len(hyp) + 1))
    for i, r_tok in enumerate(ref, 1):
        cur = [i]
        for j, h_tok in enumerate(hyp, 1):
            cost = 0 if r_tok == h_tok else 1
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1] / len(ref)


class EmbeddingProvider(Protocol):
    """Embeds a token list into unit-norm row vectors (one call, one space)."""

    def embed(self, tokens: Sequence[str]) -> np.ndarray: ...


class OneHotEmbedder:
    """Offline stub: identical tokens get identical basis vectors.

    Cosine similarity is 1 for equal tokens and 0 otherwise, so greedy
    matching degenerates to unigram overlap.
    """

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        index: dict[str, int] = {}
        for tok in tokens:
            index.setdefault(tok, len(index))
        dim = max(len(index), 1)
        out = np.zeros((len(tokens), dim))
        for row, tok in enumerate(tokens):
            out[row, index[tok]] = 1.0
        return out


def semantic_f1(
    candidate: str, reference: str, embedder: EmbeddingProvider | None = None
) -> float:
    """Greedy max-cosine token matching F1 between candidate and reference.

    Both token lists are embedded in one call so the vectors share a space.
    No IDF weighting and no baseline rescaling are applied. Empty candidate
    or reference scores 0.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    if embedder is None:
        embedder = OneHotEmbedder()
    vectors = np.asarray(embedder.embed(list(cand) + list(ref)), dtype=float)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    vectors = vectors / norms
    cand_vecs = vectors[: len(cand)]
    ref_vecs = vectors[len(cand) :]
    sim = cand_vecs @ ref_vecs.T
    precision = float(np.mean(np.max(sim, axis=1)))
    recall = float(np.mean(np.max(sim, axis=0)))
    return f1_score(precision, recall)


# ---------------------------------------------------------------------------
# Suggestion scoring

@dataclass(frozen=True)
class SuggestionScores:
    bleu2: float
    rouge_l: float
    semantic_f1: float


def render_comparison_doc(
    items: Iterable, canonical_words: Sequence[str] | None = None
) -> str:
    """Render feedback items to the single comparison document.

    Each item contributes ``word issue suggestion``; items follow the
    canonical text order when the canonical word list is given (unknown
    words keep their reported order at the end).
    """
    entries = list(items)
    if canonical_words is not None:
        order = {}
        for pos, word in enumerate(canonical_words):
            order.setdefault(normalize_word(word), pos)
        entries.sort(key=lambda it: order.get(normalize_word(it.word), len(order)))
    parts = []
    for item in entries:
        parts.append(" ".join(p for p in (item.word, item.issue, item.suggestion) if p))
    return " ".join(parts)


def score_suggestions(
    predicted_items: Iterable,
    reference_items: Iterable,
    canonical_words: Sequence[str] | None = None,
    embedder: EmbeddingProvider | None = None,
) -> SuggestionScores:
    """Compare one utterance's predicted feedback text to the reference.

    Both sides empty means the system correctly asserted a clean utterance
    and scores 1.0 across the board; one side empty scores 0.
    """
    pred_doc = render_comparison_doc(predicted_items, canonical_words)
    ref_doc = render_comparison_doc(reference_items, canonical_words)
    if not pred_doc and not ref_doc:
        return SuggestionScores(1.0, 1.0, 1.0)
    if not pred_doc or not ref_doc:
        return SuggestionScores(0.0, 0.0, 0.0)
    return SuggestionScores(
        bleu2(pred_doc, ref_doc),
        rouge_l(pred_doc, ref_doc),
        semantic_f1(pred_doc, ref_doc, embedder),
    )


def mean_suggestion_scores(scores: Iterable[SuggestionScores]) -> SuggestionScores:
    rows = list(scores)
    if not rows:
        raise EmptyCorpus("no suggestion scores to average")
    n = len(rows)
    return SuggestionScores(
        sum(s.bleu2 for s in rows) / n,
        sum(s.rouge_l for s in rows) / n,
        sum(s.semantic_f1 for s in rows) / n,
    )


@dataclass(frozen=True)
class MetricReport:
    """One system's benchmark row. All fields are fractions in [0, 1]
    except ``wer``, which can exceed 1 for insertion-heavy hypotheses."""

    precision: float
    recall: float
    f1: float
    ewr: float
    bleu2: float
    rouge_l: float
    semantic_f1: float
    wer: float | None = None

    def to_dict(self) -> dict:
        row = {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "ewr": self.ewr,
            "bleu2": self.bleu2,
            "rouge_l": self.rouge_l,
            "semantic_f1": self.semantic_f1,
        }
        if self.wer is not None:
            row["wer"] = self.wer
        return row

    def as_percent_row(self) -> dict:
        """Table rendering: percents at one decimal, half away from zero."""
        row = {
            "Precision": percent(self.precision),
            "Recall": percent(self.recall),
            "F1": percent(self.f1),
            "EWR": percent(self.ewr),
            "BLEU-2": percent(self.bleu2),
            "ROUGE-L": percent(self.rouge_l),
            "SemScore": percent(self.semantic_f1),
        }
        if self.wer is not None:
            row["WER"] = percent(self.wer)
        return row
