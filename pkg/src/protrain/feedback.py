"""Parsers and serializers for pronunciation feedback replies.

Three reply grammars are supported:

* flagged-only: ``word: <w> issue: <i> suggestion: <s>`` records for the
  problem words only, with a standalone ``No Problem`` marker when the
  speaker made no errors;
* exhaustive per-word: the same labelled records, one per canonical word,
  where clean words carry ``issue: None``;
* bracketed ground truth: ``word [(Issue: ...) (Suggestion: ...)]...`` with
  one pair group per annotated error and ``No error`` for clean utterances.

Model output is messy: labels change case, records arrive inline or one
field per line, some replies indent the word as ``stared:`` with capitalised
``Issue:`` lines, and transported strings may carry literal ``\\n`` and
``\\"`` escapes. The parsers here are calibrated against real replies in all
of those shapes and salvage what pattern matching can recognise.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .annotations import normalize_word

__all__ = [
    "ResponseFormat",
    "Unparseable",
    "UnbalancedBrackets",
    "FeedbackItem",
    "FeedbackResponse",
    "parse_flagged_only",
    "parse_exhaustive",
    "parse_ground_truth_bracketed",
    "parse_response",
    "serialize",
    "response_to_json",
    "response_from_json",
    "save_response",
    "load_response",
]


class Unparseable(ValueError):
    """No recognisable feedback structure in the reply."""


class UnbalancedBrackets(Unparseable):
    """A bracketed reply whose group structure cannot be matched up."""


class ResponseFormat(str, Enum):
    FLAGGED_ONLY = "flagged_only"
    EXHAUSTIVE_PER_WORD = "exhaustive_per_word"
    GROUND_TRUTH_BRACKETED = "ground_truth_bracketed"


_TERMINAL = ".!?"


def _sentence_join(parts: Iterable[str]) -> str:
    """Merge several text fragments into one text, sentence by sentence."""
    merged = []
    for part in parts:
        part = part.strip()
        if not part:
            continue
        if part[-1] not in _TERMINAL:
            part += "."
        merged.append(part)
    return " ".join(merged)


def _collapse(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class FeedbackItem:
    """Feedback for one word: what went wrong and how to fix it.

    ``pairs`` holds the individual (issue, suggestion) pairs when the item
    came from a bracketed ground-truth reply; ``issue`` and ``suggestion``
    are then the sentence-joined merge of those pairs. Items built directly
    from single-record grammars keep their field text verbatim and have
    ``pairs=None``.
    """

    word: str
    issue: str = ""
    suggestion: str = ""
    pairs: tuple[tuple[str, str], ...] | None = None
    pair_count: int = 0

    def __post_init__(self) -> None:
        norm = normalize_word(self.word)
        if not norm or " " in norm:
            raise Unparseable(f"feedback item needs a single word, got {self.word!r}")
        object.__setattr__(self, "word", norm)
        if self.pairs is not None:
            pairs = tuple((str(i).strip(), str(s).strip()) for i, s in self.pairs)
            if not pairs:
                raise Unparseable(f"item for {norm!r} has an empty pair list")
            object.__setattr__(self, "pairs", pairs)
            object.__setattr__(self, "issue", _sentence_join(p[0] for p in pairs))
            object.__setattr__(self, "suggestion", _sentence_join(p[1] for p in pairs))
            object.__setattr__(self, "pair_count", len(pairs))
        elif self.pair_count <= 0:
            object.__setattr__(self, "pair_count", 1)


@dataclass(frozen=True)
class FeedbackResponse:
    """A parsed reply: deduplicated items in reported order plus the raw text.

    An empty item tuple means the reply asserted the utterance had no
    errors. ``raw`` is kept for artifact trails but ignored by equality.
    """

    items: tuple[FeedbackItem, ...]
    format: ResponseFormat
    raw: str = field(compare=False, default="")

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        words = [item.word for item in self.items]
        if len(words) != len(set(words)):
            raise ValueError(f"duplicate words in feedback response: {words}")

    @property
    def flagged_words(self) -> tuple[str, ...]:
        return tuple(item.word for item in self.items)


# ---------------------------------------------------------------------------
# Labelled-record grammars (flagged-only and exhaustive per-word)

_WORD_ANCHOR = re.compile(r"^[ \t]*word[ \t]*:", re.IGNORECASE | re.MULTILINE)
_ISSUE_LABEL = re.compile(r"\bissue[ \t]*:", re.IGNORECASE)
_SUGGESTION_LABEL = re.compile(r"\bsuggestion[ \t]*:", re.IGNORECASE)
_NO_PROBLEM_LINE = re.compile(r"^\s*[\"'`]?no\s+problem[\"'`]?[.!]?\s*$", re.IGNORECASE)
_BARE_WORD_LINE = re.compile(r"^[ \t]*([^\s:]+):[ \t]*$")
_PARAGRAPH_BREAK = re.compile(r"\n[ \t]*\n")

# Issue values that mean "this word was fine" in per-word layouts.
_NULL_ISSUES = {"none", "no issue", "no issues"}


def _is_null_issue(text: str) -> bool:
    return text.strip().rstrip(".").strip().lower() in _NULL_ISSUES


def _first_paragraph(text: str) -> str:
    """Cut a field body at the first blank line; trailing prose after a
    paragraph break is commentary, not part of the field."""
    return _PARAGRAPH_BREAK.split(text, maxsplit=1)[0]


def _fields_from_chunk(chunk: str) -> tuple[str, str, str] | None:
    """Split one record chunk into (word, issue, suggestion) or reject it."""
    issue_m = _ISSUE_LABEL.search(chunk)
    if issue_m is None:
        return None
    word = chunk[: issue_m.start()].strip()
    if not word or len(word.split()) != 1:
        return None
    rest = chunk[issue_m.end() :]
    sugg_m = _SUGGESTION_LABEL.search(rest)
    if sugg_m is None:
        issue = _collapse(_first_paragraph(rest))
        suggestion = ""
    else:
        issue = _collapse(rest[: sugg_m.start()])
        suggestion = _collapse(_first_paragraph(rest[sugg_m.end() :]))
    return word, issue, suggestion


def _bare_word_records(text: str) -> list[tuple[str, str, str]]:
    """Records in the indented layout: a ``stared:`` line introduces the
    word, followed by ``Issue:`` and ``Suggestion:`` lines."""
    lines = text.split("\n")
    starts: list[tuple[int, str]] = []
    for i, line in enumerate(lines):
        m = _BARE_WORD_LINE.match(line)
        if m and m.group(1).lower() not in ("word", "issue", "suggestion"):
            starts.append((i, m.group(1)))
    records = []
    for (start, word), stop in zip(starts, [s for s, _ in starts[1:]] + [len(lines)]):
        body = "\n".join(lines[start + 1 : stop])
        issue_m = _ISSUE_LABEL.search(body)
        if issue_m is None:
            continue
        rest = body[issue_m.end() :]
        sugg_m = _SUGGESTION_LABEL.search(rest)
        if sugg_m is None:
            records.append((word, _collapse(_first_paragraph(rest)), ""))
        else:
            records.append(
                (
                    word,
                    _collapse(rest[: sugg_m.start()]),
                    _collapse(_first_paragraph(rest[sugg_m.end() :])),
                )
            )
    return records


def _parse_labelled(raw: str, fmt: ResponseFormat) -> FeedbackResponse:
    text = raw.replace("\r\n", "\n")
    marker_seen = False
    kept = []
    for line in text.split("\n"):
        if _NO_PROBLEM_LINE.match(line):
            marker_seen = True
        else:
            kept.append(line)
    text = "\n".join(kept)

    anchors = list(_WORD_ANCHOR.finditer(text))
    triples: list[tuple[str, str, str]] = []
    if anchors:
        stops = [m.start() for m in anchors[1:]] + [len(text)]
        for m, stop in zip(anchors, stops):
            rec = _fields_from_chunk(text[m.end() : stop])
            if rec is not None:
                triples.append(rec)
    else:
        triples = _bare_word_records(text)
    structured = bool(triples)

    items: list[FeedbackItem] = []
    seen: set[str] = set()
    for word, issue, suggestion in triples:
        if _is_null_issue(issue):
            continue
        norm = normalize_word(word)
        if not norm or norm in seen:
            continue
        seen.add(norm)
        items.append(FeedbackItem(norm, issue, suggestion))

    if not items and not marker_seen and not structured:
        raise Unparseable("no feedback records or no-problem marker found")
    return FeedbackResponse(tuple(items), fmt, raw)


def parse_flagged_only(text: str) -> FeedbackResponse:
    """Parse a flagged-words-only reply.

    A standalone ``No Problem`` (or a reply consisting only of that marker)
    yields empty items; marker lines mixed with records are dropped and the
    records kept. Records whose issue is ``None``/``No issues`` are treated
    as no-error assertions for that word and dropped. Preamble before the
    first record and paragraph-separated postamble are ignored.
    """
    return _parse_labelled(text, ResponseFormat.FLAGGED_ONLY)


def parse_exhaustive(text: str) -> FeedbackResponse:
    """Parse an exhaustive per-word reply (clean words say ``issue: None``).

    Only words with a real issue become items, so an all-clean reply parses
    to empty items.
    """
    return _parse_labelled(text, ResponseFormat.EXHAUSTIVE_PER_WORD)


# ---------------------------------------------------------------------------
# Bracketed ground-truth grammar

_NO_ERROR_LINE = re.compile(r"^\s*[\"'`]?no\s+error[\"'`]?[.!]?\s*$", re.IGNORECASE)


def _skip_ws(s: str, i: int) -> int:
    while i < len(s) and s[i].isspace():
        i += 1
    return i


def _labelled_paren(s: str, i: int, label: str, word: str) -> tuple[str, int]:
    if i >= len(s) or s[i] != "(":
        raise UnbalancedBrackets(f"expected '({label.title()}: ...)' group for {word!r}")
    depth = 1
    j = i + 1
    while j < len(s) and depth:
        if s[j] == "(":
            depth += 1
        elif s[j] == ")":
            depth -= 1
        j += 1
    if depth:
        raise UnbalancedBrackets(f"unclosed parenthesis in group for {word!r}")
    content = s[i + 1 : j - 1].strip()
    m = re.match(rf"{label}\s*:\s*", content, re.IGNORECASE)
    if m is None:
        raise UnbalancedBrackets(f"group for {word!r} does not start with '{label.title()}:'")
    return _collapse(content[m.end() :]), j


def _parse_pair_group(s: str, i: int, word: str) -> tuple[str, str, int]:
    # s[i] == '['
    j = _skip_ws(s, i + 1)
    issue, j = _labelled_paren(s, j, "issue", word)
    j = _skip_ws(s, j)
    suggestion, j = _labelled_paren(s, j, "suggestion", word)
    j = _skip_ws(s, j)
    if j >= len(s) or s[j] != "]":
        raise UnbalancedBrackets(f"expected ']' to close the pair group for {word!r}")
    return issue, suggestion, j + 1


def parse_ground_truth_bracketed(text: str) -> FeedbackResponse:
    """Parse a ``word [(Issue: ...) (Suggestion: ...)]...`` reply.

    Each word collects one pair per bracket group; the item's issue text is
    the sentence-joined merge of its issue parts, likewise for suggestions,
    and the pair count is retained. ``No error`` yields empty items.
    Transported escapes (literal ``\\n``, ``\\"``) are unescaped first.
    """
    raw = text
    s = text.replace("\r\n", "\n").replace("\\n", "\n").replace('\\"', '"')
    lines = s.split("\n")
    kept = [ln for ln in lines if not _NO_ERROR_LINE.match(ln)]
    marker_seen = len(kept) != len(lines)
    s = "\n".join(kept).strip()
    if not s:
        if marker_seen:
            return FeedbackResponse((), ResponseFormat.GROUND_TRUTH_BRACKETED, raw)
        raise Unparseable("empty reply")

    collected: list[tuple[str, list[tuple[str, str]]]] = []
    current_word: str | None = None
    current_pairs: list[tuple[str, str]] = []
    pos = 0
    while True:
        bracket = s.find("[", pos)
        if bracket == -1:
            break
        lead = s[pos:bracket].split()
        if lead:
            if current_word is not None:
                collected.append((current_word, current_pairs))
            # Any earlier tokens are preamble; the group binds to the token
            # directly before it (the grammar allows "word2[(Issue...").
            current_word = lead[-1]
            current_pairs = []
        elif current_word is None:
            raise Unparseable("pair group appears before any word")
        issue, suggestion, pos = _parse_pair_group(s, bracket, current_word)
        current_pairs.append((issue, suggestion))
    if current_word is None:
        raise Unparseable("no bracketed pair groups found")
    collected.append((current_word, current_pairs))

    items: list[FeedbackItem] = []
    seen: set[str] = set()
    for word, pairs in collected:
        norm = normalize_word(word)
        if not norm or norm in seen:
            continue
        seen.add(norm)
        items.append(FeedbackItem(norm, pairs=tuple(pairs)))
    return FeedbackResponse(tuple(items), ResponseFormat.GROUND_TRUTH_BRACKETED, raw)


_PARSERS = {
    ResponseFormat.FLAGGED_ONLY: parse_flagged_only,
    ResponseFormat.EXHAUSTIVE_PER_WORD: parse_exhaustive,
    ResponseFormat.GROUND_TRUTH_BRACKETED: parse_ground_truth_bracketed,
}


def parse_response(text: str, fmt: ResponseFormat) -> FeedbackResponse:
    return _PARSERS[ResponseFormat(fmt)](text)


def _pairs_for_serialization(item: FeedbackItem) -> tuple[tuple[str, str], ...]:
    if item.pairs is not None:
        return item.pairs
    if item.pair_count == 1:
        return ((item.issue, item.suggestion),)
    raise ValueError(
        f"item {item.word!r} has {item.pair_count} pairs but no per-pair texts"
    )


def serialize(response: FeedbackResponse) -> str:
    """Render a response back to its grammar's canonical text.

    Inverse of the matching parser up to whitespace normalization; empty
    responses render as the grammar's no-error marker.
    """
    fmt = response.format
    if fmt is ResponseFormat.GROUND_TRUTH_BRACKETED:
        if not response.items:
            return "No error"
        lines = []
        for item in response.items:
            groups = " ".join(
                f"[(Issue: {issue}) (Suggestion: {suggestion})]"
                for issue, suggestion in _pairs_for_serialization(item)
            )
            lines.append(f"{item.word} {groups}")
        return "\n".join(lines)
    if not response.items:
        return "No Problem"
    if fmt is ResponseFormat.EXHAUSTIVE_PER_WORD:
        return "\n".join(
            f"word: {item.word}\nissue: {item.issue}\nsuggestion: {item.suggestion}"
            for item in response.items
        )
    return "\n".join(
        f"word: {item.word} issue: {item.issue} suggestion: {item.suggestion}"
        for item in response.items
    )


# ---------------------------------------------------------------------------
# Persistence

def response_to_json(response: FeedbackResponse, utterance_id: str | None = None) -> dict:
    items = []
    for item in response.items:
        row: dict = {
            "word": item.word,
            "issue": item.issue,
            "suggestion": item.suggestion,
            "pair_count": item.pair_count,
        }
        if item.pairs is not None:
            row["pairs"] = [list(p) for p in item.pairs]
        items.append(row)
    return {
        "id": utterance_id,
        "format": response.format.value,
        "items": items,
        "raw": response.raw,
    }


def response_from_json(payload: dict) -> FeedbackResponse:
    items = []
    for row in payload.get("items", []):
        pairs = row.get("pairs")
        items.append(
            FeedbackItem(
                word=row["word"],
                issue=row.get("issue", ""),
                suggestion=row.get("suggestion", ""),
                pairs=tuple((p[0], p[1]) for p in pairs) if pairs else None,
                pair_count=int(row.get("pair_count", 0)),
            )
        )
    return FeedbackResponse(
        tuple(items), ResponseFormat(payload["format"]), payload.get("raw", "")
    )


def save_response(path: str | Path, response: FeedbackResponse, utterance_id: str | None = None) -> None:
    Path(path).write_text(
        json.dumps(response_to_json(response, utterance_id), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_response(path: str | Path) -> FeedbackResponse:
    return response_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
