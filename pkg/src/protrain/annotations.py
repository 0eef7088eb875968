"""Phoneme-level pronunciation annotations for L2 speech corpora.

An utterance is a sequence of words; each word carries forced-alignment
style entries describing how its canonical phoneme slots were realised by
the speaker. The raw entry grammar:

* ``"AH"``            correct slot (single field, the canonical label)
* ``"DH, D, s"``      substitution (canonical, perceived, tag)
* ``"sil, IY, a"``    addition (the canonical side is silence)
* ``"R, sil, d"``     deletion (the perceived side is silence)

``err`` on the perceived side marks a slot that was too unclear to label;
a trailing ``*`` on the perceived label marks a foreign-accented but
recognisable realisation.
"""
from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol, Sequence

from .prompts import CURATION_SYSTEM, CURATION_USER, fill

logger = logging.getLogger(__name__)

SILENCE = "sil"
UNCLEAR = "err"

# Stress-less ARPAbet phoneme inventory. Labels outside this set parse with
# a warning rather than an error: corpora occasionally carry stress digits
# or locale-specific symbols and rejecting them would lose whole utterances.
ARPABET = frozenset(
    "AA AE AH AO AW AY B CH D DH EH ER EY F G HH IH IY JH K L M N NG "
    "OW OY P R S SH T TH UH UW V W Y Z ZH".split()
)

_EDGE_PUNCT = string.punctuation + "“”‘’«»–—…"


class MalformedEntry(ValueError):
    """Raised for annotation entries that violate the entry grammar."""


class MalformedDocument(ValueError):
    """Raised for annotation documents that are structurally inconsistent."""


class EventKind(str, Enum):
    CORRECT = "correct"
    SUBSTITUTION = "substitution"
    ADDITION = "addition"
    DELETION = "deletion"


_TAG_TO_KIND = {
    "s": EventKind.SUBSTITUTION,
    "a": EventKind.ADDITION,
    "d": EventKind.DELETION,
}

# Letter codes for reporting which error classes a word exhibits: an
# addition is an insertion from the listener's point of view.
_KIND_TO_LETTER = {
    EventKind.SUBSTITUTION: "S",
    EventKind.DELETION: "D",
    EventKind.ADDITION: "I",
}


def normalize_word(surface: str) -> str:
    """Lowercase and strip edge punctuation; internal apostrophes survive.

    ``"You're" -> "you're"``, ``'"bow,"' -> "bow"``.
    """
    return surface.strip().lower().strip(_EDGE_PUNCT)


def _check_label(label: str, raw: str) -> None:
    if label.upper() not in ARPABET:
        logger.warning("unknown phoneme label %r in entry %r", label, raw)


@dataclass(frozen=True)
class PhonemeEvent:
    """One canonical phoneme slot and how it was realised."""

    canonical: str
    perceived: str
    kind: EventKind
    accented: bool = False

    def __post_init__(self) -> None:
        kind = self.kind
        if kind is EventKind.CORRECT:
            if self.perceived != self.canonical:
                raise MalformedEntry("correct slot must keep its canonical label")
            if self.canonical == UNCLEAR:
                raise MalformedEntry("correct slot cannot be the unclear marker")
            if self.accented:
                raise MalformedEntry("correct slot cannot carry an accent mark")
        elif kind is EventKind.SUBSTITUTION:
            if self.canonical in (SILENCE, UNCLEAR) or not self.canonical:
                raise MalformedEntry("substitution needs a canonical phoneme label")
            if self.perceived == SILENCE or not self.perceived:
                raise MalformedEntry("substitution cannot perceive silence")
        elif kind is EventKind.ADDITION:
            if self.canonical != SILENCE:
                raise MalformedEntry("addition must have a silent canonical side")
            if self.perceived == SILENCE or not self.perceived:
                raise MalformedEntry("addition cannot perceive silence")
        elif kind is EventKind.DELETION:
            if self.perceived != SILENCE:
                raise MalformedEntry("deletion must have a silent perceived side")
            if self.canonical in (SILENCE, UNCLEAR) or not self.canonical:
                raise MalformedEntry("deletion needs a canonical phoneme label")
        if self.accented and self.perceived == UNCLEAR:
            raise MalformedEntry("accent mark applies to phoneme labels only")

    @property
    def is_error(self) -> bool:
        return self.kind is not EventKind.CORRECT


def parse_annotation_entry(raw: str) -> PhonemeEvent:
    """Parse one raw annotation entry string.

    Accepts one field (a correct phoneme) or three comma-separated fields
    (canonical, perceived, tag). Whitespace around fields is insignificant.
    Raises :class:`MalformedEntry` for anything else, including two-field
    entries, unknown tags, empty fields, and contradictions such as
    ``sil,sil,a``.
    """
    fields = [f.strip() for f in raw.split(",")]
    if len(fields) == 1:
        label = fields[0]
        if not label:
            raise MalformedEntry(f"empty entry: {raw!r}")
        if label.endswith("*"):
            raise MalformedEntry(f"correct slot cannot carry an accent mark: {raw!r}")
        if label == UNCLEAR:
            raise MalformedEntry(f"bare unclear marker is not a valid slot: {raw!r}")
        if label != SILENCE:
            _check_label(label, raw)
        return PhonemeEvent(label, label, EventKind.CORRECT)
    if len(fields) != 3:
        raise MalformedEntry(
            f"expected 1 or 3 comma-separated fields, got {len(fields)}: {raw!r}"
        )
    canonical, perceived, tag = fields
    kind = _TAG_TO_KIND.get(tag.lower())
    if kind is None:
        raise MalformedEntry(f"unknown tag {tag!r} in entry {raw!r}")
    if not canonical or not perceived:
        raise MalformedEntry(f"empty field in entry {raw!r}")
    accented = perceived.endswith("*")
    if accented:
        perceived = perceived[:-1].strip()
        if not perceived:
            raise MalformedEntry(f"accent mark without a label in entry {raw!r}")
    if canonical not in (SILENCE, UNCLEAR):
        _check_label(canonical, raw)
    if perceived not in (SILENCE, UNCLEAR):
        _check_label(perceived, raw)
    try:
        return PhonemeEvent(canonical, perceived, kind, accented)
    except MalformedEntry as exc:
        raise MalformedEntry(f"{exc} (entry {raw!r})") from None


def serialize_annotation_entry(event: PhonemeEvent) -> str:
    """Render an event back to the raw entry grammar.

    Inverse of :func:`parse_annotation_entry` up to field whitespace.
    """
    if event.kind is EventKind.CORRECT:
        return event.canonical
    star = "*" if event.accented else ""
    tag = {"substitution": "s", "addition": "a", "deletion": "d"}[event.kind.value]
    return f"{event.canonical}, {event.perceived}{star}, {tag}"


@dataclass(frozen=True)
class WordAnnotation:
    """A canonical word and the phoneme slots observed for it."""

    surface: str
    events: tuple[PhonemeEvent, ...]

    def __post_init__(self) -> None:
        normalized = normalize_word(self.surface)
        if not normalized:
            raise MalformedDocument(f"word surface {self.surface!r} is empty once normalized")
        object.__setattr__(self, "surface", normalized)
        if not self.events:
            raise MalformedDocument(f"word {normalized!r} has no annotation entries")
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def error_count(self) -> int:
        return sum(1 for e in self.events if e.is_error)

    @property
    def mispronounced(self) -> bool:
        """The word-level detection flag: true iff any slot is an error."""
        return self.error_count > 0

    @property
    def error_types(self) -> frozenset[str]:
        """Subset of {"S", "D", "I"}; empty exactly when the word is clean."""
        return frozenset(_KIND_TO_LETTER[e.kind] for e in self.events if e.is_error)


@dataclass(frozen=True)
class Utterance:
    """One annotated utterance: id, audio reference, and word annotations."""

    utterance_id: str
    audio: str
    words: tuple[WordAnnotation, ...]
    speaker: str | None = None

    def __post_init__(self) -> None:
        if not self.utterance_id:
            raise MalformedDocument("utterance id must be non-empty")
        if not self.words:
            raise MalformedDocument(f"utterance {self.utterance_id!r} has no words")
        object.__setattr__(self, "words", tuple(self.words))

    @property
    def canonical_text(self) -> str:
        return " ".join(w.surface for w in self.words)

    @property
    def canonical_words(self) -> tuple[str, ...]:
        return tuple(w.surface for w in self.words)


@dataclass(frozen=True)
class WordLabel:
    """Per-word detection target derived from the annotations."""

    surface: str
    mispronounced: bool
    error_count: int
    error_types: frozenset[str]


def derive_word_labels(utterance: Utterance) -> tuple[WordLabel, ...]:
    """Word-level detection flags and error-type sets, in word order."""
    return tuple(
        WordLabel(w.surface, w.mispronounced, w.error_count, w.error_types)
        for w in utterance.words
    )


def mispronounced_word_count(utterance: Utterance) -> int:
    """Number of words whose detection flag is set."""
    return sum(1 for w in utterance.words if w.mispronounced)


# ---------------------------------------------------------------------------
# Annotation documents and manifests


@dataclass(frozen=True)
class AnnotationDocument:
    """On-disk shape of one utterance's annotations.

    ``annotation_info`` maps each (normalized) surface form to its raw entry
    strings. A surface occurring twice in the text keys a single map entry,
    first occurrence wins; both positions receive the same events when the
    document is expanded to an :class:`Utterance`.
    """

    text: str
    annotation_info: dict[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        info: dict[str, tuple[str, ...]] = {}
        for word, entries in self.annotation_info.items():
            key = normalize_word(word)
            if not key:
                raise MalformedDocument(f"annotation key {word!r} is empty once normalized")
            if key in info:
                raise MalformedDocument(f"duplicate annotation key {key!r}")
            info[key] = tuple(entries)
        object.__setattr__(self, "annotation_info", info)

    @classmethod
    def from_utterance(cls, utterance: Utterance) -> "AnnotationDocument":
        info: dict[str, tuple[str, ...]] = {}
        for word in utterance.words:
            # First occurrence wins for duplicated surfaces.
            info.setdefault(
                word.surface,
                tuple(serialize_annotation_entry(e) for e in word.events),
            )
        return cls(text=utterance.canonical_text, annotation_info=info)

    @classmethod
    def from_json(cls, payload: str | dict) -> "AnnotationDocument":
        doc = json.loads(payload) if isinstance(payload, str) else payload
        if not isinstance(doc, dict) or "text" not in doc or "annotation_info" not in doc:
            raise MalformedDocument("annotation document needs 'text' and 'annotation_info'")
        info = doc["annotation_info"]
        if not isinstance(info, dict):
            raise MalformedDocument("'annotation_info' must be a word -> entries map")
        return cls(text=str(doc["text"]), annotation_info={str(k): tuple(v) for k, v in info.items()})

    def to_json(self, indent: int | None = 2) -> str:
        payload = {
            "text": self.text,
            "annotation_info": {w: list(entries) for w, entries in self.annotation_info.items()},
        }
        return json.dumps(payload, indent=indent, ensure_ascii=False)

    def to_utterance(
        self,
        utterance_id: str,
        audio: str = "",
        speaker: str | None = None,
    ) -> Utterance:
        tokens = [normalize_word(t) for t in self.text.split()]
        tokens = [t for t in tokens if t]
        if not tokens:
            raise MalformedDocument("annotation document has an empty text")
        words = []
        for token in tokens:
            entries = self.annotation_info.get(token)
            if entries is None:
                raise MalformedDocument(f"word {token!r} has no annotation entry")
            events = tuple(parse_annotation_entry(e) for e in entries)
            words.append(WordAnnotation(token, events))
        unused = set(self.annotation_info) - set(tokens)
        if unused:
            raise MalformedDocument(f"annotation keys not present in text: {sorted(unused)}")
        return Utterance(utterance_id, audio, tuple(words), speaker)


def load_annotation_document(path: str | Path) -> AnnotationDocument:
    return AnnotationDocument.from_json(Path(path).read_text(encoding="utf-8"))


def _render_annotation_info(info: dict[str, tuple[str, ...]]) -> str:
    # One word per line with its entry list inline, the shape the prompt's
    # own example uses; json.dumps with indent would split the lists.
    rows = []
    for word, entries in info.items():
        entry_list = ", ".join(json.dumps(e, ensure_ascii=False) for e in entries)
        rows.append(f"    {json.dumps(word, ensure_ascii=False)}: [{entry_list}]")
    return "{\n" + ",\n".join(rows) + "\n}"


def build_curation_prompt(utterance: Utterance) -> tuple[str, str]:
    """Render the (system, user) prompt pair asking a model to turn the
    utterance's annotations into bracketed ground-truth feedback."""
    doc = AnnotationDocument.from_utterance(utterance)
    user = fill(
        CURATION_USER,
        text=doc.text,
        annotation_info=_render_annotation_info(doc.annotation_info),
    )
    return CURATION_SYSTEM, user


class FeedbackLike(Protocol):
    """Structural view of a parsed feedback response (see the feedback module)."""

    @property
    def items(self) -> Sequence:  # each item exposes .word and .pair_count
        ...


@dataclass(frozen=True)
class ConsistencyReport:
    """Outcome of checking generated feedback against the annotations."""

    missing: tuple[str, ...]
    spurious: tuple[str, ...]
    mismatched: tuple[tuple[str, int, int], ...]  # (word, expected pairs, got pairs)

    @property
    def passed(self) -> bool:
        return not (self.missing or self.spurious or self.mismatched)


def verify_curation_consistency(
    utterance: Utterance, response: FeedbackLike
) -> ConsistencyReport:
    """Check a parsed feedback response against the utterance's annotations.

    Every flagged word must appear with exactly one (issue, suggestion) pair
    per annotated error, and no clean or out-of-vocabulary word may appear.
    Like the curation prompt itself, duplicated surfaces are keyed once by
    their first occurrence.
    """
    expected: dict[str, int] = {}
    clean: set[str] = set()
    for word in utterance.words:
        if word.surface in expected or word.surface in clean:
            continue
        if word.mispronounced:
            expected[word.surface] = word.error_count
        else:
            clean.add(word.surface)

    got: dict[str, int] = {}
    for item in response.items:
        key = normalize_word(item.word)
        got.setdefault(key, int(item.pair_count))

    missing = tuple(w for w in expected if w not in got)
    spurious = tuple(w for w in got if w not in expected)
    mismatched = tuple(
        (w, expected[w], got[w]) for w in expected if w in got and got[w] != expected[w]
    )
    return ConsistencyReport(missing, spurious, mismatched)


@dataclass(frozen=True)
class ManifestEntry:
    """One utterance descriptor from a JSON-lines manifest."""

    utterance_id: str
    audio: str
    annotation: str | None = None
    speaker: str | None = None
    text: str | None = None


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Read a manifest: one JSON object per line.

    Required keys: ``id`` and ``audio``. Optional: ``annotation`` (path to an
    annotation document), ``speaker``, and ``text`` (canonical text for
    entries that carry no annotations, e.g. practice-only sentence lists).
    """
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"{path}:{lineno}: not valid JSON: {exc}") from None
        if "id" not in row or "audio" not in row:
            raise MalformedDocument(f"{path}:{lineno}: manifest rows need 'id' and 'audio'")
        entries.append(
            ManifestEntry(
                utterance_id=str(row["id"]),
                audio=str(row["audio"]),
                annotation=row.get("annotation"),
                speaker=row.get("speaker"),
                text=row.get("text"),
            )
        )
    return entries


def load_utterance(entry: ManifestEntry, base_dir: str | Path | None = None) -> Utterance:
    """Expand a manifest entry into an annotated utterance."""
    if entry.annotation is None:
        raise MalformedDocument(f"manifest entry {entry.utterance_id!r} has no annotation path")
    path = Path(entry.annotation)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    doc = load_annotation_document(path)
    return doc.to_utterance(entry.utterance_id, audio=entry.audio, speaker=entry.speaker)
