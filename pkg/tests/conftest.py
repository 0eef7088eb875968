"""Shared fixtures: golden model outputs, annotation examples, stub endpoints."""
from __future__ import annotations

import io
import json
import struct
import wave
from pathlib import Path

import httpx
import pytest

from protrain.annotations import AnnotationDocument, Utterance
from protrain.gateway import ModelGateway, RenderedPrompt

# ---------------------------------------------------------------------------
# annotated utterances

CANOE_TEXT = "But there came no promise from the bow of the canoe"
CANOE_INFO = {
    "but": ["B", "AH", "T"],
    "there": ["DH, err, s", "EH", "R"],
    "came": ["K", "EY", "M"],
    "no": ["N", "OW"],
    "promise": ["P", "R", "AA", "M", "AH", "S"],
    "from": ["F", "R", "AH, AO, s", "M, N, s"],
    "the": ["DH, D, s", "AH, EH, s"],
    "bow": ["B", "OW, AW, s"],
    "of": ["sil, err, a", "AH, AO, s", "V, F, s"],
    "canoe": ["K", "AH", "N", "UW", "sil, IY, a"],
}

JOKING_TEXT = "You're joking me sir the other managed to articulate"
JOKING_INFO = {
    "you're": ["Y", "UH", "R"],
    "joking": ["JH, ZH, s", "OW", "K", "IH", "NG", "sil, G, a", "sil, AH, a"],
    "me": ["M", "IY"],
    "sir": ["S", "ER, err, s"],
    "the": ["DH", "AH"],
    "other": ["AH", "DH, Z, s", "ER, err, s"],
    "managed": ["M", "AE", "N", "IH", "JH, ZH, s", "D"],
    "to": ["T", "UW"],
    "articulate": ["AA", "R, R*, s", "T", "IH", "K", "Y", "AH", "L", "EY, EH, s", "T"],
}


def make_document(text: str, info: dict) -> AnnotationDocument:
    return AnnotationDocument.from_json({"text": text, "annotation_info": info})


@pytest.fixture
def canoe_utterance() -> Utterance:
    return make_document(CANOE_TEXT, CANOE_INFO).to_utterance("canoe-1", "canoe.wav")


@pytest.fixture
def joking_utterance() -> Utterance:
    return make_document(JOKING_TEXT, JOKING_INFO).to_utterance("joking-1", "joking.wav")


# ---------------------------------------------------------------------------
# golden model outputs (inputs for the parsers)

# Exhaustive per-word reply: clean words carry issue None; the elided middle
# of the listing appears as a literal "..." line.
CASCADE_EXAMPLE_OUTPUT = """word: you're
issue: None
suggestion: None
...
word: articulate
issue: "R" was replaced with a foreign-accented "R*", indicating a substitution error. "EY" was replaced with "EH", indicating a substitution error.
suggestion: Practice the American /R/ sound as in "RED" (/R EH D/) emphasizing the retroflex position of the tongue. Practice the distinction between /EY/ as in "DATE" (/D EY T/) and /EH/ as in "BET" (/B EH T/)"""

# Flagged-only reply with one inline record per line, five flagged words.
INLINE_FIVE_RECORDS = """word: joking issue: "JH" was replaced with "ZH", indicating a substitution error. An extra "G" sound was added, indicating an addition error. An extra "AH" sound was added, indicating an addition error. suggestion: Practice the difference between /JH/ as in "JOKE" (/JH OW K/) and /ZH/ as in "MEASURE" (/M EH ZH ER/). Focus on stopping after the /NG/ as in "KING" (/K IH NG/) without additional sounds. Avoid adding extra vowel sounds after completing the word.
word: sir issue: Unclear pronunciation, "ER" perceived with uncertainty suggestion: Practice /ER/ as in "SIR" (/S ER/) to add clarity
word: other issue: "DH" was replaced with "Z", indicating a substitution error. Unclear pronunciation, "ER" perceived with uncertainty. suggestion: Practice unvoiced /DH/ as in "THIS" (/DH IH S/) instead of voiced consonant sounds like /Z/. Practice /ER/ as in "HER" (/HH ER/) for more distinct articulation.
word: managed issue: "JH" was replaced with "ZH", indicating a substitution error suggestion: Practice the distinction between /JH/ as in "JUDGE" (/JH AH JH/) and /ZH/ as in "VISION" (/V IH ZH UH N/)
word: articulate issue: "R" was replaced with a foreign-accented "R*", indicating a substitution error. "EY" was replaced with "EH", indicating a substitution error. suggestion: Practice the American /R/ sound as in "RED" (/R EH D/) emphasizing the retroflex position of the tongue. Practice the distinction between /EY/ as in "DATE" (/D EY T/) and /EH/ as in "BET" (/B EH T/)"""

# Label-per-line replies, one block per flagged word.
BARE_RECORDS_TWO = """stared:
    Issue: "ST" was replaced with "STIRD", indicating a substitution error. "D" was replaced with "D", indicating a substitution error. However, it seems like the word was pronounced as "stirred" instead of "stared", which is a different word.
    Suggestion: Practice the difference between the words "stared" (/ST EY R D/) and "stirred" (/ST ER D/).
other's:
    Issue: Unclear pronunciation, "ER" perceived with uncertainty
    Suggestion: Practice /ER/ as in "HER" (/HH ER/) for more distinct articulation."""

BARE_RECORDS_ONE = """stared:
    Issue: "TH" was replaced with "D", indicating a substitution error. "ER" was replaced with "AHR", indicating a substitution error.
    Suggestion: Practice the distinction between /TH/ as in "THAT" (/TH AHT/) and /D/ as in "DAY". Also, practice the distinction between /ER/ as in "FAR" (/F ER/) and /AHR/ as in "HURR"."""

BARE_RECORDS_SIX = """men:
    Issue: "EH" was replaced with "IH", indicating a substitution error.
    Suggestion: Practice the vowel sound /EH/ as in "MEN" (/M EH N/), differentiating it from /IH/ as in "MIN" (/M IH N/).
stared:
    Issue: "EH" was replaced with "EY", indicating a substitution error.
    Suggestion: Focus on practicing /EH/ as in "BED" (/B EH D/), being careful not to elevate the tongue to make a /EY/ sound as in "BADE" (/B EY D/).
into:
    Issue: "IH" was replaced with "EE", indicating a substitution error.
    Suggestion: Practice the /IH/ vowel as in "HIT" (/HH IH T/), avoiding the longer /EE/ vowel sound as in "HEAT" (/HH EE T/).
each:
    Issue: "IY" was replaced with "IH", indicating a substitution error.
    Suggestion: Emphasize the initial /IY/ sound as in "EACH" (/IY CH/), ensuring the vowel is pronounced longer and with more tension.
other's:
    Issue: "DH" was replaced with a foreign-accented sound, indicating a substitution error. "ER" was replaced with "AH", indicating a substitution error.
    Suggestion: Practice the voiced consonant /DH/ as in "THIS" (/DH IH S/) ensuring the tongue is placed between the teeth. Practice /ER/ as in "HER" (/HH ER/), focusing on the rhotic r-coloring and avoiding vowel substitution.
face:
    Issue: "EY" was replaced with "EH", indicating a substitution error.
    Suggestion: Practice the /EY/ sound as in "FACE" (/F EY S/), distinguishing it from the shorter /EH/ vowel as in "FEST" (/F EH S T/)."""

BARE_RECORDS_FOUR = """the:
    Issue: "DH" was replaced with "D", indicating a substitution error.
    Suggestion: Practice the distinction between /DH/ and /D/ with pairs like "THY" (/DH AY/) vs. "DIE" (/D AY/).

stared:
    Issue: "R" was deleted, indicating a deletion error.
    Suggestion: Ensure the /R/ sound is pronounced by practicing words like "RED" (/R EH D/).

into:
    Issue: "IH" was replaced with "IY", indicating a substitution error.
    Suggestion: Practice the distinction between /IH/ and /IY/ with pairs like "BIT" (/B IH T/) vs. "BEET" (/B IY T/).

other's:
    Issue: "Z" was replaced with "S", indicating a substitution error.
    Suggestion: Practice the distinction between /Z/ and /S/ with pairs like "ZOO" (/Z UW/) vs. "SUE" (/S UW/)."""

# Bracketed curation reply as generated: records separated by two-character
# "\n" sequences, quotes escaped as \" (the parser unescapes both).
BRACKETED_JOKING_RAW = (
    'joking [(Issue: \\"JH\\" was replaced with \\"ZH\\", indicating a substitution error) '
    '(Suggestion: Practice the difference between /JH/ as in \\"JOKE\\" (/JH OW K/) and /ZH/ as in \\"MEASURE\\" (/M EH ZH ER/))] '
    '[(Issue: An extra \\"G\\" sound was added, indicating an addition error) '
    '(Suggestion: Focus on stopping after the /NG/ as in \\"KING\\" (/K IH NG/) without additional sounds)] '
    '[(Issue: An extra \\"AH\\" sound was added, indicating an addition error) '
    '(Suggestion: Avoid adding extra vowel sounds after completing the word)]'
    '\\nsir [(Issue: Unclear pronunciation, \\"ER\\" perceived with uncertainty) '
    '(Suggestion: Practice /ER/ as in \\"SIR\\" (/S ER/) to add clarity)]'
    '\\nother [(Issue: \\"DH\\" was replaced with \\"Z\\", indicating a substitution error) '
    '(Suggestion: Practice unvoiced /DH/ as in \\"THIS\\" (/DH IH S/) instead of voiced consonant sounds like /Z/)] '
    '[(Issue: Unclear pronunciation, \\"ER\\" perceived with uncertainty) '
    '(Suggestion: Practice /ER/ as in \\"HER\\" (/HH ER/) for more distinct articulation)]'
    '\\nmanaged [(Issue: \\"JH\\" was replaced with \\"ZH\\", indicating a substitution error) '
    '(Suggestion: Practice the distinction between /JH/ as in \\"JUDGE\\" (/JH AH JH/) and /ZH/ as in \\"VISION\\" (/V IH ZH UH N/))]'
    '\\narticulate [(Issue: \\"R\\" was replaced with a foreign-accented \\"R*\\", indicating a substitution error) '
    '(Suggestion: Practice the American /R/ sound as in \\"RED\\" (/R EH D/) emphasizing the retroflex position of the tongue)] '
    '[(Issue: \\"EY\\" was replaced with \\"EH\\", indicating a substitution error) '
    '(Suggestion: Practice the distinction between /EY/ as in \\"DATE\\" (/D EY T/) and /EH/ as in \\"BET\\" (/B EH T/))]'
)

# Degenerate generations that carry no feedback structure at all.
DEGENERATE_OUTPUTS = [
    "mm",
    "male",
    "ird's work our plans made public before we were met by powerful opposition",
    "ighly were our plans made public before we were met by powerful opposition",
]


# ---------------------------------------------------------------------------
# audio helpers

def make_wav(seed: int = 0, frames: int = 160) -> bytes:
    """A tiny valid 16 kHz mono 16-bit PCM WAV clip; seed varies the samples."""
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(16000)
        samples = [((seed * 7919 + i * 31) % 2048) - 1024 for i in range(frames)]
        wav.writeframes(struct.pack(f"<{frames}h", *samples))
    return buf.getvalue()


# ---------------------------------------------------------------------------
# endpoint stubbing

def chat_body(text: str) -> dict:
    return {"choices": [{"message": {"content": text}, "finish_reason": "stop"}]}


def asr_body(text: str) -> dict:
    return {"text": text}


class ScriptedGateway:
    """Duck-typed gateway for pipeline tests: pops canned completions."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.prompts: list[RenderedPrompt] = []

    def complete(self, profile, prompt, audio=None):
        self.prompts.append(prompt)
        if not self.replies:
            raise AssertionError("scripted gateway exhausted")
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply


def write_annotation_file(path: Path, text: str, info: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps({"text": text, "annotation_info": info}, ensure_ascii=False),
        encoding="utf-8",
    )


def write_manifest(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows),
        encoding="utf-8",
    )


def mock_gateway(handler, mode: str = "live", cassette_path=None) -> ModelGateway:
    """Gateway wired to an in-process httpx handler; no sockets involved."""
    transport = httpx.MockTransport(handler)
    if mode == "live":
        return ModelGateway.live(transport=transport)
    if mode == "record":
        return ModelGateway.record(cassette_path, transport=transport)
    raise ValueError(mode)
