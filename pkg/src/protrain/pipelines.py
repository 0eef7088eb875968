"""Dataset curation, benchmark, and judging pipelines.

These tie the annotation model, the feedback grammars, the metrics, and the
model gateway together. Three kinds of system-under-test are supported: a
cascade (ASR transcript fed to a text LLM), a direct audio-chat model, and
pre-computed outputs loaded from disk. Every pipeline is deterministic given
a replay cassette, which is what the offline benchmark tests rely on.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .annotations import (
    ConsistencyReport,
    Utterance,
    build_curation_prompt,
    derive_word_labels,
    verify_curation_consistency,
)
from .feedback import (
    FeedbackResponse,
    ResponseFormat,
    Unparseable,
    parse_response,
    response_from_json,
    response_to_json,
)
from .gateway import (
    CassetteMiss,
    EndpointProfile,
    GatewayError,
    ModelGateway,
    RenderedPrompt,
    TEMPLATES,
)
from .metrics import (
    DetectionCounts,
    EmptyCorpus,
    SuggestionScores,
    aggregate,
    mean_suggestion_scores,
    percent,
    score_detection,
    score_suggestions,
    wer,
)

logger = logging.getLogger(__name__)

__all__ = [
    "PipelineError",
    "VerdictUnparseable",
    "SystemOutput",
    "FeedbackSystem",
    "CascadeSystem",
    "AudioChatSystem",
    "StoredOutputs",
    "load_stored_outputs",
    "load_reference_map",
    "CurationOutcome",
    "curate_utterance",
    "curate_corpus",
    "UtteranceResult",
    "run_benchmark",
    "extract_grade",
    "extract_pairwise",
    "GradeResult",
    "PairwiseResult",
    "judge_grades",
    "judge_pairwise",
    "summarize_grades",
    "summarize_pairwise",
]


class PipelineError(Exception):
    """A pipeline-level problem not tied to one model exchange."""


class VerdictUnparseable(ValueError):
    """A judge reply carried no recognizable verdict marker."""


# ---------------------------------------------------------------------------
# systems under test


@dataclass(frozen=True)
class SystemOutput:
    """What one system produced for one utterance."""

    response: FeedbackResponse
    transcript: tuple[str, ...] | None
    raw_text: str


class FeedbackSystem(Protocol):
    name: str
    needs_audio: bool

    def run(self, utterance: Utterance, audio: bytes | None) -> SystemOutput:
        ...


@dataclass
class CascadeSystem:
    """ASR transcript piped into a text chat model.

    The chat model sees the canonical text and the transcript side by side
    and answers in the exhaustive per-word format.
    """

    name: str
    gateway: ModelGateway
    asr: EndpointProfile
    chat: EndpointProfile
    needs_audio = True

    def run(self, utterance: Utterance, audio: bytes | None) -> SystemOutput:
        if audio is None:
            raise PipelineError(f"{self.name}: no audio for {utterance.utterance_id}")
        words = self.gateway.transcribe(self.asr, audio)
        transcript = " ".join(words)
        prompt = TEMPLATES["CascadeOneShot"].render(
            ground_truth=utterance.canonical_text,
            transcribed_text=transcript,
        )
        text = self.gateway.complete(self.chat, prompt)
        response = parse_response(text, ResponseFormat.EXHAUSTIVE_PER_WORD)
        return SystemOutput(response=response, transcript=tuple(words), raw_text=text)


@dataclass
class AudioChatSystem:
    """A chat model that accepts the WAV clip directly."""

    name: str
    gateway: ModelGateway
    chat: EndpointProfile
    needs_audio = True

    def run(self, utterance: Utterance, audio: bytes | None) -> SystemOutput:
        if audio is None:
            raise PipelineError(f"{self.name}: no audio for {utterance.utterance_id}")
        prompt = TEMPLATES["AudioChatOneShot"].render(
            ground_truth=utterance.canonical_text
        )
        text = self.gateway.complete(self.chat, prompt, audio=audio)
        response = parse_response(text, ResponseFormat.FLAGGED_ONLY)
        return SystemOutput(response=response, transcript=None, raw_text=text)


@dataclass
class StoredOutputs:
    """Pre-computed responses keyed by utterance id, loaded from JSONL."""

    name: str
    responses: dict[str, FeedbackResponse]
    needs_audio = False

    def run(self, utterance: Utterance, audio: bytes | None) -> SystemOutput:
        response = self.responses.get(utterance.utterance_id)
        if response is None:
            raise PipelineError(
                f"{self.name}: no stored output for {utterance.utterance_id}"
            )
        return SystemOutput(response=response, transcript=None, raw_text=response.raw)


def load_stored_outputs(path: str | Path, name: str = "stored") -> StoredOutputs:
    responses: dict[str, FeedbackResponse] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        payload = json.loads(line)
        utterance_id = payload.get("id")
        if not utterance_id:
            raise PipelineError(f"{path}:{lineno}: output row has no id")
        if utterance_id in responses:
            raise PipelineError(f"{path}:{lineno}: duplicate output for {utterance_id}")
        responses[utterance_id] = response_from_json(payload)
    return StoredOutputs(name=name, responses=responses)


def load_reference_map(path: str | Path) -> dict[str, FeedbackResponse]:
    """Ground-truth feedback JSONL (one response per utterance id)."""
    return load_stored_outputs(path, name="reference").responses


# ---------------------------------------------------------------------------
# dataset curation


@dataclass(frozen=True)
class CurationOutcome:
    utterance_id: str
    response: FeedbackResponse | None
    attempts: int
    report: ConsistencyReport | None
    error: str | None = None

    @property
    def accepted(self) -> bool:
        return self.response is not None and self.error is None


def curate_utterance(
    gateway: ModelGateway,
    profile: EndpointProfile,
    utterance: Utterance,
    max_attempts: int = 3,
) -> CurationOutcome:
    """Generate bracketed ground-truth feedback and gate it on consistency.

    The annotation-derived error counts must match the generated pair counts
    word for word; inconsistent generations are retried up to ``max_attempts``
    times. A repeated identical reply ends the loop early since regeneration
    cannot make progress (this is what happens under replay).
    """
    system_text, user_text = build_curation_prompt(utterance)
    prompt = RenderedPrompt(system=system_text, user=user_text)
    last_report: ConsistencyReport | None = None
    previous_raw: str | None = None
    attempts = 0
    for attempts in range(1, max_attempts + 1):
        try:
            text = gateway.complete(profile, prompt)
        except GatewayError as exc:
            if isinstance(exc, CassetteMiss):
                raise
            return CurationOutcome(
                utterance.utterance_id, None, attempts, last_report, error=str(exc)
            )
        try:
            response = parse_response(text, ResponseFormat.GROUND_TRUTH_BRACKETED)
        except Unparseable as exc:
            last_report = None
            if text == previous_raw:
                return CurationOutcome(
                    utterance.utterance_id,
                    None,
                    attempts,
                    None,
                    error=f"unparseable: {exc}",
                )
            previous_raw = text
            continue
        report = verify_curation_consistency(utterance, response)
        if report.passed:
            return CurationOutcome(utterance.utterance_id, response, attempts, report)
        last_report = report
        if text == previous_raw:
            break
        previous_raw = text
    return CurationOutcome(
        utterance.utterance_id,
        None,
        attempts,
        last_report,
        error="consistency check failed",
    )


def curate_corpus(
    gateway: ModelGateway,
    profile: EndpointProfile,
    utterances: Iterable[Utterance],
    out_path: str | Path | None = None,
    max_attempts: int = 3,
) -> list[CurationOutcome]:
    """Curate a corpus; accepted responses are appended to ``out_path`` JSONL."""
    outcomes = []
    lines = []
    for utterance in utterances:
        outcome = curate_utterance(gateway, profile, utterance, max_attempts)
        outcomes.append(outcome)
        if outcome.accepted:
            assert outcome.response is not None
            lines.append(
                json.dumps(
                    response_to_json(outcome.response, outcome.utterance_id),
                    ensure_ascii=False,
                )
            )
        else:
            logger.warning(
                "curation rejected %s after %d attempt(s): %s",
                outcome.utterance_id,
                outcome.attempts,
                outcome.error,
            )
    if out_path is not None:
        path = Path(out_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return outcomes


# ---------------------------------------------------------------------------
# benchmark


@dataclass(frozen=True)
class UtteranceResult:
    utterance_id: str
    counts: DetectionCounts | None
    suggestion: SuggestionScores | None
    wer_value: float | None
    parse_failed: bool
    error: str | None
    flagged: tuple[str, ...]


def _load_audio(entry_audio: str, audio_base: str | Path | None) -> bytes | None:
    path = Path(entry_audio)
    if audio_base is not None and not path.is_absolute():
        path = Path(audio_base) / path
    if not path.exists():
        return None
    return path.read_bytes()


def _utterance_result(
    system: "FeedbackSystem",
    utterance: Utterance,
    audio: bytes | None,
    reference: FeedbackResponse | None,
    embedder,
) -> UtteranceResult:
    canonical = [(w.surface, w.mispronounced) for w in derive_word_labels(utterance)]
    parse_failed = False
    error = None
    transcript: tuple[str, ...] | None = None
    try:
        output = system.run(utterance, audio)
        response: FeedbackResponse | None = output.response
        transcript = output.transcript
    except Unparseable as exc:
        # An answer came back but carried no usable structure. Score it as
        # an empty prediction so the system is still accountable for misses.
        parse_failed = True
        error = f"unparseable: {exc}"
        response = None
    except PipelineError as exc:
        return UtteranceResult(
            utterance.utterance_id, None, None, None, False, str(exc), ()
        )
    except GatewayError as exc:
        if isinstance(exc, CassetteMiss):
            raise
        return UtteranceResult(
            utterance.utterance_id, None, None, None, False, f"gateway: {exc}", ()
        )
    predicted_words = response.flagged_words if response is not None else ()
    counts = score_detection(canonical, predicted_words)
    suggestion = None
    if reference is not None:
        predicted_items = response.items if response is not None else ()
        suggestion = score_suggestions(
            predicted_items,
            reference.items,
            canonical_words=utterance.canonical_words,
            embedder=embedder,
        )
    wer_value = None
    if transcript is not None:
        wer_value = wer(utterance.canonical_words, transcript)
    return UtteranceResult(
        utterance.utterance_id,
        counts,
        suggestion,
        wer_value,
        parse_failed,
        error,
        tuple(predicted_words),
    )


def _summary_dict(results: Sequence[UtteranceResult]) -> dict | None:
    rows = [r.counts for r in results if r.counts is not None]
    if not rows:
        return None
    summary = aggregate(rows)
    c = summary.counts
    return {
        "tp": c.tp,
        "fp": c.fp,
        "fn": c.fn,
        "tn": c.tn,
        "extra_words": c.extra_words,
        "predicted_total": c.predicted_total,
        "precision": summary.precision,
        "recall": summary.recall,
        "f1": summary.f1,
        "ewr": summary.ewr,
    }


def run_benchmark(
    system: "FeedbackSystem",
    utterances: Sequence[Utterance],
    *,
    audio_paths: dict[str, str] | None = None,
    audio_base: str | Path | None = None,
    references: dict[str, FeedbackResponse] | None = None,
    embedder=None,
) -> dict:
    """Score one system over a corpus and build the run report.

    The report is a plain JSON-ready dict with no timestamps or host state,
    so identical inputs always serialize to identical bytes. Utterances that
    fail at the transport level are excluded from every aggregate; replies
    that parse to nothing are scored as empty predictions in the headline
    numbers and excluded from the stricter secondary aggregate.
    """
    if not utterances:
        raise EmptyCorpus("benchmark needs at least one utterance")
    results: list[UtteranceResult] = []
    for utterance in utterances:
        audio = None
        if system.needs_audio:
            audio_ref = (audio_paths or {}).get(utterance.utterance_id, utterance.audio)
            audio = _load_audio(audio_ref, audio_base)
        reference = (references or {}).get(utterance.utterance_id)
        results.append(
            _utterance_result(system, utterance, audio, reference, embedder)
        )

    scored = [r for r in results if r.counts is not None]
    strict = [r for r in scored if not r.parse_failed]
    detection = _summary_dict(scored)
    detection_strict = _summary_dict(strict)

    suggestion_rows = [r.suggestion for r in strict if r.suggestion is not None]
    suggestion = None
    if suggestion_rows:
        mean = mean_suggestion_scores(suggestion_rows)
        suggestion = {
            "bleu2": mean.bleu2,
            "rouge_l": mean.rouge_l,
            "semantic_f1": mean.semantic_f1,
        }

    wer_rows = [r.wer_value for r in scored if r.wer_value is not None]
    wer_mean = sum(wer_rows) / len(wer_rows) if wer_rows else None

    percent_row: dict[str, str] = {}
    if detection is not None:
        percent_row = {
            "Precision": percent(detection["precision"]),
            "Recall": percent(detection["recall"]),
            "F1": percent(detection["f1"]),
            "EWR": percent(detection["ewr"]),
        }
        if suggestion is not None:
            percent_row["BLEU-2"] = percent(suggestion["bleu2"])
            percent_row["ROUGE-L"] = percent(suggestion["rouge_l"])
            percent_row["SemScore"] = percent(suggestion["semantic_f1"])
        if wer_mean is not None:
            percent_row["WER"] = percent(wer_mean)

    total_words = sum(len(u.words) for u in utterances)
    total_bad = sum(
        1 for u in utterances for w in derive_word_labels(u) if w.mispronounced
    )
    per_utterance = []
    for r in sorted(results, key=lambda r: r.utterance_id):
        row: dict = {"id": r.utterance_id}
        if r.counts is not None:
            row.update(
                tp=r.counts.tp,
                fp=r.counts.fp,
                fn=r.counts.fn,
                tn=r.counts.tn,
                extra_words=r.counts.extra_words,
                flagged=list(r.flagged),
            )
        if r.suggestion is not None:
            row["suggestion"] = {
                "bleu2": r.suggestion.bleu2,
                "rouge_l": r.suggestion.rouge_l,
                "semantic_f1": r.suggestion.semantic_f1,
            }
        if r.wer_value is not None:
            row["wer"] = r.wer_value
        if r.parse_failed:
            row["parse_failed"] = True
        if r.error is not None:
            row["error"] = r.error
        per_utterance.append(row)

    return {
        "system": system.name,
        "corpus": {
            "utterances": len(utterances),
            "words": total_words,
            "mispronounced": total_bad,
        },
        "coverage": {
            "total": len(results),
            "scored": len(scored),
            "parse_failures": sum(1 for r in results if r.parse_failed),
            "errors": sum(1 for r in results if r.error is not None and not r.parse_failed),
        },
        "detection": detection,
        "detection_strict": detection_strict,
        "suggestion": suggestion,
        "wer": wer_mean,
        "percent": percent_row,
        "per_utterance": per_utterance,
    }


# ---------------------------------------------------------------------------
# LLM-as-judge


_GRADE_RE = re.compile(r"\[\[([1-5])\]\]")
_PAIR_RE = re.compile(r"\[\[(A|B|C)\]\]")


def extract_grade(text: str) -> int:
    """Last ``[[k]]`` marker with k in 1..5; anything else is unparseable."""
    matches = _GRADE_RE.findall(text)
    if not matches:
        raise VerdictUnparseable("no [[k]] grade marker found")
    return int(matches[-1])


def extract_pairwise(text: str) -> str:
    """Last ``[[A]]``/``[[B]]``/``[[C]]`` marker mapped to A, B, or Tie."""
    matches = _PAIR_RE.findall(text)
    if not matches:
        raise VerdictUnparseable("no [[A]]/[[B]]/[[C]] verdict marker found")
    return {"A": "A", "B": "B", "C": "Tie"}[matches[-1]]


@dataclass(frozen=True)
class GradeResult:
    utterance_id: str
    grade: int | None
    raw: str


@dataclass(frozen=True)
class PairwiseResult:
    utterance_id: str
    verdict: str | None
    raw: str


def judge_grades(
    gateway: ModelGateway,
    profile: EndpointProfile,
    rows: Iterable[tuple[str, str, str, str]],
) -> list[GradeResult]:
    """Grade rows of (id, ground_truth, reference_suggestion, ai_suggestion)."""
    results = []
    for utterance_id, ground_truth, reference, candidate in rows:
        prompt = TEMPLATES["JudgeGrade"].render(
            ground_truth=ground_truth,
            reference_suggestion=reference,
            ai_suggestion=candidate,
        )
        text = gateway.complete(profile, prompt)
        try:
            grade: int | None = extract_grade(text)
        except VerdictUnparseable:
            grade = None
        results.append(GradeResult(utterance_id, grade, text))
    return results


def judge_pairwise(
    gateway: ModelGateway,
    profile: EndpointProfile,
    rows: Iterable[tuple[str, str, str, str, str]],
) -> list[PairwiseResult]:
    """Compare rows of (id, ground_truth, reference, candidate_a, candidate_b)."""
    results = []
    for utterance_id, ground_truth, reference, cand_a, cand_b in rows:
        prompt = TEMPLATES["JudgePairwise"].render(
            ground_truth=ground_truth,
            reference_suggestion=reference,
            ai_suggestion_A=cand_a,
            ai_suggestion_B=cand_b,
        )
        text = gateway.complete(profile, prompt)
        try:
            verdict: str | None = extract_pairwise(text)
        except VerdictUnparseable:
            verdict = None
        results.append(PairwiseResult(utterance_id, verdict, text))
    return results


def summarize_grades(results: Sequence[GradeResult]) -> dict:
    """Average grade over parseable verdicts; failures counted separately."""
    graded = [r.grade for r in results if r.grade is not None]
    return {
        "total": len(results),
        "graded": len(graded),
        "unparseable": len(results) - len(graded),
        "average": sum(graded) / len(graded) if graded else None,
    }


def summarize_pairwise(results: Sequence[PairwiseResult]) -> dict:
    """Win rate for system A: wins / (wins + losses + ties)."""
    wins = sum(1 for r in results if r.verdict == "A")
    losses = sum(1 for r in results if r.verdict == "B")
    ties = sum(1 for r in results if r.verdict == "Tie")
    unparseable = len(results) - wins - losses - ties
    decided = wins + losses + ties
    return {
        "total": len(results),
        "wins": wins,
        "losses": losses,
        "ties": ties,
        "unparseable": unparseable,
        "win_rate": wins / decided if decided else None,
    }
