"""HTTP practice service: pick a sentence, upload a recording, get feedback.

The service keeps a sentence list from the manifest, runs the configured
system under test on uploaded WAV clips, and tracks per-session feedback
history in memory with an optional append-only JSONL log per session.
Uploaded audio is discarded after feedback unless retention is switched on.
"""
from __future__ import annotations

import io
import json
import logging
import threading
import time
import uuid
import wave
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .annotations import load_annotation_document, load_manifest, normalize_word
from .config import AppConfig, ServiceConfig, build_system
from .feedback import Unparseable
from .gateway import GatewayError, ModelGateway
from .pipelines import FeedbackSystem, PipelineError

logger = logging.getLogger(__name__)

__all__ = ["PracticeSentence", "ServiceState", "create_app"]


@dataclass(frozen=True)
class PracticeSentence:
    """A sentence offered for practice; duck-types the spoken-text surface
    that systems under test consume (utterance_id + canonical_text)."""

    utterance_id: str
    text: str
    audio: str = ""

    @property
    def canonical_words(self) -> tuple[str, ...]:
        words = (normalize_word(tok) for tok in self.text.split())
        return tuple(w for w in words if w)

    @property
    def canonical_text(self) -> str:
        return " ".join(self.canonical_words)


class SentenceOut(BaseModel):
    id: str
    text: str
    audio: str | None = None


class FeedbackItemOut(BaseModel):
    word: str
    issue: str
    suggestion: str
    pair_count: int = 1


class FeedbackOut(BaseModel):
    session_id: str
    sentence_id: str
    items: list[FeedbackItemOut]
    transcript: str | None = None
    latency_ms: float = 0.0
    parse_failed: bool = False
    raw: str = ""


class SessionEventOut(BaseModel):
    sentence_id: str
    ts: float
    items: list[FeedbackItemOut]
    transcript: str | None = None
    parse_failed: bool = False


class SessionOut(BaseModel):
    session_id: str
    events: list[SessionEventOut]


class HealthOut(BaseModel):
    status: str
    system: str | None = None
    sentences: int = 0


@dataclass
class ServiceState:
    settings: ServiceConfig
    system: FeedbackSystem | None = None
    manifest_loaded: bool = False
    sentences: dict[str, PracticeSentence] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)
    sessions: dict[str, list[dict]] = field(default_factory=dict)
    log_dir: Path | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def log_event(self, session_id: str, event: dict) -> None:
        with self.lock:
            self.sessions.setdefault(session_id, []).append(event)
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            path = self.log_dir / f"{session_id}.jsonl"
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({"session_id": session_id, **event}, ensure_ascii=False) + "\n")


def _load_sentences(config: AppConfig) -> dict[str, PracticeSentence] | None:
    """Sentence inventory, or None when no manifest is available at all."""
    settings = config.service
    if not settings.manifest:
        return None
    manifest_path = config.resolve(settings.manifest)
    if not manifest_path.exists():
        logger.warning("manifest not found: %s", manifest_path)
        return None
    base = config.resolve(settings.data_dir) if settings.data_dir else manifest_path.parent
    sentences: dict[str, PracticeSentence] = {}
    for entry in load_manifest(manifest_path):
        text = entry.text
        if text is None and entry.annotation is not None:
            annotation_path = Path(entry.annotation)
            if not annotation_path.is_absolute():
                annotation_path = base / annotation_path
            if annotation_path.exists():
                text = load_annotation_document(annotation_path).text
        if text is None:
            logger.warning("skipping %s: no sentence text", entry.utterance_id)
            continue
        sentences[entry.utterance_id] = PracticeSentence(
            utterance_id=entry.utterance_id, text=text, audio=entry.audio
        )
    return sentences


def _valid_wav(data: bytes) -> bool:
    try:
        with wave.open(io.BytesIO(data)) as wav:
            return wav.getnframes() > 0
    except (wave.Error, EOFError):
        return False


def create_app(
    config: AppConfig,
    gateway: ModelGateway | None = None,
    system: FeedbackSystem | None = None,
) -> FastAPI:
    """Build the service app.

    ``system`` overrides the configured one (used by tests). When the config
    names no system, the first cascade-flavor entry is used.
    """
    settings = config.service
    if system is None and config.systems:
        name = settings.system
        if name is None:
            for candidate in config.systems.values():
                if candidate.flavor == "cascade":
                    name = candidate.name
                    break
        if name is not None:
            if gateway is None:
                gateway = ModelGateway.live()
            system = build_system(config, name, gateway)

    state = ServiceState(settings=settings, system=system)
    loaded = _load_sentences(config)
    state.manifest_loaded = loaded is not None
    state.sentences = loaded or {}
    state.order = list(state.sentences)
    if settings.session_log_dir:
        state.log_dir = config.resolve(settings.session_log_dir)

    app = FastAPI(title="pronunciation practice service")
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(settings.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/healthz", response_model=HealthOut)
    def healthz() -> HealthOut:
        return HealthOut(
            status="ok",
            system=getattr(state.system, "name", None),
            sentences=len(state.sentences),
        )

    @app.get("/sentences", response_model=list[SentenceOut])
    def sentences(offset: int = 0, limit: int | None = None) -> list[SentenceOut]:
        if not state.manifest_loaded:
            raise HTTPException(status_code=503, detail="no sentence manifest loaded")
        offset = max(0, offset)
        end = offset + limit if limit is not None else None
        window = state.order[offset:end]
        return [
            SentenceOut(id=s.utterance_id, text=s.text, audio=s.audio or None)
            for s in (state.sentences[i] for i in window)
        ]

    @app.post("/feedback", response_model=FeedbackOut)
    async def feedback(
        audio: UploadFile = File(...),
        sentence_id: str | None = Form(None),
        canonical_text: str | None = Form(None),
        session_id: str | None = Form(None),
    ) -> FeedbackOut:
        if state.system is None:
            raise HTTPException(status_code=503, detail="no feedback system configured")
        if sentence_id is not None:
            if not state.manifest_loaded:
                raise HTTPException(status_code=503, detail="no sentence manifest loaded")
            sentence = state.sentences.get(sentence_id)
            if sentence is None:
                raise HTTPException(
                    status_code=404, detail=f"unknown sentence {sentence_id!r}"
                )
        elif canonical_text is not None:
            # Free-practice mode: the learner supplies the sentence directly.
            sentence = PracticeSentence(
                utterance_id="text:" + uuid.uuid5(uuid.NAMESPACE_URL, canonical_text).hex,
                text=canonical_text,
            )
            if not sentence.canonical_words:
                raise HTTPException(status_code=400, detail="canonical_text has no words")
        else:
            raise HTTPException(
                status_code=400, detail="provide sentence_id or canonical_text"
            )
        data = await audio.read()
        if len(data) > settings.max_upload_bytes:
            raise HTTPException(
                status_code=413,
                detail=f"upload exceeds {settings.max_upload_bytes} bytes",
            )
        if not _valid_wav(data):
            raise HTTPException(status_code=400, detail="upload is not a playable WAV clip")

        sid = session_id or uuid.uuid4().hex
        parse_failed = False
        items: list[FeedbackItemOut] = []
        transcript = None
        raw = ""
        started = time.perf_counter()
        try:
            output = state.system.run(sentence, data)  # type: ignore[arg-type]
            raw = output.raw_text
            if output.transcript is not None:
                transcript = " ".join(output.transcript)
            items = [
                FeedbackItemOut(
                    word=i.word,
                    issue=i.issue,
                    suggestion=i.suggestion,
                    pair_count=i.pair_count,
                )
                for i in output.response.items
            ]
        except Unparseable as exc:
            parse_failed = True
            raw = str(exc)
        except (GatewayError, PipelineError) as exc:
            raise HTTPException(status_code=502, detail=f"feedback backend failed: {exc}")
        latency_ms = (time.perf_counter() - started) * 1000.0

        event = {
            "sentence_id": sentence.utterance_id,
            "ts": time.time(),
            "items": [i.model_dump() for i in items],
            "transcript": transcript,
            "parse_failed": parse_failed,
        }
        if settings.retain_audio and state.log_dir is not None:
            audio_dir = state.log_dir / "audio" / sid
            audio_dir.mkdir(parents=True, exist_ok=True)
            seq = len(state.sessions.get(sid, []))
            audio_path = audio_dir / f"{seq:04d}.wav"
            audio_path.write_bytes(data)
            event["audio_path"] = str(audio_path)
        state.log_event(sid, event)

        return FeedbackOut(
            session_id=sid,
            sentence_id=sentence.utterance_id,
            items=items,
            transcript=transcript,
            latency_ms=latency_ms,
            parse_failed=parse_failed,
            raw=raw,
        )

    @app.get("/session/{session_id}", response_model=SessionOut)
    def session(session_id: str) -> SessionOut:
        with state.lock:
            events = state.sessions.get(session_id)
        if events is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return SessionOut(
            session_id=session_id,
            events=[SessionEventOut(**{k: v for k, v in e.items() if k != "audio_path"}) for e in events],
        )

    return app
