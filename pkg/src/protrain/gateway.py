"""Access to OpenAI-compatible model endpoints with record/replay support.

One gateway object serves transcription (ASR), chat completion (optionally
with an attached WAV clip), and token embedding. Every request/response
exchange can be recorded to a JSON-lines cassette and replayed later
bit-for-bit, which keeps benchmark runs reproducible and test suites fully
offline. Credentials are taken from environment variables named in the
endpoint profile; the values are never stored, hashed, or logged.
"""
from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import httpx
import numpy as np

from .metrics import OneHotEmbedder
from .prompts import (
    AUDIO_CHAT_SYSTEM,
    AUDIO_CHAT_USER,
    CASCADE_SYSTEM,
    CASCADE_USER,
    CURATION_SYSTEM,
    CURATION_USER,
    JUDGE_GRADE_PROMPT,
    JUDGE_PAIRWISE_PROMPT,
    TemplateError,
    fill,
    placeholders,
)
from .annotations import normalize_word

logger = logging.getLogger(__name__)

__all__ = [
    "GatewayError",
    "TransportFailure",
    "AuthFailure",
    "ContentRefusal",
    "DecodeFailure",
    "CassetteMiss",
    "TemplateError",
    "DecodingParams",
    "RetryPolicy",
    "EndpointKind",
    "EndpointProfile",
    "RenderedPrompt",
    "PromptTemplate",
    "TEMPLATES",
    "Cassette",
    "request_key",
    "ModelGateway",
    "GatewayEmbedder",
    "normalize_transcript",
]


class GatewayError(Exception):
    """Base class for endpoint access failures."""


class TransportFailure(GatewayError):
    """Network failure or retryable server-side error (429/5xx)."""


class AuthFailure(GatewayError):
    """Rejected or unavailable credentials."""


class ContentRefusal(GatewayError):
    """The model declined to answer."""


class DecodeFailure(GatewayError):
    """The endpoint's response body could not be interpreted."""


class CassetteMiss(GatewayError):
    """Replay mode was asked for a request that was never recorded."""


@dataclass(frozen=True)
class DecodingParams:
    """Sampling settings sent with every chat completion."""

    max_new_tokens: int = 1024
    temperature: float = 0.6
    top_p: float = 0.9


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_s: tuple[float, ...] = (0.5, 2.0)


class EndpointKind(str, Enum):
    ASR = "asr"
    CHAT = "chat"
    EMBED = "embed"


@dataclass(frozen=True)
class EndpointProfile:
    """How to reach one model endpoint.

    ``credential_env`` is the *name* of the environment variable holding the
    API key; profiles never hold key material, so they are safe to snapshot
    into run records.
    """

    name: str
    kind: EndpointKind
    base_url: str
    model: str
    credential_env: str | None = None
    decoding: DecodingParams = DecodingParams()
    timeout_s: float = 60.0
    retry: RetryPolicy = RetryPolicy()
    max_concurrency: int = 4


@dataclass(frozen=True)
class RenderedPrompt:
    system: str
    user: str


@dataclass(frozen=True)
class PromptTemplate:
    """A named (system, user) template pair with ``{placeholder}`` slots."""

    name: str
    system_text: str
    user_text: str

    def render(self, **values: str) -> RenderedPrompt:
        system_slots = placeholders(self.system_text)
        user_slots = placeholders(self.user_text)
        needed = system_slots | user_slots
        given = set(values)
        if needed - given:
            raise TemplateError(
                f"template {self.name}: unbound placeholders {sorted(needed - given)}"
            )
        if given - needed:
            raise TemplateError(
                f"template {self.name}: unused bindings {sorted(given - needed)}"
            )
        return RenderedPrompt(
            fill(self.system_text, **{k: values[k] for k in system_slots}),
            fill(self.user_text, **{k: values[k] for k in user_slots}),
        )


TEMPLATES: dict[str, PromptTemplate] = {
    "CascadeOneShot": PromptTemplate("CascadeOneShot", CASCADE_SYSTEM, CASCADE_USER),
    "CurationGenerate": PromptTemplate("CurationGenerate", CURATION_SYSTEM, CURATION_USER),
    "AudioChatOneShot": PromptTemplate("AudioChatOneShot", AUDIO_CHAT_SYSTEM, AUDIO_CHAT_USER),
    # The judge prompts are single-message; the system slot stays empty.
    "JudgeGrade": PromptTemplate("JudgeGrade", "", JUDGE_GRADE_PROMPT),
    "JudgePairwise": PromptTemplate("JudgePairwise", "", JUDGE_PAIRWISE_PROMPT),
}


def normalize_transcript(text: str) -> list[str]:
    """ASR text to the normalized word list used throughout scoring."""
    words = [normalize_word(tok) for tok in text.split()]
    return [w for w in words if w]


def request_key(kind: str, payload: dict) -> str:
    """Stable content hash for one request (credentials excluded)."""
    blob = json.dumps(
        {"kind": kind, "payload": payload},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class Cassette:
    """JSON-lines store of request-hash -> response-body pairs.

    The first recorded response for a key wins; retries and repeated runs
    never append duplicates.
    """

    def __init__(self, path: str | Path, readonly: bool = False):
        self.path = Path(path)
        self.readonly = readonly
        self.entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            for lineno, line in enumerate(
                self.path.read_text(encoding="utf-8").splitlines(), 1
            ):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CassetteMiss(f"{self.path}:{lineno}: corrupt cassette line: {exc}")
                self.entries.setdefault(row["key"], row["response"])
        elif readonly:
            raise CassetteMiss(f"cassette file not found: {self.path}")

    def get(self, key: str) -> dict | None:
        return self.entries.get(key)

    def put(self, key: str, kind: str, response: dict) -> None:
        if self.readonly:
            raise CassetteMiss(f"cassette {self.path} is read-only")
        with self._lock:
            if key in self.entries:
                return
            self.entries[key] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"key": key, "kind": kind, "response": response},
                        ensure_ascii=False,
                    )
                    + "\n"
                )


def _chat_text(body: dict) -> str:
    try:
        choice = body["choices"][0]
        message = choice["message"]
    except (KeyError, IndexError, TypeError):
        raise DecodeFailure("chat response has no choices[0].message")
    if choice.get("finish_reason") == "content_filter" or message.get("refusal"):
        raise ContentRefusal("model declined to answer")
    content = message.get("content")
    if isinstance(content, list):
        content = "".join(
            part.get("text", "") for part in content if isinstance(part, dict)
        )
    if not isinstance(content, str):
        raise DecodeFailure("chat response content is not text")
    return content


class ModelGateway:
    """Client for ASR, chat, and embedding endpoints.

    ``mode`` is one of ``live`` (plain HTTP), ``record`` (HTTP, appending
    every exchange to a cassette), or ``replay`` (cassette only; no client
    is ever constructed and no credential is ever read).
    """

    def __init__(
        self,
        mode: str = "live",
        cassette: Cassette | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        if mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown gateway mode {mode!r}")
        if mode in ("record", "replay") and cassette is None:
            raise ValueError(f"{mode} mode needs a cassette")
        self.mode = mode
        self.cassette = cassette
        self._transport = transport
        self._client_obj: httpx.Client | None = None
        self._semaphores: dict[str, threading.Semaphore] = {}
        self._sem_lock = threading.Lock()

    @classmethod
    def live(cls, transport: httpx.BaseTransport | None = None) -> "ModelGateway":
        return cls("live", transport=transport)

    @classmethod
    def record(
        cls, cassette_path: str | Path, transport: httpx.BaseTransport | None = None
    ) -> "ModelGateway":
        return cls("record", Cassette(cassette_path, readonly=False), transport=transport)

    @classmethod
    def replay(cls, cassette_path: str | Path) -> "ModelGateway":
        return cls("replay", Cassette(cassette_path, readonly=True))

    def close(self) -> None:
        if self._client_obj is not None:
            self._client_obj.close()
            self._client_obj = None

    def __enter__(self) -> "ModelGateway":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- plumbing ---------------------------------------------------------

    def _client(self) -> httpx.Client:
        if self._client_obj is None:
            self._client_obj = httpx.Client(transport=self._transport)
        return self._client_obj

    def _semaphore(self, profile: EndpointProfile) -> threading.Semaphore:
        with self._sem_lock:
            if profile.name not in self._semaphores:
                self._semaphores[profile.name] = threading.Semaphore(
                    max(1, profile.max_concurrency)
                )
            return self._semaphores[profile.name]

    @staticmethod
    def _credential(profile: EndpointProfile) -> str | None:
        if profile.credential_env is None:
            return None
        value = os.environ.get(profile.credential_env)
        if value is None:
            raise AuthFailure(
                f"environment variable {profile.credential_env} is not set "
                f"(needed by endpoint {profile.name})"
            )
        return value

    def _post(
        self,
        profile: EndpointProfile,
        path: str,
        *,
        json_body: dict | None = None,
        files: dict | None = None,
        data: dict | None = None,
    ) -> dict:
        headers = {}
        credential = self._credential(profile)
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        url = profile.base_url.rstrip("/") + path
        try:
            response = self._client().post(
                url,
                json=json_body,
                files=files,
                data=data,
                headers=headers,
                timeout=profile.timeout_s,
            )
        except httpx.HTTPError as exc:
            # Exception text only; request payloads and headers stay out of logs.
            raise TransportFailure(f"{type(exc).__name__} calling {url}") from exc
        if response.status_code in (401, 403):
            raise AuthFailure(
                f"endpoint {profile.name} rejected credentials (HTTP {response.status_code})"
            )
        if response.status_code == 429 or response.status_code >= 500:
            raise TransportFailure(f"HTTP {response.status_code} from {url}")
        if response.status_code >= 400:
            raise GatewayError(
                f"HTTP {response.status_code} from {url}: {response.text[:200]}"
            )
        try:
            return response.json()
        except ValueError:
            raise DecodeFailure(f"non-JSON response from {url}")

    def _with_retries(self, profile: EndpointProfile, call: Callable[[], dict]) -> dict:
        attempts = max(1, profile.retry.max_attempts)
        backoff = profile.retry.backoff_s or (0.5,)
        semaphore = self._semaphore(profile)
        for attempt in range(attempts):
            try:
                with semaphore:
                    return call()
            except TransportFailure:
                if attempt == attempts - 1:
                    raise
                delay = backoff[min(attempt, len(backoff) - 1)]
                logger.warning(
                    "retrying %s after transport failure (attempt %d/%d, %.1fs)",
                    profile.name,
                    attempt + 1,
                    attempts,
                    delay,
                )
                time.sleep(delay)
        raise AssertionError("unreachable")

    def _exchange(
        self,
        profile: EndpointProfile,
        kind: str,
        key: str,
        call: Callable[[], dict],
    ) -> dict:
        if self.mode == "replay":
            assert self.cassette is not None
            body = self.cassette.get(key)
            if body is None:
                raise CassetteMiss(
                    f"no recorded response for {kind} request {key[:12]}... "
                    f"in {self.cassette.path}"
                )
            return body
        if self.mode == "record":
            assert self.cassette is not None
            cached = self.cassette.get(key)
            if cached is not None:
                return cached
        body = self._with_retries(profile, call)
        if self.mode == "record":
            self.cassette.put(key, kind, body)
        return body

    # -- endpoints --------------------------------------------------------

    def transcribe(
        self, profile: EndpointProfile, audio: bytes, filename: str = "audio.wav"
    ) -> list[str]:
        """Transcribe a WAV clip and return the normalized word list."""
        if profile.kind is not EndpointKind.ASR:
            raise ValueError(f"profile {profile.name} is not an ASR endpoint")
        key = request_key(
            "asr",
            {"model": profile.model, "audio_sha256": hashlib.sha256(audio).hexdigest()},
        )
        body = self._exchange(
            profile,
            "asr",
            key,
            lambda: self._post(
                profile,
                "/audio/transcriptions",
                files={"file": (filename, audio, "audio/wav")},
                data={"model": profile.model},
            ),
        )
        text = body.get("text")
        if not isinstance(text, str):
            raise DecodeFailure("transcription response has no text field")
        return normalize_transcript(text)

    def complete(
        self,
        profile: EndpointProfile,
        prompt: RenderedPrompt,
        audio: bytes | None = None,
    ) -> str:
        """Run a chat completion, optionally attaching a WAV clip."""
        if profile.kind is not EndpointKind.CHAT:
            raise ValueError(f"profile {profile.name} is not a chat endpoint")
        messages: list[dict] = []
        if prompt.system:
            messages.append({"role": "system", "content": prompt.system})
        if audio is None:
            messages.append({"role": "user", "content": prompt.user})
            hash_messages = messages
        else:
            messages.append(
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt.user},
                        {
                            "type": "input_audio",
                            "input_audio": {
                                "data": base64.b64encode(audio).decode("ascii"),
                                "format": "wav",
                            },
                        },
                    ],
                }
            )
            # Hash a compact view with the audio bytes replaced by a digest.
            hash_messages = [
                messages[0] if prompt.system else None,
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt.user},
                        {"type": "input_audio", "audio_sha256": hashlib.sha256(audio).hexdigest()},
                    ],
                },
            ]
            hash_messages = [m for m in hash_messages if m is not None]
        payload = {
            "model": profile.model,
            "messages": messages,
            "max_tokens": profile.decoding.max_new_tokens,
            "temperature": profile.decoding.temperature,
            "top_p": profile.decoding.top_p,
        }
        key = request_key(
            "chat",
            {
                "model": profile.model,
                "messages": hash_messages,
                "max_tokens": profile.decoding.max_new_tokens,
                "temperature": profile.decoding.temperature,
                "top_p": profile.decoding.top_p,
            },
        )
        body = self._exchange(
            profile,
            "chat",
            key,
            lambda: self._post(profile, "/chat/completions", json_body=payload),
        )
        return _chat_text(body)

    def embed(self, profile: EndpointProfile, tokens: Sequence[str]) -> np.ndarray:
        """Embed tokens into unit-norm row vectors.

        Profiles whose base URL uses the ``stub`` scheme are served by the
        offline one-hot embedder and never touch the network or cassette.
        """
        if profile.kind is not EndpointKind.EMBED:
            raise ValueError(f"profile {profile.name} is not an embedding endpoint")
        if profile.base_url.startswith("stub"):
            return OneHotEmbedder().embed(tokens)
        key = request_key("embed", {"model": profile.model, "input": list(tokens)})
        body = self._exchange(
            profile,
            "embed",
            key,
            lambda: self._post(
                profile,
                "/embeddings",
                json_body={"model": profile.model, "input": list(tokens)},
            ),
        )
        try:
            rows = sorted(body["data"], key=lambda r: r.get("index", 0))
            matrix = np.asarray([r["embedding"] for r in rows], dtype=float)
        except (KeyError, TypeError, ValueError):
            raise DecodeFailure("embedding response has no data[].embedding")
        if matrix.ndim != 2 or matrix.shape[0] != len(tokens):
            raise DecodeFailure("embedding response shape does not match input")
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return matrix / norms


class GatewayEmbedder:
    """Adapter exposing a gateway embed profile as an EmbeddingProvider."""

    def __init__(self, gateway: ModelGateway, profile: EndpointProfile):
        self.gateway = gateway
        self.profile = profile

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        return self.gateway.embed(self.profile, tokens)
