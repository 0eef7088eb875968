"""Run configuration: endpoint profiles, systems under test, service settings.

Config files are TOML (or JSON with the same shape). Relative paths inside a
config resolve against the config file's own directory, so a checked-in
config keeps working from any working directory. Credentials never appear
in config files; profiles carry only the *name* of an environment variable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # py311+
except ImportError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .gateway import (
    DecodingParams,
    EndpointKind,
    EndpointProfile,
    ModelGateway,
    RetryPolicy,
)
from .pipelines import (
    AudioChatSystem,
    CascadeSystem,
    FeedbackSystem,
    StoredOutputs,
    load_stored_outputs,
)

__all__ = [
    "ConfigError",
    "SystemSpec",
    "ServiceConfig",
    "AppConfig",
    "load_config",
    "build_system",
]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


_FLAVORS = ("cascade", "audio_chat", "stored")


@dataclass(frozen=True)
class SystemSpec:
    """One entry under [systems.*]."""

    name: str
    flavor: str
    asr: str | None = None
    chat: str | None = None
    outputs: str | None = None

    def __post_init__(self):
        if self.flavor not in _FLAVORS:
            raise ConfigError(
                f"system {self.name}: unknown flavor {self.flavor!r} "
                f"(expected one of {', '.join(_FLAVORS)})"
            )
        if self.flavor == "cascade" and not (self.asr and self.chat):
            raise ConfigError(f"system {self.name}: cascade needs asr and chat profiles")
        if self.flavor == "audio_chat" and not self.chat:
            raise ConfigError(f"system {self.name}: audio_chat needs a chat profile")
        if self.flavor == "stored" and not self.outputs:
            raise ConfigError(f"system {self.name}: stored needs an outputs path")


@dataclass(frozen=True)
class ServiceConfig:
    manifest: str | None = None
    data_dir: str | None = None
    system: str | None = None
    max_upload_bytes: int = 10 * 1024 * 1024
    retain_audio: bool = False
    session_log_dir: str | None = None
    cors_origins: tuple[str, ...] = ("*",)


@dataclass(frozen=True)
class AppConfig:
    base_dir: Path
    profiles: dict[str, EndpointProfile] = field(default_factory=dict)
    systems: dict[str, SystemSpec] = field(default_factory=dict)
    service: ServiceConfig = ServiceConfig()
    references: str | None = None
    judge_profile: str | None = None
    embed_profile: str | None = None
    curation_profile: str | None = None
    curation_max_attempts: int = 3

    def resolve(self, path: str | Path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def profile(self, name: str) -> EndpointProfile:
        try:
            return self.profiles[name]
        except KeyError:
            raise ConfigError(f"no profile named {name!r}")


def _profile_from_dict(name: str, row: dict) -> EndpointProfile:
    try:
        kind = EndpointKind(row["kind"])
    except KeyError:
        raise ConfigError(f"profile {name}: missing kind")
    except ValueError:
        raise ConfigError(
            f"profile {name}: unknown kind {row['kind']!r} "
            f"(expected one of {', '.join(k.value for k in EndpointKind)})"
        )
    for required in ("base_url", "model"):
        if required not in row:
            raise ConfigError(f"profile {name}: missing {required}")
    decoding = DecodingParams(**row.get("decoding", {}))
    retry_row = dict(row.get("retry", {}))
    if "backoff_s" in retry_row:
        retry_row["backoff_s"] = tuple(retry_row["backoff_s"])
    retry = RetryPolicy(**retry_row)
    return EndpointProfile(
        name=name,
        kind=kind,
        base_url=row["base_url"],
        model=row["model"],
        credential_env=row.get("credential_env"),
        decoding=decoding,
        timeout_s=float(row.get("timeout_s", 60.0)),
        retry=retry,
        max_concurrency=int(row.get("max_concurrency", 4)),
    )


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
    else:
        with path.open("rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table")

    profiles = {
        name: _profile_from_dict(name, row)
        for name, row in data.get("profiles", {}).items()
    }
    systems = {}
    for name, row in data.get("systems", {}).items():
        systems[name] = SystemSpec(
            name=name,
            flavor=row.get("flavor", ""),
            asr=row.get("asr"),
            chat=row.get("chat"),
            outputs=row.get("outputs"),
        )
    for spec in systems.values():
        for ref in (spec.asr, spec.chat):
            if ref is not None and ref not in profiles:
                raise ConfigError(f"system {spec.name}: unknown profile {ref!r}")

    service_row = data.get("service", {})
    service = ServiceConfig(
        manifest=service_row.get("manifest"),
        data_dir=service_row.get("data_dir"),
        system=service_row.get("system"),
        max_upload_bytes=int(service_row.get("max_upload_bytes", 10 * 1024 * 1024)),
        retain_audio=bool(service_row.get("retain_audio", False)),
        session_log_dir=service_row.get("session_log_dir"),
        cors_origins=tuple(service_row.get("cors_origins", ("*",))),
    )

    judge_row = data.get("judge", {})
    embed_row = data.get("embedding", {})
    curation_row = data.get("curation", {})
    for label, row in (("judge", judge_row), ("embedding", embed_row), ("curation", curation_row)):
        ref = row.get("profile")
        if ref is not None and ref not in profiles:
            raise ConfigError(f"{label}: unknown profile {ref!r}")

    return AppConfig(
        base_dir=path.parent.resolve(),
        profiles=profiles,
        systems=systems,
        service=service,
        references=data.get("references"),
        judge_profile=judge_row.get("profile"),
        embed_profile=embed_row.get("profile"),
        curation_profile=curation_row.get("profile"),
        curation_max_attempts=int(curation_row.get("max_attempts", 3)),
    )


def build_system(config: AppConfig, name: str, gateway: ModelGateway) -> FeedbackSystem:
    """Instantiate the named system under test from its spec."""
    try:
        spec = config.systems[name]
    except KeyError:
        raise ConfigError(f"no system named {name!r}")
    if spec.flavor == "cascade":
        assert spec.asr is not None and spec.chat is not None
        return CascadeSystem(
            name=name,
            gateway=gateway,
            asr=config.profile(spec.asr),
            chat=config.profile(spec.chat),
        )
    if spec.flavor == "audio_chat":
        assert spec.chat is not None
        return AudioChatSystem(name=name, gateway=gateway, chat=config.profile(spec.chat))
    assert spec.outputs is not None
    outputs: StoredOutputs = load_stored_outputs(config.resolve(spec.outputs), name=name)
    return outputs
