"""Command line entry points: curate, bench, judge, serve, report."""
from __future__ import annotations

import json
import logging
from pathlib import Path

import click

from . import __version__
from .annotations import load_manifest, load_utterance
from .config import AppConfig, ConfigError, build_system, load_config
from .gateway import GatewayError, GatewayEmbedder, ModelGateway
from .pipelines import (
    PipelineError,
    curate_corpus,
    judge_grades,
    judge_pairwise,
    load_reference_map,
    run_benchmark,
    summarize_grades,
    summarize_pairwise,
)
from .reporting import load_report, write_report_bundle


def _gateway(replay: str | None, record: str | None) -> ModelGateway:
    if replay and record:
        raise click.UsageError("--replay and --record are mutually exclusive")
    try:
        if replay:
            return ModelGateway.replay(replay)
        if record:
            return ModelGateway.record(record)
        return ModelGateway.live()
    except GatewayError as exc:
        raise click.ClickException(str(exc))


def _load_config(path: str) -> AppConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        raise click.ClickException(str(exc))


def _manifest_path(config: AppConfig, manifest: str | None) -> Path:
    if manifest:
        return Path(manifest)
    if config.service.manifest:
        return config.resolve(config.service.manifest)
    raise click.UsageError("no manifest given and none configured")


def _load_utterances(config: AppConfig, manifest: str | None):
    path = _manifest_path(config, manifest)
    if not path.exists():
        raise click.ClickException(f"manifest not found: {path}")
    base = (
        config.resolve(config.service.data_dir)
        if config.service.data_dir
        else path.parent
    )
    entries = load_manifest(path)
    try:
        utterances = [load_utterance(entry, base_dir=base) for entry in entries]
    except (ValueError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc))
    return entries, utterances, base


def _dump_json(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Chatty logging.")
def main(verbose: bool) -> None:
    """Benchmark, curate, judge, and serve word-level pronunciation feedback."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", type=click.Path(), help="Annotated corpus manifest (JSONL).")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--replay", type=click.Path(), help="Serve responses from this cassette.")
@click.option("--record", type=click.Path(), help="Record responses to this cassette.")
@click.option("--max-attempts", default=None, type=int)
def curate(config_path, manifest, out_path, replay, record, max_attempts):
    """Generate consistency-checked ground-truth feedback for a corpus."""
    config = _load_config(config_path)
    if not config.curation_profile:
        raise click.ClickException("config has no [curation] profile")
    profile = config.profile(config.curation_profile)
    attempts = max_attempts or config.curation_max_attempts
    _, utterances, _ = _load_utterances(config, manifest)
    with _gateway(replay, record) as gateway:
        try:
            outcomes = curate_corpus(
                gateway, profile, utterances, out_path=out_path, max_attempts=attempts
            )
        except GatewayError as exc:
            raise click.ClickException(str(exc))
    accepted = sum(1 for o in outcomes if o.accepted)
    click.echo(f"accepted {accepted}/{len(outcomes)} utterances -> {out_path}")
    for outcome in outcomes:
        if not outcome.accepted:
            click.echo(
                f"  rejected {outcome.utterance_id} after {outcome.attempts} attempt(s): {outcome.error}"
            )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--system", "system_names", multiple=True, help="System to score (repeatable; default: all).")
@click.option("--manifest", type=click.Path(), help="Annotated corpus manifest (JSONL).")
@click.option("--references", type=click.Path(), help="Ground-truth feedback JSONL.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--replay", type=click.Path(), help="Serve responses from this cassette.")
@click.option("--record", type=click.Path(), help="Record responses to this cassette.")
def bench(config_path, system_names, manifest, references, out_dir, replay, record):
    """Score systems over an annotated corpus; one report JSON per system."""
    config = _load_config(config_path)
    names = list(system_names) or list(config.systems)
    if not names:
        raise click.ClickException("config defines no systems")
    _, utterances, base = _load_utterances(config, manifest)
    reference_map = None
    ref_path = references or config.references
    if ref_path:
        resolved = Path(references) if references else config.resolve(ref_path)
        if not resolved.exists():
            raise click.ClickException(f"references not found: {resolved}")
        try:
            reference_map = load_reference_map(resolved)
        except (PipelineError, ValueError) as exc:
            raise click.ClickException(str(exc))
    out = Path(out_dir)
    with _gateway(replay, record) as gateway:
        embedder = None
        if config.embed_profile:
            embedder = GatewayEmbedder(gateway, config.profile(config.embed_profile))
        for name in names:
            try:
                system = build_system(config, name, gateway)
                report = run_benchmark(
                    system,
                    utterances,
                    audio_base=base,
                    references=reference_map,
                    embedder=embedder,
                )
            except (ConfigError, PipelineError, GatewayError) as exc:
                raise click.ClickException(f"{name}: {exc}")
            path = out / f"{name}.json"
            _dump_json(report, path)
            row = " ".join(f"{k}={v}" for k, v in report["percent"].items())
            click.echo(f"{name}: {row or 'no scored utterances'}")
            click.echo(f"  wrote {path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["grade", "pairwise"]), required=True)
@click.option("--rows", "rows_path", required=True, type=click.Path(exists=True),
              help="JSONL rows: id/ground_truth/reference plus candidate or candidate_a+candidate_b.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--replay", type=click.Path(), help="Serve responses from this cassette.")
@click.option("--record", type=click.Path(), help="Record responses to this cassette.")
def judge(config_path, mode, rows_path, out_path, replay, record):
    """Grade suggestions 1-5 or compare two systems pairwise."""
    config = _load_config(config_path)
    if not config.judge_profile:
        raise click.ClickException("config has no [judge] profile")
    profile = config.profile(config.judge_profile)
    rows = []
    for lineno, line in enumerate(Path(rows_path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        payload = json.loads(line)
        try:
            base = (payload["id"], payload["ground_truth"], payload["reference"])
            if mode == "pairwise":
                rows.append((*base, payload["candidate_a"], payload["candidate_b"]))
            else:
                rows.append((*base, payload["candidate"]))
        except KeyError as exc:
            raise click.ClickException(f"{rows_path}:{lineno}: missing field {exc}")
    with _gateway(replay, record) as gateway:
        try:
            if mode == "pairwise":
                results = judge_pairwise(gateway, profile, rows)
                summary = summarize_pairwise(results)
                out_rows = [
                    {"id": r.utterance_id, "verdict": r.verdict, "raw": r.raw}
                    for r in results
                ]
            else:
                results = judge_grades(gateway, profile, rows)
                summary = summarize_grades(results)
                out_rows = [
                    {"id": r.utterance_id, "grade": r.grade, "raw": r.raw}
                    for r in results
                ]
        except GatewayError as exc:
            raise click.ClickException(str(exc))
    _dump_json({"mode": mode, "results": out_rows, "summary": summary}, Path(out_path))
    click.echo(f"{mode}: {json.dumps(summary, sort_keys=True)}")
    click.echo(f"  wrote {out_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--replay", type=click.Path(), help="Serve responses from this cassette.")
@click.option("--record", type=click.Path(), help="Record responses to this cassette.")
def serve(config_path, host, port, replay, record):
    """Run the practice feedback service."""
    import uvicorn

    from .service import create_app

    config = _load_config(config_path)
    gateway = _gateway(replay, record)
    try:
        app = create_app(config, gateway)
    except (ConfigError, PipelineError) as exc:
        raise click.ClickException(str(exc))
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.argument("run_reports", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--stem", default="report", show_default=True)
def report(run_reports, out_dir, stem):
    """Render run reports to CSV, Markdown, and comparison figures."""
    try:
        reports = [load_report(p) for p in run_reports]
    except ValueError as exc:
        raise click.ClickException(str(exc))
    written = write_report_bundle(reports, out_dir, stem=stem)
    for path in written:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
