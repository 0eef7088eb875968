"""Delivery acceptance gate: one test per criterion, one verdict line each.

Every test computes its outcome first, prints a single grepable
"criterion NN PASS/FAIL" line, then asserts. Stated tolerances and runtime
budgets are enforced inside the test bodies.
"""
from __future__ import annotations

import json
import random
import time
from fractions import Fraction

import httpx
from click.testing import CliRunner

from conftest import (
    BARE_RECORDS_FOUR,
    BARE_RECORDS_ONE,
    BARE_RECORDS_SIX,
    BARE_RECORDS_TWO,
    BRACKETED_JOKING_RAW,
    CASCADE_EXAMPLE_OUTPUT,
    INLINE_FIVE_RECORDS,
    asr_body,
    chat_body,
    make_wav,
    mock_gateway,
    write_annotation_file,
    write_manifest,
)
from oracles import (
    detection_counts,
    edit_distance_wer,
    lcs_f1,
    naive_bleu2,
    overlap_f1,
)
from protrain.annotations import verify_curation_consistency
from protrain.cli import main as cli_main
from protrain.config import build_system, load_config
from protrain.feedback import (
    ResponseFormat,
    Unparseable,
    parse_ground_truth_bracketed,
    parse_response,
)
from protrain.gateway import ModelGateway
from protrain.metrics import (
    OneHotEmbedder,
    aggregate,
    bleu2,
    f1_score,
    percent,
    rouge_l,
    score_detection,
    semantic_f1,
    wer,
)
from protrain.pipelines import (
    GradeResult,
    PairwiseResult,
    extract_grade,
    extract_pairwise,
    run_benchmark,
    summarize_pairwise,
)


def _verdict(number: int, label: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number:02d} {'PASS' if ok else 'FAIL'}: {label}"
    if detail and not ok:
        line += f" [{detail}]"
    print(line)
    assert ok, line


def test_criterion_01_f1_arithmetic_reproduction():
    started = time.perf_counter()
    high = percent(f1_score(0.489, 0.877))
    low = percent(f1_score(0.538, 0.178))
    elapsed = time.perf_counter() - started
    ok = elapsed < 1.0 and high == 62.8 and low == 26.8
    _verdict(
        1,
        "harmonic mean of (53.8, 17.8) -> 26.8 and (48.9, 87.7) -> 62.8 "
        "after 1-decimal rounding, <1 s",
        ok,
        detail=f"got {low} and {high} in {elapsed:.3f}s",
    )


def test_criterion_02_detection_oracle_equivalence():
    rng = random.Random(20260818)
    vocab = ["the", "bow", "of", "canoe", "there", "came", "no", "promise"]
    oov = ["zephyr", "quartz", "plinth", "THE", "Bow"]
    started = time.perf_counter()
    disagreements = 0
    instances = 0
    for _ in range(1200):
        canonical = [
            (rng.choice(vocab), rng.random() < 0.4)
            for _ in range(rng.randint(1, 8))
        ]
        predicted = [
            rng.choice(vocab + oov) for _ in range(rng.randint(0, 10))
        ]
        counts = score_detection(canonical, predicted)
        got = (counts.tp, counts.fp, counts.fn, counts.tn,
               counts.extra_words, counts.predicted_total)
        if got != detection_counts(canonical, predicted):
            disagreements += 1
        instances += 1
    elapsed = time.perf_counter() - started
    ok = instances >= 1000 and disagreements == 0 and elapsed < 10.0
    _verdict(
        2,
        f"detection matches position-assignment oracle on {instances} random "
        "instances (<=8 words, OOV included), zero disagreements, <10 s",
        ok,
        detail=f"{disagreements} disagreements in {elapsed:.2f}s",
    )


def test_criterion_03_ewr_property_suite():
    rng = random.Random(5)
    vocab = ["the", "men", "stared", "into", "each", "other", "face", "bow"]
    failures = []
    for trial in range(200):
        canonical = [
            (rng.choice(vocab), rng.random() < 0.5)
            for _ in range(rng.randint(1, 8))
        ]
        words = [w for w, _ in canonical]
        # all predictions drawn from canonical positions: EWR must be 0
        matched = rng.sample(words, k=rng.randint(0, len(words)))
        if aggregate([score_detection(canonical, matched)]).ewr != 0.0:
            failures.append(f"trial {trial}: nonzero EWR on matched predictions")
        # plant k out-of-vocabulary words among M predictions: EWR = k/M
        k = rng.randint(1, 5)
        planted = matched + [f"oovword{j}" for j in range(k)]
        rng.shuffle(planted)
        m = len(planted)
        summary = aggregate([score_detection(canonical, planted)])
        if summary.ewr != k / m:
            failures.append(f"trial {trial}: EWR {summary.ewr} != {k}/{m}")
    ok = not failures
    _verdict(
        3,
        "EWR is 0 for all-matched predictions and exactly k/M with k planted "
        "out-of-vocabulary words among M predictions",
        ok,
        detail="; ".join(failures[:3]),
    )


def test_criterion_04_text_metric_oracles():
    rng = random.Random(77)
    vocab = ["practice", "the", "vowel", "sound", "as", "in", "men", "this",
             "word", "short"]

    def sentence(max_len: int) -> str:
        return " ".join(rng.choice(vocab) for _ in range(rng.randint(1, max_len)))

    pairs = [(sentence(7), sentence(7)) for _ in range(600)]
    max_bleu_delta = max_rouge_delta = 0.0
    wer_mismatches = 0
    for cand, ref in pairs:
        cand_toks, ref_toks = cand.split(), ref.split()
        max_bleu_delta = max(
            max_bleu_delta, abs(bleu2(cand, ref) - naive_bleu2(cand_toks, ref_toks))
        )
        max_rouge_delta = max(
            max_rouge_delta, abs(rouge_l(cand, ref) - lcs_f1(cand_toks, ref_toks))
        )
        if wer(ref, cand) != edit_distance_wer(ref_toks, cand_toks):
            wer_mismatches += 1
    ok = (
        len(pairs) >= 500
        and max_bleu_delta <= 1e-9
        and max_rouge_delta <= 1e-9
        and wer_mismatches == 0
    )
    _verdict(
        4,
        f"bleu2/rouge_l agree with naive enumeration on {len(pairs)} pairs "
        "within 1e-9; wer matches the edit-distance oracle exactly",
        ok,
        detail=(
            f"bleu delta {max_bleu_delta:.2e}, rouge delta {max_rouge_delta:.2e}, "
            f"{wer_mismatches} wer mismatches"
        ),
    )


def test_criterion_05_semantic_similarity_stub_oracle():
    rng = random.Random(99)
    vocab = ["lengthen", "the", "vowel", "round", "your", "lips", "tongue",
             "between", "teeth", "voiced"]

    def sentence() -> str:
        return " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 8)))

    pairs = [(sentence(), sentence()) for _ in range(250)]
    embedder = OneHotEmbedder()
    max_delta = max(
        abs(semantic_f1(cand, ref, embedder) - overlap_f1(cand.split(), ref.split()))
        for cand, ref in pairs
    )
    ok = len(pairs) >= 200 and max_delta <= 1e-9
    _verdict(
        5,
        f"one-hot semantic_f1 equals unigram-overlap F1 on {len(pairs)} pairs "
        "within 1e-9",
        ok,
        detail=f"max delta {max_delta:.2e}",
    )


def test_criterion_06_parser_golden_suite():
    def check(name, fn):
        try:
            fn()
            return None
        except AssertionError as exc:
            return f"{name}: {exc}"
        except Exception as exc:  # parse crash counts as a failure too
            return f"{name}: {type(exc).__name__}: {exc}"

    def expect_words(text, fmt, words):
        response = parse_response(text, fmt)
        assert response.flagged_words == tuple(words), response.flagged_words

    def expect_unparseable_everywhere(text):
        for fmt in ResponseFormat:
            try:
                parse_response(text, fmt)
            except Unparseable:
                continue
            raise AssertionError(f"{fmt} accepted degenerate reply")

    bracketed = parse_ground_truth_bracketed(BRACKETED_JOKING_RAW)
    five = ("joking", "sir", "other", "managed", "articulate")
    cases = [
        ("cascade example output", lambda: expect_words(
            CASCADE_EXAMPLE_OUTPUT, ResponseFormat.EXHAUSTIVE_PER_WORD, ["articulate"])),
        ("inline five records", lambda: expect_words(
            INLINE_FIVE_RECORDS, ResponseFormat.FLAGGED_ONLY, five)),
        ("bare record x1", lambda: expect_words(
            BARE_RECORDS_ONE, ResponseFormat.FLAGGED_ONLY, ["stared"])),
        ("bare record x2", lambda: expect_words(
            BARE_RECORDS_TWO, ResponseFormat.FLAGGED_ONLY, ["stared", "other's"])),
        ("bare record x4", lambda: expect_words(
            BARE_RECORDS_FOUR, ResponseFormat.FLAGGED_ONLY,
            ["the", "stared", "into", "other's"])),
        ("bare record x6", lambda: expect_words(
            BARE_RECORDS_SIX, ResponseFormat.FLAGGED_ONLY,
            ["men", "stared", "into", "each", "other's", "face"])),
        ("bracketed ground truth words", lambda: (
            None if bracketed.flagged_words == five
            else (_ for _ in ()).throw(AssertionError(bracketed.flagged_words)))),
        ("bracketed pair counts", lambda: (
            None if [i.pair_count for i in bracketed.items] == [3, 1, 2, 1, 2]
            else (_ for _ in ()).throw(AssertionError("pair counts off")))),
        ("No Problem marker", lambda: expect_words(
            "No Problem", ResponseFormat.FLAGGED_ONLY, [])),
        ("No error marker", lambda: expect_words(
            "No error", ResponseFormat.GROUND_TRUTH_BRACKETED, [])),
        ("degenerate 'mm'", lambda: expect_unparseable_everywhere("mm")),
        ("degenerate 'male'", lambda: expect_unparseable_everywhere("male")),
    ]
    failures = [msg for msg in (check(n, fn) for n, fn in cases) if msg]
    passed = len(cases) - len(failures)
    _verdict(
        6,
        f"parser golden suite: {passed}/{len(cases)} appendix-style fixtures "
        "parse to the expected words and counts",
        not failures,
        detail="; ".join(failures[:3]),
    )


def test_criterion_07_annotation_labeling(canoe_utterance):
    flagged = {w.surface for w in canoe_utterance.words if w.mispronounced}
    counts = {w.surface: w.error_count for w in canoe_utterance.words if w.mispronounced}
    expected_counts = {"there": 1, "from": 2, "the": 2, "bow": 1, "of": 3, "canoe": 1}
    ok = (
        flagged == {"there", "from", "the", "bow", "of", "canoe"}
        and counts == expected_counts
    )
    _verdict(
        7,
        "example utterance flags exactly {there, from, the, bow, of, canoe} "
        "with per-word error counts ('of' -> 3)",
        ok,
        detail=f"flagged {sorted(flagged)}, counts {counts}",
    )


def test_criterion_08_curation_consistency(joking_utterance):
    intact = parse_ground_truth_bracketed(BRACKETED_JOKING_RAW)
    removed = parse_ground_truth_bracketed(
        BRACKETED_JOKING_RAW.replace(
            ' [(Issue: An extra \\"AH\\" sound was added, indicating an addition error) '
            "(Suggestion: Avoid adding extra vowel sounds after completing the word)]",
            "",
        )
    )
    added = parse_ground_truth_bracketed(
        BRACKETED_JOKING_RAW.replace(
            "\\nmanaged [(Issue:",
            "\\nmanaged [(Issue: extra) (Suggestion: extra)] [(Issue:",
        )
    )
    intact_report = verify_curation_consistency(joking_utterance, intact)
    removed_report = verify_curation_consistency(joking_utterance, removed)
    added_report = verify_curation_consistency(joking_utterance, added)
    ok = (
        intact_report.passed
        and removed_report.mismatched == (("joking", 3, 2),)
        and added_report.mismatched == (("managed", 1, 2),)
    )
    _verdict(
        8,
        "consistency check passes the unmodified fixture and flags "
        "removed/added issue-suggestion pairs as pair-count mismatches",
        ok,
    )


_KEYS = ("alpha", "bravo", "charlie", "delta", "echo",
         "foxtrot", "golf", "hotel", "india", "juliet")

_REPLAY_TOML = """
[profiles.listener]
kind = "asr"
base_url = "https://models.test/v1"
model = "listener-1"

[profiles.tutor]
kind = "chat"
base_url = "https://models.test/v1"
model = "tutor-1"

[systems.cascade]
flavor = "cascade"
asr = "listener"
chat = "tutor"

[service]
manifest = "data/manifest.jsonl"
data_dir = "data"
"""


def test_criterion_09_end_to_end_replay_determinism(tmp_path):
    data = tmp_path / "data"
    (data / "wav").mkdir(parents=True)
    clips: dict[bytes, str] = {}
    rows = []
    for i, key in enumerate(_KEYS):
        text = f"{key} sailors drift near shore"
        info = {w: ["AH"] for w in text.split()}
        info[key] = ["AH, EH, s"]
        write_annotation_file(data / "ann" / f"{key}.json", text, info)
        clip = make_wav(100 + i)
        (data / "wav" / f"{key}.wav").write_bytes(clip)
        clips[clip] = text
        rows.append(
            {"id": f"u{i:02d}", "audio": f"wav/{key}.wav", "annotation": f"ann/{key}.json"}
        )
    write_manifest(data / "manifest.jsonl", rows)
    config_path = tmp_path / "run.toml"
    config_path.write_text(_REPLAY_TOML)

    def handler(request: httpx.Request) -> httpx.Response:
        body = request.read()
        if request.url.path.endswith("/audio/transcriptions"):
            for clip, text in clips.items():
                if clip in body:
                    return httpx.Response(200, json=asr_body(text))
            raise AssertionError("transcription request for an unknown clip")
        prompt = json.dumps(json.loads(body)["messages"])
        for key in _KEYS:
            if key in prompt:
                reply = (
                    f"word: {key}\n"
                    "issue: The first vowel drifted\n"
                    "suggestion: Keep the vowel steady"
                )
                return httpx.Response(200, json=chat_body(reply))
        raise AssertionError("chat request for an unknown sentence")

    # build the cassette once, through the same code paths the CLI uses
    config = load_config(config_path)
    tape = tmp_path / "tape.jsonl"
    from protrain.annotations import load_manifest, load_utterance

    utterances = [
        load_utterance(e, base_dir=data) for e in load_manifest(data / "manifest.jsonl")
    ]
    recorder = mock_gateway(handler, mode="record", cassette_path=tape)
    run_benchmark(
        build_system(config, "cascade", recorder), utterances, audio_base=data
    )

    credentials_needed = [
        p.name for p in config.profiles.values() if p.credential_env is not None
    ]

    runner = CliRunner()
    started = time.perf_counter()
    outputs = []
    for run in ("one", "two"):
        out_dir = tmp_path / run
        result = runner.invoke(
            cli_main,
            [
                "bench",
                "--config", str(config_path),
                "--out", str(out_dir),
                "--replay", str(tape),
            ],
        )
        assert result.exit_code == 0, result.output
        outputs.append((out_dir / "cascade.json").read_bytes())
    elapsed = time.perf_counter() - started

    # replay mode builds no HTTP client at all: offline by construction
    replayer = ModelGateway.replay(tape)
    offline_report = run_benchmark(
        build_system(config, "cascade", replayer), utterances, audio_base=data
    )
    no_client = replayer._client_obj is None

    ok = (
        len(utterances) == 10
        and outputs[0] == outputs[1]
        and json.loads(outputs[0]) == offline_report
        and elapsed < 30.0
        and no_client
        and not credentials_needed
    )
    _verdict(
        9,
        "two `bench --replay` runs over a 10-utterance cassette are "
        "byte-identical, <30 s, no network client, no credentials",
        ok,
        detail=f"identical={outputs[0] == outputs[1]}, {elapsed:.2f}s, "
               f"client_built={not no_client}, credentials={credentials_needed}",
    )


def test_criterion_10_judge_parsing():
    grade_ok = all(extract_grade(f"The verdict: [[{i}]]") == i for i in range(1, 6))
    pair_ok = (
        extract_pairwise("[[A]]") == "A"
        and extract_pairwise("[[B]]") == "B"
        and extract_pairwise("[[C]]") == "Tie"
    )

    def rates_sum_to_one(verdicts: list[str | None]) -> bool:
        results = [
            PairwiseResult(f"u{i}", v, raw=v or "") for i, v in enumerate(verdicts)
        ]
        summary = summarize_pairwise(results)
        decided = summary["wins"] + summary["losses"] + summary["ties"]
        if decided == 0:
            return summary["win_rate"] is None
        exact = (
            Fraction(summary["wins"], decided)
            + Fraction(summary["losses"], decided)
            + Fraction(summary["ties"], decided)
        )
        return exact == 1 and summary["win_rate"] == summary["wins"] / decided

    synthetic = [
        ["A"] * 4 + ["B"] * 2 + ["Tie"] * 2,          # power-of-two split
        ["A", "B", "Tie", None, "A", "Tie", "B"],     # with an unparseable row
        ["Tie"] * 3,
        [None, None],
    ]
    sums_ok = all(rates_sum_to_one(v) for v in synthetic)
    grades_roundtrip = [
        GradeResult(f"g{i}", extract_grade(f"[[{i}]]"), f"[[{i}]]") for i in range(1, 6)
    ]
    grade_values_ok = [g.grade for g in grades_roundtrip] == [1, 2, 3, 4, 5]

    ok = grade_ok and pair_ok and sums_ok and grade_values_ok
    _verdict(
        10,
        "[[1]]..[[5]] and [[A]]/[[B]]/[[C]] all parse; win/loss/tie rates "
        "sum to exactly 1 on synthetic verdict lists",
        ok,
    )
