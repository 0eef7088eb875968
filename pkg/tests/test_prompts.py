"""Prompt assets and placeholder rendering."""
from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from protrain.prompts import (
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


def test_placeholder_inventory():
    assert placeholders(CURATION_SYSTEM) == frozenset()
    assert placeholders(CURATION_USER) == {"text", "annotation_info"}
    assert placeholders(CASCADE_USER) == {"ground_truth", "transcribed_text"}
    assert placeholders(AUDIO_CHAT_USER) == {"ground_truth"}
    assert placeholders(JUDGE_GRADE_PROMPT) == {
        "ground_truth",
        "reference_suggestion",
        "ai_suggestion",
    }
    assert placeholders(JUDGE_PAIRWISE_PROMPT) == {
        "ground_truth",
        "reference_suggestion",
        "ai_suggestion_A",
        "ai_suggestion_B",
    }


def test_fill_substitutes_every_placeholder():
    text = fill(CASCADE_USER, ground_truth="a b", transcribed_text="a c")
    assert "{ground_truth}" not in text
    assert "{transcribed_text}" not in text
    assert "a b" in text and "a c" in text


def test_fill_rejects_missing_bindings():
    with pytest.raises(TemplateError):
        fill(CASCADE_USER, ground_truth="a b")


def test_fill_rejects_unused_bindings():
    with pytest.raises(TemplateError):
        fill(AUDIO_CHAT_USER, ground_truth="a b", transcribed_text="a c")


def test_fill_does_not_rescan_substituted_values():
    # braces inside values stay literal; JSON payloads embed cleanly
    out = fill(CURATION_USER, text="{weird}", annotation_info='{"x": ["B"]}')
    assert "{weird}" in out
    assert '{"x": ["B"]}' in out


def test_audio_markers_are_literal():
    assert "<example_audio_input>" in AUDIO_CHAT_USER
    assert "<audio_input>" in AUDIO_CHAT_USER
    out = fill(AUDIO_CHAT_USER, ground_truth="a b")
    assert "<audio_input>" in out


def test_one_shot_demonstrations_are_embedded():
    assert "you're joking me sir the other managed to articulate" in CASCADE_USER.lower()
    assert "word: articulate" in CASCADE_USER
    assert "No Problem" in AUDIO_CHAT_SYSTEM or "No Problem" in AUDIO_CHAT_USER
    assert "No error" in CURATION_SYSTEM
    assert '"there": ["DH, err, s", "EH", "R"]' in CURATION_SYSTEM


def test_curation_user_keeps_spacing_quirks():
    # the second format line omits the space after the word on purpose
    assert "word2[(Issue:" in CURATION_USER


def test_judge_prompts_request_bracketed_verdicts():
    assert "[[" in JUDGE_GRADE_PROMPT
    assert "[[A]]" in JUDGE_PAIRWISE_PROMPT
    assert "[[C]]" in JUDGE_PAIRWISE_PROMPT


_VALUE = st.from_regex(r"[A-Za-z0-9 .,']{1,30}", fullmatch=True)


@given(a=_VALUE, b=_VALUE, c=_VALUE, d=_VALUE)
def test_fill_is_injective_on_plain_values(a, b, c, d):
    left = fill(CASCADE_USER, ground_truth=a, transcribed_text=b)
    right = fill(CASCADE_USER, ground_truth=c, transcribed_text=d)
    if (a, b) != (c, d):
        assert left != right
    else:
        assert left == right
