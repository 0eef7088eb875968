"""Prompt template assets and placeholder substitution.

Template texts are frozen verbatim, including their one-shot demonstrations;
downstream parsers are calibrated against these exact layouts, so do not
reflow or "fix" them. Placeholders use ``{name}`` syntax; angle-bracket
tokens such as ``<audio_input>`` are literal markers for audio attachments
and are left untouched by rendering.
"""
from __future__ import annotations

import re

__all__ = [
    "TemplateError",
    "fill",
    "placeholders",
    "CURATION_SYSTEM",
    "CURATION_USER",
    "CASCADE_SYSTEM",
    "CASCADE_USER",
    "AUDIO_CHAT_SYSTEM",
    "AUDIO_CHAT_USER",
    "JUDGE_GRADE_PROMPT",
    "JUDGE_PAIRWISE_PROMPT",
]

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class TemplateError(ValueError):
    """Raised when rendering a template with missing or unused bindings."""


def placeholders(template: str) -> frozenset[str]:
    """Return the set of ``{name}`` placeholders appearing in *template*."""
    return frozenset(_PLACEHOLDER_RE.findall(template))


def fill(template: str, **values: str) -> str:
    """Substitute every ``{name}`` placeholder in *template*.

    Every placeholder must be bound and every binding must be used; this
    keeps renderings injective in the bound values and catches typos in
    either direction.
    """
    needed = placeholders(template)
    given = set(values)
    missing = needed - given
    if missing:
        raise TemplateError(f"unbound placeholders: {sorted(missing)}")
    unused = given - needed
    if unused:
        raise TemplateError(f"unused bindings: {sorted(unused)}")
    # Substitution scans only the template, so braces inside the inserted
    # values are never re-interpreted as placeholders.
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)


CURATION_SYSTEM = """You are a phonetics expert. I will provide text and annotations of a spoken utterance. Your task is to identify any pronunciation errors and suggest improvements. Use the following format for each word that contains a pronunciation error:

word [(Issue: Explanation) (Suggestion: How to improve using ARPAbet symbols)] [(Issue: Explanation) (Suggestion: How to improve using ARPAbet symbols)] [(Issue: Explanation) (Suggestion: How to improve using ARPAbet symbols)]...

Below is the phonetic annotation for the utterance. Each word includes the phonemes it contains and may have errors annotated as:
- Correct pronunciation: No changes in the forced-alignment labels.
- Substitution error: Format is 'CPL,PPL,s' (Correct Phoneme Label, Perceived Phoneme Label, Substitution). If it is hard to judge, 'err' is used. If there is a foreign accent, mark the perceived phoneme with a '*'.
- Addition error: Format is 'sil,PPL,a' (Silence, Perceived Phoneme Label, Addition).
- Deletion error: Format is 'CPL,sil,d' (Correct Phoneme Label, Silence, Deletion).

Important: You must strictly follow the annotations provided in the "annotation_info" field. Only report the errors explicitly indicated in the annotations. Do not add or remove errors based on assumptions or external knowledge.

Output Format:
- Only plain text without any Markdown, JSON, or code formatting symbols.
- Avoid extra newlines or spaces.
- If there are no errors, respond with exactly: No error (without quotes or additional characters).

Example input:
{
    "text": "But there came no promise from the bow of the canoe",
    "annotation_info": {
        "but": ["B", "AH", "T"],
        "there": ["DH, err, s", "EH", "R"],
        "came": ["K", "EY", "M"],
        "no": ["N", "OW"],
        "promise": ["P", "R", "AA", "M", "AH", "S"],
        "from": ["F", "R", "AH, AO, s", "M, N, s"],
        "the": ["DH, D, s", "AH, EH, s"],
        "bow": ["B", "OW, AW, s"],
        "of": ["sil, err, a", "AH, AO, s", "V, F, s"],
        "canoe": ["K", "AH", "N", "UW", "sil, IY, a"]
    }
}

Example output:
there [(Issue: "DH" was substituted with an unclear phoneme, indicating a substitution error) (Suggestion: Practice producing /DH/ by contrasting it with /D/ using ARPAbet words like "THE" (/DH AH/) vs. "DO" (/D UW/))]
from [(Issue: "AH" was replaced with "AO", indicating a vowel substitution) (Suggestion: Practice /AH/ vs. /AO/ distinction with pairs like "CUT" (/K AH T/) vs. "CAUGHT" (/K AO T/))] [(Issue: "M" was replaced with "N", indicating a consonant substitution) (Suggestion: Practice bilabial nasal /M/ versus alveolar nasal /N/ using "SUM" (/S AH M/) vs. "SUN" (/S AH N/))]
the [(Issue: "DH" was replaced with "D", indicating a substitution error) (Suggestion: Strengthen the articulation of /DH/ by comparing it with /D/ in words like "THIS" (/DH IH S/) vs. "DIS" (/D IH S/))]
bow [(Issue: "OW" was replaced with "AW", indicating a substitution error) (Suggestion: Practice diphthongs /OW/ and /AW/ using pairs like "BOW" (/B OW/) vs. "BOUGH" (/B AW/))]
of [(Issue: An extra phoneme was added, suggesting an insertion error) (Suggestion: Focus on avoiding unnecessary vowel insertions by practicing smooth transitions between words)] [(Issue: "AH" was replaced with "AO", indicating a vowel substitution) (Suggestion: Practice /AH/ and /AO/ distinction using "HOT" (/HH AA T/) vs. "HAWED" (/HH AO D/))] [(Issue: "V" was replaced with "F", indicating a consonant substitution) (Suggestion: Practice voiced /V/ versus voiceless /F/ using "VAN" (/V AE N/) vs. "FAN" (/F AE N/))]
canoe [(Issue: An extra "IY" was added, suggesting an insertion error) (Suggestion: Practice avoiding vowel insertion using controlled phrases, focusing on words like "CANOE" (/K AH N UW/))]"""

CURATION_USER = """Here is the phonetic annotation for an utterance:
"text": "{text}"
"annotation_info": {annotation_info}

Please identify the pronunciation errors and suggest improvements in the specified format: word1 [(Issue: Explanation) (Suggestion: How to improve using ARPAbet symbols)] [(Issue: Explanation) (Suggestion: How to improve using ARPAbet symbols)] [(Issue: Explanation) (Suggestion: How to improve using ARPAbet symbols)]...
word2[(Issue: Explanation) (Suggestion: How to improve using ARPAbet symbols)] [(Issue: Explanation) (Suggestion: How to improve using ARPAbet symbols)] [(Issue: Explanation) (Suggestion: How to improve using ARPAbet symbols)]...
...
For each word in "annotation_info", ensure that the number of [(Issue)(Suggestion)] pairs exactly matches the number of errors indicated for that word in "annotation_info". There must be no extra or missing pairs.
If there are no pronunciation errors, output "No error" without any extra words.
You must strictly follow the errors explicitly provided in the "annotation_info" field. Do not add or remove errors based on assumptions or external knowledge."""

CASCADE_SYSTEM = """You are a phonetics expert tasked with identifying pronunciation differences between the provided Ground Truth
and the corresponding pronunciation. Analyze each word in the Ground Truth, identify pronunciation issues,
and offer suggestions for improvement."""

CASCADE_USER = """You are a phonetics expert. Your task is to compare the provided Transcribed Text with the Ground Truth transcription.
Identify any pronunciation differences for each word in the Ground Truth based on the transcription and provide specific
suggestions for improvement.

Input:
Ground Truth: {ground_truth}
Transcribed Text: {transcribed_text}

Output Format:
word: <word_in_ground_truth>
issue: <issues>
suggestion: <suggestions>
...

Output Rules:
1. Analyze each word in the Ground Truth and compare it with the corresponding word in the Transcribed Text.
2. For each word in the Ground Truth, output:
   word: <word_in_ground_truth>
   issue: <issues> (if there are pronunciation issues)
   suggestion: <suggestions> (if there are pronunciation issues)
   If there are no issues with a word, output:
   word: <word_in_ground_truth>
   issue: None
   suggestion: None
3. If a word has multiple issues, combine them into a single issue line and provide a single combined suggestion
   for correction.
4. Do not include any additional commentary outside of the analysis and suggestions.
5. Use ARPAbet phonetic symbols to describe the pronunciation issues.

Example Input:
Ground Truth: you're joking me sir the other managed to articulate
Transcribed Text: your soking me ser the other managed to articulate

Example Output:
word: you're
issue: None
suggestion: None
...
word: articulate
issue: "R" was replaced with a foreign-accented "R*", indicating a substitution error. "EY" was replaced with "EH", indicating a substitution error.
suggestion: Practice the American /R/ sound as in "RED" (/R EH D/) emphasizing the retroflex position of the tongue. Practice the distinction between /EY/ as in "DATE" (/D EY T/) and /EH/ as in "BET" (/B EH T/)"""

AUDIO_CHAT_SYSTEM = """You are a phonetics expert tasked with identifying pronunciation differences between the provided Ground Truth and the corresponding pronunciation.
Analyze each word in the Ground Truth, identify pronunciation issues, and offer suggestions for improvement."""

AUDIO_CHAT_USER = """You are a phonetics expert. Your task is to detect mispronouciation based on given Ground Truth and Audio.
This is an example of the format you should use and some output rules you should follow.

Output Format:
word: <one_word_in_ground_truth> issue: <issues> suggestion: <suggestions>
word: <one_word_in_ground_truth> issue: <issues> suggestion: <suggestions>
...

Output Rules:
1. Analyze each word in the Ground Truth and compare it with the pronunciation in the actual audio.
2. If the word in the Ground Truth has one or more pronunciation issues based on the audio:
    a. List the word from the Ground Truth.
    b. Combine all issues into a single line under "issue".
    c. Provide a single combined suggestion for correcting the issues using ARPAbet phonetic symbols.
3. If no errors are found in any of the Ground Truth words, output "No Problem". But there is a high probability of pronunciation problems.
4. Do not output anything except for the words with pronunciation issues or "No Problem".
5. Ensure the analysis focuses on the pronunciation of Ground Truth words as they appear in the audio.
6. Do not include any additional commentary outside of the analysis and suggestions.
7. Use ARPAbet symbols to describe phonetic issues.

Here is an example of how you should analyze pronunciation based on the audio and the Ground Truth text.

Input:
Ground Truth: "you're joking me sir the other managed to articulate"
Audio: <example_audio_input>
Output:
word: joking issue: "JH" was replaced with "ZH", indicating a substitution error. An extra "G" sound was added, indicating an addition error. An extra "AH" sound was added, indicating an addition error. suggestion: Practice the difference between /JH/ as in "JOKE" (/JH OW K/) and /ZH/ as in "MEASURE" (/M EH ZH ER/). Focus on stopping after the /NG/ as in "KING" (/K IH NG/) without additional sounds. Avoid adding extra vowel sounds after completing the word.
word: sir issue: Unclear pronunciation, "ER" perceived with uncertainty suggestion: Practice /ER/ as in "SIR" (/S ER/) to add clarity
word: other issue: "DH" was replaced with "Z", indicating a substitution error. Unclear pronunciation, "ER" perceived with uncertainty. suggestion: Practice unvoiced /DH/ as in "THIS" (/DH IH S/) instead of voiced consonant sounds like /Z/. Practice /ER/ as in "HER" (/HH ER/) for more distinct articulation.
word: managed issue: "JH" was replaced with "ZH", indicating a substitution error suggestion: Practice the distinction between /JH/ as in "JUDGE" (/JH AH JH/) and /ZH/ as in "VISION" (/V IH ZH UH N/)
word: articulate issue: "R" was replaced with a foreign-accented "R*", indicating a substitution error. "EY" was replaced with "EH", indicating a substitution error. suggestion: Practice the American /R/ sound as in "RED" (/R EH D/) emphasizing the retroflex position of the tongue. Practice the distinction between /EY/ as in "DATE" (/D EY T/) and /EH/ as in "BET" (/B EH T/)

Input:
Ground Truth: {ground_truth}
Audio: <audio_input>
Output:"""

JUDGE_PAIRWISE_PROMPT = """You are a fair and unbiased evaluator specializing in assessing AI-generated feedback for second language learners' speech.
Your role is to compare two AI-generated suggestions and determine which one is better in helping an L2 learner improve pronunciation, fluency, and grammar.
(Instruction)
Carefully compare the AI-generated suggestions from two different methods.
Determine which response is better based on:
**Evaluation Criteria:**
    - **Relevance:** Which suggestion more accurately addresses pronunciation, fluency, and grammatical errors?
    - **Accuracy:** Which feedback is more correct based on the learner's speech?
    - **Comprehensiveness:** Which response covers more key aspects (pronunciation, intonation, fluency, grammar)?
    - **Clarity & Usefulness:** Which suggestion is clearer and easier for an L2 learner to understand?
    - **Granularity:** Which feedback is more specific and detailed rather than vague or overly general?
    - **Comparison to Reference Suggestion:** Which suggestion is closer to a high-quality reference?
**Decision Format:**
    - Use `[[A]]` if Method A is better.
    - Use `[[B]]` if Method B is better.
    - Use `[[C]]` if both are equally good.
    [The Start of Ground Truth]
    {ground_truth}
    [The End of Ground Truth]
    [The Start of Reference Suggestion]
    {reference_suggestion}
    [The End of Reference Suggestion]
    [The Start of Method A Suggestion]
    {ai_suggestion_A}
    [The End of Method A Suggestion]
    [The Start of Method B Suggestion]
    {ai_suggestion_B}
    [The End of Method B Suggestion]"""

JUDGE_GRADE_PROMPT = """You are a fair and unbiased evaluator specializing in assessing AI-generated feedback for second language learners' speech.
Your role is to evaluate the quality of AI-generated suggestions based on:
    - Ground Truth (GT): The actual text the L2 learner was reading.
    - Reference Suggestion (Ref Sug.): A high-quality example of an ideal suggestion.
    - AI-generated Suggestion: The assistant’s response to the L2 learner’s speech.
You will analyze the AI-generated suggestion and judge its quality by comparing it to both the Ground Truth and the Reference Suggestion.
(Instruction)
Carefully analyze the provided Ground Truth, Reference Suggestion, and AI-generated Suggestion.
Your evaluation should determine how effectively the assistant’s response helps the L2 learner improve their pronunciation, fluency, grammar, and overall language proficiency.
**Evaluation Criteria:**
    - **Relevance:** Does the response accurately address the learner’s pronunciation, fluency, and grammatical errors?
    - **Accuracy:** Is the feedback correct based on the learner's speech? Does it correctly identify mistakes?
    - **Comprehensiveness:** Does the response cover key aspects of improvement (pronunciation, intonation, fluency, grammar)?
    - **Clarity & Usefulness:** Is the suggestion clear and easy to understand for an L2 learner? Does it offer actionable advice?
    - **Granularity:** Is the feedback specific and detailed rather than vague or overly general?
    - **Comparison to Reference Suggestion:** How does the AI-generated suggestion compare to the high-quality reference? Is it similarly effective, more effective, or significantly worse?
**Scoring Rubric:**
    - **Poor (1):** The feedback is irrelevant, incorrect, or unhelpful. It fails to address key errors or provides misleading guidance.
    - **Fair (2):** The response partially addresses issues but is incomplete, inaccurate, or lacking in detail.
    - **Average (3):** The response adequately identifies errors and provides reasonably clear feedback.
    - **Good (4):** The response is well-aligned with the learner’s needs, offering accurate, clear, and actionable feedback.
    - **Excellent (5):** The response is highly effective, providing precise, insightful, and well-structured feedback.
**(Desired Output Format)**
Use `[[1]]`, `[[2]]`, `[[3]]`, `[[4]]`, or `[[5]]` to indicate your evaluation score under ‘Judgement’.
    [The Start of Ground Truth]
    {ground_truth}
    [The End of Ground Truth]
    [The Start of Reference Suggestion]
    {reference_suggestion}
    [The End of Reference Suggestion]
    [The Start of AI-generated Suggestion]
    {ai_suggestion}
    [The End of AI-generated Suggestion]"""
