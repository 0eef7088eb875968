"""Word-level pronunciation feedback: benchmark, curation, and serving."""

__version__ = "0.1.0"

from .annotations import (
    AnnotationDocument,
    ConsistencyReport,
    EventKind,
    MalformedDocument,
    MalformedEntry,
    PhonemeEvent,
    Utterance,
    WordAnnotation,
    WordLabel,
    derive_word_labels,
    normalize_word,
    parse_annotation_entry,
    serialize_annotation_entry,
    verify_curation_consistency,
)
from .feedback import (
    FeedbackItem,
    FeedbackResponse,
    ResponseFormat,
    Unparseable,
    parse_response,
    serialize,
)
from .metrics import (
    DetectionCounts,
    DetectionSummary,
    MetricReport,
    SuggestionScores,
    aggregate,
    bleu2,
    f1_score,
    percent,
    rouge_l,
    score_detection,
    score_suggestions,
    semantic_f1,
    wer,
)
from .gateway import (
    Cassette,
    CassetteMiss,
    EndpointProfile,
    GatewayError,
    ModelGateway,
    TEMPLATES,
)
from .pipelines import (
    AudioChatSystem,
    CascadeSystem,
    StoredOutputs,
    curate_corpus,
    curate_utterance,
    extract_grade,
    extract_pairwise,
    run_benchmark,
)

__all__ = [
    "__version__",
    "AnnotationDocument",
    "ConsistencyReport",
    "EventKind",
    "MalformedDocument",
    "MalformedEntry",
    "PhonemeEvent",
    "Utterance",
    "WordAnnotation",
    "WordLabel",
    "derive_word_labels",
    "normalize_word",
    "parse_annotation_entry",
    "serialize_annotation_entry",
    "verify_curation_consistency",
    "FeedbackItem",
    "FeedbackResponse",
    "ResponseFormat",
    "Unparseable",
    "parse_response",
    "serialize",
    "DetectionCounts",
    "DetectionSummary",
    "MetricReport",
    "SuggestionScores",
    "aggregate",
    "bleu2",
    "f1_score",
    "percent",
    "rouge_l",
    "score_detection",
    "score_suggestions",
    "semantic_f1",
    "wer",
    "Cassette",
    "CassetteMiss",
    "EndpointProfile",
    "GatewayError",
    "ModelGateway",
    "TEMPLATES",
    "AudioChatSystem",
    "CascadeSystem",
    "StoredOutputs",
    "curate_corpus",
    "curate_utterance",
    "extract_grade",
    "extract_pairwise",
    "run_benchmark",
]
