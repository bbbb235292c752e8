"""Batch exporter of sentence and contextual-word encodings into the
assocbias interchange JSONL format."""

from .backends import ElmoBackend, ModelLoadError, TokenizationError, TransformersBackend, load_backend
from .export import (
    ExportFailure,
    ExportResult,
    SpecFile,
    SpecItem,
    encode_cword,
    encode_sentence,
    export_batch,
    load_spec_items,
    record_line,
)
from .rules import (
    EncodedText,
    ModelRule,
    SpanOutOfRange,
    SpanTokenizationMismatch,
    cword_vector,
    rule_for,
    sentence_vector,
)

__version__ = "0.1.0"
