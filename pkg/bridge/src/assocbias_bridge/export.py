"""Batch export: spec files in, interchange JSONL out.

The exporter talks to the consuming toolkit purely through its file
formats: it reads the four-set spec JSON schema and writes one
interchange record per (item, required level, model). Output ordering
is stable (specs in argument order; items in targ1, targ2, attr1, attr2
order; sentence before cword; models in argument order), so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .backends import EncoderBackend, TokenizationError
from .rules import (
    EncodedText,
    ModelRule,
    SpanOutOfRange,
    SpanTokenizationMismatch,
    cword_vector,
    rule_for,
    sentence_vector,
)

SET_KEYS = ("targ1", "targ2", "attr1", "attr2")


@dataclass(frozen=True)
class SpecItem:
    text: str
    focus_span: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class SpecFile:
    spec_id: str
    level: str
    items: tuple[SpecItem, ...]


def load_spec_items(data: bytes | str, spec_id: str = "") -> SpecFile:
    """Read the items of a spec file (schema: four sets with examples,
    optional level and per-set focus spans)."""
    doc = json.loads(data)
    if not isinstance(doc, dict):
        raise ValueError("spec file must be a JSON object")
    for key in SET_KEYS:
        if key not in doc:
            raise ValueError(f"missing key {key!r}")
    focus = doc.get("focus") or {}
    items: list[SpecItem] = []
    for key in SET_KEYS:
        examples = doc[key].get("examples")
        if not isinstance(examples, list) or not examples:
            raise ValueError(f"{key!r} has no examples")
        spans = focus.get(key) or [None] * len(examples)
        if len(spans) != len(examples):
            raise ValueError(f"focus spans for {key!r} do not align with its examples")
        for text, span in zip(examples, spans):
            text = unicodedata.normalize("NFC", text)
            items.append(SpecItem(text, tuple(span) if span is not None else None))
    return SpecFile(str(doc.get("id") or spec_id), str(doc.get("level", "word")), tuple(items))


@dataclass
class ExportFailure:
    model_id: str
    level: str
    text: str
    reason: str

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "level": self.level,
                "text": self.text, "reason": self.reason}


@dataclass
class ExportResult:
    lines: list[str] = field(default_factory=list)
    failures: list[ExportFailure] = field(default_factory=list)
    n_records: int = 0


def record_line(model_id: str, level: str, text: str,
                focus_span: Optional[tuple[int, int]], vector: np.ndarray) -> str:
    return json.dumps(
        {
            "model_id": model_id,
            "level": level,
            "text": text,
            "focus_span": list(focus_span) if focus_span is not None else None,
            "vector": [float(x) for x in vector],
        },
        ensure_ascii=False,
    )


class _CachingEncoder:
    """One forward pass per distinct text; sentence and cword records
    for the same sentence share it."""

    def __init__(self, backend: EncoderBackend):
        self.backend = backend
        self.rule: ModelRule = rule_for(backend.model_id, backend.family, backend.dim)
        self._cache: dict[str, EncodedText] = {}

    def encoded(self, text: str) -> EncodedText:
        if text not in self._cache:
            self._cache[text] = self.backend.encode(text)
        return self._cache[text]


def encode_sentence(backend: EncoderBackend, text: str) -> np.ndarray:
    """Sentence vector per the backend family's rule."""
    enc = _CachingEncoder(backend)
    return sentence_vector(enc.rule, enc.encoded(text))


def encode_cword(backend: EncoderBackend, text: str, focus_span: tuple[int, int]) -> np.ndarray:
    """Contextual-word vector (first subword piece) per the family's rule."""
    enc = _CachingEncoder(backend)
    return cword_vector(enc.rule, enc.encoded(text), focus_span)


def _levels_for(spec: SpecFile, item: SpecItem) -> list[tuple[str, Optional[tuple[int, int]]]]:
    levels: list[tuple[str, Optional[tuple[int, int]]]] = []
    if spec.level == "sentence":
        levels.append(("sentence", None))
        if item.focus_span is not None:
            levels.append(("cword", item.focus_span))
    elif spec.level == "cword":
        levels.append(("cword", item.focus_span))
    return levels


def export_batch(
    specs: Sequence[SpecFile],
    backends: Sequence[EncoderBackend],
    out_path: Optional[str] = None,
) -> ExportResult:
    """Encode every (item, required level, model) and emit JSONL.

    Sentence-level specs also yield cword records for items carrying a
    focus span (the same sentences are evaluated at both levels
    downstream); word-level specs are context-free and are skipped with
    a failure note. Exact duplicate records are emitted once.
    """
    result = ExportResult()
    seen: dict[tuple[str, str, str], list[float]] = {}
    for backend in backends:
        enc = _CachingEncoder(backend)
        for spec in specs:
            if spec.level == "word":
                result.failures.append(ExportFailure(
                    backend.model_id, "word", spec.spec_id,
                    "word level is context-free; use a word-vector store instead",
                ))
                continue
            for item in spec.items:
                for level, span in _levels_for(spec, item):
                    if level == "cword" and span is None:
                        result.failures.append(ExportFailure(
                            backend.model_id, level, item.text,
                            "cword level requires a focus span",
                        ))
                        continue
                    try:
                        encoded = enc.encoded(item.text)
                        if level == "sentence":
                            vec = sentence_vector(enc.rule, encoded)
                        else:
                            vec = cword_vector(enc.rule, encoded, span)
                    except (TokenizationError, SpanOutOfRange,
                            SpanTokenizationMismatch, ValueError) as e:
                        result.failures.append(ExportFailure(
                            backend.model_id, level, item.text, str(e)))
                        continue
                    if len(vec) != enc.rule.expected_dim:
                        result.failures.append(ExportFailure(
                            backend.model_id, level, item.text,
                            f"dim {len(vec)} != expected {enc.rule.expected_dim}"))
                        continue
                    key = (item.text, level, backend.model_id)
                    values = [float(x) for x in vec]
                    if key in seen:
                        if seen[key] != values:
                            result.failures.append(ExportFailure(
                                backend.model_id, level, item.text,
                                "conflicting vectors for one (text, level, model) key "
                                "(differing focus spans?)"))
                        continue
                    seen[key] = values
                    result.lines.append(record_line(
                        backend.model_id, level, item.text,
                        span if level == "cword" else item.focus_span, vec))
                    result.n_records += 1
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            for line in result.lines:
                fh.write(line + "\n")
    return result
