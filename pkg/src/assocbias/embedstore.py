"""Embedding acquisition: word-vector files, bag-of-words sentence
encodings, and the JSONL interchange for contextual encodings.

The interchange format is newline-delimited JSON with full-precision
decimal floats: diff-able, language-neutral, and append-friendly for
batch exporters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional

import numpy as np

from .core import EncodingLevel, TestSpecification, TextItem, Vector, mean_vector, nfc
from .errors import (
    AllTokensOOV,
    ConflictingDuplicate,
    DimDrift,
    DuplicateToken,
    EmptyInput,
    MissingEmbedding,
    ParseError,
)

#: Model id under which a word-vector store provides sentence encodings
#: by averaging word embeddings.
CBOW_MODEL_ID = "cbow"

#: Sentence punctuation stripped from token edges before averaging.
SENTENCE_PUNCT = ".,!?;:\"'"

INTERCHANGE_FIELDS = frozenset({"model_id", "level", "text", "focus_span", "vector"})


def tokenize_for_cbow(text: str) -> list[str]:
    """Deliberately minimal tokenization: lowercase, split on whitespace,
    strip sentence punctuation from token edges."""
    return [t for t in (tok.strip(SENTENCE_PUNCT) for tok in text.lower().split()) if t]


class WordStore:
    """Context-free token → vector mapping with a fixed dimension."""

    def __init__(self, vectors: dict[str, Vector], dim: int,
                 case_policy: str = "lowercase_fallback"):
        if case_policy not in ("exact", "lowercase_fallback"):
            raise ValueError("case_policy must be 'exact' or 'lowercase_fallback'")
        self.vectors = vectors
        self.dim = dim
        self.case_policy = case_policy

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return self.lookup(token) is not None

    def lookup(self, token: str) -> Optional[Vector]:
        """Exact hit first; lowercase fallback per policy (name capitalization
        varies across test files while vector files are typically lowercase)."""
        token = nfc(token)
        hit = self.vectors.get(token)
        if hit is None and self.case_policy == "lowercase_fallback":
            hit = self.vectors.get(token.lower())
        return hit


def load_word_vectors(lines: Iterable[str] | IO[str],
                      case_policy: str = "lowercase_fallback") -> WordStore:
    """Parse the standard space-separated text layout: `token f1 … fd`.

    Single pass; the first line fixes the dimension, later disagreement
    is DimDrift with the offending line number.
    """
    vectors: dict[str, Vector] = {}
    dim: Optional[int] = None
    for line_no, line in enumerate(lines, start=1):
        parts = line.split()
        if len(parts) < 2:
            raise ParseError("expected a token followed by vector components", line=line_no)
        token = nfc(parts[0])
        try:
            values = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError as e:
            raise ParseError(f"bad float: {e}", line=line_no) from e
        if not np.all(np.isfinite(values)):
            raise ParseError("non-finite vector component", line=line_no)
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise DimDrift(f"expected {dim} components, got {len(values)}", line=line_no)
        if token in vectors:
            raise DuplicateToken(f"line {line_no}: token {token!r} seen before")
        vectors[token] = values
    if dim is None:
        raise EmptyInput("word-vector input has no lines")
    return WordStore(vectors, dim, case_policy)


def cbow_encode(text: str, store: WordStore) -> Vector:
    """Average of in-vocabulary token vectors.

    Out-of-vocabulary tokens are skipped, but at least one token must
    resolve; an all-OOV sentence has no defensible encoding.
    """
    hits = [v for v in (store.lookup(tok) for tok in tokenize_for_cbow(text)) if v is not None]
    if not hits:
        raise AllTokensOOV(f"no token of {text!r} is in the vocabulary")
    return mean_vector(hits)


@dataclass(eq=False)
class EmbeddingRecord:
    """One interchange line: a vector keyed by (model, level, text)."""

    model_id: str
    level: EncodingLevel
    text: str
    focus_span: Optional[tuple[int, int]]
    vector: Vector

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (
            self.model_id == other.model_id
            and self.level == other.level
            and self.text == other.text
            and self.focus_span == other.focus_span
            and np.array_equal(self.vector, other.vector)
        )

    @property
    def key(self) -> tuple[str, EncodingLevel, str]:
        return (self.text, self.level, self.model_id)


class ContextualStore:
    """Vectors keyed by (text, level, model_id), with per-(model, level) dims."""

    def __init__(self) -> None:
        self._records: dict[tuple[str, EncodingLevel, str], EmbeddingRecord] = {}
        self.dims: dict[tuple[str, EncodingLevel], int] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContextualStore):
            return NotImplemented
        return self._records == other._records

    def lookup(self, text: str, level: EncodingLevel, model_id: str) -> Optional[Vector]:
        rec = self._records.get((nfc(text), level, model_id))
        return rec.vector if rec is not None else None

    def model_ids(self) -> list[str]:
        return sorted({key[2] for key in self._records})

    def levels(self, model_id: str) -> set[EncodingLevel]:
        return {key[1] for key in self._records if key[2] == model_id}

    def records(self) -> Iterator[EmbeddingRecord]:
        return iter(self._records.values())

    def add(self, rec: EmbeddingRecord, line_no: Optional[int] = None) -> None:
        dim_key = (rec.model_id, rec.level)
        dim = self.dims.get(dim_key)
        if dim is None:
            self.dims[dim_key] = len(rec.vector)
        elif len(rec.vector) != dim:
            raise DimDrift(
                f"model {rec.model_id!r} at level {rec.level.value} has dim {dim}, "
                f"got {len(rec.vector)}",
                line=line_no,
            )
        existing = self._records.get(rec.key)
        if existing is not None:
            if np.array_equal(existing.vector, rec.vector):
                return  # exact duplicate: deduplicate silently
            raise ConflictingDuplicate(
                f"key {rec.key!r} already loaded with a different vector"
            )
        self._records[rec.key] = rec


def _parse_record(obj, line_no: int) -> EmbeddingRecord:
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object", line=line_no)
    unknown = set(obj) - INTERCHANGE_FIELDS
    if unknown:
        raise ParseError(f"unknown field(s) {sorted(unknown)}", line=line_no)
    for name in ("model_id", "level", "text", "vector"):
        if name not in obj:
            raise ParseError(f"missing field {name!r}", line=line_no)
    if not isinstance(obj["model_id"], str) or not isinstance(obj["text"], str):
        raise ParseError("model_id and text must be strings", line=line_no)
    try:
        level = EncodingLevel(obj["level"])
    except ValueError:
        raise ParseError(f"unknown level {obj['level']!r}", line=line_no) from None
    vector = obj["vector"]
    if (not isinstance(vector, list)) or len(vector) == 0 \
            or not all(isinstance(x, (int, float)) for x in vector):
        raise ParseError("vector must be a non-empty list of numbers", line=line_no)
    values = np.array(vector, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ParseError("non-finite vector component", line=line_no)
    span = obj.get("focus_span")
    if span is not None:
        if (not isinstance(span, list)) or len(span) != 2:
            raise ParseError("focus_span must be [start, end]", line=line_no)
        span = (int(span[0]), int(span[1]))
    if level is EncodingLevel.CWORD and span is None:
        raise ParseError("cword records require a focus_span", line=line_no)
    return EmbeddingRecord(obj["model_id"], level, nfc(obj["text"]), span, values)


def load_contextual(lines: Iterable[str] | IO[str]) -> ContextualStore:
    """Load interchange JSONL (one record per line; blank lines ignored)."""
    store = ContextualStore()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, line=line_no) from e
        store.add(_parse_record(obj, line_no), line_no)
    return store


def record_to_json(rec: EmbeddingRecord) -> str:
    return json.dumps(
        {
            "model_id": rec.model_id,
            "level": rec.level.value,
            "text": rec.text,
            "focus_span": list(rec.focus_span) if rec.focus_span is not None else None,
            "vector": [float(x) for x in rec.vector],
        },
        ensure_ascii=False,
    )


def serialize_contextual(store: ContextualStore) -> str:
    """Interchange JSONL for a store; re-parses to an equal store."""
    return "".join(record_to_json(rec) + "\n" for rec in store.records())


def resolve(
    spec: TestSpecification,
    *,
    word_store: Optional[WordStore] = None,
    contextual_store: Optional[ContextualStore] = None,
    model_id: str = CBOW_MODEL_ID,
) -> dict[TextItem, Vector]:
    """Map every item of a spec to its vector for the spec's level.

    Word level looks up the word store; sentence level uses the
    contextual store, except model "cbow" which averages word vectors;
    cword level is contextual-only. Returns a complete mapping or raises
    MissingEmbedding with every unresolved item.
    """
    mapping: dict[TextItem, Vector] = {}
    missing: list[TextItem] = []
    for item in spec.all_items():
        vec: Optional[Vector] = None
        if spec.level is EncodingLevel.WORD:
            if word_store is not None:
                vec = word_store.lookup(item.text)
        elif spec.level is EncodingLevel.SENTENCE:
            if model_id == CBOW_MODEL_ID and word_store is not None:
                try:
                    vec = cbow_encode(item.text, word_store)
                except AllTokensOOV:
                    vec = None
            elif contextual_store is not None:
                vec = contextual_store.lookup(item.text, EncodingLevel.SENTENCE, model_id)
        else:
            if contextual_store is not None:
                vec = contextual_store.lookup(item.text, EncodingLevel.CWORD, model_id)
        if vec is None:
            missing.append(item)
        else:
            mapping[item] = vec
    if missing:
        raise MissingEmbedding(missing)
    return mapping
