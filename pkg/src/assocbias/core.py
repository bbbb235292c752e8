"""Shared domain types and exact vector arithmetic.

All statistics downstream are computed in 64-bit floats regardless of the
storage precision of embedding files; permutation sums over many addends
need the headroom. Text items are NFC-normalized so that spec files and
embedding exports key identically.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, ZeroVector

#: A 1-D float64 array with finite components; dim >= 1.
Vector = np.ndarray

CATEGORIES = ("gender", "race", "intersectional", "neutral", "other")


class EncodingLevel(str, enum.Enum):
    """How a text item is turned into a vector.

    ``word`` is a context-free lookup, ``sentence`` a whole-sequence
    encoding, and ``cword`` the representation of a designated token
    within a sentence.
    """

    WORD = "word"
    SENTENCE = "sentence"
    CWORD = "cword"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


def as_vector(values: Iterable[float] | np.ndarray) -> Vector:
    """Validate and convert to a float64 vector.

    Raises EmptyInput for zero-length input and DimensionMismatch for
    anything that is not 1-D; non-finite components are rejected.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {v.shape}")
    if v.size == 0:
        raise EmptyInput("empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    return v


def cosine(u: Vector, v: Vector) -> float:
    """Cosine similarity of two vectors, in [-1, 1].

    Zero-norm inputs raise ZeroVector rather than being skipped: silently
    dropping items would change set sizes and invalidate the partition
    test downstream.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"cosine: shapes {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    return float(np.dot(u, v) / (nu * nv))


def mean_vector(vs: Sequence[Vector]) -> Vector:
    """Componentwise arithmetic mean of a non-empty list of same-dim vectors."""
    if len(vs) == 0:
        raise EmptyInput("mean_vector of an empty list")
    first = np.asarray(vs[0], dtype=np.float64)
    dim = first.shape[0]
    for v in vs[1:]:
        if np.asarray(v).shape[0] != dim:
            raise DimensionMismatch(f"mean_vector: dims {dim} vs {np.asarray(v).shape[0]}")
    return np.mean(np.asarray(vs, dtype=np.float64), axis=0)


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class TextItem:
    """One test item: a word or sentence, optionally with a focus span.

    ``focus_span`` is a half-open character range (Unicode scalar offsets)
    identifying the token of interest for cword-level tests; it is
    converted to model token indices only at extraction time, which keeps
    spec files tokenizer-agnostic.
    """

    text: str
    focus_span: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "text", nfc(self.text))
        if self.focus_span is not None:
            start, end = self.focus_span
            object.__setattr__(self, "focus_span", (int(start), int(end)))
            if not (0 <= start < end <= len(self.text)):
                raise ValueError(
                    f"focus_span {self.focus_span!r} outside text of length {len(self.text)}"
                )

    @property
    def focus_text(self) -> Optional[str]:
        if self.focus_span is None:
            return None
        start, end = self.focus_span
        return self.text[start:end]


@dataclass(frozen=True)
class ItemSet:
    """A labeled, ordered, duplicate-free set of text items."""

    category_label: str
    items: tuple[TextItem, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if len(self.items) == 0:
            raise EmptyInput(f"item set {self.category_label!r} is empty")
        texts = [i.text for i in self.items]
        if len(set(texts)) != len(texts):
            dupes = sorted({t for t in texts if texts.count(t) > 1})
            raise ValueError(f"duplicate items in set {self.category_label!r}: {dupes}")

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class TestSpecification:
    """Two equal-size target sets and two attribute sets, plus metadata.

    Target-size equality is checked where it matters (the permutation
    test), not at construction, so that unbalanced inputs surface with
    the dedicated UnequalTargetSizes error at the right boundary.
    """

    id: str
    level: EncodingLevel
    category: str
    targ1: ItemSet
    targ2: ItemSet
    attr1: ItemSet
    attr2: ItemSet

    def __post_init__(self) -> None:
        if not isinstance(self.level, EncodingLevel):
            object.__setattr__(self, "level", EncodingLevel(self.level))
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}; expected one of {CATEGORIES}")

    def all_items(self) -> tuple[TextItem, ...]:
        return self.targ1.items + self.targ2.items + self.attr1.items + self.attr2.items

    def validate(self) -> None:
        """Full invariant check: balanced targets and cword focus spans."""
        from .errors import UnequalTargetSizes

        if len(self.targ1) != len(self.targ2):
            raise UnequalTargetSizes(
                f"{self.id or 'spec'}: |targ1| = {len(self.targ1)} but |targ2| = {len(self.targ2)}"
            )
        if self.level is EncodingLevel.CWORD:
            missing = [i.text for i in self.targ1.items + self.targ2.items if i.focus_span is None]
            if missing:
                raise ValueError(
                    f"{self.id or 'spec'}: cword level but {len(missing)} target item(s) lack a focus span"
                )


@dataclass(frozen=True)
class AssociationResult:
    """Outcome of one association test against one model."""

    test_id: str
    model_id: str
    level: EncodingLevel
    statistic: float
    effect_size: float
    p_value: float
    method: str  # "exact" | "sampled"
    n_samples: int
    seed: Optional[int] = None
    significant: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.level, EncodingLevel):
            object.__setattr__(self, "level", EncodingLevel(self.level))
        if self.method not in ("exact", "sampled"):
            raise ValueError(f"method must be 'exact' or 'sampled', got {self.method!r}")
        if self.method == "exact" and self.n_samples != 0:
            raise ValueError("exact results carry n_samples = 0")
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p_value {self.p_value} outside [0, 1]")
        if self.significant and not self.effect_size > 0:
            raise ValueError("a significant result must have a positive effect size")
