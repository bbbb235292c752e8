"""Exception hierarchy for the toolkit.

Every error raised by this package derives from :class:`AssocBiasError`,
so callers can catch one type at API boundaries (the CLI does exactly
that to map failures onto exit codes).
"""

from __future__ import annotations


class AssocBiasError(Exception):
    """Base class for all errors raised by this package."""


# --- vector arithmetic / statistics ---------------------------------------

class DimensionMismatch(AssocBiasError):
    """Vectors of different dimensionality were combined."""


class ZeroVector(AssocBiasError):
    """A zero-norm vector reached a similarity computation.

    Signals a degenerate embedding (e.g. an out-of-vocabulary average
    that cancelled out); zero vectors are never silently skipped.
    """


class EmptyInput(AssocBiasError):
    """An operation that needs at least one element got none."""


class UnequalTargetSizes(AssocBiasError):
    """The two target sets differ in size; the partition test needs |X| = |Y|."""


class DegenerateDistribution(AssocBiasError):
    """All per-target association scores are equal (zero standard deviation)."""


class TooLargeForExact(AssocBiasError):
    """The combined target size exceeds the exact-enumeration limit."""


class MissingEmbedding(AssocBiasError):
    """One or more test items could not be resolved to vectors."""

    def __init__(self, items, message: str | None = None):
        self.items = list(items)
        if message is None:
            shown = ", ".join(repr(getattr(i, "text", i)) for i in self.items[:8])
            more = "" if len(self.items) <= 8 else f" (+{len(self.items) - 8} more)"
            message = f"{len(self.items)} unresolved item(s): {shown}{more}"
        super().__init__(message)


# --- file parsing / validation ---------------------------------------------

class ParseError(AssocBiasError):
    """Malformed input; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(AssocBiasError):
    """Structurally valid input that violates the expected schema."""


class UnbalancedTargets(AssocBiasError):
    """Target sets have different sizes and the balance policy is 'error'."""


class UnrecognizedName(AssocBiasError):
    """A test id does not follow the naming convention."""


class BadTemplate(AssocBiasError):
    """A sentence template has zero or multiple fill slots, or no final punctuation."""


class UnknownVariant(AssocBiasError):
    """An intersectional pairing variant outside 1..5 was requested."""


class DimDrift(ParseError):
    """A vector's dimensionality disagrees with earlier lines of the same store."""


class DuplicateToken(AssocBiasError):
    """The same token appears twice in a word-vector file."""


class ConflictingDuplicate(AssocBiasError):
    """Two interchange records share a key but carry different vectors."""


class AllTokensOOV(AssocBiasError):
    """No token of a sentence is in the word-vector vocabulary."""


class LexiconMismatch(AssocBiasError):
    """Reports built from different lexicons (or modes) cannot be merged."""


class MismatchedPair(AssocBiasError):
    """Overlap classification got results from different tests, models, or levels."""


class Utf8Error(ParseError):
    """A corpus line is not valid UTF-8."""
