"""Per-family encoding rules: how token states become sentence and
contextual-word vectors.

The rules are pure functions over a model's token states, separated
from inference so they can be verified independently of any particular
checkpoint:

- bert family: the sentence encoding is the top hidden state at the
  leading classifier token; a cword is the top state at the token of
  interest, taking the first piece when the word is subword-tokenized.
- gpt / gpt2: the sentence encoding is the state at the last token of
  the sequence; cwords follow the same first-piece rule.
- elmo: the sentence encoding mean-pools each layer over tokens and
  sums the pooled layers; a cword sums the layer states at the token
  position (no pooling).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

FAMILIES = ("elmo", "bert", "gpt", "gpt2")

SENTENCE_RULES = {
    "bert": "cls_token_top_state",
    "gpt": "last_token_state",
    "gpt2": "last_token_state",
    "elmo": "mean_pool_sum_layers",
}

CWORD_RULES = {
    "bert": "token_top_state_subword_start",
    "gpt": "token_top_state_subword_start",
    "gpt2": "token_top_state_subword_start",
    "elmo": "token_state_sum_layers",
}

KNOWN_DIMS = (300, 768, 1024)


class SpanOutOfRange(ValueError):
    """A focus span does not lie inside its text."""


class SpanTokenizationMismatch(ValueError):
    """No model token overlaps the focus span."""


@dataclass(frozen=True)
class ModelRule:
    """The encoding recipe one model follows."""

    model_id: str
    family: str
    sentence_rule: str
    cword_rule: str
    expected_dim: int

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.sentence_rule != SENTENCE_RULES[self.family]:
            raise ValueError(
                f"family {self.family!r} requires sentence_rule "
                f"{SENTENCE_RULES[self.family]!r}, got {self.sentence_rule!r}"
            )
        if self.cword_rule != CWORD_RULES[self.family]:
            raise ValueError(
                f"family {self.family!r} requires cword_rule "
                f"{CWORD_RULES[self.family]!r}, got {self.cword_rule!r}"
            )
        if self.expected_dim not in KNOWN_DIMS:
            raise ValueError(
                f"expected_dim must be one of {KNOWN_DIMS}, got {self.expected_dim}"
            )


def rule_for(model_id: str, family: str, dim: int) -> ModelRule:
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    return ModelRule(model_id, family, SENTENCE_RULES[family], CWORD_RULES[family], dim)


@dataclass
class EncodedText:
    """Model output for one text.

    ``states`` has shape (layers, positions, dim); transformer backends
    supply only the top layer (layers = 1), the elmo family all three.
    ``offsets`` maps each position to its character span in the original
    text; special/added tokens are masked out of content selection.
    """

    text: str
    states: np.ndarray
    offsets: Sequence[tuple[int, int]]
    special_mask: Sequence[bool]

    def __post_init__(self) -> None:
        if self.states.ndim != 3:
            raise ValueError(f"states must be (layers, positions, dim), got {self.states.shape}")
        if self.states.shape[1] != len(self.offsets) or len(self.offsets) != len(self.special_mask):
            raise ValueError("offsets and special_mask must align with state positions")

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    def content_positions(self) -> list[int]:
        return [i for i, special in enumerate(self.special_mask) if not special]


def _first_position_in_span(enc: EncodedText, span: tuple[int, int]) -> int:
    start, end = span
    if not (0 <= start < end <= len(enc.text)):
        raise SpanOutOfRange(f"span {span!r} outside text of length {len(enc.text)}")
    for i in enc.content_positions():
        tok_start, tok_end = enc.offsets[i]
        if tok_start < end and start < tok_end:
            return i
    raise SpanTokenizationMismatch(
        f"no token overlaps span {span!r} of {enc.text!r}"
    )


def sentence_vector(rule: ModelRule, enc: EncodedText) -> np.ndarray:
    if rule.sentence_rule == "cls_token_top_state":
        if not enc.special_mask[0]:
            raise ValueError(
                f"{rule.model_id}: expected a leading special token for the sentence state"
            )
        return np.asarray(enc.states[-1, 0], dtype=np.float64)
    if rule.sentence_rule == "last_token_state":
        last = enc.content_positions()[-1]
        return np.asarray(enc.states[-1, last], dtype=np.float64)
    # mean_pool_sum_layers: pool each layer over content tokens, then sum layers
    positions = enc.content_positions()
    pooled = enc.states[:, positions, :].astype(np.float64).mean(axis=1)
    return pooled.sum(axis=0)


def cword_vector(rule: ModelRule, enc: EncodedText, span: tuple[int, int]) -> np.ndarray:
    pos = _first_position_in_span(enc, span)
    if rule.cword_rule == "token_top_state_subword_start":
        return np.asarray(enc.states[-1, pos], dtype=np.float64)
    # token_state_sum_layers: no pooling, sum the layer states at the position
    return enc.states[:, pos, :].astype(np.float64).sum(axis=0)
