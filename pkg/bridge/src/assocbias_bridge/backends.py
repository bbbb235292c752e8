"""Inference backends that turn text into per-position states.

The transformers backend covers the bert/gpt/gpt2 families via
AutoModel; the elmo family needs allennlp, which is optional — loading
raises ModelLoadError with instructions when it is unavailable. Custom
backends (anything with model_id/family/dim and an encode method) can
be passed straight to the exporter.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .rules import EncodedText


class ModelLoadError(RuntimeError):
    pass


class TokenizationError(RuntimeError):
    pass


class EncoderBackend(Protocol):
    model_id: str
    family: str
    dim: int

    def encode(self, text: str) -> EncodedText:  # pragma: no cover - protocol
        ...


_MODEL_TYPE_TO_FAMILY = {
    "bert": "bert",
    "openai-gpt": "gpt",
    "gpt2": "gpt2",
}


class TransformersBackend:
    """bert/gpt/gpt2 inference through transformers AutoModel.

    Runs in eval mode with gradients disabled; the family comes from the
    checkpoint's model_type, so local fixture paths work as well as hub
    ids. Requires a fast tokenizer (character offsets drive the focus
    span alignment).
    """

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as e:  # pragma: no cover - environment guard
            raise ModelLoadError(f"transformers/torch unavailable: {e}") from e
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id).to(device)
        except Exception as e:
            raise ModelLoadError(f"cannot load {model_id!r}: {e}") from e
        if not getattr(self.tokenizer, "is_fast", False):
            raise ModelLoadError(
                f"{model_id!r} has no fast tokenizer; offsets are required"
            )
        self.model.eval()
        self._torch = torch
        self.device = device
        self.model_id = model_id
        model_type = self.model.config.model_type
        family = _MODEL_TYPE_TO_FAMILY.get(model_type)
        if family is None:
            raise ModelLoadError(
                f"{model_id!r} has unsupported model_type {model_type!r}; "
                f"supported: {sorted(_MODEL_TYPE_TO_FAMILY)}"
            )
        self.family = family
        self.dim = int(self.model.config.hidden_size)

    def encode(self, text: str) -> EncodedText:
        if not text:
            raise TokenizationError("cannot encode empty text")
        enc = self.tokenizer(
            text,
            return_tensors="pt",
            return_offsets_mapping=True,
            return_special_tokens_mask=True,
        )
        offsets = [tuple(pair) for pair in enc.pop("offset_mapping")[0].tolist()]
        special = [bool(x) for x in enc.pop("special_tokens_mask")[0].tolist()]
        if not any(not s for s in special):
            raise TokenizationError(f"{text!r} produced no content tokens")
        enc = {k: v.to(self.device) for k, v in enc.items()}
        with self._torch.no_grad():
            out = self.model(**enc)
        states = out.last_hidden_state[0].cpu().numpy()[np.newaxis, :, :]
        return EncodedText(text, states, offsets, special)


class ElmoBackend:  # pragma: no cover - requires optional allennlp weights
    """Layered LSTM encodings via allennlp, when installed."""

    def __init__(self, model_id: str = "elmo"):
        try:
            from allennlp.commands.elmo import ElmoEmbedder  # type: ignore
        except ImportError as e:
            raise ModelLoadError(
                "the elmo family needs the optional allennlp package (and its "
                "published weight files); install allennlp or supply a custom "
                "backend with layered states"
            ) from e
        self._embedder = ElmoEmbedder()
        self.model_id = model_id
        self.family = "elmo"
        self.dim = 1024

    def encode(self, text: str) -> EncodedText:
        if not text:
            raise TokenizationError("cannot encode empty text")
        tokens, offsets = _whitespace_tokens_with_offsets(text)
        if not tokens:
            raise TokenizationError(f"{text!r} produced no tokens")
        layers = self._embedder.embed_sentence(tokens)  # (3, T, 1024)
        return EncodedText(text, np.asarray(layers), offsets, [False] * len(tokens))


def _whitespace_tokens_with_offsets(text: str) -> tuple[list[str], list[tuple[int, int]]]:
    tokens, offsets = [], []
    i = 0
    for tok in text.split():
        start = text.index(tok, i)
        tokens.append(tok)
        offsets.append((start, start + len(tok)))
        i = start + len(tok)
    return tokens, offsets


def load_backend(model_id: str, device: str = "cpu") -> EncoderBackend:
    if model_id == "elmo" or model_id.startswith("elmo-"):
        return ElmoBackend(model_id)
    return TransformersBackend(model_id, device=device)
