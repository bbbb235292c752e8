"""Session fixtures: tiny locally-built checkpoints with real tokenizers.

Random weights are fine for everything except semantics: dims, rule
selection, span alignment, and determinism do not depend on training.
"""

import zlib

import numpy as np
import pytest

BERT_VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "This", "That", "There", "Here", "is", "here", "there", "a", "an",
    "person", "The", "the", "person's", "name", "They", "are", "saw",
    "John", "Paul", "Mike", "Kevin", "Amy", "Joan", "Lisa", "Sarah",
    "Shan", "##ice", "Ann", "Ben",
    "doctor", "nurse", "carpenter", "mechanic", "engineer", "sheriff",
    "secretary", "librarian", "stylist",
    ".", ",", "!", "?",
]

_acceptance_lines = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if name.startswith("test_"):
        name = name[len("test_"):]
    outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    _acceptance_lines.append(f"[acceptance] {name}: {outcome}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria (bridge)")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def build_bert_dir(path, hidden_size: int, seed: int) -> str:
    import torch
    from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
    from transformers import BertConfig, BertModel, BertTokenizerFast

    vocab = {tok: i for i, tok in enumerate(BERT_VOCAB)}
    core = Tokenizer(models.WordPiece(vocab=vocab, unk_token="[UNK]",
                                      continuing_subword_prefix="##"))
    core.normalizer = normalizers.BertNormalizer(lowercase=False)
    core.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    core.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = BertTokenizerFast(tokenizer_object=core, unk_token="[UNK]",
                                  pad_token="[PAD]", cls_token="[CLS]",
                                  sep_token="[SEP]", mask_token="[MASK]",
                                  do_lower_case=False)
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab), hidden_size=hidden_size, num_hidden_layers=2,
        num_attention_heads=4, intermediate_size=4 * 64,
        max_position_embeddings=128,
    )
    model = BertModel(config)
    tokenizer.save_pretrained(str(path))
    model.save_pretrained(str(path))
    return str(path)


def build_gpt2_dir(path, seed: int) -> str:
    import torch
    from tokenizers import Tokenizer, decoders, models, pre_tokenizers
    from transformers import GPT2Config, GPT2Model, GPT2TokenizerFast

    alphabet = sorted(pre_tokenizers.ByteLevel.alphabet())
    vocab = {ch: i for i, ch in enumerate(alphabet)}
    vocab["<|endoftext|>"] = len(vocab)
    core = Tokenizer(models.BPE(vocab=vocab, merges=[]))
    core.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    core.decoder = decoders.ByteLevel()
    tokenizer = GPT2TokenizerFast(tokenizer_object=core, unk_token="<|endoftext|>",
                                  bos_token="<|endoftext|>", eos_token="<|endoftext|>")
    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=len(vocab), n_embd=768, n_layer=2, n_head=4, n_positions=256,
        bos_token_id=vocab["<|endoftext|>"], eos_token_id=vocab["<|endoftext|>"],
    )
    model = GPT2Model(config)
    tokenizer.save_pretrained(str(path))
    model.save_pretrained(str(path))
    return str(path)


@pytest.fixture(scope="session")
def bert_base_dir(tmp_path_factory):
    return build_bert_dir(tmp_path_factory.mktemp("bert-base-fixture"), 768, seed=0)


@pytest.fixture(scope="session")
def bert_large_dir(tmp_path_factory):
    return build_bert_dir(tmp_path_factory.mktemp("bert-large-fixture"), 1024, seed=1)


@pytest.fixture(scope="session")
def gpt2_dir(tmp_path_factory):
    return build_gpt2_dir(tmp_path_factory.mktemp("gpt2-fixture"), seed=2)


class StubLayeredBackend:
    """Deterministic three-layer backend standing in for the elmo family;
    exercises the layered rules through the real export path."""

    def __init__(self, model_id: str = "elmo-stub", dim: int = 1024):
        self.model_id = model_id
        self.family = "elmo"
        self.dim = dim

    def encode(self, text: str):
        from assocbias_bridge.rules import EncodedText

        tokens, offsets = [], []
        i = 0
        for tok in text.split():
            start = text.index(tok, i)
            tokens.append(tok)
            offsets.append((start, start + len(tok)))
            i = start + len(tok)
        rng = np.random.default_rng(zlib.crc32(text.encode("utf-8")))
        states = rng.normal(size=(3, len(tokens), self.dim))
        return EncodedText(text, states, offsets, [False] * len(tokens))


@pytest.fixture()
def elmo_stub():
    return StubLayeredBackend()
