"""Causal-LM scoring backend with oracle-side masking.

Masking never edits the text the engine sent: zero_attention zeroes the
attention weights of masked positions (the SHAP-style convention), and
random_replace substitutes masked input ids with vocabulary tokens drawn as
a pure function of (server seed, request seed, position), so identical
requests always score identically.
"""

from __future__ import annotations

import hashlib
import threading

import torch

from .config import TINY_MODEL, ServerConfig
from .errors import BridgeStartupError


def _replacement_id(server_seed: int, request_seed: int, position: int, vocab: int) -> int:
    material = f"replace|{server_seed}|{request_seed}|{position}".encode()
    digest = hashlib.blake2b(material, digest_size=8).digest()
    return int.from_bytes(digest, "big") % vocab


def _hash_token_id(word: str, vocab: int) -> int:
    digest = hashlib.blake2b(word.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % vocab


class _TinyTokenizer:
    """One token per whitespace word, hashed into the tiny vocabulary."""

    def __init__(self, vocab_size: int):
        self.vocab_size = vocab_size

    def spans(self, words):
        return [
            {"id": _hash_token_id(word, self.vocab_size), "text": word, "word": i + 1}
            for i, word in enumerate(words)
        ]


class _HubTokenizer:
    """Hugging Face fast tokenizer with word alignment."""

    def __init__(self, tokenizer):
        self._tokenizer = tokenizer
        self.vocab_size = len(tokenizer)

    def spans(self, words):
        encoding = self._tokenizer(
            list(words), is_split_into_words=True, add_special_tokens=False
        )
        ids = encoding["input_ids"]
        word_ids = encoding.word_ids()
        texts = self._tokenizer.convert_ids_to_tokens(ids)
        return [
            {"id": int(token_id), "text": text, "word": int(word) + 1}
            for token_id, text, word in zip(ids, texts, word_ids)
        ]


class CausalLMScorer:
    """Loads the configured model once and scores masked requests."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self._lock = threading.Lock()
        torch.set_num_threads(1)
        if config.model == TINY_MODEL:
            self._build_tiny(config)
        else:
            self._load_hub(config)
        self.model.eval()

    def _build_tiny(self, config: ServerConfig) -> None:
        from transformers import GPT2Config, GPT2LMHeadModel

        vocab_size = 211
        torch.manual_seed(config.seed)
        model_config = GPT2Config(
            vocab_size=vocab_size,
            n_positions=64,
            n_embd=32,
            n_layer=2,
            n_head=2,
        )
        self.model = GPT2LMHeadModel(model_config)
        self.tokenizer = _TinyTokenizer(vocab_size)
        self.vocab_size = vocab_size
        self.model_name = TINY_MODEL
        self.revision = config.revision or f"seed-{config.seed}"

    def _load_hub(self, config: ServerConfig) -> None:
        from transformers import AutoModelForCausalLM, AutoTokenizer

        try:
            tokenizer = AutoTokenizer.from_pretrained(
                config.model, revision=config.revision, use_fast=True
            )
            self.model = AutoModelForCausalLM.from_pretrained(
                config.model, revision=config.revision
            ).to(config.device)
        except Exception as exc:
            raise BridgeStartupError(
                f"could not load model {config.model!r}: {exc}"
            ) from exc
        self.tokenizer = _HubTokenizer(tokenizer)
        self.vocab_size = int(self.model.config.vocab_size)
        self.model_name = config.model
        self.revision = config.revision or "default"

    def tokenize(self, words):
        return self.tokenizer.spans(words)

    def score(self, token_ids, keep, strategy, seed, targets, top_k):
        """Probabilities of targets (and the top-k list) for the next token."""
        if len(token_ids) == 0:
            raise ValueError("empty token list")
        bad = [t for t in token_ids if not 0 <= t < self.vocab_size]
        if bad:
            raise ValueError(f"token id(s) {bad} outside vocabulary of {self.vocab_size}")
        bad_targets = [t for t in targets if not 0 <= t < self.vocab_size]
        if bad_targets:
            raise ValueError(
                f"target id(s) {bad_targets} outside vocabulary of {self.vocab_size}"
            )

        ids = list(token_ids)
        attention = [1] * len(ids)
        if strategy == "zero_attention":
            attention = [1 if k else 0 for k in keep]
        else:  # random_replace
            for position, kept in enumerate(keep):
                if not kept:
                    ids[position] = _replacement_id(
                        self.config.seed, seed, position, self.vocab_size
                    )

        with self._lock, torch.no_grad():
            input_ids = torch.tensor([ids], dtype=torch.long, device=self.config.device)
            mask = torch.tensor([attention], dtype=torch.long, device=self.config.device)
            logits = self.model(input_ids=input_ids, attention_mask=mask).logits
            probs = torch.softmax(logits[0, -1, :], dim=-1).cpu()

        target_probs = [float(probs[t]) for t in targets]
        top = []
        if top_k > 0:
            values = probs.tolist()
            order = sorted(range(self.vocab_size), key=lambda c: (-values[c], c))
            top = [(c, float(values[c])) for c in order[: top_k]]
        return target_probs, top
