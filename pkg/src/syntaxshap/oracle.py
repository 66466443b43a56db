"""Value-function contract: probability of a target next token given a masked sentence.

Masking is executed oracle-side — the engine only ever sends keep vectors,
never edited text — so models stay free to realize zero-attention or
random-replacement masking however their implementation requires. All
oracles here are pure: identical requests yield identical responses within
a run.
"""

from __future__ import annotations

import hashlib
import math
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Protocol, Sequence

import httpx

from .errors import OracleError, ProtocolError, TransportError

_LOGIT_SCALE = 6.0


class MaskStrategy(str, Enum):
    ZERO_ATTENTION = "zero_attention"
    RANDOM_REPLACE = "random_replace"


@dataclass(frozen=True)
class TokenRef:
    """A token as the engine sees it: an opaque model id plus surface text."""

    id: int
    text: str


@dataclass(frozen=True)
class ValueRequest:
    """One masked-sentence evaluation.

    ``keep[p]`` marks token p as present in the coalition. ``targets`` are
    vocabulary ids whose probabilities are requested; ``top_k`` additionally
    asks for the k most probable next tokens.
    """

    tokens: tuple[TokenRef, ...]
    keep: tuple[bool, ...]
    strategy: MaskStrategy = MaskStrategy.ZERO_ATTENTION
    targets: tuple[int, ...] = ()
    top_k: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "keep", tuple(bool(b) for b in self.keep))
        object.__setattr__(self, "strategy", MaskStrategy(self.strategy))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.keep) != len(self.tokens):
            raise ValueError(
                f"keep vector length {len(self.keep)} != token count {len(self.tokens)}"
            )
        if self.top_k < 0:
            raise ValueError("top_k must be >= 0")
        if self.top_k == 0 and not self.targets:
            raise ValueError("targets must be non-empty when top_k is 0")


@dataclass(frozen=True)
class ValueResponse:
    """Probabilities aligned to the request's targets plus an optional top-k list."""

    target_probs: tuple[float, ...]
    top: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "target_probs", tuple(float(p) for p in self.target_probs))
        object.__setattr__(
            self, "top", tuple((int(t), float(p)) for t, p in self.top)
        )


@dataclass(frozen=True)
class OracleMeta:
    model: str
    vocab_size: int
    max_tokens: int | None = None


class ValueOracle(Protocol):
    """Behavioral contract every oracle satisfies."""

    def evaluate(self, request: ValueRequest) -> ValueResponse: ...

    @property
    def metadata(self) -> OracleMeta: ...


def validate_response(
    response: ValueResponse, request: ValueRequest, vocab_size: int | None = None
) -> None:
    """Raise ProtocolError if a response violates the contract invariants."""
    if len(response.target_probs) != len(request.targets):
        raise ProtocolError(
            f"expected {len(request.targets)} target probabilities, "
            f"got {len(response.target_probs)}"
        )
    for p in list(response.target_probs) + [p for _, p in response.top]:
        if not (math.isfinite(p) and 0.0 <= p <= 1.0):
            raise ProtocolError(f"probability {p!r} outside [0, 1]")
    expected_top = request.top_k
    if vocab_size is not None:
        expected_top = min(expected_top, vocab_size)
    if len(response.top) != expected_top:
        raise ProtocolError(
            f"expected a top list of length {expected_top}, got {len(response.top)}"
        )
    for (id_a, p_a), (id_b, p_b) in zip(response.top, response.top[1:]):
        if not (p_a > p_b or (p_a == p_b and id_a < id_b)):
            raise ProtocolError(
                f"top list not sorted at ({id_a}, {p_a}) -> ({id_b}, {p_b})"
            )


def _pack(*parts) -> bytes:
    out = bytearray()
    for part in parts:
        raw = part if isinstance(part, bytes) else str(part).encode("utf-8")
        out += len(raw).to_bytes(4, "big") + raw
    return bytes(out)


def _hash_unit(*parts) -> float:
    digest = hashlib.blake2b(_pack(*parts), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0**64


def _hash_int(*parts) -> int:
    digest = hashlib.blake2b(_pack(*parts), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class _HashLM:
    """Deterministic desk-scale language model: softmax of a stable hash.

    Every kept token (with its position) enters the hash, so the
    distribution is sensitive to each one; under random replacement the
    masked positions contribute a substitute token that is a pure function
    of (request seed, position).
    """

    def __init__(self, seed: int, vocab_size: int):
        if vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")
        self._seed = seed
        self._vocab = vocab_size
        self._meta = OracleMeta(model=f"toy-hash-lm(seed={seed})", vocab_size=vocab_size)

    @property
    def metadata(self) -> OracleMeta:
        return self._meta

    def _material(self, request: ValueRequest) -> bytes:
        parts: list[bytes] = []
        for position, (token, keep) in enumerate(zip(request.tokens, request.keep)):
            if keep:
                parts.append(_pack("k", position, token.text))
            elif request.strategy is MaskStrategy.RANDOM_REPLACE:
                substitute = _hash_int("replace", request.seed, position) % self._vocab
                parts.append(_pack("r", position, substitute))
        return _pack(*parts)

    def evaluate(self, request: ValueRequest) -> ValueResponse:
        material = self._material(request)
        exps = [
            math.exp(_LOGIT_SCALE * _hash_unit("logit", self._seed, material, candidate))
            for candidate in range(self._vocab)
        ]
        z = math.fsum(exps)
        probs = [e / z for e in exps]
        target_probs = tuple(
            probs[t] if 0 <= t < self._vocab else 0.0 for t in request.targets
        )
        top: tuple[tuple[int, float], ...] = ()
        if request.top_k > 0:
            order = sorted(range(self._vocab), key=lambda c: (-probs[c], c))
            top = tuple((c, probs[c]) for c in order[: request.top_k])
        return ValueResponse(target_probs=target_probs, top=top)


def toy_hash_lm(seed: int = 0, vocab_size: int = 50) -> _HashLM:
    """A fully deterministic in-process stand-in for an autoregressive LM."""
    return _HashLM(seed=seed, vocab_size=vocab_size)


class _IgnoreTokenLM:
    """Delegate that provably never sees one token (keep bit forced off)."""

    def __init__(self, inner: ValueOracle, position: int):
        if position < 0:
            raise ValueError("position must be >= 0")
        self._inner = inner
        self._position = position

    @property
    def metadata(self) -> OracleMeta:
        inner = self._inner.metadata
        return OracleMeta(
            model=f"ignore[{self._position}]({inner.model})",
            vocab_size=inner.vocab_size,
            max_tokens=inner.max_tokens,
        )

    def evaluate(self, request: ValueRequest) -> ValueResponse:
        if self._position >= len(request.keep):
            raise ValueError(
                f"ignored position {self._position} outside request of "
                f"length {len(request.keep)}"
            )
        keep = list(request.keep)
        keep[self._position] = False
        forced = ValueRequest(
            tokens=request.tokens,
            keep=tuple(keep),
            strategy=request.strategy,
            targets=request.targets,
            top_k=request.top_k,
            seed=request.seed,
        )
        return self._inner.evaluate(forced)


def ignore_token_lm(inner: ValueOracle, position: int) -> _IgnoreTokenLM:
    """Oracle identical to ``inner`` except token ``position`` (0-based) is inert."""
    return _IgnoreTokenLM(inner, position)


class _SumOracle:
    """Pointwise sum of two oracles' target probabilities.

    Sums may exceed 1; this exists for the additivity axiom suite only.
    Supports targets-only requests (top_k = 0) — a summed top-k list is not
    well-defined per candidate.
    """

    def __init__(self, f: ValueOracle, g: ValueOracle):
        if f.metadata.vocab_size != g.metadata.vocab_size:
            raise ValueError("summed oracles must share a vocabulary size")
        self._f = f
        self._g = g

    @property
    def metadata(self) -> OracleMeta:
        return OracleMeta(
            model=f"sum({self._f.metadata.model}, {self._g.metadata.model})",
            vocab_size=self._f.metadata.vocab_size,
        )

    def evaluate(self, request: ValueRequest) -> ValueResponse:
        if request.top_k != 0:
            raise ValueError("sum_oracle only supports targets-only requests")
        a = self._f.evaluate(request)
        b = self._g.evaluate(request)
        return ValueResponse(
            target_probs=tuple(x + y for x, y in zip(a.target_probs, b.target_probs))
        )


def sum_oracle(f: ValueOracle, g: ValueOracle) -> _SumOracle:
    return _SumOracle(f, g)


class MemoizedOracle:
    """Caching wrapper that also counts total and unique evaluations.

    The cache key is the full request (tokens included), so one wrapper is
    safe across sentences; failures are never cached.
    """

    def __init__(self, inner: ValueOracle):
        self._inner = inner
        self._cache: dict[ValueRequest, ValueResponse] = {}
        self._total = 0
        self._lock = threading.Lock()

    @property
    def metadata(self) -> OracleMeta:
        return self._inner.metadata

    @property
    def total_requests(self) -> int:
        return self._total

    @property
    def unique_evaluations(self) -> int:
        return len(self._cache)

    def reset(self) -> None:
        with self._lock:
            self._cache.clear()
            self._total = 0

    def evaluate(self, request: ValueRequest) -> ValueResponse:
        with self._lock:
            self._total += 1
            cached = self._cache.get(request)
            if cached is not None:
                return cached
            response = self._inner.evaluate(request)
            self._cache[request] = response
            return response


def memoized(inner: ValueOracle) -> MemoizedOracle:
    return MemoizedOracle(inner)


def request_to_wire(request: ValueRequest) -> dict:
    return {
        "tokens": [{"id": t.id, "text": t.text} for t in request.tokens],
        "keep": list(request.keep),
        "strategy": request.strategy.value,
        "targets": list(request.targets),
        "top_k": request.top_k,
        "seed": request.seed,
    }


def response_from_wire(payload) -> ValueResponse:
    if not isinstance(payload, dict):
        raise ProtocolError(f"response is not an object: {str(payload)[:200]}")
    try:
        target_probs = tuple(float(p) for p in payload["target_probs"])
        top = tuple((int(entry[0]), float(entry[1])) for entry in payload.get("top", ()))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ProtocolError(f"malformed response payload: {str(payload)[:200]}") from exc
    return ValueResponse(target_probs=target_probs, top=top)


class RemoteOracle:
    """HTTP client for a model served behind the wire protocol.

    Fetches /v1/meta eagerly so misconfigured endpoints fail at
    construction; every /v1/score response is checked against the
    ValueResponse invariants before it reaches the engine.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        retries: int = 3,
        *,
        retry_backoff: float = 0.5,
        auth_token: str | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        headers = {"Authorization": f"Bearer {auth_token}"} if auth_token else {}
        self._client = httpx.Client(
            base_url=endpoint.rstrip("/"), timeout=timeout, headers=headers,
            transport=transport,
        )
        self._retries = max(1, retries)
        self._backoff = retry_backoff
        self._meta = self._fetch_meta()

    @property
    def metadata(self) -> OracleMeta:
        return self._meta

    def close(self) -> None:
        self._client.close()

    def _send(self, method: str, path: str, json_body: dict | None = None) -> httpx.Response:
        last_error: Exception | None = None
        for attempt in range(self._retries):
            if attempt and self._backoff:
                time.sleep(self._backoff * attempt)
            try:
                response = self._client.request(method, path, json=json_body)
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = ProtocolError(
                    f"{path} returned {response.status_code}: {response.text[:200]}"
                )
                continue
            return response
        raise TransportError(
            f"{method} {path} failed after {self._retries} attempts: {last_error}"
        )

    def _fetch_meta(self) -> OracleMeta:
        response = self._send("GET", "/v1/meta")
        if response.status_code != 200:
            raise ProtocolError(
                f"/v1/meta returned {response.status_code}: {response.text[:200]}"
            )
        payload = response.json()
        try:
            return OracleMeta(
                model=str(payload["model"]),
                vocab_size=int(payload["vocab_size"]),
                max_tokens=int(payload["max_tokens"]) if "max_tokens" in payload else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed /v1/meta payload: {str(payload)[:200]}") from exc

    def evaluate(self, request: ValueRequest) -> ValueResponse:
        response = self._send("POST", "/v1/score", request_to_wire(request))
        if response.status_code != 200:
            raise ProtocolError(
                f"/v1/score returned {response.status_code}: {response.text[:200]}"
            )
        parsed = response_from_wire(response.json())
        validate_response(parsed, request, vocab_size=self._meta.vocab_size)
        return parsed

    def tokenize(self, words: Sequence[str]) -> list[tuple[str, int, int]]:
        """Model-tokenizer spans for a word sequence: (text, word_index, token_id).

        Requires the serving side to expose POST /v1/tokenize; raises
        ProtocolError when it does not.
        """
        response = self._send("POST", "/v1/tokenize", {"words": list(words)})
        if response.status_code == 404:
            raise ProtocolError(
                "endpoint does not support /v1/tokenize; provide pre-tokenized "
                "spans in the dataset instead"
            )
        if response.status_code != 200:
            raise ProtocolError(
                f"/v1/tokenize returned {response.status_code}: {response.text[:200]}"
            )
        payload = response.json()
        try:
            return [
                (str(t["text"]), int(t["word"]), int(t["id"]))
                for t in payload["tokens"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(
                f"malformed /v1/tokenize payload: {str(payload)[:200]}"
            ) from exc


def remote_oracle(
    endpoint: str,
    timeout: float = 30.0,
    retries: int = 3,
    **kwargs,
) -> RemoteOracle:
    return RemoteOracle(endpoint, timeout=timeout, retries=retries, **kwargs)
