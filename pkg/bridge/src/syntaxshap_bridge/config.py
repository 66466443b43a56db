from __future__ import annotations

from dataclasses import dataclass

#: Built-in seeded random-weight model for tests and offline smoke runs.
TINY_MODEL = "tiny-random-gpt2"


@dataclass(frozen=True)
class ServerConfig:
    """What the scoring service loads and how it behaves.

    ``model`` is a model-hub name (e.g. "gpt2") or TINY_MODEL; ``revision``
    pins the hub revision and is echoed by /v1/meta. ``seed`` pins both the
    tiny model's weight init and the random-replacement substitution salt.
    ``max_tokens`` is the advertised input length cap.
    """

    model: str = TINY_MODEL
    port: int = 8731
    device: str = "cpu"
    seed: int = 0
    revision: str | None = None
    max_tokens: int = 15
    queue_timeout: float = 30.0
