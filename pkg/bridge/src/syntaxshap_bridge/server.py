"""HTTP surface: GET /v1/meta, POST /v1/score, POST /v1/tokenize."""

from __future__ import annotations

import threading
from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import ServerConfig
from .scorer import CausalLMScorer


class TokenItem(BaseModel):
    id: int
    text: str


class ScoreRequest(BaseModel):
    tokens: list[TokenItem]
    keep: list[bool]
    strategy: Literal["zero_attention", "random_replace"] = "zero_attention"
    targets: list[int] = Field(default_factory=list)
    top_k: int = 0
    seed: int = 0


class ScoreResponse(BaseModel):
    target_probs: list[float]
    top: list[tuple[int, float]]


class MetaResponse(BaseModel):
    model: str
    vocab_size: int
    max_tokens: int
    revision: str


class TokenizeRequest(BaseModel):
    words: list[str]


class TokenSpan(BaseModel):
    id: int
    text: str
    word: int


class TokenizeResponse(BaseModel):
    tokens: list[TokenSpan]


def create_app(config: ServerConfig, scorer: CausalLMScorer | None = None) -> FastAPI:
    scorer = scorer or CausalLMScorer(config)
    app = FastAPI(title="syntaxshap-bridge", version="0.1.0")
    # One model, one inference at a time; callers queue on this lock.
    busy = threading.Lock()

    @app.get("/v1/meta", response_model=MetaResponse)
    def meta() -> MetaResponse:
        return MetaResponse(
            model=scorer.model_name,
            vocab_size=scorer.vocab_size,
            max_tokens=config.max_tokens,
            revision=scorer.revision,
        )

    @app.post("/v1/score", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        if len(request.keep) != len(request.tokens):
            raise HTTPException(
                status_code=400,
                detail=f"keep length {len(request.keep)} != token count {len(request.tokens)}",
            )
        if not request.tokens:
            raise HTTPException(status_code=400, detail="empty token list")
        if request.top_k < 0:
            raise HTTPException(status_code=400, detail="top_k must be >= 0")
        if request.top_k == 0 and not request.targets:
            raise HTTPException(
                status_code=400, detail="targets must be non-empty when top_k is 0"
            )
        if not busy.acquire(timeout=config.queue_timeout):
            raise HTTPException(status_code=429, detail="server busy; retry later")
        try:
            target_probs, top = scorer.score(
                token_ids=[t.id for t in request.tokens],
                keep=request.keep,
                strategy=request.strategy,
                seed=request.seed,
                targets=request.targets,
                top_k=request.top_k,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        finally:
            busy.release()
        return ScoreResponse(target_probs=target_probs, top=top)

    @app.post("/v1/tokenize", response_model=TokenizeResponse)
    def tokenize(request: TokenizeRequest) -> TokenizeResponse:
        if not request.words:
            raise HTTPException(status_code=400, detail="empty word list")
        return TokenizeResponse(
            tokens=[TokenSpan(**span) for span in scorer.tokenize(request.words)]
        )

    return app
