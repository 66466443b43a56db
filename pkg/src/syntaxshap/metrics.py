"""Faithfulness metrics over explanations, plus coherency and semantic alignment.

Fidelity is the average drop in the predicted token's probability after
keeping only the top-t fraction of tokens; its random-replacement variant
swaps the masking strategy. div@K sums the probability drop over the full
sentence's top-K predictions; acc@K is the overlap ratio between the full
and masked top-K lists. All three consume ranks (via the top-t selection),
so they are invariant to order-preserving rescaling of attribution values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

from .attribution import AttributionResult
from .errors import OracleError
from .oracle import (
    MaskStrategy,
    TokenRef,
    ValueOracle,
    ValueRequest,
    memoized,
)


@dataclass(frozen=True)
class MetricConfig:
    """Keep fraction t in (0, 1], top-K count, masking strategy and seed."""

    t: float = 0.5
    k: int = 10
    strategy: MaskStrategy = MaskStrategy.ZERO_ATTENTION
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", MaskStrategy(self.strategy))
        if not 0.0 < self.t <= 1.0:
            raise ValueError(f"t must be in (0, 1], got {self.t}")
        if self.k < 1:
            raise ValueError(f"K must be >= 1, got {self.k}")


@dataclass(frozen=True)
class MaskedSentence:
    """Keep vector selecting the ceil(t*n) best-ranked tokens (at least one)."""

    tokens: tuple[TokenRef, ...] | None
    keep: tuple[bool, ...]


def top_tokens(result: AttributionResult, t: float) -> MaskedSentence:
    """Keep the ceil(t*n) tokens with the best ranks."""
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must be in (0, 1], got {t}")
    n = len(result.ranks)
    kept = max(1, math.ceil(t * n))
    return MaskedSentence(
        tokens=result.tokens,
        keep=tuple(rank <= kept for rank in result.ranks),
    )


def _require_tokens(result: AttributionResult) -> tuple[TokenRef, ...]:
    if result.tokens is None:
        raise ValueError(
            f"{result.method} result carries no tokens; attach them before "
            "computing masked-sentence metrics"
        )
    return result.tokens


def _require_target(result: AttributionResult) -> int:
    if result.target_token is None:
        raise ValueError(
            f"{result.method} result carries no target token; attach the "
            "model's top-1 prediction before computing metrics"
        )
    return result.target_token


def _target_prob(oracle, tokens, keep, target, config: MetricConfig) -> float:
    request = ValueRequest(
        tokens=tokens,
        keep=keep,
        strategy=config.strategy,
        targets=(target,),
        seed=config.seed,
    )
    return oracle.evaluate(request).target_probs[0]


def _top_list(oracle, tokens, keep, config: MetricConfig) -> tuple[tuple[int, float], ...]:
    request = ValueRequest(
        tokens=tokens,
        keep=keep,
        strategy=config.strategy,
        top_k=config.k,
        seed=config.seed,
    )
    return oracle.evaluate(request).top


def _probs_for(oracle, tokens, keep, targets, config: MetricConfig) -> tuple[float, ...]:
    request = ValueRequest(
        tokens=tokens,
        keep=keep,
        strategy=config.strategy,
        targets=targets,
        seed=config.seed,
    )
    return oracle.evaluate(request).target_probs


def _record_fidelity(oracle, result: AttributionResult, config: MetricConfig) -> float:
    tokens = _require_tokens(result)
    target = _require_target(result)
    full = (True,) * len(tokens)
    masked = top_tokens(result, config.t).keep
    return _target_prob(oracle, tokens, full, target, config) - _target_prob(
        oracle, tokens, masked, target, config
    )


def _record_divergence(oracle, result: AttributionResult, config: MetricConfig) -> float:
    tokens = _require_tokens(result)
    full = (True,) * len(tokens)
    masked = top_tokens(result, config.t).keep
    full_top = _top_list(oracle, tokens, full, config)
    ids = tuple(token_id for token_id, _ in full_top)
    masked_probs = _probs_for(oracle, tokens, masked, ids, config)
    return math.fsum(
        p_full - p_masked for (_, p_full), p_masked in zip(full_top, masked_probs)
    )


def _record_accuracy(oracle, result: AttributionResult, config: MetricConfig) -> float:
    tokens = _require_tokens(result)
    full = (True,) * len(tokens)
    masked = top_tokens(result, config.t).keep
    full_ids = {token_id for token_id, _ in _top_list(oracle, tokens, full, config)}
    masked_ids = {token_id for token_id, _ in _top_list(oracle, tokens, masked, config)}
    return len(full_ids & masked_ids) / config.k


def _mean_over(results, oracle, config, record_fn) -> float:
    oracle = memoized(oracle)
    deltas: list[float] = []
    failures = 0
    for result in results:
        try:
            deltas.append(record_fn(oracle, result, config))
        except OracleError as exc:
            failures += 1
            warnings.warn(f"skipping record after oracle failure: {exc}")
    if not deltas:
        raise ValueError("no records survived metric evaluation")
    if failures:
        warnings.warn(f"{failures} record(s) skipped due to oracle failures")
    return math.fsum(deltas) / len(deltas)


def fidelity(
    results: Sequence[AttributionResult], oracle: ValueOracle, config: MetricConfig
) -> float:
    """Mean drop of the predicted token's probability after top-t masking."""
    return _mean_over(results, oracle, config, _record_fidelity)


def prob_divergence_at_k(
    results: Sequence[AttributionResult], oracle: ValueOracle, config: MetricConfig
) -> float:
    """Mean summed probability drop over the full sentence's top-K tokens."""
    return _mean_over(results, oracle, config, _record_divergence)


def accuracy_at_k(
    results: Sequence[AttributionResult], oracle: ValueOracle, config: MetricConfig
) -> float:
    """Mean overlap ratio of top-K predictions between full and masked input."""
    return _mean_over(results, oracle, config, _record_accuracy)


@dataclass(frozen=True)
class SentenceMetrics:
    id: str
    n_tokens: int
    fid: float
    fid_rand: float
    div_at_k: float
    acc_at_k: float


@dataclass(frozen=True)
class MetricReport:
    """Per-sentence metric rows plus arithmetic-mean aggregates."""

    config: MetricConfig
    n: int
    records: tuple[SentenceMetrics, ...]
    fid: float
    fid_rand: float
    div_at_k: float
    acc_at_k: float
    skipped: tuple[str, ...] = ()


def metric_report(
    items: Sequence[tuple[str, AttributionResult]],
    oracle: ValueOracle,
    config: MetricConfig,
) -> MetricReport:
    """All four metrics per sentence and their dataset means.

    fid uses the configured strategy; fid_rand forces random replacement.
    Records whose oracle calls fail are skipped and listed in ``skipped``.
    """
    oracle = memoized(oracle)
    rand_config = replace(config, strategy=MaskStrategy.RANDOM_REPLACE)
    rows: list[SentenceMetrics] = []
    skipped: list[str] = []
    for sentence_id, result in items:
        try:
            rows.append(
                SentenceMetrics(
                    id=sentence_id,
                    n_tokens=len(result.ranks),
                    fid=_record_fidelity(oracle, result, config),
                    fid_rand=_record_fidelity(oracle, result, rand_config),
                    div_at_k=_record_divergence(oracle, result, config),
                    acc_at_k=_record_accuracy(oracle, result, config),
                )
            )
        except OracleError as exc:
            skipped.append(sentence_id)
            warnings.warn(f"skipping {sentence_id} after oracle failure: {exc}")
    if not rows:
        raise ValueError("no records survived metric evaluation")
    n = len(rows)
    return MetricReport(
        config=config,
        n=n,
        records=tuple(rows),
        fid=math.fsum(r.fid for r in rows) / n,
        fid_rand=math.fsum(r.fid_rand for r in rows) / n,
        div_at_k=math.fsum(r.div_at_k for r in rows) / n,
        acc_at_k=math.fsum(r.acc_at_k for r in rows) / n,
        skipped=tuple(skipped),
    )


@dataclass(frozen=True)
class SentencePair:
    """A minimally differing sentence pair with post-exclusion rank vectors."""

    sentence_a: str
    sentence_b: str
    predictions_equal: bool
    ranks_a: tuple[int, ...]
    ranks_b: tuple[int, ...]


@dataclass(frozen=True)
class CoherencyReport:
    equal_mean: float | None
    different_mean: float | None
    difference: float | None
    n_equal: int
    n_different: int
    n_skipped: int


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """Plain cosine over equal-length vectors; raises on a length mismatch."""
    if len(u) != len(v):
        raise ValueError(f"length mismatch: {len(u)} vs {len(v)}")
    if len(u) == 0:
        raise ValueError("cosine of empty vectors is undefined")
    dot = math.fsum(a * b for a, b in zip(u, v))
    norm_u = math.sqrt(math.fsum(a * a for a in u))
    norm_v = math.sqrt(math.fsum(b * b for b in v))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ValueError("cosine of a zero vector is undefined")
    return dot / (norm_u * norm_v)


def coherency(pairs: Sequence[SentencePair]) -> CoherencyReport:
    """Group-mean cosine similarity of rank vectors, split by whether the
    model predicted the same next token, and the equal-minus-different gap.

    Pairs whose post-exclusion rank vectors differ in length are skipped
    with a warning; an empty group reports its mean (and the difference) as
    absent.
    """
    groups: dict[bool, list[float]] = {True: [], False: []}
    skipped = 0
    for pair in pairs:
        try:
            similarity = cosine_similarity(pair.ranks_a, pair.ranks_b)
        except ValueError as exc:
            skipped += 1
            warnings.warn(
                f"skipping pair ({pair.sentence_a!r}, {pair.sentence_b!r}): {exc}"
            )
            continue
        groups[pair.predictions_equal].append(similarity)
    equal_mean = (
        math.fsum(groups[True]) / len(groups[True]) if groups[True] else None
    )
    different_mean = (
        math.fsum(groups[False]) / len(groups[False]) if groups[False] else None
    )
    difference = (
        equal_mean - different_mean
        if equal_mean is not None and different_mean is not None
        else None
    )
    return CoherencyReport(
        equal_mean=equal_mean,
        different_mean=different_mean,
        difference=difference,
        n_equal=len(groups[True]),
        n_different=len(groups[False]),
        n_skipped=skipped,
    )


@dataclass(frozen=True)
class AlignmentReport:
    """Distribution of the decisive token's importance rank."""

    rank_counts: tuple[tuple[int, int], ...]
    top_rank_share: float
    n: int
    n_rejected: int


def semantic_alignment(
    results: Sequence[AttributionResult],
    negation_positions: Sequence[int | None],
) -> AlignmentReport:
    """Rank distribution of the negation token across records where the
    model's prediction ignored it; positions are 0-based token indices,
    None rejects the record."""
    if len(results) != len(negation_positions):
        raise ValueError("results and positions must align")
    counts: dict[int, int] = {}
    used = 0
    rejected = 0
    for result, position in zip(results, negation_positions):
        if position is None or not 0 <= position < len(result.ranks):
            rejected += 1
            continue
        rank = result.ranks[position]
        counts[rank] = counts.get(rank, 0) + 1
        used += 1
    if used == 0:
        raise ValueError("no records carried a negation token")
    return AlignmentReport(
        rank_counts=tuple(sorted(counts.items())),
        top_rank_share=counts.get(1, 0) / used,
        n=used,
        n_rejected=rejected,
    )
