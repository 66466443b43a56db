"""Token attribution methods: tree-constrained Shapley, its level-weighted
variant, an exact-Shapley reference, and a seeded random baseline.

The tree-constrained value of feature i is the mean marginal contribution
over the coalitions that feature can join (see ``coalition``): the target
token's probability with the feature added minus without it, divided by the
closed-form coalition count. Marginal sums use math.fsum, so values are the
correctly rounded means of their addends — symmetric features at one level
receive bit-equal values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coalition import coalitions_for_feature
from .deptree import DependencyTree, TokenizedTree
from .errors import OracleError, SizeLimitError
from .oracle import (
    MaskStrategy,
    MemoizedOracle,
    TokenRef,
    ValueOracle,
    ValueRequest,
    memoized,
)

METHOD_SYNTAXSHAP = "syntaxshap"
METHOD_SYNTAXSHAP_W = "syntaxshap_w"
METHOD_EXACT_SHAPLEY = "exact_shapley"
METHOD_RANDOM = "random"
METHODS = frozenset(
    {METHOD_SYNTAXSHAP, METHOD_SYNTAXSHAP_W, METHOD_EXACT_SHAPLEY, METHOD_RANDOM}
)

#: exact_shapley enumerates 2^n subsets; refuse anything wider than this.
EXACT_SHAPLEY_MAX_FEATURES = 12


@dataclass(frozen=True)
class CallCounts:
    """Marginal pairs issued and distinct oracle evaluations performed."""

    pairs: int
    unique: int


@dataclass(frozen=True)
class AttributionResult:
    method: str
    tokens: tuple[TokenRef, ...] | None
    target_token: int | None
    values: tuple[float, ...]
    ranks: tuple[int, ...]
    oracle_calls: CallCounts
    seed: int
    levels: tuple[int, ...] | None = None


def ranks(values: Sequence[float]) -> tuple[int, ...]:
    """Importance ranks: 1 for the largest value, ties broken by lower index."""
    if len(values) == 0:
        raise ValueError("cannot rank an empty vector")
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    out = [0] * len(values)
    for rank, index in enumerate(order, start=1):
        out[index] = rank
    return tuple(out)


def tree_token_refs(tree: DependencyTree | TokenizedTree) -> tuple[TokenRef, ...]:
    """Oracle-facing token list for a tree; positional ids unless the
    tokenizer supplied real ones."""
    if isinstance(tree, TokenizedTree):
        return tuple(
            TokenRef(id=node.token_id if node.token_id is not None else pos, text=node.text)
            for pos, node in enumerate(tree.token_nodes)
        )
    return tuple(TokenRef(id=pos, text=text) for pos, text in enumerate(tree.texts))


class _ValueFunction:
    """f(S): target probability for the coalition's keep vector, memoized.

    A caller-supplied MemoizedOracle is used as-is (so its counters observe
    the run); anything else gets a run-local wrapper. The unique counter is
    reported as a delta, which also holds for shared wrappers.
    """

    def __init__(
        self,
        tokens: tuple[TokenRef, ...],
        oracle: ValueOracle,
        target: int,
        strategy: MaskStrategy,
        seed: int,
    ):
        self.tokens = tokens
        self.memo = oracle if isinstance(oracle, MemoizedOracle) else memoized(oracle)
        self._unique_before = self.memo.unique_evaluations
        self.target = target
        self.strategy = strategy
        self.seed = seed

    @property
    def new_unique(self) -> int:
        return self.memo.unique_evaluations - self._unique_before

    def __call__(self, members: frozenset[int]) -> float:
        keep = tuple(pos + 1 in members for pos in range(len(self.tokens)))
        request = ValueRequest(
            tokens=self.tokens,
            keep=keep,
            strategy=self.strategy,
            targets=(self.target,),
            seed=self.seed,
        )
        try:
            return self.memo.evaluate(request).target_probs[0]
        except OracleError as exc:
            raise type(exc)(
                f"{exc} (while evaluating coalition {sorted(members)})"
            ) from exc


def syntaxshap(
    tree: DependencyTree | TokenizedTree,
    oracle: ValueOracle,
    target: int,
    *,
    strategy: MaskStrategy = MaskStrategy.ZERO_ATTENTION,
    seed: int = 0,
) -> AttributionResult:
    """Mean marginal contribution of each token over its allowed coalitions."""
    values, counts, tokens = _tree_values(tree, oracle, target, strategy, seed)
    return AttributionResult(
        method=METHOD_SYNTAXSHAP,
        tokens=tokens,
        target_token=target,
        values=values,
        ranks=ranks(values),
        oracle_calls=counts,
        seed=seed,
        levels=tuple(tree.levels),
    )


def syntaxshap_weighted(
    tree: DependencyTree | TokenizedTree,
    oracle: ValueOracle,
    target: int,
    *,
    strategy: MaskStrategy = MaskStrategy.ZERO_ATTENTION,
    seed: int = 0,
) -> AttributionResult:
    """Level-weighted variant: the unweighted value of each token scaled by
    1/level, favoring the syntactic foundations near the root."""
    values, counts, tokens = _tree_values(tree, oracle, target, strategy, seed)
    weighted = tuple(v / l for v, l in zip(values, tree.levels))
    return AttributionResult(
        method=METHOD_SYNTAXSHAP_W,
        tokens=tokens,
        target_token=target,
        values=weighted,
        ranks=ranks(weighted),
        oracle_calls=counts,
        seed=seed,
        levels=tuple(tree.levels),
    )


def _tree_values(
    tree: DependencyTree | TokenizedTree,
    oracle: ValueOracle,
    target: int,
    strategy: MaskStrategy,
    seed: int,
) -> tuple[tuple[float, ...], CallCounts, tuple[TokenRef, ...]]:
    tokens = tree_token_refs(tree)
    value = _ValueFunction(tokens, oracle, target, strategy, seed)
    values: list[float] = []
    pairs = 0
    for index in range(1, len(tokens) + 1):
        coalitions = coalitions_for_feature(tree, index)
        marginals = [
            value(c.members | {index}) - value(c.members) for c in coalitions
        ]
        values.append(math.fsum(marginals) / len(coalitions))
        pairs += len(coalitions)
    counts = CallCounts(pairs=pairs, unique=value.new_unique)
    return tuple(values), counts, tokens


def exact_shapley(
    tokens: Sequence[TokenRef],
    oracle: ValueOracle,
    target: int,
    *,
    strategy: MaskStrategy = MaskStrategy.ZERO_ATTENTION,
    seed: int = 0,
    max_features: int = EXACT_SHAPLEY_MAX_FEATURES,
) -> AttributionResult:
    """Classic Shapley values by full subset enumeration (reference baseline)."""
    tokens = tuple(tokens)
    n = len(tokens)
    if n == 0:
        raise ValueError("cannot attribute an empty token list")
    if n > max_features:
        raise SizeLimitError(
            f"exact Shapley over {n} features needs {n * 2 ** (n - 1)} pairs; "
            f"capped at {max_features} features"
        )
    value = _ValueFunction(tokens, oracle, target, strategy, seed)
    factorial = math.factorial
    weights = [
        factorial(s) * factorial(n - s - 1) / factorial(n) for s in range(n)
    ]
    values: list[float] = []
    pairs = 0
    for index in range(1, n + 1):
        others = [j for j in range(1, n + 1) if j != index]
        terms: list[float] = []
        for mask in range(1 << len(others)):
            subset = frozenset(others[b] for b in range(len(others)) if mask >> b & 1)
            marginal = value(subset | {index}) - value(subset)
            terms.append(weights[len(subset)] * marginal)
            pairs += 1
        values.append(math.fsum(terms))
    counts = CallCounts(pairs=pairs, unique=value.new_unique)
    return AttributionResult(
        method=METHOD_EXACT_SHAPLEY,
        tokens=tokens,
        target_token=target,
        values=tuple(values),
        ranks=ranks(values),
        oracle_calls=counts,
        seed=seed,
    )


def random_attribution(
    n: int,
    seed: int,
    tokens: Sequence[TokenRef] | None = None,
    target: int | None = None,
) -> AttributionResult:
    """Normally distributed token importances from a seeded generator."""
    if n < 1:
        raise ValueError("need at least one token")
    if tokens is not None and len(tokens) != n:
        raise ValueError(f"token list length {len(tokens)} != n {n}")
    rng = np.random.default_rng(seed)
    values = tuple(float(v) for v in rng.standard_normal(n))
    return AttributionResult(
        method=METHOD_RANDOM,
        tokens=tuple(tokens) if tokens is not None else None,
        target_token=target,
        values=values,
        ranks=ranks(values),
        oracle_calls=CallCounts(pairs=0, unique=0),
        seed=seed,
    )


def fetch_top_prediction(
    tokens: Sequence[TokenRef],
    oracle: ValueOracle,
    *,
    strategy: MaskStrategy = MaskStrategy.ZERO_ATTENTION,
    seed: int = 0,
) -> tuple[int, float]:
    """The model's argmax next token (id, probability) for the full sentence."""
    tokens = tuple(tokens)
    request = ValueRequest(
        tokens=tokens,
        keep=(True,) * len(tokens),
        strategy=strategy,
        top_k=1,
        seed=seed,
    )
    response = oracle.evaluate(request)
    if not response.top:
        raise OracleError("oracle returned an empty top list for top_k=1")
    return response.top[0]


def aggregate_to_words(
    result: AttributionResult, tree: TokenizedTree
) -> tuple[float, ...]:
    """Optional word-level view: sum of subtoken values per owning word."""
    if len(result.values) != len(tree):
        raise ValueError("result and tree disagree on token count")
    sums = [0.0] * len(tree.tree)
    for value, node in zip(result.values, tree.token_nodes):
        sums[node.word_index - 1] += value
    return tuple(sums)
