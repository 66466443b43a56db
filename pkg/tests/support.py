"""Shared test fixtures: independent reference implementations and generators.

The reference attribution here enumerates the allowed-coalition definition
literally (powerset union per level, set-dedup) and never calls the
engine's coalition code, so engine-vs-reference comparisons are two
genuinely different paths to the same numbers.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from collections import deque

import numpy as np

from syntaxshap.deptree import DependencyTree, WordNode
from syntaxshap.oracle import OracleMeta, ValueRequest, ValueResponse


def make_tree(heads, texts=None) -> DependencyTree:
    texts = texts or [f"w{i + 1}" for i in range(len(heads))]
    nodes = [
        WordNode(word_index=i + 1, text=texts[i], head_index=heads[i])
        for i in range(len(heads))
    ]
    return DependencyTree.from_nodes(nodes)


def bfs_levels(heads) -> list[int]:
    """Independent level computation: breadth-first from the root."""
    n = len(heads)
    children = {i: [] for i in range(1, n + 1)}
    root = None
    for i, h in enumerate(heads, start=1):
        if h == 0:
            root = i
        else:
            children[h].append(i)
    levels = [0] * n
    queue = deque([(root, 1)])
    while queue:
        node, level = queue.popleft()
        levels[node - 1] = level
        for child in children[node]:
            queue.append((child, level + 1))
    return levels


def chain_heads(n):
    return [0] + list(range(1, n))


def star_heads(n):
    return [0] + [1] * (n - 1)


def bushy_heads(rng: np.random.Generator, n: int):
    """Random level widths; each node hangs off a random node one level up."""
    if n == 1:
        return [0]
    heads = [0]
    previous_level = [1]
    remaining = n - 1
    while remaining:
        width = int(rng.integers(1, remaining + 1))
        level = []
        for _ in range(width):
            parent = int(rng.choice(previous_level))
            heads.append(parent)
            level.append(len(heads))
        previous_level = level
        remaining -= width
    return heads


def permute_labels(heads, rng: np.random.Generator):
    """Relabel nodes with a random permutation; structure is unchanged."""
    n = len(heads)
    perm = rng.permutation(n)
    new_heads = [0] * n
    for old in range(1, n + 1):
        new = int(perm[old - 1]) + 1
        h = heads[old - 1]
        new_heads[new - 1] = 0 if h == 0 else int(perm[h - 1]) + 1
    return new_heads


def random_heads(rng: np.random.Generator, n: int):
    """Random tree shape: chain, star, bushy, or random-parent; half relabeled."""
    kind = int(rng.integers(0, 4))
    if n == 1:
        heads = [0]
    elif kind == 0:
        heads = chain_heads(n)
    elif kind == 1:
        heads = star_heads(n)
    elif kind == 2:
        heads = bushy_heads(rng, n)
    else:
        heads = [0] + [int(rng.integers(1, i)) for i in range(2, n + 1)]
    if n > 1 and rng.integers(0, 2):
        heads = permute_labels(heads, rng)
    return heads


def random_tree(rng: np.random.Generator, max_n: int, min_n: int = 1) -> DependencyTree:
    n = int(rng.integers(min_n, max_n + 1))
    return make_tree(random_heads(rng, n))


class TableOracle:
    """Tabulated value function over kept-index sets; target id 0."""

    def __init__(self, table, vocab_size: int = 2, target: int = 0):
        self.table = {frozenset(k): float(v) for k, v in table.items()}
        self.target = target
        self._meta = OracleMeta(model="table", vocab_size=vocab_size)

    @property
    def metadata(self) -> OracleMeta:
        return self._meta

    def lookup(self, kept: frozenset[int]) -> float:
        return self.table[kept]

    def evaluate(self, request: ValueRequest) -> ValueResponse:
        kept = frozenset(p + 1 for p, keep in enumerate(request.keep) if keep)
        prob = self.table[kept]
        return ValueResponse(
            target_probs=tuple(
                prob if t == self.target else 0.0 for t in request.targets
            )
        )


def random_table_oracle(rng: np.random.Generator, n: int) -> TableOracle:
    table = {}
    for mask in range(1 << n):
        kept = frozenset(i + 1 for i in range(n) if mask >> i & 1)
        table[kept] = float(rng.uniform(0.0, 1.0))
    return TableOracle(table)


class ZeroOracle:
    """Always returns probability zero; identity element for sum_oracle."""

    def __init__(self, vocab_size: int = 2):
        self._meta = OracleMeta(model="zero", vocab_size=vocab_size)

    @property
    def metadata(self) -> OracleMeta:
        return self._meta

    def evaluate(self, request: ValueRequest) -> ValueResponse:
        return ValueResponse(target_probs=(0.0,) * len(request.targets))


class LevelMultisetOracle:
    """Value depends only on the multiset of kept token levels.

    Any two tokens at the same level are interchangeable for this oracle,
    which is exactly the premise of the per-level symmetry axiom.
    """

    def __init__(self, levels, salt: int = 0):
        self.levels = tuple(levels)
        self.salt = salt
        self._meta = OracleMeta(model="level-multiset", vocab_size=2)

    @property
    def metadata(self) -> OracleMeta:
        return self._meta

    def evaluate(self, request: ValueRequest) -> ValueResponse:
        kept_levels = tuple(
            sorted(self.levels[p] for p, keep in enumerate(request.keep) if keep)
        )
        digest = hashlib.blake2b(
            repr((self.salt, kept_levels)).encode(), digest_size=8
        ).digest()
        prob = int.from_bytes(digest, "big") / 2.0**64
        return ValueResponse(
            target_probs=tuple(prob if t == 0 else 0.0 for t in request.targets)
        )


class SpyOracle:
    """Delegates while recording every distinct keep vector seen."""

    def __init__(self, inner):
        self.inner = inner
        self.keeps: set[tuple[bool, ...]] = set()
        self.calls = 0

    @property
    def metadata(self) -> OracleMeta:
        return self.inner.metadata

    def evaluate(self, request: ValueRequest) -> ValueResponse:
        self.calls += 1
        self.keeps.add(request.keep)
        return self.inner.evaluate(request)


# --- definition-literal reference implementations ---------------------------


def reference_families(levels):
    """All allowed coalitions per level, straight from the definition:
    every powerset element of the level's tokens unioned with everything
    above (the empty subset included, deduplicated by set semantics)."""
    depth = max(levels)
    families = {0: {frozenset()}}
    for l in range(1, depth + 1):
        at_level = [i + 1 for i, lev in enumerate(levels) if lev == l]
        above = frozenset(i + 1 for i, lev in enumerate(levels) if lev < l)
        family = set()
        for mask in range(1 << len(at_level)):
            sigma = frozenset(
                at_level[b] for b in range(len(at_level)) if mask >> b & 1
            )
            family.add(above | sigma)
        families[l] = family
    return families


def reference_feature_coalitions(levels, index):
    """The coalitions feature ``index`` can join, as a plain set of sets."""
    families = reference_families(levels)
    level = levels[index - 1]
    domain = set()
    for p in range(level):
        domain |= families[p]
    at_level = [i + 1 for i, lev in enumerate(levels) if lev == level]
    above = frozenset(i + 1 for i, lev in enumerate(levels) if lev < level)
    for mask in range(1 << len(at_level)):
        sigma = frozenset(at_level[b] for b in range(len(at_level)) if mask >> b & 1)
        domain.add(above | (sigma - {index}))
    return domain


def reference_syntaxshap(levels, value_of):
    """Mean marginal contribution per feature over the reference domains."""
    phis = []
    for index in range(1, len(levels) + 1):
        domain = reference_feature_coalitions(levels, index)
        marginals = [
            value_of(members | {index}) - value_of(members) for members in domain
        ]
        phis.append(math.fsum(marginals) / len(domain))
    return phis


def permutation_shapley(n, value_of):
    """Classic Shapley values as the average marginal over all n! orders."""
    phis = []
    for index in range(1, n + 1):
        terms = []
        for perm in itertools.permutations(range(1, n + 1)):
            position = perm.index(index)
            before = frozenset(perm[:position])
            terms.append(value_of(before | {index}) - value_of(before))
        phis.append(math.fsum(terms) / math.factorial(n))
    return phis
