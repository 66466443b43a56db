"""Tree-constrained coalition enumeration and closed-form update counts.

A coalition at level l contains every token above level l and any non-empty
subset of the level-l tokens; the empty coalition is counted once, at the
virtual level 0. Enumerating without the empty-subset duplicates makes the
family sizes match the closed-form counts literally: |family(l)| = 2^n_l - 1
for l >= 1, and the per-feature coalition count at level l is

    N_l = sum(2^n_p for p in 0..l-1) + 2^(n_l - 1) - l      (n_0 = 0)

Works over word trees and token-expanded trees alike; any object exposing
``levels`` (1-based per feature), ``depth`` and ``level_members(l)`` fits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Protocol, Sequence

from .errors import SizeLimitError

#: Hard cap on the number of features at one level; enumeration is
#: exponential in level width, so fail loudly well past realistic inputs.
LEVEL_WIDTH_CAP = 20


class LeveledTree(Protocol):
    levels: tuple[int, ...]

    @property
    def depth(self) -> int: ...

    def level_members(self, level: int) -> tuple[int, ...]: ...

    def __len__(self) -> int: ...


@dataclass(frozen=True)
class Coalition:
    """An order-independent set of 1-based token indices."""

    members: frozenset[int]

    @classmethod
    def of(cls, *indices: int) -> "Coalition":
        return cls(frozenset(indices))

    def __contains__(self, index: int) -> bool:
        return index in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    @property
    def sort_key(self) -> tuple[int, ...]:
        return tuple(sorted(self.members))

    def with_member(self, index: int) -> "Coalition":
        return Coalition(self.members | {index})


@dataclass(frozen=True)
class CoalitionFamily:
    level: int
    coalitions: tuple[Coalition, ...]

    def __len__(self) -> int:
        return len(self.coalitions)

    def __iter__(self) -> Iterator[Coalition]:
        return iter(self.coalitions)


@dataclass(frozen=True)
class UpdateCount:
    level: int
    count: int


@dataclass(frozen=True)
class EvaluationBudget:
    """Marginal-pair count for the tree vs. the naive all-subsets count."""

    pair_count: int
    naive_count: int


def _check_level(tree: LeveledTree, level: int) -> None:
    if not 0 <= level <= tree.depth:
        raise ValueError(f"level {level} outside [0, {tree.depth}]")


def _check_width(members: Sequence[int], level: int) -> None:
    if len(members) > LEVEL_WIDTH_CAP:
        raise SizeLimitError(
            f"level {level} has {len(members)} features; "
            f"enumeration capped at {LEVEL_WIDTH_CAP} per level"
        )


def _members_below(tree: LeveledTree, level: int) -> frozenset[int]:
    return frozenset(i + 1 for i, l in enumerate(tree.levels) if l < level)


def iter_coalitions_at_level(tree: LeveledTree, level: int) -> Iterator[Coalition]:
    """Lazily yield the level's coalitions (enumeration order unspecified)."""
    _check_level(tree, level)
    if level == 0:
        yield Coalition(frozenset())
        return
    base = _members_below(tree, level)
    members = tree.level_members(level)
    _check_width(members, level)
    for mask in range(1, 1 << len(members)):
        subset = frozenset(members[b] for b in range(len(members)) if mask >> b & 1)
        yield Coalition(base | subset)


def coalitions_at_level(tree: LeveledTree, level: int) -> CoalitionFamily:
    """All allowed coalitions at ``level``, sorted by member order.

    Level 0 is exactly {{}}; levels >= 1 omit the empty level subset (it
    duplicates the previous level's full coalition), giving 2^n_l - 1
    coalitions.
    """
    coalitions = sorted(iter_coalitions_at_level(tree, level), key=lambda c: c.sort_key)
    return CoalitionFamily(level=level, coalitions=tuple(coalitions))


def coalition_level(members: Iterable[int], levels: Sequence[int]) -> int:
    """The level a coalition belongs to: its deepest member's level (0 if empty)."""
    return max((levels[i - 1] for i in members), default=0)


def is_allowed_coalition(members: Iterable[int], levels: Sequence[int]) -> bool:
    """Whether a set of indices is an allowed coalition of its own level."""
    members = frozenset(members)
    level = coalition_level(members, levels)
    if level == 0:
        return not members
    required = {i + 1 for i, l in enumerate(levels) if l < level}
    return required <= members


def coalitions_for_feature(tree: LeveledTree, index: int) -> tuple[Coalition, ...]:
    """The deduplicated coalitions feature ``index`` can join.

    Union of every family strictly below the feature's level with the
    feature's own-level family after removing the feature. The result never
    contains the feature and has exactly ``count_updates`` elements; order
    is (coalition level, member order) for reproducible caching.
    """
    if not 1 <= index <= len(tree.levels):
        raise ValueError(f"feature index {index} outside [1, {len(tree.levels)}]")
    level = tree.levels[index - 1]
    seen: set[frozenset[int]] = set()
    out: list[Coalition] = []
    for p in range(level):
        for coalition in iter_coalitions_at_level(tree, p):
            if coalition.members not in seen:
                seen.add(coalition.members)
                out.append(coalition)
    for coalition in iter_coalitions_at_level(tree, level):
        stripped = coalition.members - {index}
        if stripped not in seen:
            seen.add(stripped)
            out.append(Coalition(stripped))
    out.sort(key=lambda c: (coalition_level(c.members, tree.levels), c.sort_key))
    return tuple(out)


def count_updates(tree: LeveledTree, level: int) -> UpdateCount:
    """Closed-form number of coalitions a level-``level`` feature can join."""
    _check_level(tree, level)
    if level == 0:
        raise ValueError("features never sit at level 0")
    sizes = [0] + [len(tree.level_members(l)) for l in range(1, tree.depth + 1)]
    count = sum(2 ** sizes[p] for p in range(level)) + 2 ** (sizes[level] - 1) - level
    return UpdateCount(level=level, count=count)


def predicted_evaluations(tree: LeveledTree) -> EvaluationBudget:
    """Exact marginal-pair count sum(n_l * N_l) and the naive n * 2^(n-1)."""
    n = len(tree.levels)
    pairs = sum(
        len(tree.level_members(l)) * count_updates(tree, l).count
        for l in range(1, tree.depth + 1)
    )
    return EvaluationBudget(pair_count=pairs, naive_count=n * 2 ** (n - 1))
