"""Dependency trees: CoNLL-U ingestion, leveling, subtoken expansion, dataset filtering.

A sentence is a rooted tree over 1-based word indices. The root sits at
level 1 and every other word at 1 + the level of its head, so the level of
a word is the number of head links between it and the root plus one.
Level 0 is reserved for the empty coalition and never holds a node.
"""

from __future__ import annotations

import math
import string
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import AlignmentError, ConlluParseError, TreeStructureError

#: Characters that disqualify a sentence during dataset filtering.
PUNCTUATION_CHARS = frozenset(string.punctuation)

#: Default cap on (expanded) token count during filtering.
DEFAULT_MAX_TOKENS = 15

_CONLLU_COLUMNS = 10


@dataclass(frozen=True)
class WordNode:
    """One word of a parsed sentence.

    ``head_index`` is the 1-based position of the syntactic head, 0 for the
    root. ``head_index == word_index`` is never valid.
    """

    word_index: int
    text: str
    head_index: int
    deprel: str = "dep"


@dataclass(frozen=True)
class DependencyTree:
    """A sentence as a leveled dependency tree over word indices.

    ``levels[i-1]`` is the level of word i, ``depth`` the maximum level, and
    ``level_sets[l-1]`` the ordered tuple of word indices at level l.
    """

    nodes: tuple[WordNode, ...]
    levels: tuple[int, ...]
    depth: int
    level_sets: tuple[tuple[int, ...], ...]

    @classmethod
    def from_nodes(cls, nodes: Sequence[WordNode]) -> "DependencyTree":
        """Build a tree from word nodes, computing levels by BFS from the root."""
        nodes = tuple(sorted(nodes, key=lambda w: w.word_index))
        n = len(nodes)
        if n == 0:
            raise TreeStructureError("empty sentence", kind="multi_span")
        if [w.word_index for w in nodes] != list(range(1, n + 1)):
            raise ConlluParseError("word indices must be consecutive from 1")
        roots = [w.word_index for w in nodes if w.head_index == 0]
        if len(roots) != 1:
            raise TreeStructureError(
                f"expected exactly one root, found {len(roots)}", kind="multi_span"
            )
        children: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
        for w in nodes:
            if w.head_index == w.word_index:
                raise TreeStructureError(
                    f"word {w.word_index} is its own head", kind="cycle"
                )
            if w.head_index != 0:
                if not 1 <= w.head_index <= n:
                    raise ConlluParseError(
                        f"word {w.word_index} has out-of-range head {w.head_index}"
                    )
                children[w.head_index].append(w.word_index)

        levels = [0] * n
        queue = deque([(roots[0], 1)])
        while queue:
            idx, level = queue.popleft()
            levels[idx - 1] = level
            for child in children[idx]:
                queue.append((child, level + 1))
        if any(l == 0 for l in levels):
            stranded = [i + 1 for i, l in enumerate(levels) if l == 0]
            raise TreeStructureError(
                f"head links of words {stranded} never reach the root", kind="cycle"
            )

        depth = max(levels)
        level_sets = tuple(
            tuple(i + 1 for i, l in enumerate(levels) if l == want)
            for want in range(1, depth + 1)
        )
        return cls(nodes=nodes, levels=tuple(levels), depth=depth, level_sets=level_sets)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(w.text for w in self.nodes)

    @property
    def root_index(self) -> int:
        return self.level_sets[0][0]

    def level_members(self, level: int) -> tuple[int, ...]:
        """Ordered word indices at ``level`` (empty tuple for level 0)."""
        if level == 0:
            return ()
        return self.level_sets[level - 1]


@dataclass(frozen=True)
class TokenNode:
    """One model token, owned by a word and inheriting its level.

    ``token_id`` is the model tokenizer's id when known (remote flows);
    word-level flows leave it None and positional ids are used downstream.
    """

    text: str
    word_index: int
    level: int
    token_id: int | None = None


@dataclass(frozen=True)
class TokenizedTree:
    """Word tree expanded so each tokenizer piece is its own feature.

    Duplicated subtoken nodes keep the owning word's level, so the depth and
    the level structure of the word tree are preserved. ``alignment[w-1]``
    is the 1-based inclusive (first, last) token range of word w.
    """

    tree: DependencyTree
    token_nodes: tuple[TokenNode, ...]
    alignment: tuple[tuple[int, int], ...]
    levels: tuple[int, ...] = field(init=False)
    level_sets: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        levels = tuple(t.level for t in self.token_nodes)
        level_sets = tuple(
            tuple(i + 1 for i, l in enumerate(levels) if l == want)
            for want in range(1, self.tree.depth + 1)
        )
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "level_sets", level_sets)

    def __len__(self) -> int:
        return len(self.token_nodes)

    @property
    def depth(self) -> int:
        return self.tree.depth

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(t.text for t in self.token_nodes)

    def level_members(self, level: int) -> tuple[int, ...]:
        if level == 0:
            return ()
        return self.level_sets[level - 1]


def split_conllu_blocks(document: str) -> list[tuple[str | None, str]]:
    """Split a CoNLL-U document into (sent_id, block_text) pairs.

    sent_id comes from a ``# sent_id = ...`` comment when present. Block
    text keeps comments and original line breaks; blank lines separate
    blocks.
    """
    blocks: list[tuple[str | None, str]] = []
    current: list[str] = []
    sent_id: str | None = None
    for line in document.splitlines():
        if line.strip() == "":
            if current:
                blocks.append((sent_id, "\n".join(current)))
                current, sent_id = [], None
            continue
        if line.startswith("# sent_id"):
            _, _, value = line.partition("=")
            sent_id = value.strip()
        current.append(line)
    if current:
        blocks.append((sent_id, "\n".join(current)))
    return blocks


def _parse_block_lines(lines: list[tuple[int, str]]) -> DependencyTree:
    nodes: list[WordNode] = []
    for line_number, line in lines:
        cols = line.split("\t")
        if len(cols) != _CONLLU_COLUMNS:
            raise ConlluParseError(
                f"expected {_CONLLU_COLUMNS} tab-separated columns, got {len(cols)}",
                line_number,
            )
        token_id = cols[0]
        # Multiword ranges ("1-2") and empty nodes ("1.1") carry no head links.
        if "-" in token_id or "." in token_id:
            continue
        try:
            word_index = int(token_id)
        except ValueError:
            raise ConlluParseError(f"bad token id {token_id!r}", line_number) from None
        try:
            head_index = int(cols[6])
        except ValueError:
            raise ConlluParseError(f"bad head {cols[6]!r}", line_number) from None
        nodes.append(
            WordNode(word_index=word_index, text=cols[1], head_index=head_index, deprel=cols[7])
        )
    if not nodes:
        raise ConlluParseError("block contains no word lines")
    return DependencyTree.from_nodes(nodes)


def parse_conllu(document: str) -> list[DependencyTree]:
    """Parse a CoNLL-U document into one leveled tree per sentence block.

    Raises ConlluParseError with the offending line number for malformed
    lines, and TreeStructureError for cycles or a root count other than one
    (the multi-span case).
    """
    trees: list[DependencyTree] = []
    current: list[tuple[int, str]] = []
    for line_number, line in enumerate(document.splitlines(), start=1):
        if line.strip() == "":
            if current:
                trees.append(_parse_block_lines(current))
                current = []
            continue
        if line.startswith("#"):
            continue
        current.append((line_number, line))
    if current:
        trees.append(_parse_block_lines(current))
    return trees


def to_conllu(tree: DependencyTree, sent_id: str | None = None, text: str | None = None) -> str:
    """Serialize a tree back to a 10-column CoNLL-U block.

    ``parse_conllu(to_conllu(t))`` recovers ``t``.
    """
    lines: list[str] = []
    if sent_id is not None:
        lines.append(f"# sent_id = {sent_id}")
    if text is not None:
        lines.append(f"# text = {text}")
    for w in tree.nodes:
        lines.append(
            "\t".join(
                [str(w.word_index), w.text, "_", "_", "_", "_", str(w.head_index), w.deprel, "_", "_"]
            )
        )
    return "\n".join(lines) + "\n"


def expand_subtokens(
    tree: DependencyTree, token_spans: Sequence[tuple]
) -> TokenizedTree:
    """Expand a word tree so each tokenizer piece is a distinct feature.

    ``token_spans`` lists (token_text, word_index) pairs — optionally
    (token_text, word_index, token_id) — in sentence order. Every word must
    own at least one contiguous run of tokens; each subtoken inherits the
    owning word's level.
    """
    n_words = len(tree)
    token_nodes: list[TokenNode] = []
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    previous_word = 0
    for position, span in enumerate(token_spans, start=1):
        text, word_index = span[0], span[1]
        token_id = span[2] if len(span) > 2 else None
        if not 1 <= word_index <= n_words:
            raise AlignmentError(f"token {text!r} references unknown word {word_index}")
        # A revisited word always goes backward first, so this also rejects
        # non-contiguous token ranges.
        if word_index < previous_word:
            raise AlignmentError(
                f"token spans out of order: word {word_index} after word {previous_word}"
            )
        previous_word = word_index
        first.setdefault(word_index, position)
        last[word_index] = position
        token_nodes.append(
            TokenNode(
                text=text,
                word_index=word_index,
                level=tree.levels[word_index - 1],
                token_id=token_id,
            )
        )
    missing = [w for w in range(1, n_words + 1) if w not in first]
    if missing:
        raise AlignmentError(f"words {missing} own no tokens")
    alignment = tuple((first[w], last[w]) for w in range(1, n_words + 1))
    return TokenizedTree(tree=tree, token_nodes=tuple(token_nodes), alignment=alignment)


def identity_spans(tree: DependencyTree) -> list[tuple[str, int]]:
    """One token per word, in order — the no-subtokenization alignment."""
    return [(w.text, w.word_index) for w in tree.nodes]


@dataclass(frozen=True)
class SentenceRecord:
    """A raw dataset sentence plus what filtering needs to know about it.

    ``n_tokens`` is the expanded token count when known (None falls back to
    a whitespace split); ``multi_span`` marks sentences whose parse did not
    form a single rooted tree.
    """

    id: str
    sentence: str
    n_tokens: int | None = None
    multi_span: bool = False

    @property
    def token_count(self) -> int:
        if self.n_tokens is not None:
            return self.n_tokens
        return len(self.sentence.split())


REJECT_PUNCTUATION = "punctuation"
REJECT_MULTI_SPAN = "multi_span"
REJECT_TOO_LONG = "too_long"


def filter_dataset(
    records: Iterable[SentenceRecord], max_tokens: int = DEFAULT_MAX_TOKENS
) -> tuple[list[SentenceRecord], list[tuple[SentenceRecord, str]]]:
    """Split records into kept and (record, reason) rejects.

    Rules, in the order applied: any punctuation character in the raw text,
    multi-span parse, token count above ``max_tokens``. Rejection is data,
    not failure.
    """
    kept: list[SentenceRecord] = []
    rejected: list[tuple[SentenceRecord, str]] = []
    for record in records:
        if any(ch in PUNCTUATION_CHARS for ch in record.sentence):
            rejected.append((record, REJECT_PUNCTUATION))
        elif record.multi_span:
            rejected.append((record, REJECT_MULTI_SPAN))
        elif record.token_count > max_tokens:
            rejected.append((record, REJECT_TOO_LONG))
        else:
            kept.append(record)
    return kept, rejected


def avg_dependency_distance(tree: DependencyTree) -> float:
    """Mean over non-root words of |word_index - head_index|."""
    if len(tree) < 2:
        raise ValueError("dependency distance is undefined for a single-node tree")
    distances = [
        abs(w.word_index - w.head_index) for w in tree.nodes if w.head_index != 0
    ]
    return math.fsum(distances) / len(distances)
