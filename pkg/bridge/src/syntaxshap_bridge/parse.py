"""Dependency-parse export: sentences in, CoNLL-U blocks out.

The parser pipeline is pluggable; the spaCy backend is used when the
library and an English model are installed, and any load failure is a
startup error rather than a silent fallback. Sentences whose parse does not
form a single rooted span go to a rejects sidecar instead of the output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Protocol

from .errors import BridgeStartupError


class ParsedWord(NamedTuple):
    form: str
    head: int  # 1-based head position, 0 for root
    deprel: str


class ParserBackend(Protocol):
    name: str

    def parse(self, sentence: str) -> list[ParsedWord]: ...


class SpacyParser:
    """Industrial English pipeline; requires spacy plus a trained model."""

    def __init__(self, model: str = "en_core_web_sm"):
        try:
            import spacy
        except ImportError as exc:
            raise BridgeStartupError(
                "spacy is not installed; install it (and an English model) "
                "or inject another parser backend"
            ) from exc
        try:
            self._nlp = spacy.load(model)
            version = spacy.__version__
        except Exception as exc:
            raise BridgeStartupError(f"could not load spaCy model {model!r}: {exc}") from exc
        self.name = f"spacy=={version}/{model}"

    def parse(self, sentence: str) -> list[ParsedWord]:
        doc = self._nlp(sentence)
        return [
            ParsedWord(
                form=token.text,
                head=0 if token.head is token else token.head.i + 1,
                deprel=token.dep_,
            )
            for token in doc
        ]


@dataclass
class ExportStats:
    written: int = 0
    rejected: int = 0
    skipped_empty: int = 0


def _block(sent_id: str, sentence: str, words: list[ParsedWord], parser_name: str) -> str:
    lines = [
        f"# sent_id = {sent_id}",
        f"# text = {sentence}",
        f"# parser = {parser_name}",
    ]
    for index, word in enumerate(words, start=1):
        lines.append(
            "\t".join(
                [str(index), word.form, "_", "_", "_", "_", str(word.head), word.deprel, "_", "_"]
            )
        )
    return "\n".join(lines) + "\n"


def export_parses(
    records: Iterable[dict],
    out_path: Path | str,
    parser: ParserBackend,
    rejects_path: Path | str | None = None,
) -> ExportStats:
    """Write one CoNLL-U block per parseable sentence record.

    ``records`` are {"id", "sentence"} dicts. Multi-span parses (root count
    other than one) land in the rejects sidecar; empty sentences are
    skipped and counted.
    """
    out_path = Path(out_path)
    rejects_path = Path(rejects_path) if rejects_path else out_path.with_suffix(".rejects.jsonl")
    stats = ExportStats()
    blocks: list[str] = []
    rejects: list[dict] = []
    for record in records:
        sentence = str(record["sentence"]).strip()
        if not sentence:
            stats.skipped_empty += 1
            continue
        words = parser.parse(sentence)
        roots = sum(1 for w in words if w.head == 0)
        if roots != 1:
            rejects.append(
                {"id": str(record["id"]), "reason": "multi_span", "roots": roots}
            )
            stats.rejected += 1
            continue
        blocks.append(_block(str(record["id"]), sentence, words, parser.name))
        stats.written += 1
    out_path.write_text("\n".join(blocks), encoding="utf-8")
    rejects_path.write_text(
        "".join(json.dumps(row) + "\n" for row in rejects), encoding="utf-8"
    )
    return stats


def load_jsonl(path: Path | str) -> list[dict]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows
