"""Command-line orchestration: explain, evaluate, pairs, align, counts.

Configuration comes from a TOML file plus flag overrides (flags win); every
run is seeded and emits deterministic JSON, so identical configs produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import jsonio
from .attribution import (
    METHOD_EXACT_SHAPLEY,
    METHOD_RANDOM,
    METHOD_SYNTAXSHAP,
    METHOD_SYNTAXSHAP_W,
    METHODS,
    AttributionResult,
    CallCounts,
    exact_shapley,
    fetch_top_prediction,
    random_attribution,
    syntaxshap,
    syntaxshap_weighted,
)
from .coalition import predicted_evaluations
from .deptree import (
    DEFAULT_MAX_TOKENS,
    DependencyTree,
    SentenceRecord,
    TokenizedTree,
    expand_subtokens,
    filter_dataset,
    identity_spans,
    parse_conllu,
    split_conllu_blocks,
)
from .errors import OracleError, SizeLimitError, SyntaxShapError, TreeStructureError
from .metrics import (
    MetricConfig,
    SentencePair,
    coherency,
    metric_report,
    semantic_alignment,
)
from .oracle import MaskStrategy, RemoteOracle, TokenRef, remote_oracle, toy_hash_lm

AUTH_TOKEN_ENV = "SYNTAXSHAP_ORACLE_TOKEN"

_DEFAULTS: dict[str, Any] = {
    "oracle": "toy",
    "methods": [METHOD_SYNTAXSHAP, METHOD_SYNTAXSHAP_W],
    "seeds": [0, 1, 2, 3],
    "t": 0.5,
    "k": 10,
    "strategy": MaskStrategy.ZERO_ATTENTION.value,
    "max_tokens": DEFAULT_MAX_TOKENS,
    "min_tokens": 0,
    "workers": 1,
    "toy_seed": 1234,
    "toy_vocab": 50,
    "out": "out",
    "seed": 0,
}

REJECT_TOO_SHORT = "too_short"


@dataclass
class RunConfig:
    command: str
    dataset: Path | None = None
    conllu: Path | None = None
    pairs: Path | None = None
    alignment: Path | None = None
    explanations: Path | None = None
    oracle: str = "toy"
    methods: list[str] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    t: float = 0.5
    k: int = 10
    strategy: str = MaskStrategy.ZERO_ATTENTION.value
    max_tokens: int = DEFAULT_MAX_TOKENS
    min_tokens: int = 0
    out: Path = Path("out")
    workers: int = 1
    toy_seed: int = 1234
    toy_vocab: int = 50
    seed: int = 0

    def validate(self) -> None:
        for name in ("dataset", "conllu", "pairs", "alignment", "explanations"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(f"--{name} path does not exist: {path}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        unknown = set(self.methods) - METHODS
        if unknown:
            raise ValueError(
                f"unknown methods {sorted(unknown)}; choose from {sorted(METHODS)}"
            )
        MaskStrategy(self.strategy)
        if self.workers < 1:
            raise ValueError("--workers must be >= 1")


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip() != ""]


def _parse_str_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip() != ""]


def _load_config_file(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "rb") as handle:
        data = tomllib.load(handle)
    if "methods" in data and isinstance(data["methods"], str):
        data["methods"] = _parse_str_list(data["methods"])
    if "seeds" in data and isinstance(data["seeds"], str):
        data["seeds"] = _parse_int_list(data["seeds"])
    return data


def _resolve(args: argparse.Namespace) -> RunConfig:
    file_values = _load_config_file(getattr(args, "config", None))
    merged: dict[str, Any] = dict(_DEFAULTS)
    merged.update(file_values)
    for key, value in vars(args).items():
        if key in ("config", "command", "func") or value is None:
            continue
        merged[key] = value
    path_keys = ("dataset", "conllu", "pairs", "alignment", "explanations", "out")
    config = RunConfig(
        command=args.command,
        **{
            k: (Path(v) if k in path_keys and v is not None else v)
            for k, v in merged.items()
            if k in RunConfig.__dataclass_fields__ and k != "command"
        },
    )
    config.validate()
    return config


def make_oracle(config: RunConfig):
    if config.oracle == "toy":
        return toy_hash_lm(seed=config.toy_seed, vocab_size=config.toy_vocab)
    if config.oracle.startswith("http://") or config.oracle.startswith("https://"):
        return remote_oracle(config.oracle, auth_token=os.environ.get(AUTH_TOKEN_ENV))
    raise ValueError(f"--oracle must be 'toy' or an http(s) URL, got {config.oracle!r}")


def load_dataset(path: Path) -> list[dict]:
    records = []
    for line_number, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        row = json.loads(line)
        if "id" not in row or "sentence" not in row:
            raise ValueError(f"{path}:{line_number}: record needs 'id' and 'sentence'")
        records.append(row)
    return records


def load_trees(path: Path) -> list[tuple[str | None, DependencyTree | TreeStructureError]]:
    """Parse each CoNLL-U block, keeping structural failures as data."""
    out: list[tuple[str | None, DependencyTree | TreeStructureError]] = []
    for sent_id, block in split_conllu_blocks(path.read_text(encoding="utf-8")):
        try:
            (tree,) = parse_conllu(block)
            out.append((sent_id, tree))
        except TreeStructureError as exc:
            out.append((sent_id, exc))
    return out


def match_trees(
    records: Sequence[dict],
    blocks: Sequence[tuple[str | None, DependencyTree | TreeStructureError]],
    id_suffix: str = "",
) -> list[DependencyTree | TreeStructureError]:
    """Pair dataset records with tree blocks by sent_id when every block has
    one, else by file order."""
    if blocks and all(sent_id is not None for sent_id, _ in blocks):
        by_id = {sent_id: tree for sent_id, tree in blocks}
        out = []
        for record in records:
            key = f"{record['id']}{id_suffix}"
            if key not in by_id:
                raise ValueError(f"no CoNLL-U block with sent_id {key!r}")
            out.append(by_id[key])
        return out
    if len(blocks) != len(records):
        raise ValueError(
            f"{len(records)} dataset records but {len(blocks)} CoNLL-U blocks; "
            "add sent_id comments or align the files"
        )
    return [tree for _, tree in blocks]


@dataclass
class SentenceItem:
    id: str
    sentence: str
    tree: TokenizedTree | None
    record: SentenceRecord


def _spans_for(record: dict, tree: DependencyTree, oracle) -> list[tuple]:
    if "tokens" in record:
        return [
            (t["text"], int(t["word"]), int(t["id"])) if "id" in t else (t["text"], int(t["word"]))
            for t in record["tokens"]
        ]
    if isinstance(oracle, RemoteOracle):
        return oracle.tokenize([w.text for w in tree.nodes])
    return identity_spans(tree)


def assemble_sentences(
    records: Sequence[dict],
    trees: Sequence[DependencyTree | TreeStructureError],
    oracle,
) -> list[SentenceItem]:
    items = []
    for record, tree in zip(records, trees):
        if isinstance(tree, TreeStructureError):
            items.append(
                SentenceItem(
                    id=str(record["id"]),
                    sentence=record["sentence"],
                    tree=None,
                    record=SentenceRecord(
                        id=str(record["id"]), sentence=record["sentence"], multi_span=True
                    ),
                )
            )
            continue
        tokenized = expand_subtokens(tree, _spans_for(record, tree, oracle))
        items.append(
            SentenceItem(
                id=str(record["id"]),
                sentence=record["sentence"],
                tree=tokenized,
                record=SentenceRecord(
                    id=str(record["id"]),
                    sentence=record["sentence"],
                    n_tokens=len(tokenized),
                ),
            )
        )
    return items


def apply_filters(
    items: Sequence[SentenceItem], config: RunConfig
) -> tuple[list[SentenceItem], list[tuple[str, str]]]:
    by_id = {item.id: item for item in items}
    kept_records, rejected = filter_dataset(
        [item.record for item in items], max_tokens=config.max_tokens
    )
    rejects = [(record.id, reason) for record, reason in rejected]
    kept: list[SentenceItem] = []
    for record in kept_records:
        item = by_id[record.id]
        if config.min_tokens and record.token_count < config.min_tokens:
            rejects.append((record.id, REJECT_TOO_SHORT))
        else:
            kept.append(item)
    return kept, rejects


def _safe_name(raw: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", raw)


def _compute_result(
    item: SentenceItem, method: str, seed: int, oracle, strategy: MaskStrategy
) -> AttributionResult:
    tree = item.tree
    assert tree is not None
    tokens = tuple(
        TokenRef(id=node.token_id if node.token_id is not None else pos, text=node.text)
        for pos, node in enumerate(tree.token_nodes)
    )
    if method == METHOD_RANDOM:
        target, _ = fetch_top_prediction(tokens, oracle, strategy=strategy, seed=seed)
        return random_attribution(len(tokens), seed, tokens=tokens, target=target)
    target, _ = fetch_top_prediction(tokens, oracle, strategy=strategy, seed=seed)
    if method == METHOD_SYNTAXSHAP:
        return syntaxshap(tree, oracle, target, strategy=strategy, seed=seed)
    if method == METHOD_SYNTAXSHAP_W:
        return syntaxshap_weighted(tree, oracle, target, strategy=strategy, seed=seed)
    if method == METHOD_EXACT_SHAPLEY:
        return exact_shapley(tokens, oracle, target, strategy=strategy, seed=seed)
    raise ValueError(f"unknown method {method!r}")


def _result_payload(item_id: str, result: AttributionResult) -> dict:
    assert result.tokens is not None
    return {
        "id": item_id,
        "tokens": [t.text for t in result.tokens],
        "token_ids": [t.id for t in result.tokens],
        "method": result.method,
        "seed": result.seed,
        "target_token": result.target_token,
        "values": list(result.values),
        "ranks": list(result.ranks),
        "oracle_calls": {
            "pairs": result.oracle_calls.pairs,
            "unique": result.oracle_calls.unique,
        },
    }


def _explain_sentences(
    kept: Sequence[SentenceItem], config: RunConfig, oracle
) -> tuple[list[tuple[str, dict]], list[dict]]:
    strategy = MaskStrategy(config.strategy)

    def one(item: SentenceItem) -> tuple[list[tuple[str, dict]], list[dict]]:
        outputs: list[tuple[str, dict]] = []
        errors: list[dict] = []
        for seed in config.seeds:
            for method in config.methods:
                try:
                    result = _compute_result(item, method, seed, oracle, strategy)
                except (SizeLimitError, OracleError) as exc:
                    errors.append(
                        {"id": item.id, "method": method, "seed": seed, "error": str(exc)}
                    )
                    continue
                name = f"{_safe_name(item.id)}__{method}__seed{seed}.json"
                outputs.append((name, _result_payload(item.id, result)))
        return outputs, errors

    all_outputs: list[tuple[str, dict]] = []
    all_errors: list[dict] = []
    if config.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as pool:
            for outputs, errors in pool.map(one, kept):
                all_outputs.extend(outputs)
                all_errors.extend(errors)
    else:
        for item in kept:
            outputs, errors = one(item)
            all_outputs.extend(outputs)
            all_errors.extend(errors)
    all_outputs.sort(key=lambda pair: pair[0])
    all_errors.sort(key=lambda row: (row["id"], row["method"], row["seed"]))
    return all_outputs, all_errors


def cmd_explain(config: RunConfig) -> int:
    if config.dataset is None or config.conllu is None:
        raise ValueError("explain requires --dataset and --conllu")
    oracle = make_oracle(config)
    records = load_dataset(config.dataset)
    trees = match_trees(records, load_trees(config.conllu))
    items = assemble_sentences(records, trees, oracle)
    kept, rejects = apply_filters(items, config)

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs, errors = _explain_sentences(kept, config, oracle)
    for name, payload in outputs:
        jsonio.write_json(out / name, payload)
    jsonio.write_jsonl(
        out / "rejects.jsonl",
        [{"id": rid, "reason": reason} for rid, reason in sorted(rejects)],
    )
    summary = {
        "command": "explain",
        "n_input": len(items),
        "n_explained": len(kept),
        "n_rejected": len(rejects),
        "n_method_errors": len(errors),
        "methods": sorted(config.methods),
        "seeds": list(config.seeds),
        "strategy": config.strategy,
        "max_tokens": config.max_tokens,
        "oracle": oracle.metadata.model,
        "method_errors": errors,
    }
    jsonio.write_json(out / "summary.json", summary)
    print(
        f"explained {len(kept)} sentence(s), rejected {len(rejects)}, "
        f"{len(errors)} method error(s) -> {out}"
    )
    if items and not kept:
        return 1
    return 0


def _load_explanation(path: Path) -> tuple[str, AttributionResult]:
    payload = json.loads(path.read_text(encoding="utf-8"))
    tokens = tuple(
        TokenRef(id=token_id, text=text)
        for token_id, text in zip(payload["token_ids"], payload["tokens"])
    )
    result = AttributionResult(
        method=payload["method"],
        tokens=tokens,
        target_token=payload["target_token"],
        values=tuple(payload["values"]),
        ranks=tuple(payload["ranks"]),
        oracle_calls=CallCounts(**payload["oracle_calls"]),
        seed=payload["seed"],
    )
    return payload["id"], result


def cmd_evaluate(config: RunConfig) -> int:
    if config.dataset is None or config.conllu is None:
        if config.explanations is None:
            raise ValueError(
                "evaluate requires --dataset and --conllu, or --explanations"
            )
    oracle = make_oracle(config)
    out = Path(config.out)

    items_by_key: dict[tuple[str, int], list[tuple[str, AttributionResult]]] = {}
    if config.explanations is not None:
        files = sorted(Path(config.explanations).glob("*__*__seed*.json"))
        loaded = [_load_explanation(f) for f in files]
        wanted: list[str] = []
        if config.dataset is not None:
            wanted = [str(r["id"]) for r in load_dataset(config.dataset)]
            have = {item_id for item_id, _ in loaded}
            absent = [rid for rid in wanted if rid not in have]
            if absent:
                raise ValueError(f"missing explanations for ids: {absent}")
        for item_id, result in loaded:
            if result.method in config.methods and result.seed in config.seeds:
                items_by_key.setdefault((result.method, result.seed), []).append(
                    (item_id, result)
                )
    else:
        records = load_dataset(config.dataset)
        if not records:
            raise ValueError("dataset is empty; nothing to evaluate")
        trees = match_trees(records, load_trees(config.conllu))
        sentences = assemble_sentences(records, trees, oracle)
        kept, _ = apply_filters(sentences, config)
        if not kept:
            raise ValueError("every sentence was filtered out; nothing to evaluate")
        strategy = MaskStrategy(config.strategy)
        for seed in config.seeds:
            for method in config.methods:
                rows = []
                for item in kept:
                    rows.append(
                        (item.id, _compute_result(item, method, seed, oracle, strategy))
                    )
                items_by_key[(method, seed)] = rows

    if not items_by_key:
        raise ValueError("no explanations matched the requested methods and seeds")

    out.mkdir(parents=True, exist_ok=True)
    per_method: dict[str, dict[str, dict[int, float]]] = {}
    for (method, seed), rows in sorted(items_by_key.items()):
        metric_config = MetricConfig(
            t=config.t, k=config.k, strategy=MaskStrategy(config.strategy), seed=seed
        )
        report = metric_report(rows, oracle, metric_config)
        _write_report(out, method, seed, report)
        for metric in ("fid", "fid_rand", "div_at_k", "acc_at_k"):
            per_method.setdefault(method, {}).setdefault(metric, {})[seed] = getattr(
                report, metric
            )

    summary: dict[str, Any] = {
        "command": "evaluate",
        "t": config.t,
        "k": config.k,
        "strategy": config.strategy,
        "seeds": list(config.seeds),
        "methods": {},
    }
    for method in sorted(per_method):
        summary["methods"][method] = {
            metric: _spread(list(values.values())) | {
                "per_seed": {str(s): v for s, v in sorted(values.items())}
            }
            for metric, values in per_method[method].items()
        }
    jsonio.write_json(out / "summary.json", summary)
    print(f"evaluated {len(items_by_key)} (method, seed) combination(s) -> {out}")
    return 0


def _spread(values: list[float]) -> dict[str, float]:
    mean = math.fsum(values) / len(values)
    variance = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return {"mean": mean, "variance": variance, "std": math.sqrt(variance)}


def _write_report(out: Path, method: str, seed: int, report) -> None:
    base = f"metrics_{method}_seed{seed}"
    jsonio.write_json(
        out / f"{base}.json",
        {
            "method": method,
            "seed": seed,
            "t": report.config.t,
            "k": report.config.k,
            "strategy": report.config.strategy.value,
            "n": report.n,
            "fid": report.fid,
            "fid_rand": report.fid_rand,
            "div_at_k": report.div_at_k,
            "acc_at_k": report.acc_at_k,
            "skipped": list(report.skipped),
            "records": [
                {
                    "id": r.id,
                    "n_tokens": r.n_tokens,
                    "fid": r.fid,
                    "fid_rand": r.fid_rand,
                    "div_at_k": r.div_at_k,
                    "acc_at_k": r.acc_at_k,
                }
                for r in report.records
            ],
        },
    )
    lines = ["id,n_tokens,fid,fid_rand,div_at_k,acc_at_k"]
    for r in report.records:
        lines.append(
            f"{r.id},{r.n_tokens},{jsonio.format_float(r.fid)},"
            f"{jsonio.format_float(r.fid_rand)},{jsonio.format_float(r.div_at_k)},"
            f"{jsonio.format_float(r.acc_at_k)}"
        )
    lines.append(
        f"MEAN,{report.n},{jsonio.format_float(report.fid)},"
        f"{jsonio.format_float(report.fid_rand)},{jsonio.format_float(report.div_at_k)},"
        f"{jsonio.format_float(report.acc_at_k)}"
    )
    (out / f"{base}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _exclusion_set(raw) -> set[str]:
    if isinstance(raw, str):
        return {raw}
    return {str(item) for item in raw}


def cmd_pairs(config: RunConfig) -> int:
    if config.pairs is None or config.conllu is None:
        raise ValueError("pairs requires --pairs and --conllu")
    oracle = make_oracle(config)
    strategy = MaskStrategy(config.strategy)
    seed = config.seeds[0]
    pair_rows = jsonio.read_jsonl(config.pairs)
    blocks = load_trees(config.conllu)

    sides_a = [{"id": str(r["id"]), "sentence": r["sentence_a"]} for r in pair_rows]
    sides_b = [{"id": str(r["id"]), "sentence": r["sentence_b"]} for r in pair_rows]
    if blocks and all(sent_id is not None for sent_id, _ in blocks):
        trees_a = match_trees(sides_a, blocks, id_suffix=".a")
        trees_b = match_trees(sides_b, blocks, id_suffix=".b")
    else:
        if len(blocks) != 2 * len(pair_rows):
            raise ValueError(
                f"{len(pair_rows)} pairs need {2 * len(pair_rows)} CoNLL-U blocks "
                f"(a,b interleaved), found {len(blocks)}"
            )
        trees_a = [tree for _, tree in blocks[0::2]]
        trees_b = [tree for _, tree in blocks[1::2]]

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    usable: list[tuple[int, dict]] = []
    skipped_records = 0
    for position, (row, tree_a, tree_b) in enumerate(zip(pair_rows, trees_a, trees_b)):
        malformed = (
            isinstance(tree_a, TreeStructureError)
            or isinstance(tree_b, TreeStructureError)
            or "negation_token" not in row
        )
        if malformed:
            skipped_records += 1
        else:
            usable.append((position, row))

    reports = {}
    for method in sorted(config.methods):
        built: list[SentencePair] = []
        for position, row in usable:
            tree_a, tree_b = trees_a[position], trees_b[position]
            exclude = _exclusion_set(row["negation_token"])
            item_a = assemble_sentences([sides_a[position]], [tree_a], oracle)[0]
            item_b = assemble_sentences([sides_b[position]], [tree_b], oracle)[0]
            assert item_a.tree is not None and item_b.tree is not None
            result_a = _compute_result(item_a, method, seed, oracle, strategy)
            result_b = _compute_result(item_b, method, seed, oracle, strategy)
            built.append(
                SentencePair(
                    sentence_a=row["sentence_a"],
                    sentence_b=row["sentence_b"],
                    predictions_equal=result_a.target_token == result_b.target_token,
                    ranks_a=_excluded_ranks(result_a, exclude),
                    ranks_b=_excluded_ranks(result_b, exclude),
                )
            )
        report = coherency(built)
        reports[method] = report
        jsonio.write_json(
            out / f"coherency_{method}.json",
            {
                "method": method,
                "seed": seed,
                "equal_mean": report.equal_mean,
                "different_mean": report.different_mean,
                "difference": report.difference,
                "n_equal": report.n_equal,
                "n_different": report.n_different,
                "n_skipped_pairs": report.n_skipped,
                "n_skipped_records": skipped_records,
            },
        )
    for method, report in sorted(reports.items()):
        print(
            f"{method}: equal={_fmt_opt(report.equal_mean)} "
            f"different={_fmt_opt(report.different_mean)} "
            f"difference={_fmt_opt(report.difference)}"
        )
    return 0


def _fmt_opt(value: float | None) -> str:
    return "absent" if value is None else f"{value:.4f}"


def _excluded_ranks(result: AttributionResult, exclude: set[str]) -> tuple[int, ...]:
    assert result.tokens is not None
    return tuple(
        rank
        for rank, token in zip(result.ranks, result.tokens)
        if token.text not in exclude
    )


def cmd_align(config: RunConfig) -> int:
    if config.alignment is None or config.conllu is None:
        raise ValueError("align requires --alignment and --conllu")
    oracle = make_oracle(config)
    strategy = MaskStrategy(config.strategy)
    seed = config.seeds[0]
    rows = jsonio.read_jsonl(config.alignment)
    records = [{"id": str(r["id"]), "sentence": r["sentence"]} for r in rows]
    trees = match_trees(records, load_trees(config.conllu))
    items = assemble_sentences(records, trees, oracle)

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    for method in sorted(config.methods):
        results = []
        positions: list[int | None] = []
        for row, item in zip(rows, items):
            if item.tree is None:
                continue
            result = _compute_result(item, method, seed, oracle, strategy)
            results.append(result)
            negation = str(row.get("negation_token", ""))
            texts = [t.text for t in (result.tokens or ())]
            positions.append(texts.index(negation) if negation in texts else None)
        report = semantic_alignment(results, positions)
        jsonio.write_json(
            out / f"alignment_{method}.json",
            {
                "method": method,
                "seed": seed,
                "rank_counts": [[rank, count] for rank, count in report.rank_counts],
                "top_rank_share": report.top_rank_share,
                "n": report.n,
                "n_rejected": report.n_rejected,
            },
        )
        print(
            f"{method}: negation rank 1 in {report.top_rank_share:.0%} "
            f"of {report.n} record(s)"
        )
    return 0


def cmd_counts(config: RunConfig) -> int:
    if config.dataset is None or config.conllu is None:
        raise ValueError("counts requires --dataset and --conllu")
    oracle = make_oracle(config)
    strategy = MaskStrategy(config.strategy)
    seed = config.seeds[0]
    records = load_dataset(config.dataset)
    trees = match_trees(records, load_trees(config.conllu))
    items = assemble_sentences(records, trees, oracle)
    kept, _ = apply_filters(items, config)

    rows = []
    for item in sorted(kept, key=lambda it: it.id):
        tree = item.tree
        assert tree is not None
        budget = predicted_evaluations(tree)
        result = _compute_result(item, METHOD_SYNTAXSHAP, seed, oracle, strategy)
        rows.append(
            {
                "id": item.id,
                "n": len(tree),
                "depth": tree.depth,
                "level_sizes": [len(s) for s in tree.level_sets],
                "pair_count": budget.pair_count,
                "naive_count": budget.naive_count,
                "observed_unique": result.oracle_calls.unique,
                "observed_pairs": result.oracle_calls.pairs,
            }
        )
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    jsonio.write_json(out / "counts.json", rows)
    for row in rows:
        print(
            f"{row['id']}: n={row['n']} depth={row['depth']} "
            f"pairs={row['pair_count']} naive={row['naive_count']} "
            f"unique={row['observed_unique']}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syntaxshap",
        description="Tree-constrained Shapley explanations for next-token predictions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML config file; flags override it")
        p.add_argument("--oracle", help="'toy' or the URL of a scoring service")
        p.add_argument("--methods", type=_parse_str_list, help="comma-separated methods")
        p.add_argument("--seeds", type=_parse_int_list, help="comma-separated seeds")
        p.add_argument("--strategy", choices=[s.value for s in MaskStrategy])
        p.add_argument("--max-tokens", dest="max_tokens", type=int)
        p.add_argument("--min-tokens", dest="min_tokens", type=int)
        p.add_argument("--out")
        p.add_argument("--workers", type=int)
        p.add_argument("--toy-seed", dest="toy_seed", type=int)
        p.add_argument("--toy-vocab", dest="toy_vocab", type=int)

    p_explain = sub.add_parser("explain", help="write per-sentence attribution JSON")
    p_explain.add_argument("--dataset")
    p_explain.add_argument("--conllu")
    add_common(p_explain)
    p_explain.set_defaults(func=cmd_explain)

    p_eval = sub.add_parser("evaluate", help="compute faithfulness metric reports")
    p_eval.add_argument("--dataset")
    p_eval.add_argument("--conllu")
    p_eval.add_argument("--explanations", help="directory of explain outputs")
    p_eval.add_argument("--t", type=float)
    p_eval.add_argument("--k", type=int)
    add_common(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_pairs = sub.add_parser("pairs", help="coherency over sentence pairs")
    p_pairs.add_argument("--pairs")
    p_pairs.add_argument("--conllu")
    add_common(p_pairs)
    p_pairs.set_defaults(func=cmd_pairs)

    p_align = sub.add_parser("align", help="negation-rank semantic alignment")
    p_align.add_argument("--alignment")
    p_align.add_argument("--conllu")
    add_common(p_align)
    p_align.set_defaults(func=cmd_align)

    p_counts = sub.add_parser("counts", help="predicted vs observed oracle calls")
    p_counts.add_argument("--dataset")
    p_counts.add_argument("--conllu")
    add_common(p_counts)
    p_counts.set_defaults(func=cmd_counts)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve(args)
        return args.func(config)
    except (SyntaxShapError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
