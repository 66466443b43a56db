"""Tests for the attribution methods: fixtures, axioms, and reference equivalence."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syntaxshap.attribution import (
    METHOD_RANDOM,
    aggregate_to_words,
    exact_shapley,
    fetch_top_prediction,
    random_attribution,
    ranks,
    syntaxshap,
    syntaxshap_weighted,
    tree_token_refs,
)
from syntaxshap.coalition import predicted_evaluations
from syntaxshap.deptree import expand_subtokens
from syntaxshap.errors import OracleError, SizeLimitError
from syntaxshap.oracle import (
    MaskStrategy,
    TokenRef,
    ValueRequest,
    ignore_token_lm,
    memoized,
    sum_oracle,
    toy_hash_lm,
)

from support import (
    LevelMultisetOracle,
    SpyOracle,
    TableOracle,
    chain_heads,
    make_tree,
    permutation_shapley,
    random_heads,
    random_table_oracle,
    reference_syntaxshap,
    star_heads,
)

CHAIN3 = make_tree(chain_heads(3))
CHAIN3_TABLE = TableOracle(
    {
        (): 0.10,
        (1,): 0.30,
        (2,): 0.15,
        (3,): 0.12,
        (1, 2): 0.60,
        (1, 3): 0.35,
        (1, 2, 3): 0.90,
    }
)


class TestSyntaxShapFixtures:
    def test_single_token(self):
        tree = make_tree([0])
        oracle = TableOracle({(): 0.10, (1,): 0.30})
        result = syntaxshap(tree, oracle, 0)
        assert result.values == pytest.approx((0.20,), abs=1e-15)
        assert result.ranks == (1,)
        assert result.oracle_calls.pairs == 1

    def test_three_chain_hand_values(self):
        result = syntaxshap(CHAIN3, CHAIN3_TABLE, 0)
        assert result.values[0] == pytest.approx(0.20, abs=1e-15)
        assert result.values[1] == pytest.approx(0.175, abs=1e-15)
        assert result.values[2] == pytest.approx(0.37 / 3, abs=1e-15)
        assert result.oracle_calls.pairs == 6
        assert result.oracle_calls.unique == 7

    def test_weighted_three_chain(self):
        result = syntaxshap_weighted(CHAIN3, CHAIN3_TABLE, 0)
        assert result.values[0] == pytest.approx(0.20, abs=1e-15)
        assert result.values[1] == pytest.approx(0.0875, abs=1e-15)
        assert result.values[2] == pytest.approx(0.37 / 9, abs=1e-15)

    def test_result_metadata(self):
        result = syntaxshap(CHAIN3, CHAIN3_TABLE, 0, seed=5)
        assert result.method == "syntaxshap"
        assert result.seed == 5
        assert result.target_token == 0
        assert result.levels == (1, 2, 3)
        assert [t.text for t in result.tokens] == ["w1", "w2", "w3"]

    def test_oracle_failure_names_coalition(self):
        class Broken(TableOracle):
            def evaluate(self, request):
                raise OracleError("backend down")

        with pytest.raises(OracleError, match="coalition"):
            syntaxshap(CHAIN3, Broken({}), 0)


class TestBruteForceEquivalence:
    def test_random_fixtures_match_reference(self):
        rng = np.random.default_rng(101)
        for _ in range(30):
            n = int(rng.integers(1, 11))
            tree = make_tree(random_heads(rng, n))
            oracle = random_table_oracle(rng, n)
            engine = syntaxshap(tree, oracle, 0).values
            reference = reference_syntaxshap(tree.levels, oracle.lookup)
            for a, b in zip(engine, reference):
                assert abs(a - b) <= 1e-12

    def test_tokenized_trees_match_reference(self):
        rng = np.random.default_rng(55)
        for _ in range(10):
            tree = make_tree(random_heads(rng, int(rng.integers(1, 5))))
            spans = []
            for w in tree.nodes:
                for p in range(int(rng.integers(1, 3))):
                    spans.append((f"{w.text}.{p}", w.word_index))
            tokenized = expand_subtokens(tree, spans)
            oracle = random_table_oracle(rng, len(tokenized))
            engine = syntaxshap(tokenized, oracle, 0).values
            reference = reference_syntaxshap(tokenized.levels, oracle.lookup)
            for a, b in zip(engine, reference):
                assert abs(a - b) <= 1e-12


class TestAxioms:
    def test_nullity_is_exact_zero(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = int(rng.integers(2, 8))
            tree = make_tree(random_heads(rng, n))
            position = int(rng.integers(0, n))
            oracle = ignore_token_lm(toy_hash_lm(seed=3, vocab_size=7), position)
            result = syntaxshap(tree, oracle, 0)
            assert result.values[position] == 0.0

    def test_additivity(self):
        rng = np.random.default_rng(13)
        f = toy_hash_lm(seed=21, vocab_size=9)
        g = toy_hash_lm(seed=22, vocab_size=9)
        for _ in range(10):
            tree = make_tree(random_heads(rng, int(rng.integers(1, 8))))
            phi_f = syntaxshap(tree, f, 0).values
            phi_g = syntaxshap(tree, g, 0).values
            phi_sum = syntaxshap(tree, sum_oracle(f, g), 0).values
            for a, b, c in zip(phi_sum, phi_f, phi_g):
                assert abs(a - (b + c)) <= 1e-9

    def test_symmetry_per_level(self):
        for heads in (star_heads(6), [0, 1, 1, 2, 2, 2, 3, 3]):
            tree = make_tree(heads)
            oracle = LevelMultisetOracle(tree.levels, salt=3)
            values = syntaxshap(tree, oracle, 0).values
            by_level: dict[int, set[float]] = {}
            for value, level in zip(values, tree.levels):
                by_level.setdefault(level, set()).add(value)
            for level, group in by_level.items():
                assert len(group) == 1, f"level {level} values differ: {group}"

    def test_efficiency_violated_witness(self):
        result = syntaxshap(CHAIN3, CHAIN3_TABLE, 0)
        full_minus_null = 0.90 - 0.10
        assert abs(math.fsum(result.values) - full_minus_null) > 1e-6


class TestWeightedRelation:
    def test_values_scale_exactly(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = int(rng.integers(1, 10))
            tree = make_tree(random_heads(rng, n))
            oracle = random_table_oracle(rng, n)
            plain = syntaxshap(tree, oracle, 0)
            weighted = syntaxshap_weighted(tree, oracle, 0)
            for vw, v, level in zip(weighted.values, plain.values, tree.levels):
                assert vw == v / level

    def test_within_level_rank_order_preserved(self):
        rng = np.random.default_rng(37)
        for _ in range(20):
            n = int(rng.integers(2, 10))
            tree = make_tree(random_heads(rng, n))
            oracle = random_table_oracle(rng, n)
            plain = syntaxshap(tree, oracle, 0)
            weighted = syntaxshap_weighted(tree, oracle, 0)
            for level in range(1, tree.depth + 1):
                indices = [i for i, l in enumerate(tree.levels) if l == level]
                order_plain = sorted(indices, key=lambda i: plain.ranks[i])
                order_weighted = sorted(indices, key=lambda i: weighted.ranks[i])
                assert order_plain == order_weighted

    def test_root_level_value_unchanged(self):
        result = syntaxshap(CHAIN3, CHAIN3_TABLE, 0)
        weighted = syntaxshap_weighted(CHAIN3, CHAIN3_TABLE, 0)
        assert weighted.values[0] == result.values[0]

    def test_uniform_scaling_preserves_ranks(self):
        # When every token shares one level, weighting rescales all values
        # by the same 1/l and the ranks cannot move.
        rng = np.random.default_rng(3)
        for _ in range(20):
            values = [float(v) for v in rng.standard_normal(6)]
            scaled = [v / 4 for v in values]
            assert ranks(values) == ranks(scaled)


class TestCallAccounting:
    def test_pair_counter_matches_closed_form(self):
        rng = np.random.default_rng(43)
        for _ in range(30):
            n = int(rng.integers(1, 11))
            tree = make_tree(random_heads(rng, n))
            oracle = random_table_oracle(rng, n)
            result = syntaxshap(tree, oracle, 0)
            assert result.oracle_calls.pairs == predicted_evaluations(tree).pair_count

    def test_unique_counter_matches_spy(self):
        rng = np.random.default_rng(47)
        for _ in range(20):
            n = int(rng.integers(1, 11))
            tree = make_tree(random_heads(rng, n))
            spy = SpyOracle(random_table_oracle(rng, n))
            result = syntaxshap(tree, spy, 0)
            assert result.oracle_calls.unique == len(spy.keeps)

    def test_total_requests_on_external_memo(self):
        memo = memoized(CHAIN3_TABLE)
        result = syntaxshap(CHAIN3, memo, 0)
        assert memo.total_requests == 2 * result.oracle_calls.pairs == 12


class TestExactShapley:
    def test_single_token_equals_tree_method(self):
        tree = make_tree([0])
        oracle = TableOracle({(): 0.10, (1,): 0.30})
        tree_result = syntaxshap(tree, oracle, 0)
        subset_result = exact_shapley(tree_token_refs(tree), oracle, 0)
        assert subset_result.values == tree_result.values

    def test_symmetric_tokens_get_equal_values(self):
        # Value depends only on how many tokens are kept.
        table = {frozenset(s): 0.1 * len(s) for s in [(), (1,), (2,), (1, 2)]}
        oracle = TableOracle(table)
        tokens = (TokenRef(0, "a"), TokenRef(1, "b"))
        result = exact_shapley(tokens, oracle, 0)
        assert result.values[0] == result.values[1]

    def test_matches_permutation_oracle(self):
        rng = np.random.default_rng(59)
        for n in (1, 2, 3, 4, 5):
            oracle = random_table_oracle(rng, n)
            tokens = tuple(TokenRef(i, f"t{i}") for i in range(n))
            engine = exact_shapley(tokens, oracle, 0).values
            reference = permutation_shapley(n, oracle.lookup)
            for a, b in zip(engine, reference):
                assert abs(a - b) <= 1e-9

    def test_size_guard(self):
        tokens = tuple(TokenRef(i, f"t{i}") for i in range(13))
        with pytest.raises(SizeLimitError):
            exact_shapley(tokens, toy_hash_lm(seed=0, vocab_size=4), 0)

    def test_pair_count_is_naive(self):
        rng = np.random.default_rng(61)
        n = 5
        oracle = random_table_oracle(rng, n)
        tokens = tuple(TokenRef(i, f"t{i}") for i in range(n))
        result = exact_shapley(tokens, oracle, 0)
        assert result.oracle_calls.pairs == n * 2 ** (n - 1)


class TestRandomAttribution:
    def test_same_seed_identical(self):
        assert random_attribution(6, seed=9).values == random_attribution(6, seed=9).values

    def test_different_seeds_differ(self):
        assert random_attribution(6, seed=9).values != random_attribution(6, seed=10).values

    def test_single_token(self):
        result = random_attribution(1, seed=0)
        assert len(result.values) == 1
        assert result.ranks == (1,)
        assert result.method == METHOD_RANDOM

    def test_token_and_target_stamping(self):
        tokens = (TokenRef(0, "a"), TokenRef(1, "b"))
        result = random_attribution(2, seed=1, tokens=tokens, target=5)
        assert result.tokens == tokens
        assert result.target_token == 5

    def test_token_length_mismatch(self):
        with pytest.raises(ValueError):
            random_attribution(2, seed=1, tokens=(TokenRef(0, "a"),))


class TestRanks:
    def test_basic(self):
        assert ranks([0.5, 0.2, 0.9]) == (2, 3, 1)

    def test_tie_break_by_index(self):
        assert ranks([0.3, 0.3]) == (1, 2)

    def test_mixed(self):
        assert ranks([-1, 0, -1, 2]) == (3, 2, 4, 1)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ranks([])

    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
    @settings(max_examples=100, deadline=None)
    def test_always_a_permutation(self, values):
        result = ranks(values)
        assert sorted(result) == list(range(1, len(values) + 1))


class TestPlumbing:
    def test_fetch_top_prediction(self):
        toy = toy_hash_lm(seed=5, vocab_size=7)
        tokens = tuple(TokenRef(i, w) for i, w in enumerate(["a", "b"]))
        target, prob = fetch_top_prediction(tokens, toy)
        request = ValueRequest(tokens=tokens, keep=(True, True), targets=tuple(range(7)))
        probs = toy.evaluate(request).target_probs
        assert probs[target] == max(probs)
        assert prob == probs[target]

    def test_aggregate_to_words(self):
        tree = make_tree([0, 1])
        tokenized = expand_subtokens(tree, [("w1", 1), ("w2a", 2), ("w2b", 2)])
        oracle = random_table_oracle(np.random.default_rng(2), 3)
        result = syntaxshap(tokenized, oracle, 0)
        word_values = aggregate_to_words(result, tokenized)
        assert len(word_values) == 2
        assert word_values[0] == result.values[0]
        assert word_values[1] == pytest.approx(result.values[1] + result.values[2], abs=1e-15)

    def test_tree_token_refs_use_token_ids_when_present(self):
        tree = make_tree([0])
        tokenized = expand_subtokens(tree, [("w1", 1, 777)])
        assert tree_token_refs(tokenized) == (TokenRef(777, "w1"),)

    def test_strategy_changes_values_under_masking(self):
        toy = toy_hash_lm(seed=11, vocab_size=9)
        tree = make_tree(chain_heads(3))
        zero = syntaxshap(tree, toy, 0, strategy=MaskStrategy.ZERO_ATTENTION)
        rand = syntaxshap(tree, toy, 0, strategy=MaskStrategy.RANDOM_REPLACE)
        assert zero.values != rand.values
