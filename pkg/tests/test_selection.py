from __future__ import annotations

import itertools
import math
import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from madcap.diversity import entropy_from_counts
from madcap.selection import (
    CandidatePool,
    SelectionState,
    best_of_n,
    distinct1_objective,
    gibbs_select,
    select_rft,
)

from .conftest import pool


def exhaustive_max_entropy(pools):
    best = -1.0
    for combo in itertools.product(*(p.success_set for p in pools)):
        counts = Counter()
        for p, idx in zip(pools, combo):
            counts.update(t.rendered for t in p.candidates[idx].tokens)
        best = max(best, entropy_from_counts(counts))
    return best


def random_success_pools(seed, max_pools=3, max_candidates=3, vocab="abcde"):
    rng = random.Random(seed)
    pools = []
    for p in range(rng.randint(1, max_pools)):
        candidates = []
        for _ in range(rng.randint(1, max_candidates)):
            lemmas = tuple(rng.choice(vocab) for _ in range(rng.randint(0, 3)))
            candidates.append((True, lemmas))
        pools.append(pool(f"p{p}", *candidates))
    return pools


class TestBestOfN:
    def test_singleton_success_always_chosen(self):
        p = pool("p0", (False, ()), (False, ()), (True, ("x",)), (False, ()))
        for seed in range(50):
            assert best_of_n(p, random.Random(seed)) == 2

    def test_chosen_index_stays_in_success_set(self):
        p = pool("p0", (False, ()), (True, ("x",)), (False, ()), (True, ("y",)))
        for seed in range(200):
            assert best_of_n(p, random.Random(seed)) in (1, 3)

    def test_fallback_is_uniform_over_all(self):
        p = pool("p0", (False, ()), (False, ()), (False, ()), (False, ()))
        hits = Counter(best_of_n(p, random.Random(seed)) for seed in range(4000))
        assert set(hits) == {0, 1, 2, 3}
        for idx in range(4):
            assert hits[idx] / 4000 == pytest.approx(0.25, abs=0.03)

    def test_empty_pool_is_an_error(self):
        with pytest.raises(ValueError):
            best_of_n(CandidatePool("p0", ()), random.Random(0))

    def test_deterministic_given_seed(self):
        p = pool("p0", (True, ("x",)), (True, ("y",)), (True, ("z",)))
        picks = [best_of_n(p, random.Random(7)) for _ in range(10)]
        assert len(set(picks)) == 1


class TestSelectRft:
    def test_pools_without_success_are_dropped(self):
        pools = [pool("a", (True, ("x",))), pool("b", (False, ())), pool("c", (True, ("y",)))]
        out = select_rft(pools)
        assert [pair_id for pair_id, _ in out] == ["a", "c"]

    def test_all_empty_gives_empty_output(self):
        pools = [pool("a", (False, ())), pool("b", (False, ()))]
        assert select_rft(pools) == []

    @given(st.lists(st.lists(st.booleans(), min_size=1, max_size=4), min_size=1, max_size=8))
    def test_output_count_matches_bruteforce_recount(self, flag_lists):
        pools = [pool(f"p{i}", *((f, ()) for f in flags))
                 for i, flags in enumerate(flag_lists)]
        expected = sum(1 for flags in flag_lists if any(flags))
        assert len(select_rft(pools)) == expected

    def test_chosen_text_comes_from_a_success(self):
        pools = [pool("a", (False, ("x",)), (True, ("y",)))]
        out = select_rft(pools, random.Random(3))
        assert out == [("a", "a-cand-1")]


class TestGibbs:
    def test_two_item_example_prefers_disjoint_tokens(self):
        # pair one can contribute {x} or {y}; pair two always contributes {x}.
        pools = [pool("p0", (True, ("x",)), (True, ("y",))),
                 pool("p1", (True, ("x",)))]
        state = gibbs_select(pools, k=3, rng=random.Random(0))
        assert state.chosen == {"p0": 1, "p1": 0}
        assert state.entropy == pytest.approx(math.log(2), abs=1e-12)
        assert state.entropy == pytest.approx(exhaustive_max_entropy(pools), abs=1e-12)

    def test_single_pool_is_direct_argmax(self):
        pools = [pool("p0", (True, ("x", "x")), (True, ("x", "y")), (True, ("z",)))]
        for k in (1, 2, 5):
            state = gibbs_select(pools, k=k, rng=random.Random(11))
            assert state.entropy == pytest.approx(exhaustive_max_entropy(pools), abs=1e-12)

    @pytest.mark.parametrize("seed", range(40))
    def test_matches_exhaustive_on_small_instances(self, seed):
        pools = random_success_pools(seed)
        state = gibbs_select(pools, k=4, rng=random.Random(seed * 31 + 1))
        assert state.entropy == pytest.approx(exhaustive_max_entropy(pools), abs=1e-12)

    def test_chosen_always_in_success_set(self):
        for seed in range(60):
            rng = random.Random(seed)
            pools = [pool(f"p{i}",
                          *((rng.random() < 0.7, tuple(rng.choice("abc") for _ in range(2)))
                            for _ in range(3)))
                     for i in range(4)]
            pools = [p for p in pools if p.success_set]
            if not pools:
                continue
            state = gibbs_select(pools, k=2, rng=random.Random(seed))
            for p in pools:
                assert state.chosen[p.pair_id] in p.success_set

    def test_requires_success_sets(self):
        with pytest.raises(ValueError, match="no successful candidate"):
            gibbs_select([pool("p0", (False, ()))], k=1, rng=random.Random(0))

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            gibbs_select([pool("p0", (True, ()))], k=0, rng=random.Random(0))

    def test_cached_entropy_matches_scratch_recomputation(self):
        for seed in range(30):
            pools = random_success_pools(seed, max_pools=3, max_candidates=3)
            state = gibbs_select(pools, k=3, rng=random.Random(seed))
            assert state.entropy == pytest.approx(entropy_from_counts(state.freq), abs=1e-9)
            rebuilt = Counter()
            for p in pools:
                rebuilt.update(t.rendered for t in p.candidates[state.chosen[p.pair_id]].tokens)
            assert rebuilt == state.freq

    def test_deterministic_given_seed(self):
        pools = random_success_pools(17)
        a = gibbs_select(pools, k=3, rng=random.Random(5))
        b = gibbs_select(pools, k=3, rng=random.Random(5))
        assert a.chosen == b.chosen and a.entropy == b.entropy

    def test_entropy_never_below_initialization(self):
        for seed in range(50):
            pools = random_success_pools(seed)
            rng = random.Random(seed + 1000)
            init = {p.pair_id: rng.choice(p.success_set) for p in sorted(pools, key=lambda x: x.pair_id)}
            counts = Counter()
            for p in pools:
                counts.update(t.rendered for t in p.candidates[init[p.pair_id]].tokens)
            state = gibbs_select(pools, k=3, rng=random.Random(seed + 1000))
            assert state.entropy >= entropy_from_counts(counts) - 1e-12

    def test_duplicate_pair_ids_rejected(self):
        pools = [pool("p0", (True, ("x",))), pool("p0", (True, ("y",)))]
        with pytest.raises(ValueError, match="duplicate"):
            gibbs_select(pools, k=1, rng=random.Random(0))

    def test_injected_distinct1_objective(self):
        pools = [pool("p0", (True, ("x", "x")), (True, ("y", "z"))),
                 pool("p1", (True, ("x",)))]
        state = gibbs_select(pools, k=3, rng=random.Random(2),
                             objective=distinct1_objective)
        assert state.chosen["p0"] == 1  # 3 distinct of 3 beats 2 of 3
        assert isinstance(state, SelectionState)

    def test_single_ascent_can_trap_and_multi_start_recovers(self):
        # A uniform three-token state beats every single move from it, so
        # one ascent run started there is stuck below the optimum; trying
        # all initializations recovers the global maximum.
        from madcap.selection import _ascend

        pools = sorted([
            pool("p0", (True, ("d", "e", "e")), (True, ("b",)), (True, ("e", "b", "a"))),
            pool("p1", (True, ("b", "a")), (True, ())),
        ], key=lambda p: p.pair_id)
        trapped = _ascend(pools, k=5, init={"p0": 2, "p1": 1}, objective=None)
        assert trapped.chosen == {"p0": 2, "p1": 1}
        assert trapped.entropy == pytest.approx(math.log(3), abs=1e-12)

        best = gibbs_select(pools, k=5, rng=random.Random(0))
        assert best.chosen == {"p0": 0, "p1": 0}
        assert best.entropy == pytest.approx(exhaustive_max_entropy(pools), abs=1e-12)
        assert best.entropy > trapped.entropy
