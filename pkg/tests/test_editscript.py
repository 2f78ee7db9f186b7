from __future__ import annotations

from functools import lru_cache

import pytest
from hypothesis import given, strategies as st

from madcap.editscript import EditOp, EditScript, align

words = st.sampled_from(["a", "b", "c", "d", "e"])
token_lists = st.lists(words, max_size=8)


def oracle_distance(a, b):
    """Independent recursive-with-memo edit distance."""
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        best = go(i + 1, j + 1) + (a[i] != b[j])
        return min(best, 1 + go(i + 1, j), 1 + go(i, j + 1))

    return go(0, 0)


def test_identical_lists():
    script = align(["a", "b"], ["a", "b"])
    assert script.distance == 0
    assert script.ops == ()


def test_distance_zero_iff_equal():
    assert align(["a"], ["b"]).distance > 0
    assert align([], []).distance == 0


def test_substitute_plus_insert():
    script = align(["a", "b", "c"], ["a", "x", "c", "y"])
    assert script.distance == 2
    kinds = sorted(op.kind for op in script.ops)
    assert kinds == ["insert", "substitute"]
    assert script.apply(["a", "b", "c"]) == ["a", "x", "c", "y"]


def test_caption_rewrite_distance_four():
    original = "reaching for the keys".split()
    candidate = "accidentally typing an email".split()
    script = align(original, candidate)
    assert script.distance == 4
    assert script.apply(original) == candidate


def test_empty_inputs_are_legal():
    assert align([], ["x", "y"]).distance == 2
    assert align(["x", "y", "z"], []).distance == 3
    assert align([], ["x"]).apply([]) == ["x"]


def test_ops_validate_their_shape():
    with pytest.raises(ValueError):
        EditOp("insert", 0, old_word="x", new_word="y")
    with pytest.raises(ValueError):
        EditOp("delete", 0, new_word="y")
    with pytest.raises(ValueError):
        EditOp("substitute", 0, old_word="x", new_word="x")


def test_backtrace_is_deterministic():
    a = ["a", "b", "c", "a", "b"]
    b = ["b", "c", "a", "a"]
    assert align(a, b) == align(a, b)
    # Substitution preferred over delete+insert at equal cost.
    script = align(["a"], ["b"])
    assert [op.kind for op in script.ops] == ["substitute"]


def test_multiple_inserts_at_same_slot_replay_in_order():
    script = align(["a"], ["x", "y", "a"])
    assert script.distance == 2
    assert script.apply(["a"]) == ["x", "y", "a"]


@given(token_lists, token_lists)
def test_distance_matches_oracle(a, b):
    assert align(a, b).distance == oracle_distance(a, b)


@given(token_lists, token_lists)
def test_distance_symmetry(a, b):
    assert align(a, b).distance == align(b, a).distance


@given(token_lists, token_lists, token_lists)
def test_triangle_inequality(a, b, c):
    assert align(a, c).distance <= align(a, b).distance + align(b, c).distance


@given(token_lists, token_lists)
def test_distance_upper_bound(a, b):
    assert align(a, b).distance <= max(len(a), len(b))


@given(token_lists, token_lists)
def test_replay_reconstructs_target(a, b):
    script = align(a, b)
    assert script.apply(a) == b
    assert len(script.ops) == script.distance


def test_script_shape_fields():
    script = align(["a", "b"], ["b"])
    assert isinstance(script, EditScript)
    assert (script.source_len, script.target_len) == (2, 1)
    with pytest.raises(ValueError):
        script.apply(["a", "b", "c"])
