from __future__ import annotations

import math
import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from madcap.corpus import tokenize
from madcap.criteria import CriteriaVerdict
from madcap.diversity import (
    AnnotationMisalignment,
    AttributeToken,
    attribute_tokens,
    diversity_report,
    distinct1_from_counts,
    entropy_from_counts,
    normalized_entropy,
    write_token_distribution,
)
from madcap.editscript import align
from madcap.providers.mock import MockAnnotation

from .conftest import token, verdict


def annotate(text):
    return MockAnnotation().annotate([text])[0]


class TestAttributeTokens:
    def test_noun_swap_decomposes_into_four_tokens(self):
        original = tokenize("a baby is sitting on a bed")
        candidate = tokenize("a bed is sitting on a baby")
        script = align(original, candidate)
        tokens = attribute_tokens(script, annotate(" ".join(original)),
                                  annotate(" ".join(candidate)))
        assert sorted(t.rendered for t in tokens) == [
            "D_NOUN_baby", "D_NOUN_bed", "I_NOUN_baby", "I_NOUN_bed"]

    def test_empty_script_yields_no_tokens(self):
        original = tokenize("a cat")
        script = align(original, original)
        assert attribute_tokens(script, annotate("a cat"), annotate("a cat")) == []

    def test_insertion_rendering(self):
        script = align(tokenize("a cat"), tokenize("a man cat"))
        tokens = attribute_tokens(script, annotate("a cat"), annotate("a man cat"))
        assert [t.rendered for t in tokens] == ["I_NOUN_man"]

    def test_lemmas_come_from_annotations(self):
        script = align(tokenize("a cat sitting"), tokenize("a cat running"))
        tokens = attribute_tokens(script, annotate("a cat sitting"), annotate("a cat running"))
        assert sorted(t.rendered for t in tokens) == ["D_VERB_sit", "I_VERB_run"]

    def test_misalignment_names_the_index(self):
        script = align(tokenize("a cat"), tokenize("a dog"))
        wrong = annotate("a bird")  # token 1 mismatches the script's words
        with pytest.raises(AnnotationMisalignment, match="token 1"):
            attribute_tokens(script, wrong, annotate("a dog"))
        with pytest.raises(AnnotationMisalignment, match="candidate"):
            attribute_tokens(script, annotate("a cat"), annotate("a"))

    def test_rendered_round_trip(self):
        tok = AttributeToken("I", "NOUN", "man")
        assert tok.rendered == "I_NOUN_man"
        assert AttributeToken.parse("D_ADJ_red") == AttributeToken("D", "ADJ", "red")
        with pytest.raises(ValueError):
            AttributeToken("X", "NOUN", "man")


class TestEntropyMetrics:
    def test_worked_multiset(self):
        counts = Counter(["x", "x", "y", "z"])
        h = entropy_from_counts(counts)
        assert h == pytest.approx(1.0397, abs=1e-4)
        assert distinct1_from_counts(counts) == pytest.approx(0.75)
        assert normalized_entropy(h, 3) == pytest.approx(0.9464, abs=1e-4)

    def test_degenerate_distribution(self):
        assert entropy_from_counts(Counter(["x"] * 9)) == 0.0
        assert normalized_entropy(0.0, 1) == 0.0
        assert entropy_from_counts(Counter()) == 0.0

    @given(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=40))
    def test_uniform_upper_bound(self, tokens):
        counts = Counter(tokens)
        h = entropy_from_counts(counts)
        assert 0.0 <= h <= math.log(len(counts)) + 1e-12

    def test_uniform_distribution_is_maximal(self):
        counts = Counter({f"t{i}": 5 for i in range(7)})
        h = entropy_from_counts(counts)
        assert normalized_entropy(h, 7) == pytest.approx(1.0, abs=1e-9)

    @given(st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 9),
                           min_size=1, max_size=6),
           st.dictionaries(st.sampled_from("uvwxyz"), st.integers(1, 9),
                           min_size=1, max_size=6))
    def test_merging_disjoint_multisets_is_concave(self, left, right):
        merged = Counter(left) + Counter(right)
        nl, nr = sum(left.values()), sum(right.values())
        weighted = (nl * entropy_from_counts(left) + nr * entropy_from_counts(right)) / (nl + nr)
        assert entropy_from_counts(merged) >= weighted - 1e-12


class TestDiversityReport:
    def _samples(self):
        return [
            (verdict(), (token("x"), token("x"))),
            (verdict(), (token("y"),)),
            (verdict(), (token("z"),)),
        ]

    def test_report_on_worked_multiset(self):
        report = diversity_report(self._samples())
        assert report.total_tokens == 4
        assert report.unique_tokens == 3
        assert report.entropy == pytest.approx(1.0397, abs=1e-4)
        assert report.distinct1 == pytest.approx(0.75)
        assert report.normalized_entropy == pytest.approx(0.9464, abs=1e-4)
        assert sum(report.distribution.values()) == pytest.approx(1.0, abs=1e-9)
        assert report.included_samples == 3 and report.excluded_samples == 0

    def test_distance_gating_excludes_sample_tokens(self):
        samples = self._samples()
        gated = [(verdict(dist=False), samples[0][1])] + samples[1:]
        report = diversity_report(gated)
        assert report.excluded_samples == 1
        assert report.counts == {"I_NOUN_y": 1, "I_NOUN_z": 1}

    def test_zero_token_sentinel(self):
        report = diversity_report([(verdict(dist=False), (token("x"),))])
        assert report.empty
        assert report.entropy == 0.0
        assert report.distinct1 is None
        assert report.total_tokens == 0
        assert report.to_dict()["empty"] is True

    def test_permutation_invariance(self):
        samples = self._samples()
        base = diversity_report(samples)
        rng = random.Random(0)
        for _ in range(20):
            shuffled = list(samples)
            rng.shuffle(shuffled)
            again = diversity_report(shuffled)
            assert again.entropy == base.entropy
            assert again.counts == base.counts

    def test_duplicate_token_never_raises_normalized_entropy_above_one(self):
        samples = self._samples() + [(verdict(), (token("x"),))]
        report = diversity_report(samples)
        assert report.unique_tokens == 3
        assert report.normalized_entropy <= 1.0 + 1e-9

    def test_csv_export_sorted_by_count_then_token(self, tmp_path):
        report = diversity_report(self._samples())
        path = tmp_path / "dist.csv"
        write_token_distribution(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "token,count,probability"
        assert lines[1].startswith("I_NOUN_x,2,")
        assert [l.split(",")[0] for l in lines[2:]] == ["I_NOUN_y", "I_NOUN_z"]
        assert float(lines[1].split(",")[2]) == pytest.approx(0.5)
