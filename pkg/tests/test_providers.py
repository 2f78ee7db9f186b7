from __future__ import annotations

import json
import logging
import math
import threading
from pathlib import Path

import httpx
import numpy as np
import pytest

from madcap.contract import (
    FIXTURE_SEED,
    build_fixtures,
    load_fixtures,
    mock_wire_response,
    wire_round,
)
from madcap.providers import (
    CacheKey,
    EmbedInput,
    ProviderError,
    ProviderSpec,
    ResponseCache,
    SamplingParams,
    build_provider,
    canonical_json,
    itm_match_probability,
    request_digest,
    wrap_cached,
)
from madcap.providers.http import BridgeEmbedding, BridgeNli, OpenAIGeneration
from madcap.providers.mock import (
    MockAnnotation,
    MockEmbedding,
    MockGeneration,
    MockItm,
    MockNli,
)
from madcap.prompts import render_prompt

FIXTURES_DIR = Path(__file__).resolve().parents[1] / "fixtures" / "mock_contract"


class TestSpec:
    def test_mock_identity(self):
        spec = ProviderSpec(role="embedding", backend="mock", seed=3)
        assert spec.identity == "mock:3"

    def test_http_requires_base_url(self):
        with pytest.raises(ValueError, match="base_url"):
            ProviderSpec(role="nli", backend="http")

    def test_unknown_role_rejected(self):
        with pytest.raises(ValueError):
            ProviderSpec(role="oracle", backend="mock")

    def test_round_trip(self):
        spec = ProviderSpec(role="generation", backend="http",
                            base_url="http://localhost:9", model_id="m")
        again = ProviderSpec.from_dict("generation", spec.to_dict())
        assert again == spec


class TestMockEmbedding:
    def test_deterministic_and_unit_norm(self):
        emb = MockEmbedding(seed=1)
        a = emb.embed([EmbedInput("text", "a cat"), EmbedInput("text", "a cat")])
        assert np.allclose(a[0], a[1])
        assert np.allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-6)
        fresh = MockEmbedding(seed=1).embed([EmbedInput("text", "a cat")])
        assert np.array_equal(a[0], fresh[0])

    def test_lexical_overlap_raises_cosine(self):
        emb = MockEmbedding(seed=1)
        v = emb.embed([EmbedInput("text", "a cat"), EmbedInput("text", "a cat"),
                       EmbedInput("text", "a dog")])
        assert float(v[0] @ v[1]) == pytest.approx(1.0)
        assert float(v[0] @ v[2]) < 1.0

    def test_different_seeds_differ(self):
        a = MockEmbedding(seed=1).embed([EmbedInput("text", "a cat")])
        b = MockEmbedding(seed=2).embed([EmbedInput("text", "a cat")])
        assert not np.allclose(a, b)

    def test_asset_refs_share_the_token_space(self):
        emb = MockEmbedding(seed=1)
        v = emb.embed([EmbedInput("image", "scene cat"), EmbedInput("text", "a cat"),
                       EmbedInput("text", "wooden guitar")])
        assert float(v[0] @ v[1]) > float(v[0] @ v[2])

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            EmbedInput("hologram", "x")


class TestMockNli:
    def test_model_count_and_rows(self):
        nli = MockNli()
        rows = nli.score_pairs([("a", "a"), ("a", "b c")])
        assert all(len(r) == nli.model_count == 3 for r in rows)

    @pytest.mark.parametrize("premise,hypothesis,score", [
        ("a red car", "a red car", 1.0),
        ("a red car", "wooden guitar", 0.0),
        ("a red car", "a red car parked", 0.75),
        ("anything", "", 0.0),
    ])
    def test_containment_values(self, premise, hypothesis, score):
        assert MockNli().score_pairs([(premise, hypothesis)])[0] == [score] * 3

    def test_asymmetry_exercises_direction_config(self):
        nli = MockNli()
        forward = nli.score_pairs([("a red car", "a red car parked")])[0][0]
        backward = nli.score_pairs([("a red car parked", "a red car")])[0][0]
        assert forward == 0.75 and backward == 1.0


class TestMockAnnotation:
    @pytest.mark.parametrize("word,pos,lemma", [
        ("man", "NOUN", "man"),
        ("running", "VERB", "run"),
        ("blorptastic", "NOUN", "blorptastic"),
        ("keys", "NOUN", "key"),
        ("parked", "VERB", "park"),
        ("the", "DET", "the"),
        ("two", "NUM", "two"),
    ])
    def test_tagging_paths(self, word, pos, lemma):
        ann = MockAnnotation().annotate([word])[0][0]
        assert (ann.text, ann.pos, ann.lemma) == (word, pos, lemma)

    def test_alignment_with_tokenizer(self):
        from madcap.corpus import tokenize
        text = "A baby is sitting on a bed."
        anns = MockAnnotation().annotate([text])[0]
        assert [a.text for a in anns] == tokenize(text)


class TestMockItm:
    def test_equal_logits_give_half(self):
        assert MockItm().score("scene a x", "a b") == pytest.approx(0.5)

    def test_ln3_gap_gives_three_quarters(self):
        caption = " ".join(f"w{i}" for i in range(1, 13))
        asset = " ".join(f"w{i}" for i in range(1, 12)) + " other"
        assert MockItm().score(asset, caption) == pytest.approx(0.75, abs=1e-12)

    def test_softmax_formula(self):
        assert itm_match_probability(0.0, 0.0) == pytest.approx(0.5)
        assert itm_match_probability(math.log(3), 0.0) == pytest.approx(0.75)
        assert itm_match_probability(500.0, -500.0) == pytest.approx(1.0)

    def test_score_strictly_inside_unit_interval(self):
        itm = MockItm()
        for asset, caption in [("x", "a b c"), ("a b c", "a b c"), ("q", "")]:
            assert 0.0 < itm.score(asset, caption) < 1.0


class TestMockGeneration:
    PROMPT = render_prompt("general", "image", "a baby is sitting on a bed", 8.0)

    def test_returns_n_completions_from_one_call(self):
        gen = MockGeneration(seed=3)
        outs = gen.generate(self.PROMPT, 5, SamplingParams(seed=1))
        assert len(outs) == 5
        assert gen.stats.calls == 1 and gen.stats.units == 5

    def test_deterministic_per_seed(self):
        a = MockGeneration(seed=3).generate(self.PROMPT, 4, SamplingParams(seed=1))
        b = MockGeneration(seed=3).generate(self.PROMPT, 4, SamplingParams(seed=1))
        assert a == b
        c = MockGeneration(seed=4).generate(self.PROMPT, 4, SamplingParams(seed=1))
        assert a != c

    def test_budgets_nest(self):
        gen = MockGeneration(seed=3)
        small = gen.generate(self.PROMPT, 2, SamplingParams(seed=1))
        large = gen.generate(self.PROMPT, 8, SamplingParams(seed=1))
        assert large[:2] == small

    def test_rejects_empty_batch(self):
        with pytest.raises(ProviderError):
            MockGeneration().generate(self.PROMPT, 0, SamplingParams())

    def test_requires_caption_block(self):
        with pytest.raises(ProviderError, match="given-caption"):
            MockGeneration().generate("freeform prompt", 1, SamplingParams())

    def test_specific_prompt_biases_toward_the_operation(self):
        prompt = render_prompt("swap-object", "image", "a baby is sitting on a bed", 8.0)
        outs = MockGeneration(seed=3).generate(prompt, 30, SamplingParams(seed=0))
        swapped = sum("a bed is sitting on a baby" in o for o in outs)
        assert swapped >= 10


class TestCache:
    def test_hit_skips_backend(self, tmp_path):
        cache = ResponseCache(tmp_path)
        inner = MockEmbedding(seed=1)
        cached = wrap_cached("embedding", inner, cache, "mock:1")
        first = cached.embed([EmbedInput("text", "a cat")])
        calls_after_first = inner.stats.calls
        second = cached.embed([EmbedInput("text", "a cat")])
        assert inner.stats.calls == calls_after_first
        assert np.array_equal(first, second)

    def test_round_trip_is_exact(self, tmp_path):
        cache = ResponseCache(tmp_path)
        cached = wrap_cached("embedding", MockEmbedding(seed=1), cache, "mock:1")
        direct = MockEmbedding(seed=1).embed([EmbedInput("text", "vintage guitar")])
        cached.embed([EmbedInput("text", "vintage guitar")])  # populate
        warm = cached.embed([EmbedInput("text", "vintage guitar")])
        assert np.array_equal(direct, warm)

    def test_write_once_semantics(self, tmp_path):
        cache = ResponseCache(tmp_path)
        key = CacheKey("nli", "mock:1", "nli", request_digest({"p": 1}))
        assert cache.put(key, [0.25]) == [0.25]
        assert cache.put(key, [0.99]) == [0.25]
        assert cache.get(key) == [0.25]

    def test_corrupt_record_is_a_miss(self, tmp_path, caplog):
        from madcap.providers.cache import _MISS

        cache = ResponseCache(tmp_path)
        key = CacheKey("itm", "mock:1", "itm", request_digest({"a": 1}))
        cache.put(key, 0.5)
        (tmp_path / f"{key.file_digest}.json").write_text("{not json")
        with caplog.at_level(logging.WARNING):
            assert cache.get(key) is _MISS
        assert any("corrupt cache record" in r.message for r in caplog.records)

    def test_concurrent_puts_store_one_value(self, tmp_path):
        cache = ResponseCache(tmp_path)
        key = CacheKey("generation", "mock:1", "generate", request_digest({"q": 1}))
        results = []

        def writer(value):
            results.append(tuple(cache.put(key, [value])))

        threads = [threading.Thread(target=writer, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        stored = tuple(cache.get(key))
        assert set(results) == {stored}

    def test_index_is_appended(self, tmp_path):
        cache = ResponseCache(tmp_path)
        cache.put(CacheKey("itm", "b", "itm", request_digest(1)), 0.4)
        cache.put(CacheKey("itm", "b", "itm", request_digest(2)), 0.6)
        lines = (tmp_path / "index.jsonl").read_text().strip().splitlines()
        assert len(lines) == 2


class TestHttpProviders:
    def _transport(self, handler):
        return httpx.MockTransport(handler)

    def test_bridge_embedding_parses_and_validates(self):
        def handler(request):
            payload = json.loads(request.content)
            n = len(payload["inputs"])
            vec = [1.0] + [0.0] * 3
            return httpx.Response(200, json={"vectors": [vec] * n, "dim": 4})

        spec = ProviderSpec(role="embedding", backend="http", base_url="http://bridge")
        provider = BridgeEmbedding(spec, client=httpx.Client(
            base_url="http://bridge", transport=self._transport(handler)))
        out = provider.embed([EmbedInput("text", "a"), EmbedInput("image", "b")])
        assert out.shape == (2, 4)
        assert provider.dim == 4

    def test_bridge_embedding_rejects_non_unit_vectors(self):
        def handler(request):
            return httpx.Response(200, json={"vectors": [[2.0, 0.0]], "dim": 2})

        spec = ProviderSpec(role="embedding", backend="http", base_url="http://bridge",
                            retries=0)
        provider = BridgeEmbedding(spec, client=httpx.Client(
            base_url="http://bridge", transport=self._transport(handler)))
        with pytest.raises(ProviderError, match="non-unit"):
            provider.embed([EmbedInput("text", "a")])

    def test_bridge_nli_shape_checks(self):
        def handler(request):
            return httpx.Response(200, json={"scores": [[0.1, 0.2, 0.3]]})

        spec = ProviderSpec(role="nli", backend="http", base_url="http://bridge")
        provider = BridgeNli(spec, client=httpx.Client(
            base_url="http://bridge", transport=self._transport(handler)))
        assert provider.score_pairs([("p", "h")]) == [[0.1, 0.2, 0.3]]
        assert provider.model_count == 3

    def test_openai_generation_request_fields(self):
        seen = {}

        def handler(request):
            seen.update(json.loads(request.content))
            choices = [{"message": {"content": f"Generated Caption: c{i}"}}
                       for i in range(seen["n"])]
            return httpx.Response(200, json={"choices": choices})

        spec = ProviderSpec(role="generation", backend="http",
                            base_url="http://llm", model_id="little-llm")
        provider = OpenAIGeneration(spec, client=httpx.Client(
            base_url="http://llm", transport=self._transport(handler)))
        out = provider.generate("prompt text", 3, SamplingParams(top_p=0.95, temperature=0.7, seed=11))
        assert len(out) == 3
        assert seen["model"] == "little-llm"
        assert seen["n"] == 3
        assert seen["top_p"] == 0.95
        assert seen["temperature"] == 0.7
        assert seen["seed"] == 11
        assert seen["messages"] == [{"role": "user", "content": "prompt text"}]

    def test_openai_generation_short_batch_is_an_error(self):
        def handler(request):
            return httpx.Response(200, json={"choices": [
                {"message": {"content": "only one"}}]})

        spec = ProviderSpec(role="generation", backend="http", base_url="http://llm",
                            model_id="m", retries=0)
        provider = OpenAIGeneration(spec, client=httpx.Client(
            base_url="http://llm", transport=self._transport(handler)))
        with pytest.raises(ProviderError, match="1 of 4"):
            provider.generate("p", 4, SamplingParams())

    def test_retries_then_failure(self):
        attempts = []

        def handler(request):
            attempts.append(1)
            return httpx.Response(503)

        spec = ProviderSpec(role="nli", backend="http", base_url="http://bridge", retries=2)
        provider = BridgeNli(spec, client=httpx.Client(
            base_url="http://bridge", transport=self._transport(handler)))
        with pytest.raises(ProviderError):
            provider.score_pairs([("p", "h")])
        assert len(attempts) == 3


class TestBuildProvider:
    def test_mock_roles(self):
        for role, cls in [("embedding", MockEmbedding), ("nli", MockNli),
                          ("generation", MockGeneration), ("annotation", MockAnnotation),
                          ("itm", MockItm)]:
            provider = build_provider(ProviderSpec(role=role, backend="mock", seed=2))
            assert isinstance(provider, cls)

    def test_cache_wrapping(self, tmp_path):
        cache = ResponseCache(tmp_path)
        provider = build_provider(ProviderSpec(role="itm", backend="mock"), cache)
        assert provider.score("scene a x", "a b") == pytest.approx(0.5)


class TestContractFixtures:
    def test_fixture_files_match_current_mocks(self):
        on_disk = load_fixtures(FIXTURES_DIR)
        rebuilt = build_fixtures(FIXTURE_SEED)
        assert on_disk == rebuilt

    def test_fixture_bytes_are_canonical(self):
        for endpoint, data in load_fixtures(FIXTURES_DIR).items():
            raw = (FIXTURES_DIR / f"{endpoint}.json").read_bytes()
            assert raw == canonical_json(data).encode("utf-8")

    def test_itm_fixture_pins_half_and_three_quarters(self):
        cases = load_fixtures(FIXTURES_DIR)["itm"]["cases"]
        scores = [c["response"]["score"] for c in cases]
        assert 0.5 in scores and 0.75 in scores

    def test_wire_rounding(self):
        assert wire_round(0.123456789) == 0.1234568
        response = mock_wire_response("embed", {"inputs": [{"kind": "text", "value": "a"}]})
        assert all(abs(x) <= 1.0 for x in response["vectors"][0])
        norm = math.sqrt(sum(x * x for x in response["vectors"][0]))
        assert norm == pytest.approx(1.0, abs=1e-6)
