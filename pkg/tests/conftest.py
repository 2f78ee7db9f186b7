from __future__ import annotations

import pytest

from madcap.campaign import CACHE_ENV_VAR, CampaignConfig
from madcap.criteria import CriteriaVerdict
from madcap.demo import write_demo_corpus
from madcap.diversity import AttributeToken
from madcap.selection import CandidatePool, PoolCandidate


@pytest.fixture(autouse=True)
def _isolate_cache_env(monkeypatch):
    monkeypatch.delenv(CACHE_ENV_VAR, raising=False)


@pytest.fixture(scope="session")
def demo_corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "demo.jsonl"
    write_demo_corpus(path, n_train=30, n_test=20, seed=5)
    return path


def make_campaign_config(corpus_path, out_dir, **overrides) -> CampaignConfig:
    data = {
        "corpus": str(corpus_path),
        "out_dir": str(out_dir),
        "name": "mock-image",
        "seed": 7,
        "n": 4,
        "large_n": 16,
        "providers": {
            "embedding": {"backend": "mock", "seed": 1},
            "nli": {"backend": "mock", "seed": 2},
            "generation": {"backend": "mock", "seed": 3},
            "annotation": {"backend": "mock", "seed": 4},
        },
    }
    data.update(overrides)
    return CampaignConfig.from_dict(data)


def verdict(cross=True, uni=True, dist=True, aux=True, **kw) -> CriteriaVerdict:
    return CriteriaVerdict(crossmodal=cross, unimodal=uni, distance=dist, auxiliary=aux, **kw)


def token(lemma: str, op: str = "I", pos: str = "NOUN") -> AttributeToken:
    return AttributeToken(op=op, pos=pos, lemma=lemma)


def pool(pair_id: str, *candidates: tuple[bool, tuple[str, ...]]) -> CandidatePool:
    """Build a pool from (success, token-lemmas) tuples."""
    built = tuple(
        PoolCandidate(
            text=f"{pair_id}-cand-{i}",
            verdict=verdict(cross=ok, uni=ok, dist=True, aux=ok),
            tokens=tuple(token(lemma) for lemma in lemmas),
        )
        for i, (ok, lemmas) in enumerate(candidates)
    )
    return CandidatePool(pair_id=pair_id, candidates=built)
