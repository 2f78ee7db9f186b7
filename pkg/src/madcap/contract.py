"""Wire contract between the in-process mocks and the bridge service.

The bridge's mock mode must reproduce this package's mock providers byte
for byte on the wire. The contract is pinned by golden fixture files
(repo-level ``fixtures/mock_contract/``): canonical JSON responses with
all floats rounded to WIRE_DECIMALS. Both test suites consume the same
files, and ``madcap mock-serve-check`` replays them against a live bridge.
"""

from __future__ import annotations

import json
from pathlib import Path

import httpx

from .providers import EmbedInput, canonical_json
from .providers.mock import MockAnnotation, MockEmbedding, MockItm, MockNli

WIRE_DECIMALS = 7
FIXTURE_SEED = 1
ENDPOINTS = ("embed", "nli", "annotate", "itm")

# Canonical requests exercised by the contract; they cover identity and
# disjoint NLI pairs, text and asset embedding kinds, lexicon / suffix /
# fallback annotation paths, and the equal-logit and ln(3)-gap match
# scores (0.5 and 0.75).
FIXTURE_REQUESTS: dict[str, list[dict]] = {
    "embed": [
        {"inputs": [{"kind": "text", "value": "a cat"},
                    {"kind": "text", "value": "a cat"},
                    {"kind": "text", "value": "a dog"}]},
        {"inputs": [{"kind": "image", "value": "scene baby bed chair vintage"},
                    {"kind": "text", "value": "a baby is sitting on a bed"}]},
    ],
    "nli": [
        {"pairs": [{"premise": "a red car", "hypothesis": "a red car"},
                   {"premise": "a red car", "hypothesis": "wooden elephant"},
                   {"premise": "a red car", "hypothesis": "a red car parked"}]},
    ],
    "annotate": [
        {"texts": ["man", "running", "blorptastic", "A baby is sitting on a bed."]},
    ],
    "itm": [
        {"asset": "scene a x", "caption": "a b"},
        {"asset": "w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 other",
         "caption": "w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12"},
        {"asset": "scene baby bed", "caption": "a baby is sitting on a bed"},
    ],
}


def wire_round(value: float) -> float:
    return round(float(value), WIRE_DECIMALS)


def mock_wire_response(endpoint: str, request: dict, seed: int = FIXTURE_SEED) -> dict:
    """The wire response the mocks produce for one contract request."""
    if endpoint == "embed":
        provider = MockEmbedding(seed=seed)
        vectors = provider.embed([EmbedInput(i["kind"], i["value"]) for i in request["inputs"]])
        return {"vectors": [[wire_round(x) for x in row] for row in vectors],
                "dim": provider.dim}
    if endpoint == "nli":
        rows = MockNli(seed=seed).score_pairs(
            [(p["premise"], p["hypothesis"]) for p in request["pairs"]])
        return {"scores": [[wire_round(s) for s in row] for row in rows]}
    if endpoint == "annotate":
        annotated = MockAnnotation(seed=seed).annotate(request["texts"])
        return {"annotations": [
            [{"text": a.text, "pos": a.pos, "lemma": a.lemma} for a in per_text]
            for per_text in annotated
        ]}
    if endpoint == "itm":
        score = MockItm(seed=seed).score(request["asset"], request["caption"])
        return {"score": wire_round(score)}
    raise ValueError(f"unknown contract endpoint {endpoint!r}")


def build_fixtures(seed: int = FIXTURE_SEED) -> dict[str, dict]:
    return {
        endpoint: {
            "seed": seed,
            "cases": [
                {"request": request, "response": mock_wire_response(endpoint, request, seed)}
                for request in FIXTURE_REQUESTS[endpoint]
            ],
        }
        for endpoint in ENDPOINTS
    }


def write_fixtures(directory: str | Path, seed: int = FIXTURE_SEED) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for endpoint, data in build_fixtures(seed).items():
        (directory / f"{endpoint}.json").write_bytes(canonical_json(data).encode("utf-8"))


def load_fixtures(directory: str | Path) -> dict[str, dict]:
    directory = Path(directory)
    out = {}
    for endpoint in ENDPOINTS:
        path = directory / f"{endpoint}.json"
        if not path.exists():
            raise FileNotFoundError(f"missing contract fixture {path}")
        out[endpoint] = json.loads(path.read_text(encoding="utf-8"))
    return out


def check_bridge(base_url: str, fixtures_dir: str | Path, timeout: float = 10.0,
                 transport: httpx.BaseTransport | None = None) -> list[tuple[str, bool, str]]:
    """Replay every fixture case against a live bridge.

    Returns (check name, passed, detail) rows; responses must byte-match
    the fixtures' canonical JSON. `transport` is a test seam.
    """
    fixtures = load_fixtures(fixtures_dir)
    results: list[tuple[str, bool, str]] = []
    with httpx.Client(base_url=base_url, timeout=timeout, transport=transport) as client:
        try:
            health = client.get("/healthz")
            health.raise_for_status()
            roles = health.json().get("roles", {})
            missing = [ep for ep in ("embedding", "nli", "annotation", "itm") if ep not in roles]
            results.append(("healthz", not missing,
                            f"roles={sorted(roles)}" if not missing else f"missing roles {missing}"))
        except (httpx.HTTPError, ValueError) as exc:
            results.append(("healthz", False, str(exc)))
            return results

        for endpoint, data in fixtures.items():
            for case_index, case in enumerate(data["cases"]):
                name = f"{endpoint}[{case_index}]"
                try:
                    resp = client.post(f"/v1/{endpoint}", json=case["request"])
                    resp.raise_for_status()
                except httpx.HTTPError as exc:
                    results.append((name, False, str(exc)))
                    continue
                expected = canonical_json(case["response"]).encode("utf-8")
                if resp.content == expected:
                    results.append((name, True, "byte-identical"))
                else:
                    results.append((name, False,
                                    f"body differs: got {resp.content[:80]!r}..."))
    return results
