"""End-to-end attack campaigns.

A campaign is a directory: config snapshot, per-stage output files, and a
machine-readable report. Stages are isolated: the verdict file alone is
enough to recompute selection, success rates, and diversity without
re-calling any provider. Every random draw derives from the campaign
seed per pair, so worker parallelism never changes results.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, DataPair, ingest, tokenize
from .criteria import (
    AsrReport,
    CriteriaConfig,
    CriteriaVerdict,
    aggregate_asr,
    eval_auxiliary,
    eval_unimodal,
    parse_generated,
    verdict_from_record,
    verdict_to_record,
)
from .demo import stable_seed
from .diversity import (
    AttributeToken,
    AnnotationMisalignment,
    DiversityReport,
    attribute_tokens,
    diversity_report,
    entropy_from_counts,
    write_token_distribution,
)
from .editscript import align
from .prompts import GENERAL, GENERATED_PREFIX, PROMPT_KINDS, render_prompt, split_conversation
from .providers import (
    EmbedInput,
    ProviderError,
    ProviderSpec,
    ResponseCache,
    SamplingParams,
    build_provider,
)
from .selection import CandidatePool, PoolCandidate, best_of_n, gibbs_select

log = logging.getLogger(__name__)

CACHE_ENV_VAR = "MAC_CACHE_DIR"

# Fine-tuning recipe shipped with every training export; the trainer runs
# externally and resets to the base checkpoint at each round.
FINETUNE_RECIPE = {
    "batch_size": 16,
    "lora_rank": 16,
    "lora_alpha": 32,
    "learning_rate": 2e-4,
    "epochs": 3,
    "reset_to_base_checkpoint_each_round": True,
}


class CampaignError(RuntimeError):
    """A campaign stage failed."""


class MissingEndpointError(CampaignError):
    """No generation endpoint registered for the requested round."""


@dataclass(frozen=True)
class SelectionConfig:
    strategy: str = "best_of_n"
    k: int = 3  # coordinate-ascent sweeps (gibbs strategy only)

    def __post_init__(self):
        if self.strategy not in ("best_of_n", "gibbs"):
            raise ValueError(f"unknown selection strategy {self.strategy!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class CampaignConfig:
    corpus: str
    out_dir: str = "campaign"
    name: str = "campaign"
    providers: dict = field(default_factory=dict)  # role -> ProviderSpec
    prompt: str = GENERAL
    n: int = 4
    large_n: int = 64
    seed: int = 0
    round: int = 0
    split: str = "test"
    workers: int = 1
    max_exclusion_rate: float = 0.10
    criteria: CriteriaConfig = field(default_factory=CriteriaConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    sampling: SamplingParams = field(default_factory=SamplingParams)
    generation_rounds: dict = field(default_factory=dict)  # round -> ProviderSpec
    transfer_targets: dict = field(default_factory=dict)  # name -> ProviderSpec
    cache_dir: str | None = None
    loaded_overrides: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.large_n < self.n:
            raise ValueError(f"large_n ({self.large_n}) must be >= n ({self.n})")
        if self.round < 0:
            raise ValueError(f"round must be >= 0, got {self.round}")
        if self.prompt not in PROMPT_KINDS:
            raise ValueError(f"unknown prompt kind {self.prompt!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.criteria.prompt_mode != self.prompt:
            object.__setattr__(self, "criteria", replace(self.criteria, prompt_mode=self.prompt))

    @classmethod
    def from_dict(cls, data: dict, overrides: Sequence[str] = ()) -> "CampaignConfig":
        data = json.loads(json.dumps(data))  # deep copy
        for item in overrides:
            _apply_override(data, item)
        providers = {
            role: ProviderSpec.from_dict(role, spec)
            for role, spec in data.pop("providers", {}).items()
        }
        rounds = {
            int(r): ProviderSpec.from_dict("generation", spec)
            for r, spec in data.pop("generation_rounds", {}).items()
        }
        targets = {
            name: ProviderSpec.from_dict("embedding", spec)
            for name, spec in data.pop("transfer_targets", {}).items()
        }
        criteria_data = data.pop("criteria", {})
        criteria_data.pop("prompt_mode", None)  # always follows the campaign prompt
        for key in ("negation_blacklist", "enabled_aux_rules"):
            if key in criteria_data:
                criteria_data[key] = frozenset(criteria_data[key])
        criteria = CriteriaConfig(prompt_mode=data.get("prompt", GENERAL), **criteria_data)
        selection = SelectionConfig(**data.pop("selection", {}))
        sampling = SamplingParams(**data.pop("sampling", {}))
        known = {f for f in cls.__dataclass_fields__} - {
            "providers", "criteria", "selection", "sampling",
            "generation_rounds", "transfer_targets", "loaded_overrides",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown campaign config fields: {sorted(unknown)}")
        return cls(
            providers=providers,
            criteria=criteria,
            selection=selection,
            sampling=sampling,
            generation_rounds=rounds,
            transfer_targets=targets,
            loaded_overrides=tuple(overrides),
            **data,
        )

    @classmethod
    def from_file(cls, path: str | Path, overrides: Sequence[str] = ()) -> "CampaignConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), overrides)

    def to_dict(self) -> dict:
        return {
            "corpus": self.corpus,
            "out_dir": self.out_dir,
            "name": self.name,
            "providers": {role: spec.to_dict() for role, spec in self.providers.items()},
            "prompt": self.prompt,
            "n": self.n,
            "large_n": self.large_n,
            "seed": self.seed,
            "round": self.round,
            "split": self.split,
            "workers": self.workers,
            "max_exclusion_rate": self.max_exclusion_rate,
            "criteria": {
                "tau": self.criteria.tau,
                "negation_blacklist": sorted(self.criteria.negation_blacklist),
                "prompt_mode": self.criteria.prompt_mode,
                "nli_direction": self.criteria.nli_direction,
                "blacklist_contractions": self.criteria.blacklist_contractions,
                "enabled_aux_rules": sorted(self.criteria.enabled_aux_rules),
            },
            "selection": {"strategy": self.selection.strategy, "k": self.selection.k},
            "sampling": {
                "top_p": self.sampling.top_p,
                "temperature": self.sampling.temperature,
                "seed": self.sampling.seed,
                "max_tokens": self.sampling.max_tokens,
            },
            "generation_rounds": {str(r): s.to_dict() for r, s in self.generation_rounds.items()},
            "transfer_targets": {n: s.to_dict() for n, s in self.transfer_targets.items()},
            "cache_dir": self.cache_dir,
            "loaded_overrides": list(self.loaded_overrides),
        }

    def generation_spec_for_round(self, round_index: int) -> ProviderSpec:
        if round_index in self.generation_rounds:
            return self.generation_rounds[round_index]
        if round_index == 0 and "generation" in self.providers:
            return self.providers["generation"]
        raise MissingEndpointError(
            f"no generation endpoint registered for round {round_index}; fine-tune on the "
            f"round {round_index - 1} export and register the endpoint under generation_rounds")


def _apply_override(data: dict, item: str) -> None:
    if "=" not in item:
        raise ValueError(f"override {item!r} is not KEY=VALUE")
    key, raw_value = item.split("=", 1)
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ValueError(f"override {item!r} descends through a non-object")
    node[parts[-1]] = value


@dataclass
class ProviderSet:
    embedding: object
    nli: object
    generation: object
    annotation: object
    itm: object | None = None


def resolve_cache_dir(cfg: CampaignConfig, out_dir: Path) -> Path:
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env)
    if cfg.cache_dir:
        return Path(cfg.cache_dir)
    return out_dir / "cache"


def build_provider_set(cfg: CampaignConfig, cache: ResponseCache | None,
                       generation_spec: ProviderSpec | None = None) -> ProviderSet:
    required = ("embedding", "nli", "generation", "annotation")
    missing = [r for r in required if r not in cfg.providers and not (r == "generation" and generation_spec)]
    if missing:
        raise CampaignError(f"campaign config is missing provider roles: {missing}")
    gen_spec = generation_spec or cfg.providers["generation"]
    specs = {**cfg.providers, "generation": gen_spec}
    for role, spec in specs.items():
        # Bridge-API roles are health-checked up front; the generation role
        # may target any chat-completions endpoint, which has no /healthz.
        if spec.backend == "http" and role != "generation":
            from .providers.http import health_check

            try:
                health_check(spec)
            except ProviderError as exc:
                raise CampaignError(f"{role} backend failed its health check: {exc}") from exc
    return ProviderSet(
        embedding=build_provider(specs["embedding"], cache),
        nli=build_provider(specs["nli"], cache),
        generation=build_provider(gen_spec, cache),
        annotation=build_provider(specs["annotation"], cache),
        itm=build_provider(specs["itm"], cache) if "itm" in specs else None,
    )


@dataclass(frozen=True)
class EvaluatedCandidate:
    index: int
    raw: str
    payload: str | None
    verdict: CriteriaVerdict
    tokens: tuple[AttributeToken, ...]


@dataclass(frozen=True)
class PairOutcome:
    pair_id: str
    prompt: str | None = None
    candidates: tuple[EvaluatedCandidate, ...] = ()
    error: str | None = None


@dataclass(frozen=True)
class SelectedSample:
    pair_id: str
    candidate_index: int
    caption: str
    verdict: CriteriaVerdict
    tokens: tuple[AttributeToken, ...]


def evaluate_pair(pair: DataPair, raws: Sequence[str], l_d: float,
                  providers: ProviderSet, criteria_cfg: CriteriaConfig) -> list[EvaluatedCandidate]:
    """Evaluate all raw completions for one pair against the four criteria."""
    payloads = [parse_generated(raw) for raw in raws]
    parseable = [i for i, p in enumerate(payloads) if p is not None]

    original_annotation = providers.annotation.annotate([pair.caption])[0]
    candidate_annotations = {}
    if parseable:
        annotated = providers.annotation.annotate([payloads[i] for i in parseable])
        candidate_annotations = dict(zip(parseable, annotated))

        embed_batch = [EmbedInput(pair.modality, pair.asset_ref),
                       EmbedInput("text", pair.caption)]
        embed_batch += [EmbedInput("text", payloads[i]) for i in parseable]
        vectors = providers.embedding.embed(embed_batch)
        sim_original = float(vectors[0] @ vectors[1])
        sims = {i: float(vectors[0] @ vectors[2 + row]) for row, i in enumerate(parseable)}

        if criteria_cfg.nli_direction == "generated_as_premise":
            queries = [(payloads[i], pair.caption) for i in parseable]
        else:
            queries = [(pair.caption, payloads[i]) for i in parseable]
        score_rows = providers.nli.score_pairs(queries)
        expected = getattr(providers.nli, "model_count", None)
        for row in score_rows:
            if not row or (expected is not None and len(row) != expected):
                raise ProviderError(
                    f"pair {pair.id}: nli backend returned {len(row)} scores, expected {expected}")
        nli_scores = dict(zip(parseable, score_rows))

    original_tokens = tokenize(pair.caption)
    out: list[EvaluatedCandidate] = []
    for i, raw in enumerate(raws):
        payload = payloads[i]
        if payload is None:
            s_a, failures = eval_auxiliary(pair.caption, raw, criteria_cfg)
            verdict = CriteriaVerdict(
                crossmodal=False, unimodal=False, distance=False, auxiliary=s_a,
                aux_failures=tuple(failures))
            out.append(EvaluatedCandidate(i, raw, None, verdict, ()))
            continue
        annotation = candidate_annotations[i]
        script = align(original_tokens, tokenize(payload))
        tokens = tuple(attribute_tokens(script, original_annotation, annotation))
        s_a, failures = eval_auxiliary(pair.caption, raw, criteria_cfg,
                                       (original_annotation, annotation))
        scores = nli_scores[i]
        verdict = CriteriaVerdict(
            crossmodal=sims[i] > sim_original,
            unimodal=all(s < criteria_cfg.tau for s in scores),
            distance=script.distance < l_d / 2,
            auxiliary=s_a,
            sim_original=sim_original,
            sim_candidate=sims[i],
            nli_scores=tuple(scores),
            edit_distance=script.distance,
            aux_failures=tuple(failures),
        )
        out.append(EvaluatedCandidate(i, raw, payload, verdict, tokens))
    return out


def _process_pair(pair: DataPair, cfg: CampaignConfig, providers: ProviderSet,
                  l_d: float, budget: int) -> PairOutcome:
    prompt = render_prompt(cfg.prompt, pair.modality, pair.caption, l_d)
    params = replace(cfg.sampling, seed=stable_seed(cfg.seed, "gen", pair.id))
    try:
        raws = providers.generation.generate(prompt, budget, params)
        if len(raws) != budget:
            raise ProviderError(f"pair {pair.id}: got {len(raws)} of {budget} completions")
        candidates = evaluate_pair(pair, raws, l_d, providers, cfg.criteria)
    except (ProviderError, AnnotationMisalignment) as exc:
        log.warning("excluding pair %s: %s", pair.id, exc)
        return PairOutcome(pair_id=pair.id, error=str(exc))
    return PairOutcome(pair_id=pair.id, prompt=prompt, candidates=tuple(candidates))


def outcome_to_pool(outcome: PairOutcome) -> CandidatePool:
    return CandidatePool(
        pair_id=outcome.pair_id,
        candidates=tuple(
            PoolCandidate(text=c.payload or "", verdict=c.verdict, tokens=c.tokens)
            for c in outcome.candidates
        ),
    )


def select_candidates(pools: Sequence[CandidatePool], cfg: CampaignConfig) -> tuple[list[SelectedSample], dict]:
    """Apply the configured selection strategy to evaluated pools."""
    chosen: dict[str, int] = {}
    manifest: dict = {
        "strategy": cfg.selection.strategy,
        "seed": cfg.seed,
        "objective": "entropy",
    }
    if cfg.selection.strategy == "gibbs":
        successful = [p for p in pools if p.success_set]
        if successful:
            state = gibbs_select(successful, cfg.selection.k,
                                 random.Random(stable_seed(cfg.seed, "gibbs")))
            chosen.update(state.chosen)
            manifest["optimized_entropy"] = state.entropy
        manifest["k"] = cfg.selection.k
        remaining = [p for p in pools if p.pair_id not in chosen]
    else:
        remaining = list(pools)
    for pool in remaining:
        rng = random.Random(stable_seed(cfg.seed, "bon", pool.pair_id))
        chosen[pool.pair_id] = best_of_n(pool, rng)

    selected = []
    for pool in pools:  # corpus order
        idx = chosen[pool.pair_id]
        cand = pool.candidates[idx]
        selected.append(SelectedSample(pool.pair_id, idx, cand.text, cand.verdict, cand.tokens))
    return selected, manifest


@dataclass
class CampaignResult:
    out_dir: Path
    report: dict
    asr: AsrReport
    diversity: DiversityReport
    pools: list[CandidatePool]
    selected: list[SelectedSample]
    excluded: list[str]
    corpus: Corpus
    corpus_digest: str


def _canonical_report_bytes(report: dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8")


def _write_jsonl(path: Path, rows: Sequence[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_attack(cfg: CampaignConfig, *, out_dir: str | Path | None = None,
               split: str | None = None, budget: int | None = None,
               generation_spec: ProviderSpec | None = None,
               providers: ProviderSet | None = None) -> CampaignResult:
    """Generate, evaluate, select, and report for one corpus split."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    split = split or cfg.split
    budget = budget or cfg.n

    corpus_path = Path(cfg.corpus)
    full = ingest(corpus_path)
    corpus = full.for_split(split)
    if not corpus.pairs:
        raise CampaignError(f"corpus {cfg.corpus} has no pairs in split {split!r}")
    corpus_digest = _file_digest(corpus_path)

    if providers is None:
        cache = ResponseCache(resolve_cache_dir(cfg, out))
        providers = build_provider_set(cfg, cache, generation_spec)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(
                lambda pair: _process_pair(pair, cfg, providers, corpus.l_d, budget),
                corpus.pairs))
    else:
        outcomes = [_process_pair(pair, cfg, providers, corpus.l_d, budget)
                    for pair in corpus.pairs]

    excluded = [o.pair_id for o in outcomes if o.error is not None]
    if len(excluded) > cfg.max_exclusion_rate * len(corpus.pairs):
        raise CampaignError(
            f"{len(excluded)}/{len(corpus.pairs)} pairs excluded by provider failures, "
            f"above the {cfg.max_exclusion_rate:.0%} abort threshold: {excluded[:5]}...")

    kept = [o for o in outcomes if o.error is None]
    _write_jsonl(out / "candidates.jsonl", [
        {"pair_id": o.pair_id, "candidate_index": c.index, "raw": c.raw}
        for o in kept for c in o.candidates
    ])
    _write_jsonl(out / "verdicts.jsonl", [
        verdict_to_record(o.pair_id, c.index, c.raw, c.payload, c.verdict,
                          [t.rendered for t in c.tokens])
        for o in kept for c in o.candidates
    ])
    _write_json(out / "exclusions.json", {
        "excluded": excluded, "count": len(excluded), "total_pairs": len(corpus.pairs),
    })

    pools = [outcome_to_pool(o) for o in kept]
    result = finalize_campaign(cfg, out, pools, corpus, corpus_digest,
                               excluded, split=split, budget=budget)
    snapshot = cfg.to_dict()
    snapshot["resolved_corpus"] = str(corpus_path.resolve())
    snapshot["evaluated_split"] = split
    snapshot["budget"] = budget
    _write_json(out / "config_snapshot.json", snapshot)
    return result


def finalize_campaign(cfg: CampaignConfig, out: Path, pools: Sequence[CandidatePool],
                      corpus: Corpus, corpus_digest: str, excluded: Sequence[str],
                      *, split: str, budget: int) -> CampaignResult:
    """Selection, metrics, and report files from evaluated pools."""
    if not pools:
        raise CampaignError("no evaluated pools to select from")
    selected, sel_manifest = select_candidates(pools, cfg)
    asr = aggregate_asr([s.verdict for s in selected])
    div = diversity_report([(s.verdict, s.tokens) for s in selected])
    sel_manifest["final_entropy"] = div.entropy

    _write_jsonl(out / "selection.jsonl", [
        {"pair_id": s.pair_id, "candidate_index": s.candidate_index, "caption": s.caption}
        for s in selected
    ])
    _write_json(out / "selection_manifest.json", sel_manifest)

    report = {
        "campaign": {
            "name": cfg.name,
            "seed": cfg.seed,
            "n": budget,
            "prompt": cfg.prompt,
            "round": cfg.round,
            "split": split,
            "corpus": {
                "name": corpus.name,
                "digest": corpus_digest,
                "pairs": len(corpus.pairs),
                "l_d": corpus.l_d,
                "distance_threshold": corpus.l_d / 2,
            },
            "excluded_pairs": len(excluded),
        },
        "asr": asr.to_dict(),
        "diversity": div.to_dict(),
        "selection": sel_manifest,
    }
    (out / "report.json").write_bytes(_canonical_report_bytes(report))
    write_token_distribution(div, out / "token_distribution.csv")
    return CampaignResult(
        out_dir=out, report=report, asr=asr, diversity=div, pools=list(pools),
        selected=selected, excluded=list(excluded), corpus=corpus,
        corpus_digest=corpus_digest,
    )


def load_pools(campaign_dir: str | Path) -> list[CandidatePool]:
    """Rebuild candidate pools from a campaign's verdict file alone."""
    rows = _read_jsonl(Path(campaign_dir) / "verdicts.jsonl")
    by_pair: dict[str, dict[int, dict]] = {}
    order: list[str] = []
    for row in rows:
        if row["pair_id"] not in by_pair:
            order.append(row["pair_id"])
        by_pair.setdefault(row["pair_id"], {})[row["candidate_index"]] = row
    pools = []
    for pair_id in order:
        rows_by_index = by_pair[pair_id]
        candidates = []
        for idx in sorted(rows_by_index):
            row = rows_by_index[idx]
            candidates.append(PoolCandidate(
                text=row["payload"] or "",
                verdict=verdict_from_record(row),
                tokens=tuple(AttributeToken.parse(t) for t in row["tokens"]),
            ))
        pools.append(CandidatePool(pair_id=pair_id, candidates=tuple(candidates)))
    return pools


def load_snapshot(campaign_dir: str | Path) -> dict:
    with open(Path(campaign_dir) / "config_snapshot.json", encoding="utf-8") as fh:
        return json.load(fh)


def reselect(cfg: CampaignConfig, campaign_dir: str | Path) -> CampaignResult:
    """Re-run selection and reporting from a campaign's persisted verdicts."""
    out = Path(campaign_dir)
    snapshot = load_snapshot(out)
    pools = load_pools(out)
    corpus = ingest(snapshot["resolved_corpus"]).for_split(snapshot["evaluated_split"])
    excluded = json.loads((out / "exclusions.json").read_text())["excluded"]
    return finalize_campaign(cfg, out, pools, corpus,
                             _file_digest(Path(snapshot["resolved_corpus"])), excluded,
                             split=snapshot["evaluated_split"], budget=snapshot["budget"])


def reevaluate(cfg: CampaignConfig, campaign_dir: str | Path) -> CampaignResult:
    """Recompute verdicts from persisted raw candidates, then re-select."""
    out = Path(campaign_dir)
    snapshot = load_snapshot(out)
    split = snapshot["evaluated_split"]
    budget = snapshot["budget"]
    corpus = ingest(snapshot["resolved_corpus"]).for_split(split)
    pair_map = {p.id: p for p in corpus.pairs}
    cache = ResponseCache(resolve_cache_dir(cfg, out))
    providers = build_provider_set(cfg, cache)

    raws_by_pair: dict[str, dict[int, str]] = {}
    for row in _read_jsonl(out / "candidates.jsonl"):
        raws_by_pair.setdefault(row["pair_id"], {})[row["candidate_index"]] = row["raw"]

    outcomes = []
    excluded = []
    for pair_id, raw_map in raws_by_pair.items():
        pair = pair_map.get(pair_id)
        if pair is None:
            raise CampaignError(f"candidates reference unknown pair {pair_id!r}")
        raws = [raw_map[i] for i in sorted(raw_map)]
        try:
            candidates = evaluate_pair(pair, raws, corpus.l_d, providers, cfg.criteria)
        except (ProviderError, AnnotationMisalignment) as exc:
            log.warning("excluding pair %s: %s", pair_id, exc)
            excluded.append(pair_id)
            continue
        outcomes.append(PairOutcome(pair_id=pair_id, candidates=tuple(candidates)))

    _write_jsonl(out / "verdicts.jsonl", [
        verdict_to_record(o.pair_id, c.index, c.raw, c.payload, c.verdict,
                          [t.rendered for t in c.tokens])
        for o in outcomes for c in o.candidates
    ])
    pools = [outcome_to_pool(o) for o in outcomes]
    return finalize_campaign(cfg, out, pools, corpus,
                             _file_digest(Path(snapshot["resolved_corpus"])), excluded,
                             split=split, budget=budget)


def export_rft(cfg: CampaignConfig, pools: Sequence[CandidatePool], *,
               corpus: Corpus, out_dir: str | Path, round_index: int | None = None,
               previous_digest: str | None = None) -> dict:
    """Write the fine-tuning dataset (conversation JSONL) and its manifest.

    Pools without successful candidates are dropped; the configured
    selection strategy picks among successes. Training itself happens in
    an external stack, so the manifest ships the recipe as advisory
    metadata only.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    round_index = cfg.round if round_index is None else round_index
    pair_map = {p.id: p for p in corpus.pairs}

    successful = sorted((p for p in pools if p.success_set), key=lambda p: p.pair_id)
    rng = random.Random(stable_seed(cfg.seed, "rft", round_index))
    if cfg.selection.strategy == "gibbs" and successful:
        state = gibbs_select(successful, cfg.selection.k, rng)
        chosen = state.chosen
        final_entropy = state.entropy
    else:
        chosen = {p.pair_id: rng.choice(p.success_set) for p in successful}
        counts: dict[str, int] = {}
        for p in successful:
            for tok in p.candidates[chosen[p.pair_id]].tokens:
                counts[tok.rendered] = counts.get(tok.rendered, 0) + 1
        final_entropy = entropy_from_counts(counts)

    records = []
    for pool in successful:
        pair = pair_map.get(pool.pair_id)
        if pair is None:
            raise CampaignError(f"pool references unknown pair {pool.pair_id!r}")
        target = pool.candidates[chosen[pool.pair_id]].text
        prompt = render_prompt(cfg.prompt, pair.modality, pair.caption, corpus.l_d)
        system, user = split_conversation(prompt)
        records.append({
            "pair_id": pool.pair_id,
            "candidate_index": chosen[pool.pair_id],
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
                {"role": "assistant", "content": GENERATED_PREFIX + target},
            ],
        })

    dataset_path = out / "rft_dataset.jsonl"
    _write_jsonl(dataset_path, records)
    manifest = {
        "round": round_index,
        "seed": cfg.seed,
        "strategy": cfg.selection.strategy,
        "k": cfg.selection.k,
        "prompt": cfg.prompt,
        "n": cfg.n,
        "large_n": cfg.large_n,
        "m_train": len(pools),
        "m_selected": len(records),
        "empty": not records,
        "final_entropy": final_entropy,
        "finetune": dict(FINETUNE_RECIPE),
        "records_digest": _file_digest(dataset_path),
        "previous_export_digest": previous_digest,
        "test_time_inference": "same prompt template and sampling parameters as training rounds",
    }
    if not records:
        log.warning("RFT export is empty: no pool had a successful candidate")
    _write_json(out / "rft_manifest.json", manifest)
    return manifest


def run_round(cfg: CampaignConfig) -> dict:
    """One self-training round: train-split attack at the large budget,
    dataset export, and a test-split evaluation at the small budget.

    Halts after exporting; the caller fine-tunes externally and registers
    the new endpoint for the next round.
    """
    r = cfg.round
    gen_spec = cfg.generation_spec_for_round(r)
    round_dir = Path(cfg.out_dir) / "rounds" / f"round_{r}"

    previous_digest = None
    if r > 0:
        prev_manifest = Path(cfg.out_dir) / "rounds" / f"round_{r - 1}" / "rft_manifest.json"
        if prev_manifest.exists():
            previous_digest = json.loads(prev_manifest.read_text())["records_digest"]

    train = run_attack(cfg, out_dir=round_dir / "train", split="train",
                       budget=cfg.large_n, generation_spec=gen_spec)
    manifest = export_rft(cfg, train.pools, corpus=train.corpus, out_dir=round_dir,
                          round_index=r, previous_digest=previous_digest)
    test = run_attack(cfg, out_dir=round_dir / "test", split="test",
                      budget=cfg.n, generation_spec=gen_spec)

    handle = {
        "round": r,
        "next_round": r + 1,
        "round_dir": str(round_dir),
        "rft_dataset": str(round_dir / "rft_dataset.jsonl"),
        "rft_manifest": str(round_dir / "rft_manifest.json"),
        "export_digest": manifest["records_digest"],
        "train_total_asr": train.asr.total,
        "test_total_asr": test.asr.total,
        "instructions": (
            f"fine-tune the generator externally on the exported dataset using the manifest's "
            f"recipe, then register the resulting endpoint under generation_rounds[{r + 1}] "
            f"and re-run with round={r + 1}"),
    }
    _write_json(round_dir / "round_handle.json", handle)
    return handle


def transfer_matrix(cfg: CampaignConfig, campaign_dirs: Sequence[str | Path],
                    out_path: str | Path | None = None) -> dict:
    """Re-score selected samples from source campaigns under target embedders.

    Only the crossmodal criterion is recomputed per target; unimodal,
    distance, and auxiliary verdicts are target-independent and reused
    from the source campaign's verdict file.
    """
    if not cfg.transfer_targets:
        raise CampaignError("campaign config has no transfer_targets")
    targets = dict(cfg.transfer_targets)
    cache = ResponseCache(resolve_cache_dir(cfg, Path(cfg.out_dir)))
    embedders = {name: build_provider(spec, cache) for name, spec in targets.items()}

    grid: dict[str, dict[str, float]] = {}
    for campaign_dir in campaign_dirs:
        campaign_dir = Path(campaign_dir)
        snapshot = load_snapshot(campaign_dir)
        source = snapshot.get("name") or campaign_dir.name
        if source in grid:
            source = f"{source}:{campaign_dir.name}"
        corpus = ingest(snapshot["resolved_corpus"]).for_split(snapshot["evaluated_split"])
        pair_map = {p.id: p for p in corpus.pairs}

        verdict_rows = {
            (row["pair_id"], row["candidate_index"]): row
            for row in _read_jsonl(campaign_dir / "verdicts.jsonl")
        }
        selected = _read_jsonl(campaign_dir / "selection.jsonl")

        grid[source] = {}
        for name, embedder in embedders.items():
            totals = []
            for sel in selected:
                row = verdict_rows[(sel["pair_id"], sel["candidate_index"])]
                if row["payload"] is None:
                    totals.append(False)
                    continue
                pair = pair_map[sel["pair_id"]]
                vectors = embedder.embed([
                    EmbedInput(pair.modality, pair.asset_ref),
                    EmbedInput("text", pair.caption),
                    EmbedInput("text", row["payload"]),
                ])
                cross = float(vectors[0] @ vectors[2]) > float(vectors[0] @ vectors[1])
                totals.append(cross and row["unimodal"] and row["distance"] and row["auxiliary"])
            grid[source][name] = sum(totals) / len(totals) if totals else 0.0

    result = {"targets": sorted(targets), "sources": list(grid), "grid": grid}
    if out_path is not None:
        _write_transfer_csv(result, Path(out_path))
    return result


def _write_transfer_csv(result: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("source," + ",".join(result["targets"]) + "\n")
        for source in result["sources"]:
            row = result["grid"][source]
            fh.write(source + "," + ",".join(repr(row[t]) for t in result["targets"]) + "\n")
