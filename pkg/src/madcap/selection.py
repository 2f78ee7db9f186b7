"""Candidate selection: Best-of-N draws, success filtering for training
exports, and coordinate-ascent selection that maximizes token diversity."""

from __future__ import annotations

import itertools
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .criteria import CriteriaVerdict
from .diversity import AttributeToken, distinct1_from_counts, entropy_from_counts

log = logging.getLogger(__name__)

Objective = Callable[[Mapping[str, int]], float]


@dataclass(frozen=True)
class PoolCandidate:
    text: str  # parsed payload; "" when the raw output never parsed
    verdict: CriteriaVerdict
    tokens: tuple[AttributeToken, ...] = ()


@dataclass(frozen=True)
class CandidatePool:
    """All candidates generated for one data pair."""

    pair_id: str
    candidates: tuple[PoolCandidate, ...]

    @property
    def success_set(self) -> tuple[int, ...]:
        """Indices whose verdict passed all four criteria."""
        return tuple(i for i, c in enumerate(self.candidates) if c.verdict.total)


def best_of_n(pool: CandidatePool, rng: random.Random) -> int:
    """Uniform draw from the fully successful candidates, falling back to a
    uniform draw over the whole pool when none succeeded."""
    if not pool.candidates:
        raise ValueError(f"pool {pool.pair_id} is empty")
    success = pool.success_set
    if success:
        return rng.choice(success)
    return rng.randrange(len(pool.candidates))


def select_rft(pools: Sequence[CandidatePool],
               rng: random.Random | None = None) -> list[tuple[str, str]]:
    """One successful candidate per pool; pools without successes are dropped.

    The draw is uniform over each success set when an rng is given,
    otherwise the lowest successful index (campaign exports re-select with
    their configured strategy anyway).
    """
    out: list[tuple[str, str]] = []
    dropped = 0
    for pool in sorted(pools, key=lambda p: p.pair_id):
        success = pool.success_set
        if not success:
            dropped += 1
            continue
        idx = rng.choice(success) if rng is not None else success[0]
        out.append((pool.pair_id, pool.candidates[idx].text))
    if dropped:
        log.warning("select_rft dropped %d of %d pools with no successful candidate",
                    dropped, len(pools))
    return out


@dataclass
class SelectionState:
    """Chosen candidate per pair plus the pooled token frequency table; the
    cached entropy always matches a from-scratch recomputation of freq."""

    chosen: dict[str, int]
    freq: Counter
    entropy: float


class _EntropyLedger:
    """Incremental Shannon entropy over a mutable frequency table.

    Tracks T = sum of counts and S = sum of c*ln(c), so a hypothetical
    swap of token multisets scores in time proportional to the tokens
    touched: H = ln(T) - S/T.
    """

    def __init__(self, counts: Counter):
        self.counts = Counter(counts)
        self.total = sum(self.counts.values())
        self.clogc = sum(c * math.log(c) for c in self.counts.values() if c > 0)

    def entropy(self) -> float:
        if self.total <= 0:
            return 0.0
        return math.log(self.total) - self.clogc / self.total

    def _delta(self, removed: Sequence[str], added: Sequence[str]) -> dict[str, int]:
        delta: dict[str, int] = {}
        for tok in removed:
            delta[tok] = delta.get(tok, 0) - 1
        for tok in added:
            delta[tok] = delta.get(tok, 0) + 1
        return delta

    def score_swap(self, removed: Sequence[str], added: Sequence[str]) -> float:
        s, t = self.clogc, self.total
        for tok, d in self._delta(removed, added).items():
            if d == 0:
                continue
            c = self.counts.get(tok, 0)
            c2 = c + d
            if c2 < 0:
                raise ValueError(f"cannot remove {tok!r} beyond its count {c}")
            if c > 0:
                s -= c * math.log(c)
            if c2 > 0:
                s += c2 * math.log(c2)
            t += d
        if t <= 0:
            return 0.0
        return math.log(t) - s / t

    def apply_swap(self, removed: Sequence[str], added: Sequence[str]) -> None:
        for tok, d in self._delta(removed, added).items():
            if d == 0:
                continue
            c = self.counts.get(tok, 0)
            c2 = c + d
            if c2 < 0:
                raise ValueError(f"cannot remove {tok!r} beyond its count {c}")
            if c > 0:
                self.clogc -= c * math.log(c)
            if c2 > 0:
                self.clogc += c2 * math.log(c2)
                self.counts[tok] = c2
            else:
                del self.counts[tok]
            self.total += d


def _rendered(pool: CandidatePool, idx: int) -> list[str]:
    return [tok.rendered for tok in pool.candidates[idx].tokens]


def _ascend(ordered: Sequence[CandidatePool], k: int, init: dict[str, int],
            objective: Objective | None) -> SelectionState:
    """One coordinate-ascent run from a fixed initialization.

    Up to k sweeps in ascending pair order; each pair moves to the
    candidate maximizing the global diversity of the pooled tokens with
    that candidate substituted in. Ties keep the incumbent, then the
    lowest index; entropy never decreases across a swap. Stops early
    when a full sweep changes nothing.
    """
    chosen = dict(init)
    counts: Counter = Counter()
    for pool in ordered:
        counts.update(_rendered(pool, chosen[pool.pair_id]))
    ledger = _EntropyLedger(counts)

    def score(incumbent_tokens: list[str], candidate_tokens: list[str]) -> float:
        if objective is None:
            return ledger.score_swap(incumbent_tokens, candidate_tokens)
        trial = Counter(ledger.counts)
        trial.subtract(incumbent_tokens)
        trial.update(candidate_tokens)
        return objective(+trial)  # unary + drops non-positive counts

    for _ in range(k):
        changed = False
        for pool in ordered:
            incumbent = chosen[pool.pair_id]
            incumbent_tokens = _rendered(pool, incumbent)
            best_idx = incumbent
            best_score = score(incumbent_tokens, incumbent_tokens)
            for idx in pool.success_set:
                if idx == incumbent:
                    continue
                s = score(incumbent_tokens, _rendered(pool, idx))
                if s > best_score:
                    best_idx, best_score = idx, s
            if best_idx != incumbent:
                ledger.apply_swap(incumbent_tokens, _rendered(pool, best_idx))
                chosen[pool.pair_id] = best_idx
                changed = True
        if not changed:
            break

    return SelectionState(
        chosen=chosen,
        freq=Counter(ledger.counts),
        entropy=entropy_from_counts(ledger.counts),
    )


def _objective_value(state: SelectionState, objective: Objective | None) -> float:
    if objective is None:
        return state.entropy
    return objective(state.freq)


def gibbs_select(
    pools: Sequence[CandidatePool],
    k: int,
    rng: random.Random,
    objective: Objective | None = None,
    restarts: int = 8,
    small_space_cap: int = 32,
) -> SelectionState:
    """Coordinate-ascent selection of one successful candidate per pool.

    Single-run coordinate ascent has genuine local maxima and tie
    plateaus even on tiny instances (e.g. three pools whose single moves
    all tie), so this runs multiple ascents and keeps the best final
    state. When the joint success space is at most `small_space_cap`
    assignments, every distinct initialization is tried, which makes the
    result exactly the global optimum for small instances (ascent never
    leaves a global maximum). Larger instances draw `restarts` uniform
    initializations from rng; the first one consumes rng exactly like a
    uniform per-pool draw, so a best-of-n style draw with the same rng is
    never more diverse than this selection.

    The default objective is entropy (scored incrementally); any
    counts -> float function (e.g. distinct-1) can be injected instead.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    ordered = sorted(pools, key=lambda p: p.pair_id)
    if len({p.pair_id for p in ordered}) != len(ordered):
        raise ValueError("duplicate pair_id across pools")
    for pool in ordered:
        if not pool.success_set:
            raise ValueError(
                f"pool {pool.pair_id} has no successful candidate; filter pools first")

    space = 1
    for pool in ordered:
        space *= len(pool.success_set)

    inits: list[dict[str, int]]
    if space <= small_space_cap:
        inits = [
            {pool.pair_id: idx for pool, idx in zip(ordered, combo)}
            for combo in itertools.product(*(p.success_set for p in ordered))
        ]
    else:
        inits = [
            {pool.pair_id: rng.choice(pool.success_set) for pool in ordered}
            for _ in range(restarts)
        ]

    best: SelectionState | None = None
    for init in inits:
        state = _ascend(ordered, k, init, objective)
        if best is None or _objective_value(state, objective) > _objective_value(best, objective):
            best = state
    return best


def entropy_objective(counts: Mapping[str, int]) -> float:
    return entropy_from_counts(counts)


def distinct1_objective(counts: Mapping[str, int]) -> float:
    return distinct1_from_counts(counts)
