"""Word-level Levenshtein distance with an explicit, replayable edit script."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

INSERT = "insert"
DELETE = "delete"
SUBSTITUTE = "substitute"


@dataclass(frozen=True)
class EditOp:
    """One unit-cost edit.

    `position` indexes the source token list (for inserts: the slot the new
    word lands in front of). `target_position` indexes the target token list
    for the word introduced by inserts/substitutes; downstream attribution
    uses it to annotate inserted words in the candidate's context.
    """

    kind: str
    position: int
    old_word: str | None = None
    new_word: str | None = None
    target_position: int | None = None

    def __post_init__(self):
        if self.kind == INSERT and (self.old_word is not None or self.new_word is None):
            raise ValueError("insert carries new_word only")
        if self.kind == DELETE and (self.old_word is None or self.new_word is not None):
            raise ValueError("delete carries old_word only")
        if self.kind == SUBSTITUTE:
            if self.old_word is None or self.new_word is None:
                raise ValueError("substitute carries both words")
            if self.old_word == self.new_word:
                raise ValueError("substitute must change the word")


@dataclass(frozen=True)
class EditScript:
    """Minimum edit script; ops are stored in backtrace order (descending
    source position), so replaying them in order against the source list
    never invalidates a later op's position."""

    ops: tuple[EditOp, ...]
    distance: int
    source_len: int
    target_len: int

    def apply(self, source: Sequence[str]) -> list[str]:
        """Replay the script on a source token list."""
        if len(source) != self.source_len:
            raise ValueError(f"source length {len(source)} != {self.source_len}")
        work = list(source)
        for op in self.ops:
            if op.kind == DELETE:
                del work[op.position]
            elif op.kind == SUBSTITUTE:
                work[op.position] = op.new_word
            else:
                work.insert(op.position, op.new_word)
        return work


def align(original: Sequence[str], candidate: Sequence[str]) -> EditScript:
    """Unit-cost word-level alignment between two token lists.

    Ties in the backtrace prefer substitute over delete over insert,
    scanning from the sequence end, so the returned script is unique and
    reproducible. Empty inputs are legal (distance equals the other
    list's length).
    """
    n, m = len(original), len(candidate)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = i
    for j in range(1, m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        row, prev = dp[i], dp[i - 1]
        src = original[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (src != candidate[j - 1])
            row[j] = min(sub, prev[j] + 1, row[j - 1] + 1)

    ops: list[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        cost = dp[i][j]
        if i > 0 and j > 0 and original[i - 1] == candidate[j - 1] and dp[i - 1][j - 1] == cost:
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and dp[i - 1][j - 1] + 1 == cost:
            i -= 1
            j -= 1
            ops.append(EditOp(SUBSTITUTE, i, old_word=original[i], new_word=candidate[j], target_position=j))
        elif i > 0 and dp[i - 1][j] + 1 == cost:
            i -= 1
            ops.append(EditOp(DELETE, i, old_word=original[i]))
        else:
            j -= 1
            ops.append(EditOp(INSERT, i, new_word=candidate[j], target_position=j))

    return EditScript(ops=tuple(ops), distance=dp[n][m], source_len=n, target_len=m)
