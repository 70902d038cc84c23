"""Common contiguous terminal patterns across the sessions of a dataset.

Patterns grow one item at a time.  Every n-gram occurrence gets an integer id
interned from ``(id of its (n-1)-prefix, last item)``, so equal n-grams share
an id exactly and extension costs O(1) per surviving position.  Only
positions whose n-gram is frequent are extended, and a pattern is maximal
when neither its left nor its right one-item extension is frequent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Sequence

from .grammar import NULL
from .mapping import Item, TerminalSequence
from .transforms import numeric_encode, plus_encode

MINING_APPROACHES = ("plus", "numeric")


def count_bucket(count: int) -> tuple[int, int]:
    """Power-of-two bucket holding ``count``: 1, 2-3, 4-7, ..."""
    lo = 1 << (count.bit_length() - 1)
    return lo, 2 * lo - 1


def token(item: Item, approach: str, bucketed: bool = False) -> str:
    """Equality key and display form of an encoded item."""
    if item.is_null:
        return NULL
    if approach == "plus":
        return item.label + "+" if item.plus else item.label
    if item.repeat_count == 1:
        return item.label
    if bucketed:
        lo, hi = count_bucket(item.repeat_count)
        return f"{item.label}[{lo}-{hi}]"
    return f"{item.label}{item.repeat_count}"


@dataclass(frozen=True)
class MinedPattern:
    items: tuple[str, ...]
    support: int
    approach: str = "plus"
    taxonomy: str | None = None

    @property
    def length(self) -> int:
        return len(self.items)

    def render(self) -> str:
        return "(" + ", ".join(self.items) + ")"

    def folded(self) -> str:
        """Best-effort regex-style folding of repeated cores; display only."""
        return "(" + ", ".join(fold(self.items, self.approach)) + ")"

    def to_dict(self) -> dict[str, Any]:
        return {
            "items": list(self.items),
            "support": self.support,
            "length": self.length,
            "pattern": self.render(),
            "folded": self.folded(),
        }


def fold(items: Sequence[str], approach: str = "plus") -> list[str]:
    """Fold tandem repeats: ``a b a b a`` becomes ``(a, b)+, a`` (``(a, b)2, a`` for numeric)."""
    items = list(items)
    out: list[str] = []
    i = 0
    while i < len(items):
        best_unit, best_reps = 1, 1
        for unit in range(1, (len(items) - i) // 2 + 1):
            reps = 1
            while items[i + reps * unit:i + (reps + 1) * unit] == items[i:i + unit]:
                reps += 1
            if reps > 1 and unit * reps > best_unit * best_reps:
                best_unit, best_reps = unit, reps
        if best_reps == 1:
            out.append(items[i])
            i += 1
            continue
        inner = ", ".join(items[i:i + best_unit])
        suffix = "+" if approach == "plus" else str(best_reps)
        out.append(f"({inner}){suffix}")
        i += best_unit * best_reps
    return out


def _tokens(seqs: Sequence[TerminalSequence], approach: str, bucketed: bool) -> list[list[str]]:
    if approach == "plus":
        enc = [plus_encode(s) for s in seqs]
    elif approach == "numeric":
        enc = [numeric_encode(s) for s in seqs]
    else:
        raise ValueError(f"unknown mining approach {approach!r}; expected plus or numeric")
    return [[token(it, approach, bucketed) for it in s.items] for s in enc]


def maximal_common(
    sessions: Sequence[Sequence[Hashable]],
    min_len: int = 2,
    min_support: float = 1.0,
) -> dict[tuple, int]:
    """Maximal contiguous patterns over already-tokenised sessions, with support.

    ``NULL`` tokens never join a pattern.
    """
    n = len(sessions)
    need = max(1, math.ceil(min_support * n - 1e-9))
    seqs = [list(s) for s in sessions]

    intern: dict[Any, int] = {}
    patterns: list[tuple] = []
    parents: list[tuple[int, int] | None] = []  # (prefix id, suffix id)

    def idof(key: Any, pattern: tuple, parent: tuple[int, int] | None) -> int:
        pid = intern.get(key)
        if pid is None:
            pid = intern[key] = len(patterns)
            patterns.append(pattern)
            parents.append(parent)
        return pid

    # per session: start position -> id of the current-length n-gram there
    ids = [{i: idof((None, t), (t,), None) for i, t in enumerate(s) if t != NULL} for s in seqs]
    length = 1
    support = _support(ids)
    frequent = {p for p, c in support.items() if c >= need}
    kept = {p: support[p] for p in frequent}
    extended: set[int] = set()
    while frequent:
        nxt_ids = []
        for s, cur in zip(seqs, ids):
            nxt = {}
            for i, pid in cur.items():
                right = cur.get(i + 1)
                if pid in frequent and right in frequent:
                    last = s[i + length]
                    nxt[i] = idof((pid, last), patterns[pid] + (last,), (pid, right))
            nxt_ids.append(nxt)
        ids = nxt_ids
        length += 1
        support = _support(ids)
        frequent = {p for p, c in support.items() if c >= need}
        for pid in frequent:
            extended.update(parents[pid])
            kept[pid] = support[pid]
    return {
        patterns[pid]: sup
        for pid, sup in kept.items()
        if len(patterns[pid]) >= min_len and pid not in extended
    }


def _support(ids: list[dict[int, int]]) -> dict[int, int]:
    out: dict[int, int] = {}
    for cur in ids:
        for pid in set(cur.values()):
            out[pid] = out.get(pid, 0) + 1
    return out


def common_subsequences(
    seqs: Sequence[TerminalSequence],
    approach: str = "plus",
    min_len: int = 2,
    min_support: float = 1.0,
    bucket_counts: bool = False,
) -> list[MinedPattern]:
    """Maximal contiguous patterns found in at least ``min_support`` of the sessions.

    Sessions are plus- or numeric-encoded first; item equality includes the
    plus flag or the exact repeat count (power-of-two buckets with
    ``bucket_counts``).  Results are ordered by support, then length, then
    text.
    """
    if len(seqs) < 2:
        raise ValueError("mining needs at least two sessions")
    if min_len < 2:
        raise ValueError("min_len must be at least 2")
    if not 0 < min_support <= 1:
        raise ValueError("min_support must lie in (0, 1]")
    taxonomy = next((s.taxonomy for s in seqs if s.taxonomy), None)
    found = maximal_common(_tokens(seqs, approach, bucket_counts), min_len, min_support)
    out = [MinedPattern(p, sup, approach, taxonomy) for p, sup in found.items()]
    out.sort(key=lambda m: (-m.support, -m.length, m.items))
    return out


def cross_dataset_intersection(pattern_sets: Sequence[Iterable[MinedPattern]]) -> set[tuple[str, ...]]:
    """Patterns (compared item for item) present in every set."""
    sets = [list(s) for s in pattern_sets]
    if len(sets) < 2:
        raise ValueError("need at least two pattern sets")
    taxa = {p.taxonomy for s in sets for p in s if p.taxonomy is not None}
    if len(taxa) > 1:
        raise ValueError(f"pattern sets use different terminal taxonomies: {', '.join(sorted(taxa))}")
    approaches = {p.approach for s in sets for p in s}
    if len(approaches) > 1:
        raise ValueError(f"pattern sets mix encodings: {', '.join(sorted(approaches))}")
    common = {p.items for p in sets[0]}
    for s in sets[1:]:
        common &= {p.items for p in s}
    return common
