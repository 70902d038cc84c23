"""Brute-force reference implementations used by the test and acceptance suites.

Nothing here touches the automaton, transform, miner or metrics code paths;
only the AST node classes are shared.  Everything is exhaustive and slow on
purpose.
"""
from __future__ import annotations

import itertools
import math
import statistics
from typing import Hashable, Sequence

from .grammar import Alt, Concat, Optional, Plus, Repeat, Star, Symbol

NULL = "null"


def _split(item) -> tuple[str, str | None]:
    if isinstance(item, str):
        name, _, qual = item.partition(":")
        return name, qual or None
    return item


def _ends(ast, seq, i: int) -> set[int]:
    """All j such that ``seq[i:j]`` is in the language of ``ast``."""
    if isinstance(ast, Symbol):
        if i < len(seq):
            name, qual = _split(seq[i])
            if name == ast.name and (ast.qualifier is None or ast.qualifier == qual):
                return {i + 1}
        return set()
    if isinstance(ast, Concat):
        cur = {i}
        for child in ast.children:
            cur = {j for k in cur for j in _ends(child, seq, k)}
        return cur
    if isinstance(ast, Alt):
        return {j for c in ast.children for j in _ends(c, seq, i)}
    if isinstance(ast, Optional):
        return {i} | _ends(ast.child, seq, i)
    if isinstance(ast, (Star, Plus)):
        reached = set() if isinstance(ast, Plus) else {i}
        frontier = {i}
        seen = set()
        while frontier:
            k = frontier.pop()
            seen.add(k)
            for j in _ends(ast.child, seq, k):
                reached.add(j)
                if j not in seen:
                    frontier.add(j)
        return reached
    if isinstance(ast, Repeat):
        cur = {i}
        out = {i} if ast.min == 0 else set()
        for count in range(1, ast.max + 1):
            cur = {j for k in cur for j in _ends(ast.child, seq, k)}
            if count >= ast.min:
                out |= cur
        return out
    raise TypeError(ast)


def interpret(ast, seq: Sequence) -> bool:
    """Whole-sequence membership, excluding the empty sequence."""
    seq = list(seq)
    if not seq or any(_split(x)[0] == NULL for x in seq):
        return False
    return len(seq) in _ends(ast, seq, 0)


def oracle_match(ast, seq: Sequence) -> list[tuple[int, int]]:
    """Enumerate every accepted span, then select leftmost-longest non-overlapping."""
    seq = list(seq)
    n = len(seq)
    valid = {(i, j) for i in range(n) for j in range(i + 1, n + 1) if interpret(ast, seq[i:j])}
    out = []
    pos = 0
    while pos < n:
        ends = [j for (i, j) in valid if i == pos]
        if ends:
            out.append((pos, max(ends)))
            pos = max(ends)
        else:
            pos += 1
    return out


def oracle_collapse(names: Sequence[Hashable]) -> list:
    return [k for k, _ in itertools.groupby(names)]


def oracle_runs(names: Sequence[Hashable]) -> list[tuple[Hashable, int]]:
    return [(k, len(list(g))) for k, g in itertools.groupby(names)]


def oracle_encode(names: Sequence[str], approach: str) -> list[str]:
    """Display tokens for a raw name sequence: ``filter+`` or ``filter2``."""
    out = []
    for k, length in oracle_runs(names):
        if k == NULL:
            out.append(NULL)
        elif approach == "plus":
            out.append(k + "+" if length > 1 else k)
        elif approach == "numeric":
            out.append(k + str(length) if length > 1 else k)
        else:
            out.append(k)
    return out


def oracle_mine(sessions: Sequence[Sequence[Hashable]], min_len: int = 2, min_support: float = 1.0) -> set[tuple]:
    """Maximal contiguous patterns by enumerating every substring of every session."""
    n = len(sessions)
    need = math.ceil(min_support * n - 1e-9)
    per_session = []
    for s in sessions:
        s = list(s)
        subs = set()
        for i in range(len(s)):
            for j in range(i + 1, len(s) + 1):
                piece = tuple(s[i:j])
                if NULL in piece:
                    break
                subs.add(piece)
        per_session.append(subs)
    counts: dict[tuple, int] = {}
    for subs in per_session:
        for p in subs:
            counts[p] = counts.get(p, 0) + 1
    frequent = {p for p, c in counts.items() if c >= need}
    out = set()
    for p in frequent:
        if len(p) < min_len:
            continue
        extended = any(len(q) == len(p) + 1 and (q[:-1] == p or q[1:] == p) for q in frequent)
        if not extended:
            out.add(p)
    return out


def oracle_stats(counts: Sequence[float], z: float = 1.96) -> tuple[float, float | None, float | None]:
    mean = statistics.fmean(counts)
    if len(counts) < 2:
        return mean, None, None
    sd = statistics.stdev(counts)
    return mean, sd, z * sd / math.sqrt(len(counts))


def oracle_coverage(records: Sequence[str], mapped: dict[str, str]) -> float:
    distinct = set(records)
    ok = {r for r in distinct if mapped.get(r, NULL) != NULL}
    return 100.0 * len(ok) / len(distinct)
