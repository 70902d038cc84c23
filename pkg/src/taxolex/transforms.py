"""Collapse, plus and numeric reductions of terminal sequences.

All three share one run structure: a run is a maximal stretch of items with
the same terminal and qualifier.  They differ only in how a run is annotated.
"""
from __future__ import annotations

from dataclasses import replace
from itertools import groupby
from typing import Callable, Sequence

from .mapping import Item, TerminalSequence

APPROACHES = ("none", "collapse", "plus", "numeric")


def runs(items: Sequence[Item]) -> list[list[Item]]:
    return [list(g) for _, g in groupby(items, key=lambda it: it.key)]


def _merge(run: list[Item], **changes) -> Item:
    return replace(run[0], **changes)


def collapse(seq: TerminalSequence) -> TerminalSequence:
    return seq.with_items(_merge(r, repeat_count=1, plus=False) for r in runs(seq.items))


def plus_encode(seq: TerminalSequence) -> TerminalSequence:
    out = []
    for r in runs(seq.items):
        if len(r) == 1:
            out.append(r[0])
        else:
            out.append(_merge(r, plus=True, repeat_count=1))
    return seq.with_items(out)


def numeric_encode(seq: TerminalSequence) -> TerminalSequence:
    # summing keeps the encoding idempotent on already-counted items
    return seq.with_items(
        r[0] if len(r) == 1 else _merge(r, repeat_count=sum(it.repeat_count for it in r), plus=False)
        for r in runs(seq.items)
    )


def numeric_expand(seq: TerminalSequence) -> TerminalSequence:
    """Inverse of :func:`numeric_encode`; expanded copies take consecutive ordinals."""
    out = []
    for it in seq.items:
        for k in range(it.repeat_count):
            out.append(replace(it, repeat_count=1, source_ordinal=it.source_ordinal + k))
    return seq.with_items(out)


def strip_annotations(seq: TerminalSequence) -> TerminalSequence:
    return seq.with_items(replace(it, repeat_count=1, plus=False) for it in seq.items)


_BY_NAME: dict[str, Callable[[TerminalSequence], TerminalSequence]] = {
    "none": lambda s: s,
    "collapse": collapse,
    "plus": plus_encode,
    "numeric": numeric_encode,
}


def get_transform(approach: str) -> Callable[[TerminalSequence], TerminalSequence]:
    try:
        return _BY_NAME[approach]
    except KeyError:
        raise ValueError(f"unknown approach {approach!r}; expected one of {', '.join(APPROACHES)}") from None


def apply_transform(seqs: Sequence[TerminalSequence], approach: str) -> list[TerminalSequence]:
    fn = get_transform(approach)
    return [fn(s) for s in seqs]
