"""Count non-terminal occurrences per session by running every rule of a RuleSet."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

from .catalog import RuleSet, load_taxonomy
from .grammar import NULL, MatchSpan, find_matches
from .mapping import MappingWarning, TerminalSequence, qualify_inspect
from .transforms import get_transform


class TaxonomyMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SessionMatchReport:
    session_id: str
    counts: dict[str, int]
    spans: dict[str, list[MatchSpan]] = field(repr=False)
    null_nonterminals: tuple[str, ...] = ()
    length: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "length": self.length,
            "counts": dict(self.counts),
            "spans": {k: [[s.start, s.end] for s in v] for k, v in self.spans.items()},
            "null_nonterminals": list(self.null_nonterminals),
        }


def _check_alphabet(seq: TerminalSequence, rs: RuleSet) -> None:
    if seq.taxonomy is not None and seq.taxonomy != rs.terminal_taxonomy:
        raise TaxonomyMismatch(
            f"session {seq.session_id!r} uses {seq.taxonomy!r} terminals but rule set "
            f"{rs.name!r} is written over {rs.terminal_taxonomy!r}"
        )
    alphabet = load_taxonomy(rs.terminal_taxonomy)
    for it in seq.items:
        if it.terminal != NULL and it.terminal not in alphabet:
            raise TaxonomyMismatch(f"session {seq.session_id!r}: {it.terminal!r} is not a terminal of {alphabet.name!r}")


def _needs_qualifying(seq: TerminalSequence, base: str) -> bool:
    hits = [it for it in seq.items if it.terminal == base]
    return bool(hits) and all(it.qualifier is None for it in hits) and all(it.attribute is not None for it in hits)


def match_session(seq: TerminalSequence, rs: RuleSet, approach: str = "collapse") -> SessionMatchReport:
    """Transform ``seq`` (collapse by default), then find every rule's occurrences independently.

    Plus- and numeric-encoded items count as a single symbol, so ``(filter)+``
    consumes a ``filter+`` or ``filter3`` item as one run.  When the rule set
    qualifies a terminal and the raw sequence carries attributes, the
    qualification is applied before the transform.
    """
    _check_alphabet(seq, rs)
    if rs.qualify is not None:
        if _needs_qualifying(seq, rs.qualify):
            seq = qualify_inspect([seq], rs.qualify, rs.terminal_taxonomy)[0]
        elif any(it.terminal == rs.qualify and it.qualifier is None for it in seq.items):
            warnings.warn(
                f"session {seq.session_id!r}: {rs.qualify!r} items are unqualified; "
                "qualified rules cannot match them",
                MappingWarning,
                stacklevel=2,
            )
    seq = get_transform(approach)(seq)
    counts = {}
    spans = {}
    for name, automaton in rs.automata().items():
        found = find_matches(automaton, seq.items)
        spans[name] = found
        counts[name] = len(found)
    return SessionMatchReport(seq.session_id, counts, spans, tuple(rs.null_nonterminals), len(seq))


def match_dataset(seqs: Sequence[TerminalSequence], rs: RuleSet, approach: str = "collapse") -> list[SessionMatchReport]:
    return [match_session(s, rs, approach) for s in seqs]
