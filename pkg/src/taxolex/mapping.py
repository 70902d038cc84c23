"""Code-books that translate distinct log records into terminals of one taxonomy."""
from __future__ import annotations

import json
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from .catalog import load_taxonomy
from .grammar import NULL, Taxonomy
from .ingest import EventLog


class MappingError(ValueError):
    pass


class MappingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Item:
    """One terminal in a session's translated stream.

    ``plus`` and ``repeat_count`` carry the plus and numeric run encodings;
    a raw item has ``repeat_count == 1`` and ``plus`` unset.
    """

    terminal: str
    source_ordinal: int
    qualifier: str | None = None
    repeat_count: int = 1
    plus: bool = False
    attribute: str | None = None

    def __post_init__(self) -> None:
        if self.repeat_count < 1:
            raise ValueError(f"repeat_count must be >= 1, got {self.repeat_count}")

    @property
    def key(self) -> tuple[str, str | None]:
        return self.terminal, self.qualifier

    @property
    def label(self) -> str:
        return self.terminal if self.qualifier is None else f"{self.terminal}:{self.qualifier}"

    @property
    def is_null(self) -> bool:
        return self.terminal == NULL

    def render(self) -> str:
        """``filter``, ``filter+`` or ``filter2``."""
        if self.plus:
            return self.label + "+"
        if self.repeat_count > 1:
            return f"{self.label}{self.repeat_count}"
        return self.label


@dataclass(frozen=True)
class TerminalSequence:
    session_id: str
    items: tuple[Item, ...]
    taxonomy: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        ords = [it.source_ordinal for it in self.items]
        if any(b <= a for a, b in zip(ords, ords[1:])):
            raise ValueError(f"session {self.session_id!r}: source ordinals must strictly increase")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Item]:
        return iter(self.items)

    @property
    def terminals(self) -> list[str]:
        return [it.terminal for it in self.items]

    @property
    def labels(self) -> list[str]:
        return [it.label for it in self.items]

    def with_items(self, items: Iterable[Item]) -> TerminalSequence:
        return replace(self, items=tuple(items))

    @classmethod
    def from_labels(cls, session_id: str, labels: Sequence[str], taxonomy: str | None = None) -> TerminalSequence:
        items = []
        for i, lab in enumerate(labels):
            name, _, qual = lab.partition(":")
            items.append(Item(name, i, qual or None))
        return cls(session_id, tuple(items), taxonomy)


@dataclass(frozen=True)
class MappingRule:
    terminal: str
    description: str = ""


@dataclass(frozen=True)
class MappingSpec:
    name: str
    source_dataset: str
    target_taxonomy: str
    rules: dict[str, MappingRule] = field(hash=False)
    explicit_nulls: frozenset[str] = frozenset()

    def terminal_for(self, record: str) -> str:
        rule = self.rules.get(record)
        return rule.terminal if rule is not None else NULL

    def status(self, record: str) -> str:
        """``mapped``, ``null-rule``, ``explicit-null`` or ``unlisted``."""
        rule = self.rules.get(record)
        if rule is not None:
            return "null-rule" if rule.terminal == NULL else "mapped"
        return "explicit-null" if record in self.explicit_nulls else "unlisted"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "source_dataset": self.source_dataset,
            "target_taxonomy": self.target_taxonomy,
            "rules": {r: {"terminal": m.terminal, "description": m.description} for r, m in self.rules.items()},
            "explicit_nulls": sorted(self.explicit_nulls),
        }


def _no_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in pairs:
        if k in out:
            raise MappingError(f"duplicate key {k!r}")
        out[k] = v
    return out


def mapping_from_dict(data: dict[str, Any], taxonomy: Taxonomy | None = None) -> MappingSpec:
    try:
        name = data["name"]
        target = data["target_taxonomy"]
        raw_rules = data.get("rules", {})
    except KeyError as exc:
        raise MappingError(f"mapping is missing field {exc.args[0]!r}") from None
    taxonomy = taxonomy or load_taxonomy(target)
    if taxonomy.level != "T":
        raise MappingError(f"mapping target {taxonomy.name!r} is not a terminal taxonomy")

    rules = {}
    for record, entry in raw_rules.items():
        if isinstance(entry, str):
            entry = {"terminal": entry}
        terminal = entry.get("terminal")
        if terminal != NULL and terminal not in taxonomy:
            raise MappingError(f"{name}: record {record!r} maps to unknown terminal {terminal!r} of {taxonomy.name!r}")
        description = entry.get("description", "")
        if not description:
            warnings.warn(f"{name}: rule for {record!r} has no description", MappingWarning, stacklevel=2)
        rules[record] = MappingRule(terminal, description)
    nulls = list(data.get("explicit_nulls", []))
    if len(set(nulls)) != len(nulls):
        raise MappingError(f"{name}: duplicate record in explicit_nulls")
    overlap = set(nulls) & set(rules)
    if overlap:
        raise MappingError(f"{name}: records both mapped and explicitly null: {', '.join(sorted(overlap))}")
    if not rules:
        warnings.warn(f"{name}: mapping has no rules; every record maps to null", MappingWarning, stacklevel=2)
    return MappingSpec(name, data.get("source_dataset", ""), taxonomy.name, rules, frozenset(nulls))


def load_mapping(path: str | Path, taxonomy: Taxonomy | None = None) -> MappingSpec:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"mapping file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"), object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise MappingError(f"{path}: malformed JSON ({exc})") from None
    return mapping_from_dict(data, taxonomy)


def apply_mapping(log: EventLog, spec: MappingSpec) -> list[TerminalSequence]:
    """One sequence per session, item k translating event k; unknown records become null."""
    out = []
    for session in log.sessions:
        items = tuple(
            Item(spec.terminal_for(ev.record), ev.ordinal, attribute=ev.attribute)
            for ev in session.events
        )
        out.append(TerminalSequence(session.session_id, items, spec.target_taxonomy))
    return out


@dataclass(frozen=True)
class MappingTally:
    events: Counter
    distinct: Counter
    unlisted: Counter

    def to_dict(self) -> dict[str, Any]:
        return {
            "events": dict(sorted(self.events.items())),
            "distinct_records": dict(sorted(self.distinct.items())),
            "unlisted": dict(sorted(self.unlisted.items())),
        }


def mapping_tally(log: EventLog, spec: MappingSpec) -> MappingTally:
    """Counts of mapped / null / unlisted records, by event and by distinct record."""
    events: Counter = Counter()
    unlisted: Counter = Counter()
    for ev in log.events():
        status = spec.status(ev.record)
        events[status] += 1
        if status == "unlisted":
            unlisted[ev.record] += 1
    distinct = Counter(spec.status(r) for r in log.distinct_records)
    return MappingTally(events, distinct, unlisted)


def qualify_inspect(
    seqs: Sequence[TerminalSequence],
    base: str,
    taxonomy: Taxonomy | str | None = None,
) -> list[TerminalSequence]:
    """Mark each ``base`` item ``same`` or ``different`` by attribute continuity.

    An occurrence is ``same`` when its attribute equals that of the previous
    ``base`` occurrence in the session; the first occurrence is ``different``.
    Sequences whose ``base`` items lack attributes pass through unchanged
    with a warning.
    """
    tax_ref = taxonomy or next((s.taxonomy for s in seqs if s.taxonomy), None)
    if tax_ref is not None:
        tax = tax_ref if isinstance(tax_ref, Taxonomy) else load_taxonomy(tax_ref)
        if base not in tax:
            raise MappingError(f"unknown base terminal {base!r} for taxonomy {tax.name!r}")
    out = []
    for seq in seqs:
        hits = [it for it in seq.items if it.terminal == base]
        if any(it.attribute is None for it in hits):
            warnings.warn(
                f"session {seq.session_id!r}: {base!r} events carry no attribute; left unqualified",
                MappingWarning,
                stacklevel=2,
            )
            out.append(seq)
            continue
        items = []
        prev: str | None = None
        first = True
        for it in seq.items:
            if it.terminal == base:
                q = "same" if not first and it.attribute == prev else "different"
                items.append(replace(it, qualifier=q))
                prev, first = it.attribute, False
            else:
                items.append(it)
        out.append(seq.with_items(items))
    return out


def sequences_to_dict(seqs: Sequence[TerminalSequence], approach: str = "raw") -> dict[str, Any]:
    return {
        "taxonomy": next((s.taxonomy for s in seqs if s.taxonomy), None),
        "approach": approach,
        "sessions": [
            {
                "session_id": s.session_id,
                "items": [
                    {
                        "terminal": it.terminal,
                        "qualifier": it.qualifier,
                        "source_ordinal": it.source_ordinal,
                        "repeat_count": it.repeat_count,
                        "plus": it.plus,
                        "attribute": it.attribute,
                        "display": it.render(),
                    }
                    for it in s.items
                ],
            }
            for s in seqs
        ],
    }


def sequences_from_dict(data: dict[str, Any]) -> list[TerminalSequence]:
    tax = data.get("taxonomy")
    out = []
    for s in data["sessions"]:
        items = tuple(
            Item(
                it["terminal"],
                it["source_ordinal"],
                it.get("qualifier"),
                it.get("repeat_count", 1),
                it.get("plus", False),
                it.get("attribute"),
            )
            for it in s["items"]
        )
        out.append(TerminalSequence(s["session_id"], items, tax))
    return out
