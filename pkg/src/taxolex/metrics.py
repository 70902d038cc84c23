"""Expressiveness measures: coverage, diversity and per-session count statistics."""
from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Mapping, Sequence

from .catalog import load_taxonomy
from .grammar import NULL, Taxonomy
from .ingest import EventLog
from .mapping import MappingSpec, TerminalSequence
from .matcher import SessionMatchReport

COVERAGE_MODES = ("distinct-records", "event-weighted")
Z95 = 1.96


class MetricsWarning(UserWarning):
    pass


def round2(value: float | Decimal) -> Decimal:
    """Half-up rounding to two decimals, the way percentages are tabulated."""
    d = value if isinstance(value, Decimal) else Decimal(repr(float(value)))
    return d.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class CoverageReport:
    dataset: str
    taxonomy: str
    mode: str
    covered: int
    total: int

    @property
    def percentage(self) -> float:
        return 100.0 * self.covered / self.total

    @property
    def rendered(self) -> str:
        return f"{round2(self.percentage)}%"

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset,
            "taxonomy": self.taxonomy,
            "mode": self.mode,
            "covered": self.covered,
            "total": self.total,
            "percentage": float(round2(self.percentage)),
        }


def coverage(log: EventLog, spec: MappingSpec, mode: str = "distinct-records") -> CoverageReport:
    """Share of log records that map to a non-null terminal.

    ``distinct-records`` counts each record category once; ``event-weighted``
    counts every event.
    """
    if mode not in COVERAGE_MODES:
        raise ValueError(f"unknown coverage mode {mode!r}")
    if log.n_events == 0:
        raise ValueError(f"log {log.dataset!r} is empty")
    if mode == "distinct-records":
        records = list(log.distinct_records)
    else:
        records = [e.record for e in log.events()]
    covered = sum(1 for r in records if spec.terminal_for(r) != NULL)
    return CoverageReport(log.dataset, spec.target_taxonomy, mode, covered, len(records))


@dataclass(frozen=True)
class CoverageTable:
    """Taxonomy x dataset coverage matrix with row, column and grand averages.

    Cells are rounded half-up to two decimals before averaging, matching how
    such tables are usually assembled from already-reported cells.
    """

    taxonomies: tuple[str, ...]
    datasets: tuple[str, ...]
    cells: dict[tuple[str, str], Decimal | None]
    row_avg: dict[str, Decimal | None]
    col_avg: dict[str, Decimal | None]
    grand: Decimal | None

    @classmethod
    def from_cells(cls, cells: Mapping[tuple[str, str], float | CoverageReport | None]) -> CoverageTable:
        taxa: list[str] = []
        datasets: list[str] = []
        rounded: dict[tuple[str, str], Decimal | None] = {}
        for (tax, ds), value in cells.items():
            if tax not in taxa:
                taxa.append(tax)
            if ds not in datasets:
                datasets.append(ds)
            if isinstance(value, CoverageReport):
                value = value.percentage
            rounded[(tax, ds)] = None if value is None else round2(value)
        for tax in taxa:
            for ds in datasets:
                if rounded.get((tax, ds)) is None:
                    rounded[(tax, ds)] = None
                    warnings.warn(f"coverage cell {tax} x {ds} is absent; excluded from averages", MetricsWarning, stacklevel=2)

        def mean(values: list[Decimal | None]) -> Decimal | None:
            present = [v for v in values if v is not None]
            return sum(present, Decimal(0)) / len(present) if present else None

        return cls(
            tuple(taxa),
            tuple(datasets),
            rounded,
            {t: mean([rounded[(t, d)] for d in datasets]) for t in taxa},
            {d: mean([rounded[(t, d)] for t in taxa]) for d in datasets},
            mean(list(rounded.values())),
        )

    @property
    def complete(self) -> bool:
        return all(v is not None for v in self.cells.values())

    def rows(self) -> list[list[str]]:
        """Rendered table: header row, one row per taxonomy, then the average row."""
        fmt = lambda v: "" if v is None else f"{round2(v)}"
        out = [["taxonomy", *self.datasets, "avg"]]
        for t in self.taxonomies:
            out.append([t, *(fmt(self.cells[(t, d)]) for d in self.datasets), fmt(self.row_avg[t])])
        out.append(["avg", *(fmt(self.col_avg[d]) for d in self.datasets), fmt(self.grand)])
        return out

    def to_dict(self) -> dict[str, Any]:
        f = lambda v: None if v is None else float(round2(v))
        return {
            "taxonomies": list(self.taxonomies),
            "datasets": list(self.datasets),
            "cells": [{"taxonomy": t, "dataset": d, "percentage": f(self.cells[(t, d)])} for t in self.taxonomies for d in self.datasets],
            "row_avg": {t: f(v) for t, v in self.row_avg.items()},
            "col_avg": {d: f(v) for d, v in self.col_avg.items()},
            "grand_avg": f(self.grand),
        }


def coverage_table(logs: Sequence[EventLog], specs: Sequence[MappingSpec], mode: str = "distinct-records") -> CoverageTable:
    """Pair each spec with the log named by its ``source_dataset`` and tabulate."""
    by_name = {log.dataset: log for log in logs}
    taxa = list(dict.fromkeys(s.target_taxonomy for s in specs))
    cells: dict[tuple[str, str], float | CoverageReport | None] = {}
    for tax in taxa:
        for ds in by_name:
            cells[(tax, ds)] = None
    for spec in specs:
        log = by_name.get(spec.source_dataset)
        if log is None:
            warnings.warn(f"mapping {spec.name!r} names unknown dataset {spec.source_dataset!r}", MetricsWarning, stacklevel=2)
            continue
        cells[(spec.target_taxonomy, log.dataset)] = coverage(log, spec, mode)
    return CoverageTable.from_cells(cells)


@dataclass(frozen=True)
class DiversityReport:
    taxonomy: str
    distribution: dict[str, float]
    null_share: float
    unused: frozenset[str]
    top_terminal: str | None
    top_share: float
    total: int
    counts: dict[str, int] = field(repr=False, default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "taxonomy": self.taxonomy,
            "total": self.total,
            "distribution": dict(self.distribution),
            "null_share": self.null_share,
            "unused": sorted(self.unused),
            "top_terminal": self.top_terminal,
            "top_share": self.top_share,
        }

    def csv_rows(self, dataset: str) -> list[tuple[str, str, str, float]]:
        rows = [(dataset, self.taxonomy, t, s) for t, s in self.distribution.items()]
        rows.append((dataset, self.taxonomy, NULL, self.null_share))
        return rows


def diversity(seqs: Sequence[TerminalSequence], taxonomy: Taxonomy | str) -> DiversityReport:
    """Event-weighted terminal shares; encoded items weigh their repeat count."""
    tax = taxonomy if isinstance(taxonomy, Taxonomy) else load_taxonomy(taxonomy)
    counts: Counter = Counter()
    for seq in seqs:
        if seq.taxonomy is not None and seq.taxonomy != tax.name:
            raise ValueError(f"session {seq.session_id!r} was mapped to {seq.taxonomy!r}, not {tax.name!r}")
        for it in seq.items:
            if it.terminal != NULL and it.terminal not in tax:
                raise ValueError(f"{it.terminal!r} is not a terminal of {tax.name!r}")
            counts[it.terminal] += it.repeat_count
    total = sum(counts.values())
    if total == 0:
        raise ValueError("diversity needs at least one item")
    dist = {t: counts.get(t, 0) / total for t in tax.symbols}
    top = max(tax.symbols, key=lambda t: (counts.get(t, 0), -tax.symbols.index(t)))
    top_count = counts.get(top, 0)
    return DiversityReport(
        taxonomy=tax.name,
        distribution=dist,
        null_share=counts.get(NULL, 0) / total,
        unused=frozenset(t for t in tax.symbols if counts.get(t, 0) == 0),
        top_terminal=top if top_count else None,
        top_share=top_count / total,
        total=total,
        counts=dict(counts),
    )


@dataclass(frozen=True)
class SessionStats:
    nonterminal: str
    n_sessions: int
    mean: float | None
    sd: float | None
    ci95_halfwidth: float | None
    expressible: bool = True

    @property
    def interval(self) -> tuple[float, float] | None:
        if self.mean is None or self.ci95_halfwidth is None:
            return None
        return self.mean - self.ci95_halfwidth, self.mean + self.ci95_halfwidth

    def render(self) -> str:
        if not self.expressible:
            return "null"
        if self.ci95_halfwidth is None:
            return f"{round2(self.mean)}"
        lo, hi = self.interval
        return f"{round2(self.mean)}±{round2(self.ci95_halfwidth)} = {round2(lo)} to {round2(hi)}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "nonterminal": self.nonterminal,
            "expressible": self.expressible,
            "n_sessions": self.n_sessions,
            "mean": self.mean,
            "sd": self.sd,
            "ci95_halfwidth": self.ci95_halfwidth,
        }


def _multiplier(n: int, method: str) -> float:
    if method == "normal":
        return Z95
    if method == "t":
        from scipy.stats import t

        return float(t.ppf(0.975, n - 1))
    raise ValueError(f"unknown interval method {method!r}; expected 'normal' or 't'")


def describe(counts: Sequence[float], method: str = "normal") -> tuple[float, float | None, float | None]:
    """Mean, sample sd and 95% half-width (two-pass; sd and half-width need n >= 2)."""
    n = len(counts)
    if n == 0:
        raise ValueError("no counts")
    mean = math.fsum(counts) / n
    if n < 2:
        return mean, None, None
    sd = math.sqrt(math.fsum((x - mean) ** 2 for x in counts) / (n - 1))
    return mean, sd, _multiplier(n, method) * sd / math.sqrt(n)


def session_stats(reports: Sequence[SessionMatchReport], method: str = "normal") -> list[SessionStats]:
    """Per non-terminal mean count with a symmetric 95% interval (1.96 s / sqrt(n) by default).

    Non-terminals the rule set cannot express are reported as such rather
    than as zero.
    """
    if not reports:
        raise ValueError("session_stats needs at least one report")
    names = list(dict.fromkeys(k for r in reports for k in r.counts))
    out = []
    for name in names:
        values = [r.counts.get(name, 0) for r in reports]
        mean, sd, hw = describe(values, method)
        out.append(SessionStats(name, len(values), mean, sd, hw))
    for name in dict.fromkeys(n for r in reports for n in r.null_nonterminals):
        out.append(SessionStats(name, len(reports), None, None, None, expressible=False))
    return out
