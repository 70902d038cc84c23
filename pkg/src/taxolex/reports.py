"""JSON/CSV report payloads, run manifests and plain-text tables."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .catalog import RuleSet
from .matcher import SessionMatchReport
from .grammar import MatchSpan
from .metrics import CoverageReport, CoverageTable, DiversityReport, SessionStats
from .miner import MinedPattern


def dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path: str | Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload), encoding="utf-8")
    return path


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest(subcommand: str, argv: Sequence[str], inputs: Iterable[str | Path], outputs: Iterable[str | Path] = ()) -> dict[str, Any]:
    return {
        "kind": "manifest",
        "tool": "taxolex",
        "version": __version__,
        "subcommand": subcommand,
        "argv": list(argv),
        "inputs": {str(p): sha256(p) for p in sorted({str(p) for p in inputs})},
        "outputs": sorted(Path(p).name for p in outputs),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def manifest_path(out: Path) -> Path:
    return out / "manifest.json" if out.is_dir() else out.with_name(out.stem + ".manifest.json")


def matches_payload(reports: Sequence[SessionMatchReport], rs: RuleSet, approach: str) -> dict[str, Any]:
    return {
        "kind": "matches",
        "ruleset": rs.name,
        "terminal_taxonomy": rs.terminal_taxonomy,
        "nonterminal_taxonomy": rs.nonterminal_taxonomy,
        "approach": approach,
        "nonterminals": rs.nonterminals,
        "null_nonterminals": list(rs.null_nonterminals),
        "sessions": [r.to_dict() for r in reports],
    }


def reports_from_matches(payload: dict[str, Any]) -> list[SessionMatchReport]:
    order = payload.get("nonterminals") or []
    out = []
    for s in payload["sessions"]:
        # JSON keys come back sorted; restore rule order
        counts = {n: s["counts"][n] for n in order if n in s["counts"]}
        counts.update((n, c) for n, c in s["counts"].items() if n not in counts)
        spans = {k: [MatchSpan(k, a, b) for a, b in v] for k, v in s.get("spans", {}).items()}
        out.append(SessionMatchReport(s["session_id"], counts, spans, tuple(s.get("null_nonterminals", ())), s.get("length", 0)))
    return out


def coverage_payload(reports: Sequence[CoverageReport], table: CoverageTable | None = None) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": "coverage", "reports": [r.to_dict() for r in reports]}
    if table is not None:
        out["table"] = table.to_dict()
    return out


def diversity_payload(report: DiversityReport, dataset: str) -> dict[str, Any]:
    return {"kind": "diversity", "dataset": dataset, **report.to_dict()}


DIVERSITY_CSV_HEADER = ("dataset", "taxonomy", "terminal", "share")


def stats_payload(stats: Sequence[SessionStats], ruleset: str | None, approach: str | None, method: str) -> dict[str, Any]:
    return {
        "kind": "stats",
        "ruleset": ruleset,
        "approach": approach,
        "interval": method,
        "stats": [s.to_dict() for s in stats],
    }


STATS_CSV_HEADER = ("nonterminal", "expressible", "n_sessions", "mean", "sd", "ci95_halfwidth")


def stats_rows(stats: Sequence[SessionStats]) -> list[tuple]:
    return [(s.nonterminal, s.expressible, s.n_sessions, s.mean, s.sd, s.ci95_halfwidth) for s in stats]


def mine_payload(
    datasets: dict[str, Sequence[MinedPattern]],
    approach: str,
    min_len: int,
    min_support: float,
    common: set[tuple[str, ...]] | None = None,
) -> dict[str, Any]:
    out: dict[str, Any] = {
        "kind": "mine",
        "approach": approach,
        "min_len": min_len,
        "min_support": min_support,
        "datasets": {name: [p.to_dict() for p in pats] for name, pats in datasets.items()},
    }
    if common is not None:
        out["common_across_datasets"] = ["(" + ", ".join(p) + ")" for p in sorted(common)]
    return out


def table(rows: Sequence[Sequence[Any]]) -> str:
    """Left-aligned plain-text table; the first row is the header."""
    cells = [["" if c is None else str(c) for c in r] for r in rows]
    if not cells:
        return ""
    widths = [max(len(r[i]) for r in cells if i < len(r)) for i in range(max(map(len, cells)))]
    buf = io.StringIO()
    for k, r in enumerate(cells):
        buf.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")
        if k == 0:
            buf.write("  ".join("-" * w for w in widths) + "\n")
    return buf.getvalue()
