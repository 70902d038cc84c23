"""Deterministic synthetic interaction logs with oracle-computed expected values.

    python -m taxolex.fixtures SPEC.json OUT_DIR

writes ``<name>.csv`` and ``expected.json`` (plus a copy of the spec) to
OUT_DIR.  Expected values come from :mod:`taxolex.oracles` only.
"""
from __future__ import annotations

import csv
import json
import random
import sys
from collections import Counter
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from . import oracles

CSV_COLUMNS = ("session_id", "participant", "task", "timestamp", "record", "attribute")
BASE_TIME_MS = 1_577_836_800_000  # 2020-01-01T00:00:00Z


class FixtureError(ValueError):
    pass


@dataclass
class Plant:
    records: list[str]
    per_session: int = 1


@dataclass
class FixtureSpec:
    name: str
    records: list[str]
    seed: int = 0
    n_sessions: int = 4
    tasks: int = 1
    min_len: int = 10
    max_len: int = 30
    weights: list[float] | None = None
    attributes: list[str] = field(default_factory=list)
    planted: list[Plant] = field(default_factory=list)
    filler_records: list[str] | None = None
    shuffle_rows: bool = False
    mapping: dict[str, str] | None = None
    taxonomy: str | None = None
    ruleset: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FixtureSpec:
        data = dict(data)
        data["planted"] = [Plant(**p) for p in data.get("planted", [])]
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def validate(self) -> None:
        if not self.records:
            raise FixtureError("fixture vocabulary is empty")
        if self.n_sessions < 1 or self.tasks < 1:
            raise FixtureError("need at least one participant and one task")
        if not 1 <= self.min_len <= self.max_len:
            raise FixtureError("need 1 <= min_len <= max_len")
        if self.weights is not None and len(self.weights) != len(self.records):
            raise FixtureError("weights must align with records")
        vocab = set(self.records)
        for plant in self.planted:
            unknown = set(plant.records) - vocab
            if unknown:
                raise FixtureError(f"planted records outside the vocabulary: {sorted(unknown)}")
        if self.filler_records is not None:
            if not self.filler_records or set(self.filler_records) - vocab:
                raise FixtureError("filler_records must be a non-empty subset of records")


def _session_records(spec: FixtureSpec, rng: random.Random) -> list[str]:
    length = rng.randint(spec.min_len, spec.max_len)
    pool = spec.filler_records or spec.records
    weights = None if spec.filler_records else spec.weights
    plants = [list(p.records) for p in spec.planted for _ in range(p.per_session)]
    rng.shuffle(plants)
    if spec.filler_records is None:
        noise = rng.choices(pool, weights=weights, k=max(0, length - sum(map(len, plants))))
        for plant in plants:
            cut = rng.randint(0, len(noise))
            noise[cut:cut] = plant
        return noise
    # plants separated (and bounded) by at least one filler record so they stay distinct
    out = [rng.choice(pool)]
    for plant in plants:
        out.extend(plant)
        out.extend(rng.choices(pool, k=rng.randint(1, 3)))
    while len(out) < length:
        out.append(rng.choice(pool))
    return out


def generate(spec: FixtureSpec) -> list[dict[str, str]]:
    """Rows of the synthetic log in file order."""
    spec.validate()
    rng = random.Random(spec.seed)
    sessions: list[tuple[str, str, str, list[str]]] = []
    for p in range(spec.n_sessions):
        for t in range(spec.tasks):
            participant = f"p{p + 1:02d}"
            task = f"t{t + 1}"
            sid = participant if spec.tasks == 1 else f"{participant}-{task}"
            sessions.append((sid, participant, task, _session_records(spec, rng)))
    if spec.filler_records is None:
        used = {r for *_, recs in sessions for r in recs}
        for k, record in enumerate(r for r in spec.records if r not in used):
            recs = sessions[k % len(sessions)][3]
            recs.insert(rng.randint(0, len(recs)), record)
    rows = []
    for sid, participant, task, recs in sessions:
        t = BASE_TIME_MS + rng.randint(0, 10_000_000)
        for record in recs:
            t += rng.randint(100, 5000)
            rows.append({
                "session_id": sid,
                "participant": participant,
                "task": task,
                "timestamp": str(t),
                "record": record,
                "attribute": rng.choice(spec.attributes) if spec.attributes else "",
            })
    if spec.shuffle_rows:
        rng.shuffle(rows)
    return rows


def expected_values(spec: FixtureSpec, rows: list[dict[str, str]]) -> dict[str, Any]:
    by_session: dict[str, list[tuple[int, int, str]]] = {}
    for i, row in enumerate(rows):
        by_session.setdefault(row["session_id"], []).append((int(row["timestamp"]), i, row["record"]))
    ordered = {sid: [r for *_, r in sorted(evs)] for sid, evs in by_session.items()}
    records = [row["record"] for row in rows]
    out: dict[str, Any] = {
        "n_sessions": len(ordered),
        "n_events": len(rows),
        "distinct_records": sorted(set(records)),
        "session_lengths": {sid: len(v) for sid, v in ordered.items()},
    }
    if spec.mapping is not None:
        out["coverage_percentage"] = oracles.oracle_coverage(records, spec.mapping)
        terminals = Counter(spec.mapping.get(r, oracles.NULL) for r in records)
        top, top_count = max(
            ((t, c) for t, c in terminals.items() if t != oracles.NULL), key=lambda tc: (tc[1], tc[0]), default=(None, 0)
        )
        out["top_terminal"] = top
        out["top_share"] = top_count / len(records)
    if spec.mapping is not None and spec.ruleset is not None:
        from .catalog import load_ruleset

        rs = load_ruleset(spec.ruleset)
        if rs.qualify is None:
            counts = {}
            for sid, recs in ordered.items():
                labels = oracles.oracle_collapse([spec.mapping.get(r, oracles.NULL) for r in recs])
                counts[sid] = {r.name: len(oracles.oracle_match(r.pattern, labels)) for r in rs.rules}
            out["collapse_counts"] = counts
    return out


def write_fixture(spec: FixtureSpec, out_dir: str | Path) -> dict[str, Path]:
    """Generate the log and its expected values into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = generate(spec)
    log_path = out_dir / f"{spec.name}.csv"
    with log_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    expected_path = out_dir / "expected.json"
    expected_path.write_text(json.dumps(expected_values(spec, rows), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    spec_path = out_dir / "spec.json"
    spec_path.write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")
    return {"log": log_path, "expected": expected_path, "spec": spec_path}


def gen_fixture(spec: FixtureSpec | dict[str, Any], out_dir: str | Path) -> dict[str, Path]:
    if isinstance(spec, dict):
        spec = FixtureSpec.from_dict(spec)
    return write_fixture(spec, out_dir)


def builtin_fixture_dir(name: str = "wall") -> Path:
    """Directory of a shipped fixture (log, mapping, spec, expected values, pipeline config)."""
    path = Path(str(resources.files("taxolex") / "data" / "fixtures" / name))
    if not path.is_dir():
        raise FixtureError(f"no shipped fixture {name!r}")
    return path


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("usage: python -m taxolex.fixtures SPEC.json OUT_DIR", file=sys.stderr)
        return 2
    spec = FixtureSpec.from_dict(json.loads(Path(argv[0]).read_text(encoding="utf-8")))
    for kind, path in write_fixture(spec, argv[1]).items():
        print(f"{kind}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
