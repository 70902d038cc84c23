"""Command-line entry point: ``taxolex <subcommand> ...``.

Every subcommand reads files and writes files.  Stdout carries a plain-text
table unless ``--json`` asks for the machine payload.  Exit codes: 0 success,
1 diagnostics under ``--strict``, 2 I/O, parse or usage failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Any, Sequence

from . import __version__, reports
from .catalog import (
    CatalogError,
    list_builtin,
    list_builtin_rulesets,
    load_ruleset,
    load_taxonomy,
    ruleset_source,
    validate_ruleset,
)
from .ingest import FORMATS, IngestConfig, ingest
from .mapping import MappingError, apply_mapping, load_mapping, mapping_tally, sequences_from_dict, sequences_to_dict
from .matcher import match_dataset
from .metrics import COVERAGE_MODES, CoverageTable, coverage, coverage_table, diversity, session_stats
from .miner import MINING_APPROACHES, common_subsequences, cross_dataset_intersection
from .transforms import APPROACHES, apply_transform

SUBCOMMANDS = ("map", "transform", "match", "coverage", "diversity", "stats", "mine", "catalog", "validate", "pipeline")
PIPELINE_REPORTS = (
    "sequences.json",
    "matches.json",
    "coverage.json",
    "diversity.json",
    "diversity.csv",
    "stats.json",
    "stats.csv",
    "mine.json",
)


class PipelineError(Exception):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage {stage!r} failed: {message}")


class Context:
    """Per-run options, collected inputs and diagnostics."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.diagnostics: list[str] = []

    def read(self, path: str | Path) -> Path:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"{path}: no such file")
        self.inputs.append(path)
        return path

    def say(self, text: str) -> None:
        if not self.args.quiet and not self.args.json:
            sys.stdout.write(text)

    def emit(self, payload: Any, text: str) -> None:
        if self.args.json:
            sys.stdout.write(reports.dumps(payload))
        else:
            self.say(text)

    def write_json(self, path: str | Path, payload: Any) -> None:
        self.outputs.append(reports.write_json(path, payload))

    def write_csv(self, path: str | Path, header, rows) -> None:
        self.outputs.append(reports.write_csv(path, header, rows))

    def write_manifest(self, target: Path | None) -> None:
        if target is None:
            return
        data = reports.manifest(self.args.command, self.argv, self.inputs, self.outputs)
        reports.write_json(reports.manifest_path(target), data)


def _load_json(ctx: Context, path: str | Path) -> Any:
    return json.loads(ctx.read(path).read_text(encoding="utf-8"))


def _ingest_config(ctx: Context, base: dict[str, Any] | None = None) -> IngestConfig:
    a = ctx.args
    data = dict(base or {})
    if getattr(a, "ingest_config", None):
        data.update(_load_json(ctx, a.ingest_config))
    for key in ("session_col", "record_col", "time_col", "attr_col", "participant_col", "task_col", "dataset"):
        value = getattr(a, key, None)
        if value is not None:
            data[key] = value
    if a.format is not None:
        data["format"] = a.format
    if getattr(a, "lenient", False):
        data["lenient"] = True
    return IngestConfig.from_dict(data)


def _read_log(ctx: Context, path: str | Path, config: IngestConfig):
    path = ctx.read(path)
    if config.dataset is None:
        config = IngestConfig.from_dict({**config.__dict__, "dataset": path.stem})
    log = ingest(path, config)
    for r in log.rejected:
        ctx.diagnostics.append(f"{path}: line {r.line}: {r.reason}")
    return log


def _read_ruleset(ctx: Context, ref: str):
    src = ruleset_source(ref)
    rs = load_ruleset(ref)
    ctx.read(src)
    return rs


def _read_sequences(ctx: Context, path: str | Path):
    data = _load_json(ctx, path)
    if not isinstance(data, dict) or "sessions" not in data:
        raise ValueError(f"{path}: not a sequences file")
    return data, sequences_from_dict(data)


def _sequences_payload(seqs, approach: str, extra: dict[str, Any] | None = None) -> dict[str, Any]:
    return {"kind": "sequences", **sequences_to_dict(seqs, approach), **(extra or {})}


# subcommands


def cmd_map(ctx: Context) -> Path | None:
    a = ctx.args
    spec = load_mapping(ctx.read(a.mapping))
    log = _read_log(ctx, a.log, _ingest_config(ctx))
    seqs = apply_mapping(log, spec)
    tally = mapping_tally(log, spec)
    for record, n in sorted(tally.unlisted.items()):
        ctx.diagnostics.append(f"record {record!r} is not listed in mapping {spec.name!r} ({n} events)")
    payload = _sequences_payload(seqs, "raw", {"mapping": spec.name, "dataset": log.dataset, "tally": tally.to_dict()})
    out = Path(a.out) if a.out else None
    if out:
        ctx.write_json(out, payload)
    rows = [["status", "events", "distinct records"]]
    for status in ("mapped", "null-rule", "explicit-null", "unlisted"):
        rows.append([status, tally.events.get(status, 0), tally.distinct.get(status, 0)])
    ctx.emit(payload, f"{log.dataset}: {len(seqs)} sessions, {log.n_events} events -> {spec.target_taxonomy}\n" + reports.table(rows))
    return out


def cmd_transform(ctx: Context) -> Path | None:
    a = ctx.args
    data, seqs = _read_sequences(ctx, a.input)
    out_seqs = apply_transform(seqs, a.approach)
    extra = {k: v for k, v in data.items() if k in ("mapping", "dataset")}
    payload = _sequences_payload(out_seqs, a.approach, extra)
    out = Path(a.out) if a.out else None
    if out:
        ctx.write_json(out, payload)
    rows = [["session", "items", "sequence"]]
    rows += [[s.session_id, len(s), " ".join(s.labels if a.approach in ("none", "collapse") else [i.render() for i in s.items])] for s in out_seqs]
    ctx.emit(payload, reports.table(rows))
    return out


def _match_rows(rs, results) -> list[list[Any]]:
    rows = [["session", *rs.nonterminals, *rs.null_nonterminals]]
    for r in results:
        rows.append([r.session_id, *(r.counts[n] for n in rs.nonterminals), *("null" for _ in rs.null_nonterminals)])
    return rows


def cmd_match(ctx: Context) -> Path | None:
    a = ctx.args
    rs = _read_ruleset(ctx, a.ruleset)
    _, seqs = _read_sequences(ctx, a.seqs)
    results = match_dataset(seqs, rs, a.approach)
    payload = reports.matches_payload(results, rs, a.approach)
    out = Path(a.out) if a.out else None
    if out:
        ctx.write_json(out, payload)
    ctx.emit(payload, reports.table(_match_rows(rs, results)))
    return out


def cmd_coverage(ctx: Context) -> Path | None:
    a = ctx.args
    if not a.log or not a.mapping:
        raise ValueError("coverage needs at least one --log and one --mapping")
    config = _ingest_config(ctx)
    logs = [_read_log(ctx, p, config) for p in a.log]
    specs = [load_mapping(ctx.read(p)) for p in a.mapping]
    if len(logs) == 1:
        found = [coverage(logs[0], s, a.mode) for s in specs]
        table = CoverageTable.from_cells({(r.taxonomy, r.dataset): r for r in found})
    else:
        by_name = {log.dataset: log for log in logs}
        found = [coverage(by_name[s.source_dataset], s, a.mode) for s in specs if s.source_dataset in by_name]
        table = coverage_table(logs, specs, a.mode)
    payload = reports.coverage_payload(found, table)
    out = Path(a.out) if a.out else None
    if out:
        ctx.write_json(out, payload)
    if a.csv:
        rows = table.rows()
        ctx.write_csv(a.csv, rows[0], rows[1:])
    ctx.emit(payload, reports.table(table.rows()))
    return out or (Path(a.csv) if a.csv else None)


def cmd_diversity(ctx: Context) -> Path | None:
    a = ctx.args
    data, seqs = _read_sequences(ctx, a.seqs)
    taxonomy = a.taxonomy or data.get("taxonomy")
    if taxonomy is None:
        raise ValueError("sequences carry no taxonomy; pass --taxonomy")
    dataset = a.dataset or data.get("dataset") or Path(a.seqs).stem
    report = diversity(seqs, load_taxonomy(taxonomy))
    payload = reports.diversity_payload(report, dataset)
    out = Path(a.out) if a.out else None
    if out:
        ctx.write_json(out, payload)
    if a.csv:
        ctx.write_csv(a.csv, reports.DIVERSITY_CSV_HEADER, report.csv_rows(dataset))
    rows = [["terminal", "share"]] + [[t, f"{s:.4f}"] for t, s in report.distribution.items()]
    rows.append(["null", f"{report.null_share:.4f}"])
    ctx.emit(payload, reports.table(rows))
    return out or (Path(a.csv) if a.csv else None)


def _stats_rows(stats) -> list[list[str]]:
    return [["nonterminal", "n", "mean ± 95% half-width"]] + [[s.nonterminal, s.n_sessions, s.render()] for s in stats]


def cmd_stats(ctx: Context) -> Path | None:
    a = ctx.args
    data = _load_json(ctx, a.matches)
    if not isinstance(data, dict) or data.get("kind") != "matches":
        raise ValueError(f"{a.matches}: not a matches report")
    stats = session_stats(reports.reports_from_matches(data), a.method)
    payload = reports.stats_payload(stats, data.get("ruleset"), data.get("approach"), a.method)
    out = Path(a.out) if a.out else None
    if out:
        ctx.write_json(out, payload)
    if a.csv:
        ctx.write_csv(a.csv, reports.STATS_CSV_HEADER, reports.stats_rows(stats))
    ctx.emit(payload, reports.table(_stats_rows(stats)))
    return out or (Path(a.csv) if a.csv else None)


def _dataset_names(paths: Sequence[str]) -> list[str]:
    names: list[str] = []
    for p in paths:
        name, k = Path(p).stem, 2
        while name in names:
            name, k = f"{Path(p).stem}-{k}", k + 1
        names.append(name)
    return names


def _mine_rows(found) -> list[list[Any]]:
    return [["support", "length", "pattern"]] + [[p.support, p.length, p.folded()] for p in found]


def cmd_mine(ctx: Context) -> Path | None:
    a = ctx.args
    datasets = {}
    for name, path in zip(_dataset_names(a.seqs), a.seqs):
        _, seqs = _read_sequences(ctx, path)
        datasets[name] = common_subsequences(seqs, a.approach, a.min_len, a.min_support, a.bucket_counts)
    common = cross_dataset_intersection(list(datasets.values())) if len(datasets) > 1 else None
    payload = reports.mine_payload(datasets, a.approach, a.min_len, a.min_support, common)
    out = Path(a.out) if a.out else None
    if out:
        ctx.write_json(out, payload)
    text = ""
    for name, found in datasets.items():
        text += f"{name}: {len(found)} patterns\n" + reports.table(_mine_rows(found))
    if common is not None:
        text += f"common to all datasets: {len(common)}\n" + "".join(f"  ({', '.join(p)})\n" for p in sorted(common))
    ctx.emit(payload, text)
    return out


def cmd_catalog(ctx: Context) -> Path | None:
    a = ctx.args
    if a.show:
        try:
            tax = load_taxonomy(a.show)
            payload = {"name": tax.name, "level": tax.level, "citation": tax.citation, "symbols": list(tax.symbols)}
        except CatalogError:
            payload = load_ruleset(a.show).to_dict()
        sys.stdout.write(reports.dumps(payload))
        return None
    names = list_builtin_rulesets() if a.rulesets else list_builtin()
    if a.json:
        sys.stdout.write(reports.dumps(names))
        return None
    if a.rulesets:
        rows = [["rule set", "terminal", "non-terminal", "null"]]
        for name in names:
            rs = load_ruleset(name)
            rows.append([name, rs.terminal_taxonomy, rs.nonterminal_taxonomy, ",".join(rs.null_nonterminals)])
    else:
        rows = [["taxonomy", "level", "symbols", "citation"]]
        for name in names:
            tax = load_taxonomy(name)
            rows.append([name, tax.level, len(tax.symbols), tax.citation])
    ctx.say(reports.table(rows))
    return None


def cmd_validate(ctx: Context) -> Path | None:
    a = ctx.args
    refs = a.ruleset or ([] if a.mapping else list_builtin_rulesets())
    results: dict[str, list[str]] = {}
    for ref in refs:
        rs = load_ruleset(ref, validate=False)
        ctx.read(ruleset_source(ref))
        results[rs.name] = [str(d) for d in validate_ruleset(rs)]
    for path in a.mapping or []:
        try:
            spec = load_mapping(ctx.read(path))
            results[spec.name] = []
        except MappingError as exc:
            results[str(path)] = [f"mapping: {exc}"]
    for name, diags in results.items():
        ctx.diagnostics.extend(f"{name}: {d}" for d in diags)
    payload = {"kind": "validation", "results": results}
    rows = [["name", "status"]] + [[n, "ok" if not d else f"{len(d)} diagnostic(s)"] for n, d in results.items()]
    ctx.emit(payload, reports.table(rows))
    return None


# pipeline


def _pipeline_config(ctx: Context) -> tuple[dict[str, Any], Path]:
    a = ctx.args
    cfg: dict[str, Any] = {}
    base = Path.cwd()
    if a.config:
        path = ctx.read(a.config)
        cfg = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(cfg, dict):
            raise ValueError("pipeline config must be a JSON object")
        base = path.parent
        for key in ("log", "mapping"):
            if key in cfg:
                cfg[key] = str(base / cfg[key])
        rs = cfg.get("ruleset")
        if isinstance(rs, str) and rs.endswith(".json"):
            cfg["ruleset"] = str(base / rs)
    overrides = {"log": a.log, "mapping": a.mapping, "ruleset": a.ruleset, "approach": a.approach, "format": a.format}
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    missing = [k for k in ("log", "mapping", "ruleset") if not cfg.get(k)]
    if missing:
        raise ValueError(f"pipeline needs {', '.join(missing)} (flags or config file)")
    if not a.out:
        raise ValueError("pipeline needs --out DIR")
    return cfg, Path(a.out)


def _stage(name: str):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PipelineError:
                raise
            except (OSError, ValueError, KeyError) as exc:
                raise PipelineError(name, str(exc)) from exc
        return run
    return wrap


def run_pipeline(ctx: Context, cfg: dict[str, Any], out: Path) -> dict[str, Any]:
    """Ingest, map, check, measure, match and mine; returns the report payloads by file name."""
    approach = cfg.get("approach", "collapse")
    mine_cfg = {"approach": "plus", "min_support": 1.0, "min_len": 2, "bucket_counts": False, **cfg.get("mine", {})}

    log = _stage("ingest")(lambda: _read_log(ctx, cfg["log"], _ingest_config(ctx, {**cfg.get("ingest", {}), **({"format": cfg["format"]} if cfg.get("format") else {})})))()

    @_stage("map")
    def do_map():
        spec = load_mapping(ctx.read(cfg["mapping"]))
        return spec, apply_mapping(log, spec), mapping_tally(log, spec)

    spec, seqs, tally = do_map()
    for record, n in sorted(tally.unlisted.items()):
        ctx.diagnostics.append(f"record {record!r} is not listed in mapping {spec.name!r} ({n} events)")

    rs = _stage("ruleset")(lambda: _read_ruleset(ctx, cfg["ruleset"]))()
    if spec.target_taxonomy != rs.terminal_taxonomy:
        raise PipelineError(
            "validate",
            f"mapping {spec.name!r} targets {spec.target_taxonomy!r} but rule set {rs.name!r} "
            f"is written over {rs.terminal_taxonomy!r}",
        )

    cov = _stage("coverage")(lambda: coverage(log, spec, cfg.get("coverage_mode", "distinct-records")))()
    div = _stage("diversity")(lambda: diversity(seqs, spec.target_taxonomy))()
    matches = _stage("match")(lambda: match_dataset(seqs, rs, approach))()
    stats = _stage("stats")(lambda: session_stats(matches, cfg.get("interval", "normal")))()

    @_stage("mine")
    def do_mine():
        if len(seqs) < 2:
            ctx.diagnostics.append("mining skipped: fewer than two sessions")
            return []
        return common_subsequences(seqs, mine_cfg["approach"], mine_cfg["min_len"], mine_cfg["min_support"], mine_cfg["bucket_counts"])

    mined = do_mine()
    table = CoverageTable.from_cells({(cov.taxonomy, cov.dataset): cov})
    return {
        "sequences.json": _sequences_payload(seqs, "raw", {"mapping": spec.name, "dataset": log.dataset, "tally": tally.to_dict()}),
        "matches.json": reports.matches_payload(matches, rs, approach),
        "coverage.json": reports.coverage_payload([cov], table),
        "diversity.json": reports.diversity_payload(div, log.dataset),
        "diversity.csv": (reports.DIVERSITY_CSV_HEADER, div.csv_rows(log.dataset)),
        "stats.json": reports.stats_payload(stats, rs.name, approach, cfg.get("interval", "normal")),
        "stats.csv": (reports.STATS_CSV_HEADER, reports.stats_rows(stats)),
        "mine.json": reports.mine_payload(
            {log.dataset: mined}, mine_cfg["approach"], mine_cfg["min_len"], mine_cfg["min_support"]
        ),
        "_summary": (cov, div, rs, matches, stats, mined),
    }


def cmd_pipeline(ctx: Context) -> Path | None:
    cfg, out = _stage("config")(lambda: _pipeline_config(ctx))()
    bundle = run_pipeline(ctx, cfg, out)
    cov, div, rs, matches, stats, mined = bundle.pop("_summary")
    out.mkdir(parents=True, exist_ok=True)
    for name in PIPELINE_REPORTS:
        payload = bundle[name]
        if name.endswith(".csv"):
            ctx.write_csv(out / name, *payload)
        else:
            ctx.write_json(out / name, payload)
    text = (
        f"coverage {cov.dataset} -> {cov.taxonomy}: {cov.rendered} ({cov.covered}/{cov.total})\n"
        f"top terminal: {div.top_terminal} ({div.top_share:.4f})\n\n"
        + reports.table(_stats_rows(stats))
        + f"\n{len(mined)} common patterns\n"
        + reports.table(_mine_rows(mined[:10]))
    )
    ctx.emit({k: bundle[k] for k in PIPELINE_REPORTS if k.endswith(".json")}, text)
    return out


COMMANDS = {
    "map": cmd_map,
    "transform": cmd_transform,
    "match": cmd_match,
    "coverage": cmd_coverage,
    "diversity": cmd_diversity,
    "stats": cmd_stats,
    "mine": cmd_mine,
    "catalog": cmd_catalog,
    "validate": cmd_validate,
    "pipeline": cmd_pipeline,
}


# argument parsing


def _global_options(suppress: bool) -> argparse.ArgumentParser:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--format", choices=FORMATS, default=d(None), help="input log format (default: from file suffix)")
    g.add_argument("--strict", action="store_true", default=d(False), help="exit 1 when diagnostics were raised")
    g.add_argument("--quiet", action="store_true", default=d(False), help="no stdout")
    g.add_argument("--json", action="store_true", default=d(False), help="machine-readable JSON on stdout")
    return p


def _ingest_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("log columns")
    g.add_argument("--ingest-config", metavar="FILE", help="JSON object of column names")
    g.add_argument("--session-col")
    g.add_argument("--record-col")
    g.add_argument("--time-col")
    g.add_argument("--attr-col")
    g.add_argument("--participant-col")
    g.add_argument("--task-col")
    g.add_argument("--dataset", help="dataset name (default: log file stem)")
    g.add_argument("--lenient", action="store_true", help="skip malformed rows instead of failing")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taxolex", description=__doc__.splitlines()[0], parents=[_global_options(False)])
    parser.add_argument("--version", action="version", version=f"taxolex {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.required = True
    glob = _global_options(True)
    ing = _ingest_options()

    p = sub.add_parser("map", parents=[glob, ing], help="map log records to terminal sequences")
    p.add_argument("--log", required=True)
    p.add_argument("--mapping", required=True)
    p.add_argument("--out")

    p = sub.add_parser("transform", parents=[glob], help="collapse or encode repeated terminals")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--approach", choices=APPROACHES, required=True)
    p.add_argument("--out")

    p = sub.add_parser("match", parents=[glob], help="count non-terminal occurrences per session")
    p.add_argument("--seqs", required=True)
    p.add_argument("--ruleset", required=True, help="builtin name (e.g. bm-shneiderman) or JSON path")
    p.add_argument("--approach", choices=APPROACHES, default="collapse")
    p.add_argument("--out")

    p = sub.add_parser("coverage", parents=[glob, ing], help="share of log records a mapping covers")
    p.add_argument("--log", action="append", default=[])
    p.add_argument("--mapping", action="append", default=[])
    p.add_argument("--mode", choices=COVERAGE_MODES, default="distinct-records")
    p.add_argument("--out")
    p.add_argument("--csv")

    p = sub.add_parser("diversity", parents=[glob], help="terminal usage distribution")
    p.add_argument("--seqs", required=True)
    p.add_argument("--taxonomy")
    p.add_argument("--dataset")
    p.add_argument("--out")
    p.add_argument("--csv")

    p = sub.add_parser("stats", parents=[glob], help="mean and 95%% interval of per-session counts")
    p.add_argument("--matches", required=True)
    p.add_argument("--method", choices=("normal", "t"), default="normal")
    p.add_argument("--out")
    p.add_argument("--csv")

    p = sub.add_parser("mine", parents=[glob], help="maximal common contiguous patterns")
    p.add_argument("--seqs", action="append", required=True, help="repeat to intersect across datasets")
    p.add_argument("--approach", choices=MINING_APPROACHES, default="plus")
    p.add_argument("--min-support", type=float, default=1.0)
    p.add_argument("--min-len", type=int, default=2)
    p.add_argument("--bucket-counts", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("catalog", parents=[glob], help="list builtin taxonomies and rule sets")
    p.add_argument("--list", action="store_true", help="list taxonomies (default)")
    p.add_argument("--rulesets", action="store_true")
    p.add_argument("--show", metavar="NAME")

    p = sub.add_parser("validate", parents=[glob], help="check rule sets and mappings")
    p.add_argument("--ruleset", action="append")
    p.add_argument("--mapping", action="append")

    p = sub.add_parser("pipeline", parents=[glob, ing], help="ingest, map, match, measure and mine in one run")
    p.add_argument("--config")
    p.add_argument("--log")
    p.add_argument("--mapping")
    p.add_argument("--ruleset")
    p.add_argument("--approach", choices=APPROACHES)
    p.add_argument("--out")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    ctx = Context(args, argv)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            target = COMMANDS[args.command](ctx)
        except PipelineError as exc:
            print(f"taxolex pipeline: {exc}", file=sys.stderr)
            return 2
        except (OSError, ValueError, KeyError) as exc:
            print(f"taxolex {args.command}: {exc}", file=sys.stderr)
            return 2
    ctx.diagnostics.extend(str(w.message) for w in caught)
    ctx.write_manifest(target)
    if not args.quiet:
        for d in ctx.diagnostics:
            print(f"warning: {d}", file=sys.stderr)
    return 1 if args.strict and ctx.diagnostics else 0


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
