"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
from __future__ import annotations

import json
import random
import time
from pathlib import Path

from _gen import random_ast, random_seq

from taxolex import oracles
from taxolex.catalog import load_ruleset
from taxolex.cli import PIPELINE_REPORTS, run
from taxolex.grammar import compile, find_matches, full_match, parse_pattern, pretty_print
from taxolex.ingest import events_from_records
from taxolex.mapping import TerminalSequence, apply_mapping, load_mapping, mapping_from_dict
from taxolex.matcher import SessionMatchReport, match_session
from taxolex.metrics import coverage, diversity, session_stats
from taxolex.miner import common_subsequences, cross_dataset_intersection
from taxolex.transforms import collapse, numeric_encode, numeric_expand, plus_encode

# tolerances
MEAN_TOL = 1e-4
HALFWIDTH_TOL = 1e-4
SHARE_TOL = 1e-4
PERCENT_TOL = 0.01

MANTRA_RULES = {
    "overview": "(aggregate | arrange | encode)*",
    "zoom": "(navigate)+",
    "filter": "(filter)+",
    "details_on_demand": "(select | derive)+",
}


def test_1_grammar_round_trip(verdict):
    t0 = time.perf_counter()
    rs = load_ruleset("brehmermunzner2013", "shneiderman1996")
    problems = []
    for name, text in MANTRA_RULES.items():
        rule = rs.rule(name)
        printed = pretty_print(rule.pattern)
        if printed != text:
            problems.append(f"{name}: {printed!r}")
        if parse_pattern(printed) != rule.pattern or pretty_print(parse_pattern(printed)) != printed:
            problems.append(f"{name}: not a fixed point")
    for rule in rs.rules:
        again = parse_pattern(pretty_print(rule.pattern))
        if again != rule.pattern:
            problems.append(f"{rule.name}: not a fixed point")
    if rs.null_nonterminals:
        problems.append("unexpected null non-terminals")
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 1.0
    verdict(1, "mantra rules print back verbatim and parse->print->parse is a fixed point", ok, f"{elapsed:.3f}s {problems}")
    assert ok


def test_2_matcher_equals_oracle(verdict):
    t0 = time.perf_counter()
    rng = random.Random(20240611)
    pairs = 0
    bad = []
    while pairs < 1500:
        k = rng.randint(1, 4)
        alphabet = ["a", "b", "c", "d"][:k]
        ast = random_ast(rng, alphabet)
        automaton = compile(ast, alphabet)
        for _ in range(3):
            seq = random_seq(rng, alphabet, max_len=12)
            pairs += 1
            if full_match(automaton, seq) != oracles.interpret(ast, seq):
                bad.append(("membership", pretty_print(ast), seq))
            spans = [(s.start, s.end) for s in find_matches(automaton, seq)]
            if spans != oracles.oracle_match(ast, seq):
                bad.append(("spans", pretty_print(ast), seq))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30.0
    verdict(2, "find_matches equals the brute-force AST oracle", ok, f"{pairs} pairs, {len(bad)} discrepancies, {elapsed:.1f}s")
    assert ok, bad[:5]


def test_3_walk_through(verdict, wall_dir: Path):
    spec = load_mapping(wall_dir / "wall-brehmermunzner2013-mapping.json")
    log = events_from_records({"s": ["mouseover_from_list", "change_attribute_distribution", "filter_changed"]}, "wall")
    mapped = apply_mapping(log, spec)[0].terminals
    session = ["change_attribute_distribution", "sort_list", "mouseover_from_scatterplot", "mouseover_from_scatterplot",
               "filter_changed", "filter_changed", "mouseover_from_list"]
    seq = apply_mapping(events_from_records({"p": session}, "wall"), spec)[0]
    rs = load_ruleset("bm-shneiderman")
    report = match_session(seq, rs)
    oracle_count = len(oracles.oracle_match(rs.rule("ism").pattern, oracles.oracle_collapse(seq.terminals)))
    ok = mapped == ["select", "aggregate", "filter"] and report.counts["ism"] == 1 and oracle_count == 1
    verdict(3, "wall records map to select/aggregate/filter and the session holds exactly 1 ISM", ok,
            f"mapped={mapped} ism={report.counts['ism']}")
    assert ok


def _coverage_case(n_records: int, n_mapped: int, taxonomy: str, terminal: str) -> float:
    records = [f"rec{i:03d}" for i in range(n_records)]
    sessions = {"s1": records[: n_records // 2], "s2": records[n_records // 2:]}
    spec = mapping_from_dict({
        "name": f"case-{n_records}",
        "source_dataset": "case",
        "target_taxonomy": taxonomy,
        "rules": {r: {"terminal": terminal, "description": "fixture"} for r in records[:n_mapped]},
        "explicit_nulls": records[n_mapped:n_mapped + 1],
    })
    return coverage(events_from_records(sessions, "case"), spec).percentage


def test_4_coverage_ratios(verdict, wall_dir: Path):
    cases = {
        (12, 6): 50.00,
        (11, 11): 100.00,
        (90, 42): 46.67,
    }
    got = {k: _coverage_case(k[0], k[1], "amar2005", "filter") for k in cases}
    ok = all(abs(got[k] - v) <= PERCENT_TOL for k, v in cases.items())
    from taxolex.ingest import IngestConfig, ingest

    wall = ingest(wall_dir / "wall.csv", IngestConfig(time_col="timestamp", dataset="wall"))
    wall_pct = coverage(wall, load_mapping(wall_dir / "wall-brehmermunzner2013-mapping.json")).percentage
    ok = ok and abs(wall_pct - 100.0) <= PERCENT_TOL
    verdict(4, "distinct-record coverage reproduces 50.00 / 100.00 / 46.67", ok,
            ", ".join(f"{m}/{n}={got[(n, m)]:.2f}" for n, m in cases) + f", wall={wall_pct:.2f}")
    assert ok


def test_5_transform_algebra(verdict):
    rng = random.Random(5)
    failures = []
    names = ["filter", "select", "navigate", "null", "select:same"]
    for n in range(10_000):
        labels = [rng.choice(names) for _ in range(rng.randint(0, 15))]
        seq = TerminalSequence.from_labels(f"s{n}", labels)
        c, p, m = collapse(seq), plus_encode(seq), numeric_encode(seq)
        if collapse(c) != c or plus_encode(p) != p or numeric_encode(m) != m:
            failures.append(("idempotence", labels))
        if numeric_expand(m) != seq:
            failures.append(("expand", labels))
        if not (c.labels == p.labels == m.labels == oracles.oracle_collapse(labels)):
            failures.append(("projection", labels))
        rle = oracles.oracle_runs(labels)
        if [it.render() for it in p.items] != [k + "+" if c > 1 else k for k, c in rle]:
            failures.append(("plus render", labels))
        if [it.render() for it in m.items] != [f"{k}{c}" if c > 1 else k for k, c in rle]:
            failures.append(("numeric render", labels))
    sample = TerminalSequence.from_labels("sample", ["filter", "filter", "select", "select", "select", "navigate", "encode", "derive"])
    collapsed = collapse(sample)
    fig_ok = (
        len(sample) == 8
        and collapsed.terminals == ["filter", "select", "navigate", "encode", "derive"]
        and [it.render() for it in numeric_encode(sample).items][:2] == ["filter2", "select3"]
        and [it.render() for it in plus_encode(sample).items][:2] == ["filter+", "select+"]
    )
    ok = not failures and fig_ok
    verdict(5, "transform algebra on 10,000 random sequences and the 8 -> 5 example", ok, f"{len(failures)} failures")
    assert ok, failures[:5]


def _report(sid: str, counts: dict[str, int]) -> SessionMatchReport:
    return SessionMatchReport(sid, counts, {}, (), 0)


def test_6_statistics(verdict):
    stats = session_stats([_report(f"s{i}", {"x": c}) for i, c in enumerate((2, 3, 2))])[0]
    first = abs(stats.mean - 2.3333) <= MEAN_TOL and abs(stats.ci95_halfwidth - 0.6533) <= HALFWIDTH_TOL

    # sixteen sessions whose elaborating counts have mean 2.25 and half-width 0.55
    targets = [0, 0, 1, 1, 2, 2] + [3] * 10
    rs = load_ruleset("brehmermunzner2013", "guo2015")
    seqs = []
    for i, k in enumerate(targets):
        labels = ["navigate"] + ["select", "derive", "navigate"] * k
        seqs.append(TerminalSequence.from_labels(f"p{i:02d}", labels, "brehmermunzner2013"))
    reports = [match_session(s, rs) for s in seqs]
    got_counts = [r.counts["elaborating"] for r in reports]
    elaborating = next(s for s in session_stats(reports) if s.nonterminal == "elaborating")
    rendered = elaborating.render()
    ok = first and got_counts == targets and rendered == "2.25±0.55 = 1.70 to 2.80"
    verdict(6, "mean/half-width of {2,3,2} and the tuned 2.25±0.55 interval", ok,
            f"mean={stats.mean:.4f} hw={stats.ci95_halfwidth:.4f}; {rendered}")
    assert ok


def test_7_diversity(verdict):
    rng = random.Random(7)
    others = ["select", "reconfigure", "encode", "filter", "connect"]
    labels = ["explore"] * 9543 + [others[i % len(others)] for i in range(457)]
    rng.shuffle(labels)
    seqs = [TerminalSequence.from_labels(f"s{k}", labels[k * 1000:(k + 1) * 1000], "yi2007") for k in range(10)]
    yi = diversity(seqs, "yi2007")

    amar_used = ["retrieve-value", "filter", "compute-derived-value", "sort", "determine-range",
                 "characterize-distribution", "cluster", "correlate"]
    amar_seqs = [TerminalSequence.from_labels(f"a{k}", rng.sample(amar_used, 5), "amar2005") for k in range(6)]
    amar_seqs.append(TerminalSequence.from_labels("all", amar_used, "amar2005"))
    amar = diversity(amar_seqs, "amar2005")
    ok = (
        yi.top_terminal == "explore"
        and abs(yi.top_share - 0.9543) <= SHARE_TOL
        and amar.unused == {"find-anomalies", "find-extremum"}
    )
    verdict(7, "top share 0.9543 for explore and never-used amar2005 terminals", ok,
            f"top={yi.top_terminal} {yi.top_share:.4f}, unused={sorted(amar.unused)}")
    assert ok


def test_8_mining(verdict):
    t0 = time.perf_counter()
    rng = random.Random(8)
    mismatches = 0
    trials = 0
    for trial in range(220):
        n_sessions = rng.randint(2, 6)
        budget = rng.randint(n_sessions, 200)
        alphabet = ["a", "b", "c", "null"][: rng.randint(2, 4)]
        lengths = [max(1, budget // n_sessions + rng.randint(-3, 3)) for _ in range(n_sessions)]
        sessions = [[rng.choice(alphabet) for _ in range(n)] for n in lengths]
        if sum(map(len, sessions)) > 200:
            continue
        seqs = [TerminalSequence.from_labels(f"s{i}", s) for i, s in enumerate(sessions)]
        support = rng.choice([1.0, 0.75, 0.5, 0.34])
        for approach in ("plus", "numeric"):
            trials += 1
            got = {p.items for p in common_subsequences(seqs, approach, 2, support)}
            want = oracles.oracle_mine([oracles.oracle_encode(s, approach) for s in sessions], 2, support)
            mismatches += got != want

    planted = []
    fill = ["select", "navigate", "filter", "annotate", "bookmark", "split"]
    for i in range(8):
        left = [rng.choice(fill) for _ in range(rng.randint(1, 6))]
        right = [rng.choice(fill) for _ in range(rng.randint(1, 6))]
        planted.append(TerminalSequence.from_labels(f"lh{i}", left + ["delete", "brush"] + right, "gotzzhou2009"))
    numeric = {p.items for p in common_subsequences(planted, "numeric", 2, 1.0)}
    recovered = ("delete", "brush") in numeric

    disjoint = []
    for tag, alphabet in (("x", ["filter", "select"]), ("y", ["navigate", "encode"]), ("z", ["arrange", "derive"])):
        sessions = [TerminalSequence.from_labels(f"{tag}{i}", alphabet * 3, "brehmermunzner2013") for i in range(3)]
        disjoint.append(common_subsequences(sessions, "plus", 2, 1.0))
    empty = all(disjoint) and cross_dataset_intersection(disjoint) == set()

    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and trials >= 300 and recovered and empty and elapsed < 10.0
    verdict(8, "miner equals substring oracle; (delete, brush) recovered; disjoint sets intersect to nothing", ok,
            f"{trials} trials, {mismatches} mismatches, {elapsed:.1f}s")
    assert ok


def _without_timestamp(path: Path) -> dict:
    data = json.loads(path.read_text())
    data.pop("timestamp")
    return data


def test_9_cli_determinism(verdict, wall_dir: Path, tmp_path: Path, capsys):
    config = str(wall_dir / "pipeline.json")
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [run(["pipeline", "--config", config, "--out", str(a), "--quiet"]) for _ in range(2)]
    first_manifest = _without_timestamp(a / "manifest.json")
    reports_a = {name: (a / name).read_bytes() for name in PIPELINE_REPORTS}
    codes.append(run(["pipeline", "--config", config, "--out", str(a), "--quiet"]))
    codes.append(run(["pipeline", "--config", config, "--out", str(b), "--quiet"]))
    same_dir = {name: (a / name).read_bytes() for name in PIPELINE_REPORTS} == reports_a
    other_dir = {name: (b / name).read_bytes() for name in PIPELINE_REPORTS} == reports_a
    manifest_same = _without_timestamp(a / "manifest.json") == first_manifest
    golden = all((wall_dir / "golden" / name).read_bytes() == reports_a[name] for name in PIPELINE_REPORTS)
    ok = codes == [0, 0, 0, 0] and same_dir and other_dir and manifest_same and golden
    verdict(9, "pipeline reruns give byte-identical reports", ok,
            f"exit={codes} rerun={same_dir} other-dir={other_dir} manifest={manifest_same} golden={golden}")
    assert ok
