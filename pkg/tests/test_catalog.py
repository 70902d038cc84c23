from __future__ import annotations

import json

import pytest

from taxolex.catalog import (
    CatalogError,
    RuleSet,
    catalog_entries,
    list_builtin,
    list_builtin_rulesets,
    load_ruleset,
    load_taxonomy,
    ruleset_from_dict,
    validate_ruleset,
)
from taxolex.grammar import pretty_print


def test_builtin_taxonomies():
    names = list_builtin()
    assert "brehmermunzner2013" in names and "shneiderman1996" in names
    levels = [load_taxonomy(n).level for n in names]
    assert levels.count("T") == 4 and levels.count("NT") == 3


def test_terminal_sets():
    bm = load_taxonomy("brehmermunzner2013")
    assert set(bm.symbols) == {
        "encode", "select", "navigate", "arrange", "change", "filter",
        "aggregate", "annotate", "import", "derive", "record",
    }
    assert len(load_taxonomy("yi2007").symbols) == 7
    assert {"overview", "zoom", "filter", "details_on_demand"} <= set(load_taxonomy("shneiderman1996").symbols)


def test_aliases_and_unknown_names():
    assert load_taxonomy("bm").name == "brehmermunzner2013"
    with pytest.raises(CatalogError):
        load_taxonomy("nope2000")


def test_taxonomy_from_file(tmp_path):
    path = tmp_path / "mini.json"
    path.write_text(json.dumps({"name": "mini", "level": "T", "symbols": [{"name": "poke"}], "citation": "x"}))
    assert load_taxonomy(str(path)).symbols == ("poke",)


def test_mantra_rule_set():
    rs = load_ruleset("brehmermunzner2013", "shneiderman1996")
    assert set(rs.nonterminals) == {"overview", "zoom", "filter", "details_on_demand", "ism"}
    assert rs.null_nonterminals == ()
    assert pretty_print(rs.rule("zoom").pattern) == "(navigate)+"


def test_null_nonterminals():
    rs = load_ruleset("amar2005", "gotzwen2009")
    assert {"scan", "drill-down"} <= set(rs.null_nonterminals)


def test_twelve_pairings_validate_and_round_trip():
    names = list_builtin_rulesets()
    assert len(names) == 12
    for name in names:
        rs = load_ruleset(name, validate=False)
        assert validate_ruleset(rs) == [], name
        for rule in rs.rules:
            assert pretty_print(rule.pattern) == rule.source


def _rs(rules, nulls=(), nt="shneiderman1996") -> RuleSet:
    return ruleset_from_dict({
        "name": "t",
        "terminal_taxonomy": "brehmermunzner2013",
        "nonterminal_taxonomy": nt,
        "rules": [{"nonterminal": n, "pattern": p} for n, p in rules],
        "null_nonterminals": list(nulls),
    })


FULL = [("overview", "encode"), ("zoom", "navigate"), ("filter", "filter"), ("details_on_demand", "select"), ("ism", "encode navigate select")]


def test_unknown_symbol_diagnostic():
    diags = validate_ruleset(_rs([("zoom", "zoom")] + FULL[:1] + FULL[2:]))
    assert [d.kind for d in diags] == ["unknown-symbol"]
    assert diags[0].symbol == "zoom"


def test_completeness_diagnostic():
    diags = validate_ruleset(_rs(FULL[:-1]))
    assert [d.kind for d in diags] == ["completeness"]
    assert diags[0].rule == "ism"


def test_duplicate_and_unknown_nonterminal():
    kinds = {d.kind for d in validate_ruleset(_rs(FULL, nulls=["zoom", "bogus"]))}
    assert kinds == {"duplicate", "unknown-nonterminal"}


def test_bad_qualifier():
    diags = validate_ruleset(_rs([FULL[0], ("zoom", "select:upward")] + FULL[2:]))
    assert [d.kind for d in diags] == ["unknown-qualifier"]


def test_null_in_pattern_is_rejected_at_parse():
    with pytest.raises(CatalogError, match="null"):
        _rs([("overview", "null encode")] + FULL[1:])


def test_invalid_builtin_raises(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "name": "bad", "terminal_taxonomy": "bm", "nonterminal_taxonomy": "s",
        "rules": [{"nonterminal": "zoom", "pattern": "navigate"}], "null_nonterminals": [],
    }))
    with pytest.raises(CatalogError, match="completeness"):
        load_ruleset(str(path))
    assert load_ruleset(str(path), validate=False).name == "bad"


def test_syntax_error_in_file_is_catalog_error():
    with pytest.raises(CatalogError):
        _rs([("zoom", "navigate (")])


def test_catalog_entries():
    entries = catalog_entries()
    assert len(entries) == 19
    assert {e.kind for e in entries} == {"taxonomy-T", "taxonomy-NT", "ruleset"}
