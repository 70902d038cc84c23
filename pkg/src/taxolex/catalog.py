"""Builtin taxonomies and terminal x non-terminal rule sets, plus loaders for user files."""
from __future__ import annotations

import enum
import functools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from .grammar import (
    NULL,
    GrammarError,
    NonTerminalDef,
    SymbolAutomaton,
    Taxonomy,
    compile,
    parse_pattern,
    symbols_of,
)


class CatalogError(ValueError):
    pass


class Provenance(str, enum.Enum):
    LITERATURE_VERBATIM = "literature-verbatim"
    LITERATURE_DESCRIBED = "literature-described"
    CATALOG_AUTHORED = "catalog-authored"


ALIASES = {
    "a": "amar2005",
    "amar": "amar2005",
    "bm": "brehmermunzner2013",
    "brehmermunzner": "brehmermunzner2013",
    "gz": "gotzzhou2009",
    "gotzzhou": "gotzzhou2009",
    "y": "yi2007",
    "yi": "yi2007",
    "s": "shneiderman1996",
    "shneiderman": "shneiderman1996",
    "gw": "gotzwen2009",
    "gotzwen": "gotzwen2009",
    "guo": "guo2015",
}


def _data_dir(kind: str):
    return resources.files("taxolex") / "data" / kind


def list_builtin() -> list[str]:
    """Names of the shipped taxonomies, terminal level first."""
    taxa = [load_taxonomy(p.name[:-5]) for p in _data_dir("taxonomies").iterdir() if p.name.endswith(".json")]
    return [t.name for t in sorted(taxa, key=lambda t: (t.level != "T", t.name))]


def list_builtin_rulesets() -> list[str]:
    return sorted(p.name[:-5] for p in _data_dir("rulesets").iterdir() if p.name.endswith(".json"))


def resolve_taxonomy_name(name: str) -> str:
    builtin = {p.name[:-5] for p in _data_dir("taxonomies").iterdir() if p.name.endswith(".json")}
    if name in builtin:
        return name
    if name in ALIASES:
        return ALIASES[name]
    raise CatalogError(f"unknown taxonomy {name!r}; builtin: {', '.join(sorted(builtin))}")


def _looks_like_path(ref: str | Path) -> bool:
    return isinstance(ref, Path) or str(ref).endswith(".json") or "/" in str(ref)


def taxonomy_from_dict(data: dict[str, Any]) -> Taxonomy:
    try:
        entries = data["symbols"]
        symbols = []
        qualifiers = {}
        citations = {}
        composites = set()
        for entry in entries:
            if isinstance(entry, str):
                entry = {"name": entry}
            symbols.append(entry["name"])
            if entry.get("qualifiers"):
                qualifiers[entry["name"]] = tuple(entry["qualifiers"])
            if entry.get("citation"):
                citations[entry["name"]] = entry["citation"]
            if entry.get("composite"):
                composites.add(entry["name"])
        return Taxonomy(
            name=data["name"],
            level=data["level"],
            symbols=tuple(symbols),
            citation=data.get("citation", ""),
            qualifiers=qualifiers,
            composites=frozenset(composites),
            symbol_citations=citations,
            provenance=data.get("provenance", Provenance.CATALOG_AUTHORED.value),
        )
    except KeyError as exc:
        raise CatalogError(f"taxonomy file is missing field {exc.args[0]!r}") from None
    except GrammarError as exc:
        raise CatalogError(str(exc)) from None


def _read_json(path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: malformed JSON ({exc})") from None


@functools.lru_cache(maxsize=None)
def _builtin_taxonomy(name: str) -> Taxonomy:
    return taxonomy_from_dict(_read_json(_data_dir("taxonomies") / f"{name}.json"))


def load_taxonomy(ref: str | Path) -> Taxonomy:
    """Load a builtin taxonomy by name (or alias) or a taxonomy JSON file."""
    if _looks_like_path(ref):
        path = Path(ref)
        if not path.exists():
            raise CatalogError(f"taxonomy file not found: {path}")
        return taxonomy_from_dict(_read_json(path))
    return _builtin_taxonomy(resolve_taxonomy_name(str(ref)))


@dataclass(frozen=True)
class Diagnostic:
    rule: str | None
    symbol: str | None
    kind: str
    message: str

    def __str__(self) -> str:
        where = f"[{self.rule}] " if self.rule else ""
        return f"{where}{self.kind}: {self.message}"


@dataclass(frozen=True)
class RuleSet:
    name: str
    terminal_taxonomy: str
    nonterminal_taxonomy: str
    rules: tuple[NonTerminalDef, ...]
    null_nonterminals: tuple[str, ...] = ()
    qualify: str | None = None
    provenance: str = Provenance.CATALOG_AUTHORED.value
    _automata: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def rule(self, name: str) -> NonTerminalDef:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def nonterminals(self) -> list[str]:
        return [r.name for r in self.rules]

    def automata(self) -> dict[str, SymbolAutomaton]:
        """Compiled automaton per rule, built once and shared."""
        if not self._automata:
            alphabet = load_taxonomy(self.terminal_taxonomy)
            for r in self.rules:
                self._automata[r.name] = compile(r.pattern, alphabet, name=r.name)
        return self._automata

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "terminal_taxonomy": self.terminal_taxonomy,
            "nonterminal_taxonomy": self.nonterminal_taxonomy,
            "provenance": self.provenance,
        }
        if self.qualify:
            out["qualify"] = self.qualify
        out["rules"] = [{"nonterminal": r.name, "pattern": r.source, "description": r.description} for r in self.rules]
        out["null_nonterminals"] = list(self.null_nonterminals)
        return out


def ruleset_from_dict(data: dict[str, Any]) -> RuleSet:
    """Build a RuleSet checking pattern syntax only; symbol checks live in validate_ruleset."""
    try:
        rules = []
        for entry in data["rules"]:
            source = entry["pattern"]
            rules.append(NonTerminalDef(entry["nonterminal"], parse_pattern(source), source, entry.get("description", "")))
        return RuleSet(
            name=data["name"],
            terminal_taxonomy=data["terminal_taxonomy"],
            nonterminal_taxonomy=data["nonterminal_taxonomy"],
            rules=tuple(rules),
            null_nonterminals=tuple(data.get("null_nonterminals", ())),
            qualify=data.get("qualify"),
            provenance=data.get("provenance", Provenance.CATALOG_AUTHORED.value),
        )
    except KeyError as exc:
        raise CatalogError(f"rule set is missing field {exc.args[0]!r}") from None
    except GrammarError as exc:
        raise CatalogError(f"rule set {data.get('name')!r}: {exc}") from None


def validate_ruleset(rs: RuleSet) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    try:
        terminals = load_taxonomy(rs.terminal_taxonomy)
        nonterminals = load_taxonomy(rs.nonterminal_taxonomy)
    except CatalogError as exc:
        return [Diagnostic(None, None, "unknown-taxonomy", str(exc))]
    if terminals.level != "T":
        diags.append(Diagnostic(None, None, "level", f"{terminals.name!r} is not a terminal taxonomy"))
    if nonterminals.level != "NT":
        diags.append(Diagnostic(None, None, "level", f"{nonterminals.name!r} is not a non-terminal taxonomy"))
    if rs.qualify is not None and rs.qualify not in terminals:
        diags.append(Diagnostic(None, rs.qualify, "unknown-symbol", f"qualified terminal {rs.qualify!r} is not in {terminals.name!r}"))

    housed: dict[str, int] = {}
    for name in [r.name for r in rs.rules] + list(rs.null_nonterminals):
        housed[name] = housed.get(name, 0) + 1
    for name, count in housed.items():
        if name not in nonterminals:
            diags.append(Diagnostic(name, name, "unknown-nonterminal", f"{name!r} is not a symbol of {nonterminals.name!r}"))
        elif count > 1:
            diags.append(Diagnostic(name, name, "duplicate", f"{name!r} is housed {count} times"))
    for name in nonterminals.symbols:
        if name not in housed:
            diags.append(Diagnostic(name, name, "completeness", f"{name!r} is neither a rule nor a null non-terminal"))

    for r in rs.rules:
        bad = False
        for sym in symbols_of(r.pattern):
            label = sym.name if sym.qualifier is None else f"{sym.name}:{sym.qualifier}"
            if sym.name == NULL:
                diags.append(Diagnostic(r.name, label, "null-in-pattern", "the null terminal may not appear in a pattern"))
                bad = True
            elif sym.name not in terminals:
                diags.append(Diagnostic(r.name, label, "unknown-symbol", f"{sym.name!r} is not a terminal of {terminals.name!r}"))
                bad = True
            elif sym.qualifier is not None and sym.qualifier not in terminals.qualifiers.get(sym.name, ()):
                diags.append(Diagnostic(r.name, label, "unknown-qualifier", f"{sym.name!r} does not declare qualifier {sym.qualifier!r}"))
                bad = True
        if not bad and not compile(r.pattern, terminals).accepts_nonempty():
            diags.append(Diagnostic(r.name, None, "empty-language", "pattern matches no non-empty sequence"))
    return diags


def _ruleset_path(terminal_tax: str, nonterminal_tax: str | None):
    if nonterminal_tax is None:
        ref = terminal_tax[:-len("-mapping")] if terminal_tax.endswith("-mapping") else terminal_tax
        parts = ref.split("-")
        if len(parts) != 2:
            raise CatalogError(f"cannot read {terminal_tax!r} as <terminal>-<nonterminal>[-mapping]")
        terminal_tax, nonterminal_tax = parts
    t = resolve_taxonomy_name(terminal_tax)
    nt = resolve_taxonomy_name(nonterminal_tax)
    path = _data_dir("rulesets") / f"{t}-{nt}-mapping.json"
    if not path.is_file():
        raise CatalogError(f"no builtin rule set for {t!r} x {nt!r}")
    return path


@functools.lru_cache(maxsize=None)
def _builtin_ruleset(path_str: str) -> RuleSet:
    return ruleset_from_dict(_read_json(resources.files("taxolex") / "data" / "rulesets" / path_str))


def load_ruleset(terminal_tax: str | Path, nonterminal_tax: str | None = None, *, validate: bool = True) -> RuleSet:
    """Load a rule set.

    Accepts a (terminal, non-terminal) taxonomy pair, a single
    ``<terminal>-<nonterminal>[-mapping]`` reference (aliases such as
    ``bm-shneiderman`` work), or a path to a rule-set JSON file.  With
    ``validate`` any diagnostic raises :class:`CatalogError`.
    """
    if nonterminal_tax is None and _looks_like_path(terminal_tax):
        path = Path(terminal_tax)
        if not path.exists():
            raise CatalogError(f"rule set file not found: {path}")
        rs = ruleset_from_dict(_read_json(path))
    else:
        path = _ruleset_path(str(terminal_tax), nonterminal_tax)
        rs = _builtin_ruleset(path.name)
    if validate:
        diags = validate_ruleset(rs)
        if diags:
            raise CatalogError(f"rule set {rs.name!r} is invalid:\n  " + "\n  ".join(map(str, diags)))
    return rs


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kind: str
    payload: Any
    provenance: Provenance
    citation: str = ""


def catalog_entries() -> list[CatalogEntry]:
    entries = []
    for name in list_builtin():
        tax = load_taxonomy(name)
        entries.append(CatalogEntry(name, f"taxonomy-{tax.level}", tax, Provenance(tax.provenance), tax.citation))
    for name in list_builtin_rulesets():
        rs = load_ruleset(name)
        entries.append(CatalogEntry(name, "ruleset", rs, Provenance(rs.provenance)))
    return entries


def iter_builtin_rulesets() -> Iterable[RuleSet]:
    for name in list_builtin_rulesets():
        yield load_ruleset(name)


def ruleset_source(ref: str | Path) -> Path:
    """File a rule-set reference resolves to (for digests)."""
    if _looks_like_path(ref):
        return Path(ref)
    return Path(str(_ruleset_path(str(ref), None)))
