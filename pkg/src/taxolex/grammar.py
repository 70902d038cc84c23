"""Symbols, regular-expression ASTs over terminal alphabets, and NFA matching.

Patterns use a token-level syntax rather than characters: whitespace (or a
comma) concatenates, ``|`` alternates, and ``*``, ``+``, ``?`` and ``{m,n}``
are postfix operators.  ``inspect:same`` names a qualified terminal.

    >>> alphabet = ["aggregate", "arrange", "encode", "navigate"]
    >>> auto = compile(parse_pattern("(aggregate | arrange | encode)*", alphabet), alphabet)
    >>> find_matches(auto, ["aggregate", "arrange", "navigate", "encode"])
    [MatchSpan(nonterminal=None, start=0, end=2), MatchSpan(nonterminal=None, start=3, end=4)]
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence, Union

NULL = "null"
IDENT_RE = re.compile(r"[a-z][a-z0-9_-]*\Z")

__all__ = [
    "NULL", "Terminal", "Taxonomy", "Symbol", "Concat", "Alt", "Star", "Plus",
    "Optional", "Repeat", "PatternAST", "NonTerminalDef", "SymbolAutomaton",
    "MatchSpan", "MatchPolicy", "GrammarError", "PatternSyntaxError",
    "UnknownSymbolError", "AlphabetError", "parse_pattern", "pretty_print",
    "compile", "full_match", "find_matches", "nullable", "symbols_of",
    "symbol_key",
]


class GrammarError(ValueError):
    pass


class PatternSyntaxError(GrammarError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}" + (f" in {text!r}" if text else ""))


class UnknownSymbolError(GrammarError):
    def __init__(self, symbol: str, alphabet_name: str | None = None, detail: str = ""):
        self.symbol = symbol
        where = f" in alphabet {alphabet_name!r}" if alphabet_name else ""
        super().__init__(f"unknown symbol {symbol!r}{where}" + (f": {detail}" if detail else ""))


class AlphabetError(GrammarError):
    """A sequence contains a terminal outside the automaton's alphabet."""


def _check_ident(value: str, what: str) -> None:
    if not isinstance(value, str) or not IDENT_RE.match(value):
        raise GrammarError(f"invalid {what} {value!r}: expected [a-z][a-z0-9_-]*")


@dataclass(frozen=True)
class Terminal:
    name: str
    qualifier: str | None = None

    def __post_init__(self) -> None:
        _check_ident(self.name, "terminal name")
        if self.qualifier is not None:
            _check_ident(self.qualifier, "qualifier")

    @classmethod
    def parse(cls, text: str) -> Terminal:
        name, _, qualifier = text.partition(":")
        return cls(name, qualifier or None)

    @property
    def is_null(self) -> bool:
        return self.name == NULL

    def __str__(self) -> str:
        return self.name if self.qualifier is None else f"{self.name}:{self.qualifier}"


@dataclass(frozen=True)
class Taxonomy:
    """A named symbol set, either terminals (level ``T``) or non-terminals (``NT``)."""

    name: str
    level: str
    symbols: tuple[str, ...]
    citation: str = ""
    qualifiers: Mapping[str, tuple[str, ...]] = field(default_factory=dict, compare=False, hash=False)
    composites: frozenset[str] = frozenset()
    symbol_citations: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)
    provenance: str = "catalog-authored"

    def __post_init__(self) -> None:
        _check_ident(self.name, "taxonomy name")
        if self.level not in ("T", "NT"):
            raise GrammarError(f"taxonomy {self.name!r}: level must be 'T' or 'NT', got {self.level!r}")
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if not self.symbols:
            kind = "terminal" if self.level == "T" else "non-terminal"
            raise GrammarError(f"taxonomy {self.name!r} needs at least one {kind}")
        seen: set[str] = set()
        for sym in self.symbols:
            _check_ident(sym, "symbol name")
            if sym in seen:
                raise GrammarError(f"taxonomy {self.name!r}: duplicate symbol {sym!r}")
            seen.add(sym)
        if self.level == "T" and NULL in seen:
            raise GrammarError(f"taxonomy {self.name!r}: {NULL!r} is reserved")
        for sym in self.qualifiers:
            if sym not in seen:
                raise GrammarError(f"taxonomy {self.name!r}: qualifiers given for unknown symbol {sym!r}")

    def __contains__(self, name: object) -> bool:
        return name in self.symbols

    def __len__(self) -> int:
        return len(self.symbols)


# Pattern AST -----------------------------------------------------------------

@dataclass(frozen=True)
class Symbol:
    name: str
    qualifier: str | None = None

    def matches(self, name: str, qualifier: str | None) -> bool:
        # an unqualified symbol accepts every qualified variant of its terminal
        return name == self.name and (self.qualifier is None or self.qualifier == qualifier)


@dataclass(frozen=True)
class Concat:
    children: tuple


@dataclass(frozen=True)
class Alt:
    children: tuple


@dataclass(frozen=True)
class Star:
    child: Any


@dataclass(frozen=True)
class Plus:
    child: Any


@dataclass(frozen=True)
class Optional:
    child: Any


@dataclass(frozen=True)
class Repeat:
    child: Any
    min: int
    max: int

    def __post_init__(self) -> None:
        if not 0 <= self.min <= self.max:
            raise GrammarError(f"repeat bounds must satisfy 0 <= min <= max, got {{{self.min},{self.max}}}")


PatternAST = Union[Symbol, Concat, Alt, Star, Plus, Optional, Repeat]


def _concat(children: list) -> PatternAST:
    flat: list = []
    for c in children:
        flat.extend(c.children if isinstance(c, Concat) else [c])
    return flat[0] if len(flat) == 1 else Concat(tuple(flat))


def _alt(children: list) -> PatternAST:
    flat: list = []
    for c in children:
        flat.extend(c.children if isinstance(c, Alt) else [c])
    return flat[0] if len(flat) == 1 else Alt(tuple(flat))


@dataclass(frozen=True)
class NonTerminalDef:
    name: str
    pattern: PatternAST
    source: str = ""
    description: str = ""


def nullable(ast: PatternAST) -> bool:
    if isinstance(ast, Symbol):
        return False
    if isinstance(ast, Concat):
        return all(nullable(c) for c in ast.children)
    if isinstance(ast, Alt):
        return any(nullable(c) for c in ast.children)
    if isinstance(ast, (Star, Optional)):
        return True
    if isinstance(ast, Plus):
        return nullable(ast.child)
    if isinstance(ast, Repeat):
        return ast.min == 0 or nullable(ast.child)
    raise TypeError(f"not a pattern node: {ast!r}")


def symbols_of(ast: PatternAST) -> list[Symbol]:
    """Symbol leaves in left-to-right order."""
    if isinstance(ast, Symbol):
        return [ast]
    if isinstance(ast, (Concat, Alt)):
        return [s for c in ast.children for s in symbols_of(c)]
    return symbols_of(ast.child)


# Parsing ---------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[\s,]+)
  | (?P<repeat>\{\s*(?P<lo>\d+)\s*(?:,\s*(?P<hi>\d+)\s*)?\})
  | (?P<op>[()|*+?])
  | (?P<sym>[A-Za-z0-9_-]+(?::[A-Za-z0-9_-]+)?)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, Any, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PatternSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind == "repeat":
            lo = int(m.group("lo"))
            hi = int(m.group("hi")) if m.group("hi") is not None else lo
            if hi < lo:
                raise PatternSyntaxError(f"repeat bounds {{{lo},{hi}}} have max < min", pos, text)
            tokens.append(("repeat", (lo, hi), pos))
        elif kind == "op":
            tokens.append((m.group("op"), None, pos))
        elif kind == "sym":
            tokens.append(("sym", m.group("sym"), pos))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def take(self) -> tuple[str, Any, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str) -> PatternSyntaxError:
        return PatternSyntaxError(message, self.tokens[self.i][2], self.text)

    def parse(self) -> PatternAST:
        if self.peek() == "end":
            raise self.error("empty pattern")
        node = self.alt()
        if self.peek() != "end":
            raise self.error(f"unexpected {self.peek()!r}")
        return node

    def alt(self) -> PatternAST:
        branches = [self.concat()]
        while self.peek() == "|":
            self.take()
            branches.append(self.concat())
        return _alt(branches)

    def concat(self) -> PatternAST:
        items = []
        while self.peek() in ("sym", "("):
            items.append(self.repeat())
        if not items:
            raise self.error("expected a symbol or '('")
        return _concat(items)

    def repeat(self) -> PatternAST:
        node = self.atom()
        kind = self.peek()
        if kind in ("*", "+", "?", "repeat"):
            _, value, _ = self.take()
            if kind == "*":
                node = Star(node)
            elif kind == "+":
                node = Plus(node)
            elif kind == "?":
                node = Optional(node)
            else:
                node = Repeat(node, *value)
            if self.peek() in ("*", "+", "?", "repeat"):
                raise self.error("stacked postfix operators need parentheses")
        return node

    def atom(self) -> PatternAST:
        kind, value, pos = self.take()
        if kind == "(":
            node = self.alt()
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.take()
            return node
        if kind == "sym":
            name, _, qualifier = value.partition(":")
            for part, what in ((name, "symbol"), (qualifier, "qualifier")):
                if part and not IDENT_RE.match(part):
                    raise PatternSyntaxError(f"invalid {what} {part!r}", pos, self.text)
            return Symbol(name, qualifier or None)
        self.i -= 1
        raise self.error(f"unexpected {kind!r}")


Alphabet = Union[Taxonomy, Iterable[str], None]


def _alphabet_info(alphabet: Alphabet) -> tuple[frozenset[str] | None, Mapping[str, tuple[str, ...]], str | None]:
    if alphabet is None:
        return None, {}, None
    if isinstance(alphabet, Taxonomy):
        return frozenset(alphabet.symbols), alphabet.qualifiers, alphabet.name
    return frozenset(alphabet), {}, None


def validate_symbols(ast: PatternAST, alphabet: Alphabet) -> None:
    names, qualifiers, tax_name = _alphabet_info(alphabet)
    for sym in symbols_of(ast):
        if sym.name == NULL:
            raise UnknownSymbolError(NULL, tax_name, "the null terminal may not appear in a pattern")
        if names is None:
            continue
        if sym.name not in names:
            raise UnknownSymbolError(sym.name, tax_name)
        if sym.qualifier is not None and qualifiers and sym.qualifier not in qualifiers.get(sym.name, ()):
            raise UnknownSymbolError(f"{sym.name}:{sym.qualifier}", tax_name, "qualifier not declared for this terminal")


def parse_pattern(text: str, alphabet: Alphabet = None) -> PatternAST:
    """Parse ``text`` into a pattern AST, checking leaves against ``alphabet``.

    ``alphabet`` may be a level-T :class:`Taxonomy`, any iterable of terminal
    names, or ``None`` to skip the membership check.
    """
    if isinstance(alphabet, Taxonomy) and alphabet.level != "T":
        raise GrammarError(f"patterns are written over a terminal taxonomy, {alphabet.name!r} is level NT")
    ast = _Parser(text).parse()
    validate_symbols(ast, alphabet)
    return ast


def pretty_print(ast: PatternAST) -> str:
    """Canonical text for ``ast``; operands of postfix operators are always parenthesised."""
    if isinstance(ast, Symbol):
        return ast.name if ast.qualifier is None else f"{ast.name}:{ast.qualifier}"
    if isinstance(ast, Alt):
        return " | ".join(pretty_print(c) for c in ast.children)
    if isinstance(ast, Concat):
        return " ".join(f"({pretty_print(c)})" if isinstance(c, Alt) else pretty_print(c) for c in ast.children)
    if isinstance(ast, Star):
        return f"({pretty_print(ast.child)})*"
    if isinstance(ast, Plus):
        return f"({pretty_print(ast.child)})+"
    if isinstance(ast, Optional):
        return f"({pretty_print(ast.child)})?"
    if isinstance(ast, Repeat):
        return f"({pretty_print(ast.child)}){{{ast.min},{ast.max}}}"
    raise TypeError(f"not a pattern node: {ast!r}")


# Automaton -------------------------------------------------------------------

class MatchPolicy(enum.Enum):
    LEFTMOST_LONGEST = "leftmost-longest"


@dataclass(frozen=True)
class MatchSpan:
    nonterminal: str | None
    start: int
    end: int

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class SymbolAutomaton:
    """Thompson NFA over terminal symbols.

    ``transitions[s]`` holds ``(Symbol, target)`` pairs; ``epsilon[s]`` the
    epsilon targets.  When ``nullable_normalized`` is set the source pattern
    matched the empty sequence and the matchers reject empty matches.
    """

    start: int
    accepting: frozenset[int]
    transitions: tuple[tuple[tuple[Symbol, int], ...], ...]
    epsilon: tuple[tuple[int, ...], ...]
    alphabet: frozenset[str]
    pattern: Any
    name: str | None = None
    nullable_normalized: bool = False
    _closure: tuple[frozenset[int], ...] = field(default=(), repr=False, compare=False)

    @property
    def n_states(self) -> int:
        return len(self.transitions)

    def closure(self, states: Iterable[int]) -> frozenset[int]:
        out: set[int] = set()
        for s in states:
            out |= self._closure[s]
        return frozenset(out)

    def initial(self) -> frozenset[int]:
        return self._closure[self.start]

    def step(self, states: frozenset[int], name: str, qualifier: str | None) -> frozenset[int]:
        targets = [t for s in states for sym, t in self.transitions[s] if sym.matches(name, qualifier)]
        return self.closure(targets) if targets else frozenset()

    def accepts_nonempty(self) -> bool:
        """True if some non-empty sequence is accepted."""
        seen: set[int] = set()
        frontier = [t for s in self.initial() for _, t in self.transitions[s]]
        while frontier:
            s = frontier.pop()
            if s in seen:
                continue
            seen.add(s)
            for c in self._closure[s]:
                if c in self.accepting:
                    return True
                frontier.extend(t for _, t in self.transitions[c])
        return False


class _Builder:
    def __init__(self) -> None:
        self.trans: list[list[tuple[Symbol, int]]] = []
        self.eps: list[list[int]] = []

    def state(self) -> int:
        self.trans.append([])
        self.eps.append([])
        return len(self.trans) - 1

    def build(self, ast: PatternAST) -> tuple[int, int]:
        """Return (entry, exit) of a fragment recognising ``ast``."""
        if isinstance(ast, Symbol):
            s, e = self.state(), self.state()
            self.trans[s].append((ast, e))
            return s, e
        if isinstance(ast, Concat):
            frags = [self.build(c) for c in ast.children]
            for (_, e1), (s2, _) in zip(frags, frags[1:]):
                self.eps[e1].append(s2)
            return frags[0][0], frags[-1][1]
        if isinstance(ast, Alt):
            s, e = self.state(), self.state()
            for c in ast.children:
                cs, ce = self.build(c)
                self.eps[s].append(cs)
                self.eps[ce].append(e)
            return s, e
        if isinstance(ast, (Star, Plus, Optional)):
            s, e = self.state(), self.state()
            cs, ce = self.build(ast.child)
            self.eps[s].append(cs)
            self.eps[ce].append(e)
            if not isinstance(ast, Plus):
                self.eps[s].append(e)
            if not isinstance(ast, Optional):
                self.eps[ce].append(cs)
            return s, e
        if isinstance(ast, Repeat):
            s = cur = self.state()
            for i in range(ast.max):
                cs, ce = self.build(ast.child)
                self.eps[cur].append(cs)
                nxt = self.state()
                self.eps[ce].append(nxt)
                if i < ast.min:
                    cur = nxt
                    continue
                # optional copies may be skipped straight to the exit
                self.eps[cur].append(nxt)
                cur = nxt
            return s, cur
        raise TypeError(f"not a pattern node: {ast!r}")


def _closures(eps: list[list[int]]) -> tuple[frozenset[int], ...]:
    out = []
    for s in range(len(eps)):
        seen = {s}
        stack = [s]
        while stack:
            for t in eps[stack.pop()]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        out.append(frozenset(seen))
    return tuple(out)


def compile(ast: PatternAST, alphabet: Alphabet = None, name: str | None = None) -> SymbolAutomaton:
    """Thompson construction.  Without an alphabet the pattern's own symbols are used."""
    validate_symbols(ast, alphabet)
    names, _, _ = _alphabet_info(alphabet)
    if names is None:
        names = frozenset(s.name for s in symbols_of(ast))
    b = _Builder()
    start, end = b.build(ast)
    return SymbolAutomaton(
        start=start,
        accepting=frozenset({end}),
        transitions=tuple(tuple(t) for t in b.trans),
        epsilon=tuple(tuple(e) for e in b.eps),
        alphabet=names,
        pattern=ast,
        name=name,
        nullable_normalized=nullable(ast),
        _closure=_closures(b.eps),
    )


# Matching --------------------------------------------------------------------

def symbol_key(item: Any) -> tuple[str, str | None]:
    """(name, qualifier) for a string like ``inspect:same``, a Terminal, a sequence item or a pair."""
    if isinstance(item, str):
        name, _, qualifier = item.partition(":")
        return name, qualifier or None
    if isinstance(item, tuple):
        return item[0], item[1]
    if hasattr(item, "terminal"):
        return item.terminal, item.qualifier
    return item.name, item.qualifier


def _keys(a: SymbolAutomaton, seq: Sequence[Any]) -> list[tuple[str, str | None]]:
    keys = [symbol_key(x) for x in seq]
    for name, _ in keys:
        if name != NULL and name not in a.alphabet:
            raise AlphabetError(f"symbol {name!r} is not in the automaton alphabet")
    return keys


def full_match(a: SymbolAutomaton, seq: Sequence[Any]) -> bool:
    keys = _keys(a, seq)
    if not keys:
        return False
    states = a.initial()
    for name, qualifier in keys:
        if name == NULL:
            return False
        states = a.step(states, name, qualifier)
        if not states:
            return False
    return not states.isdisjoint(a.accepting)


def find_matches(
    a: SymbolAutomaton,
    seq: Sequence[Any],
    policy: MatchPolicy = MatchPolicy.LEFTMOST_LONGEST,
) -> list[MatchSpan]:
    """Non-overlapping occurrences of ``a`` in ``seq``.

    From the lowest unconsumed index the longest match starting there is
    taken, then scanning resumes after it.  No span contains a null item.
    """
    if policy is not MatchPolicy.LEFTMOST_LONGEST:
        raise ValueError(f"unsupported match policy {policy!r}")
    keys = _keys(a, seq)
    spans = []
    n = len(keys)
    i = 0
    while i < n:
        best = -1
        states = a.initial()
        j = i
        while j < n and keys[j][0] != NULL:
            states = a.step(states, *keys[j])
            if not states:
                break
            j += 1
            if not states.isdisjoint(a.accepting):
                best = j
        if best > i:
            spans.append(MatchSpan(a.name, i, best))
            i = best
        else:
            i += 1
    return spans
