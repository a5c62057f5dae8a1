"""Text format for knowledge bases (.kbr files), printers and JSON export.

Grammar (line comments start with %):

    document := (fact | rule | query)* ;
    fact     := atom ("," atom)* "." ;
    rule     := [ident ":"] body "->" head "." ;
    body     := lit ("," lit)* ;
    lit      := atom | "not" atom | "not" "(" atom ("," atom)* ")" ;
    head     := atom ("," atom)* ;
    query    := "?" atom ("," atom)* "." ;
    atom     := ident "(" term ("," term)* ")" ;
    term     := ident | VARIABLE ;

VARIABLE starts with an uppercase letter, ident with a lowercase one.
Facts may contain variables (labelled nulls); all facts share one scope.
An engine-internal mode additionally accepts functional terms, which is how
skolemized rules round-trip.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .rules import FR_PRED, Rule
from .terms import Atom, Const, Func, Term, Var, sorted_atoms, vars_of


class KBError(Exception):
    """Base class for loader errors."""


class ParseError(KBError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__("%d:%d: %s" % (line, col, message))
        self.line = line
        self.col = col


class ValidationError(KBError):
    pass


@dataclass
class KnowledgeBase:
    facts: frozenset = frozenset()
    rules: List[Rule] = field(default_factory=list)
    queries: List[frozenset] = field(default_factory=list)

    def rule(self, rid: str) -> Rule:
        for r in self.rules:
            if r.id == rid:
                return r
        raise KeyError(rid)

    @property
    def has_negation(self) -> bool:
        return any(r.negbodies for r in self.rules)


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>%[^\n]*)
      | (?P<arrow>->)
      | (?P<punct>[(),.:?])
      | (?P<name>[a-z][A-Za-z0-9_]*)
      | (?P<var>[A-Z][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Tok]:
    toks, pos, line, bol = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError("unexpected character %r" % text[pos], line, pos - bol + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, m.start() - bol + 1))
        nl = m.group().count("\n")
        if nl:
            line += nl
            bol = m.start() + m.group().rindex("\n") + 1
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, toks: List[_Tok], allow_functions: bool):
        self.toks = toks
        self.i = 0
        self.allow_functions = allow_functions

    def peek(self, ahead: int = 0) -> Optional[_Tok]:
        j = self.i + ahead
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> _Tok:
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else _Tok("", "", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.col)
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise ParseError("expected %r, found %r" % (text, t.text), t.line, t.col)
        return t

    def term(self, scope: Optional[str]) -> Term:
        t = self.next()
        if t.kind == "var":
            return Var(t.text, ns=scope)
        if t.kind == "name":
            nxt = self.peek()
            if self.allow_functions and nxt is not None and nxt.text == "(":
                self.expect("(")
                args: List[Term] = []
                if self.peek() is not None and self.peek().text == ")":
                    self.next()
                    return Func(t.text, ())
                args.append(self.term(scope))
                while self.peek() is not None and self.peek().text == ",":
                    self.next()
                    args.append(self.term(scope))
                self.expect(")")
                return Func(t.text, tuple(args))
            return Const(t.text)
        raise ParseError("expected a term, found %r" % t.text, t.line, t.col)

    def atom(self, scope: Optional[str]) -> Atom:
        t = self.next()
        if t.kind != "name":
            raise ParseError("expected a predicate name, found %r" % t.text, t.line, t.col)
        self.expect("(")
        args = [self.term(scope)]
        while True:
            nxt = self.next()
            if nxt.text == ",":
                args.append(self.term(scope))
            elif nxt.text == ")":
                break
            else:
                raise ParseError("expected ',' or ')', found %r" % nxt.text, nxt.line, nxt.col)
        return Atom(t.text, tuple(args))

    def statement_tokens_until_dot(self) -> List[_Tok]:
        out = []
        while True:
            t = self.next()
            if t.text == ".":
                return out
            out.append(t)


def _parse_statement(p: _Parser, scope: str):
    """Returns ("query", atoms) | ("rule", label, pos, negs, head) | ("fact", atoms)."""
    start = p.i
    # classify by scanning ahead to the closing "."
    depth = 0
    is_rule = False
    j = p.i
    while j < len(p.toks):
        t = p.toks[j]
        if t.text == "(":
            depth += 1
        elif t.text == ")":
            depth -= 1
        elif t.text == "." and depth == 0:
            break
        elif t.text == "->" and depth == 0:
            is_rule = True
        j += 1
    else:
        last = p.toks[-1]
        raise ParseError("statement is missing the final '.'", last.line, last.col)

    first = p.peek()
    if first.text == "?":
        p.next()
        atoms = [p.atom(scope)]
        while p.peek().text == ",":
            p.next()
            atoms.append(p.atom(scope))
        p.expect(".")
        return ("query", frozenset(atoms))

    if is_rule:
        label = None
        if first.kind == "name" and p.peek(1) is not None and p.peek(1).text == ":":
            label = p.next().text
            p.next()
        posb: List[Atom] = []
        negs: List[frozenset] = []
        while True:
            t = p.peek()
            if t.kind == "name" and t.text == "not":
                p.next()
                if p.peek().text == "(":
                    p.next()
                    group = [p.atom(scope)]
                    while p.peek().text == ",":
                        p.next()
                        group.append(p.atom(scope))
                    p.expect(")")
                    negs.append(frozenset(group))
                else:
                    negs.append(frozenset([p.atom(scope)]))
            else:
                posb.append(p.atom(scope))
            t = p.next()
            if t.text == "->":
                break
            if t.text != ",":
                raise ParseError("expected ',' or '->', found %r" % t.text, t.line, t.col)
        head = [p.atom(scope)]
        while True:
            t = p.next()
            if t.text == ".":
                break
            if t.text != ",":
                raise ParseError("expected ',' or '.', found %r" % t.text, t.line, t.col)
            head.append(p.atom(scope))
        return ("rule", label, frozenset(posb), tuple(negs), frozenset(head))

    atoms = [p.atom(scope)]
    while True:
        t = p.next()
        if t.text == ".":
            break
        if t.text != ",":
            raise ParseError("expected ',' or '.', found %r" % t.text, t.line, t.col)
        atoms.append(p.atom(scope))
    return ("fact", frozenset(atoms))


def parse(text: str, *, allow_functions: bool = False) -> KnowledgeBase:
    """Parse and validate a knowledge base document."""
    toks = _tokenize(text)
    p = _Parser(toks, allow_functions)
    facts: set = set()
    raw_rules = []
    queries: List[frozenset] = []
    while p.peek() is not None:
        kind = _parse_statement(p, scope="@pending")
        if kind[0] == "fact":
            facts.update(_rescope(kind[1], None))
        elif kind[0] == "query":
            queries.append(_rescope(kind[1], "?%d" % len(queries)))
        else:
            raw_rules.append(kind[1:])

    rules: List[Rule] = []
    used = {label for label, *_ in raw_rules if label}
    auto = 0
    for label, posb, negs, head in raw_rules:
        if label is None:
            auto += 1
            while "r%d" % auto in used:
                auto += 1
            label = "r%d" % auto
            used.add(label)
        rules.append(
            Rule(
                label,
                _rescope(posb, label),
                _rescope(head, label),
                tuple(_rescope(nb, label) for nb in negs),
            )
        )
    kb = KnowledgeBase(frozenset(facts), rules, queries)
    _validate(kb)
    return kb


def _rescope(atoms: Iterable[Atom], scope: Optional[str]) -> frozenset:
    def re_term(t: Term) -> Term:
        if isinstance(t, Var):
            return Var(t.name, ns=scope)
        if isinstance(t, Func):
            return Func(t.symbol, tuple(re_term(a) for a in t.args))
        return t

    return frozenset(Atom(a.pred, tuple(re_term(t) for t in a.args)) for a in atoms)


def _validate(kb: KnowledgeBase) -> None:
    # one arity per predicate across the whole knowledge base
    arity: Dict[str, int] = {}

    def see(atoms):
        for a in atoms:
            if a.pred == FR_PRED:
                raise ValidationError(
                    "predicate %r is reserved for internal use" % FR_PRED)
            prev = arity.setdefault(a.pred, len(a.args))
            if prev != len(a.args):
                raise ValidationError(
                    "predicate %s used with arities %d and %d" % (a.pred, prev, len(a.args)))

    see(kb.facts)
    seen_ids = set()
    for r in kb.rules:
        if r.id in seen_ids:
            raise ValidationError("duplicate rule id %r" % r.id)
        seen_ids.add(r.id)
        see(r.body)
        see(r.head)
        bvars = vars_of(r.body)
        for nb in r.negbodies:
            see(nb)
            for v in sorted(vars_of(nb) - bvars, key=lambda x: x.name):
                raise ValidationError(
                    "rule %s is unsafe: variable %s of a negative body does not "
                    "occur in the positive body" % (r.id, v.name))
    for q in kb.queries:
        see(q)


# ---------------------------------------------------------------------------
# printing

def atom_text(a: Atom) -> str:
    return str(a)


def atoms_text(atoms: Iterable[Atom]) -> str:
    return ", ".join(str(a) for a in sorted_atoms(atoms))


def rule_text(r: Rule) -> str:
    parts = [atoms_text(r.body)] if r.body else []
    for nb in sorted(r.negbodies, key=lambda nb: atoms_text(nb)):
        atoms = sorted_atoms(nb)
        if len(atoms) == 1:
            parts.append("not %s" % atoms[0])
        else:
            parts.append("not (%s)" % atoms_text(nb))
    return "%s: %s -> %s." % (r.id, ", ".join(parts), atoms_text(r.head))


def print_kb(kb: KnowledgeBase) -> str:
    """Inverse of parse up to variable renaming."""
    lines = []
    if kb.facts:
        lines.append(atoms_text(kb.facts) + ".")
    for r in kb.rules:
        lines.append(rule_text(r))
    for q in kb.queries:
        lines.append("? %s." % atoms_text(q))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# JSON export

def term_json(t: Term):
    if isinstance(t, Const):
        return {"const": t.name}
    if isinstance(t, Var):
        return {"var": t.name}
    return {"func": t.symbol, "args": [term_json(a) for a in t.args]}


def atom_json(a: Atom):
    return {"pred": a.pred, "args": [term_json(t) for t in a.args]}


def atoms_json(atoms: Iterable[Atom]):
    return [atom_json(a) for a in sorted_atoms(atoms)]


def kb_json(kb: KnowledgeBase):
    return {
        "facts": atoms_json(kb.facts),
        "rules": [
            {
                "id": r.id,
                "body": {
                    "positive": atoms_json(r.body),
                    "negative": [atoms_json(nb) for nb in r.negbodies],
                },
                "head": atoms_json(r.head),
            }
            for r in kb.rules
        ],
        "queries": [atoms_json(q) for q in kb.queries],
    }


def parse_atoms(text: str, *, scope: Optional[str] = None,
                allow_functions: bool = True) -> frozenset:
    """Parse a comma-separated atom list (handy for queries and tests)."""
    text = text.strip().rstrip(".")
    if not text:
        return frozenset()
    toks = _tokenize(text + " .")
    p = _Parser(toks, allow_functions)
    atoms = [p.atom(scope)]
    while p.peek() is not None and p.peek().text == ",":
        p.next()
        atoms.append(p.atom(scope))
    p.expect(".")
    return frozenset(atoms)
