"""First-order terms, atoms and substitutions.

Constants and variables live in disjoint syntactic namespaces (lowercase vs
uppercase initial letter in the text format).  Functional terms are
engine-minted skolem terms; user input never contains them.

A variable carries an optional namespace tag ``ns`` so that variables of
distinct rules, of the shared fact scope and of engine-minted fresh variables
never collide even when their printable names do.  Printing always drops the
tag; round-tripping through the text format is therefore only guaranteed up
to variable renaming, which is all the callers need.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import count
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Var:
    name: str
    ns: Optional[str] = None

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Func:
    """Skolem term.  The symbol encodes the rule id and existential name."""

    symbol: str
    args: Tuple["Term", ...] = ()

    def __str__(self) -> str:
        return "%s(%s)" % (self.symbol, ",".join(str(a) for a in self.args))


Term = Union[Const, Var, Func]

#: A substitution maps variables to terms; application is capture-free.
Substitution = Dict[Var, Term]


@dataclass(frozen=True)
class Atom:
    pred: str
    args: Tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        return "%s(%s)" % (self.pred, ",".join(str(a) for a in self.args))


#: Atomsets are plain frozensets of atoms; membership is structural equality.
AtomSet = frozenset


def term_key(t: Term):
    """Total deterministic order on terms (used for all tie-breaking)."""
    if isinstance(t, Const):
        return (0, t.name)
    if isinstance(t, Var):
        return (1, t.name, t.ns or "")
    return (2, t.symbol, tuple(term_key(a) for a in t.args))


def atom_key(a: Atom):
    return (a.pred, len(a.args), tuple(term_key(t) for t in a.args))


def sorted_atoms(atoms: Iterable[Atom]) -> list:
    return sorted(atoms, key=atom_key)


def atoms_str(atoms: Iterable[Atom]) -> str:
    return "{%s}" % ", ".join(str(a) for a in sorted_atoms(atoms))


def terms_of(x) -> frozenset:
    """All terms occurring in an atom or atomset (argument level)."""
    if isinstance(x, Atom):
        return frozenset(x.args)
    out = set()
    for a in x:
        out.update(a.args)
    return frozenset(out)


def vars_of(x) -> frozenset:
    return frozenset(t for t in terms_of(x) if isinstance(t, Var))


def consts_of(x) -> frozenset:
    return frozenset(t for t in terms_of(x) if isinstance(t, Const))


def is_ground(x) -> bool:
    return not vars_of(x)


class FreshVars:
    """Monotone fresh-variable minting for one engine session.

    Fresh variables keep the base name of the variable they instantiate and
    get a counter suffix, so traces print the way derivations are usually
    written by hand (y0, y1, ...).  Identity is carried by the reserved
    namespace tag, never by the printable name.
    """

    def __init__(self, start: int = 0):
        self._counter = count(start)

    def mint(self, base: str = "Z") -> Var:
        n = next(self._counter)
        return Var("%s%d" % (base, n), ns="!%d" % n)


def mint_ordinal(v: Var) -> int:
    """Mint counter of an engine-minted variable, -1 for user variables."""
    if v.ns and v.ns.startswith("!"):
        return int(v.ns[1:])
    return -1


# ---------------------------------------------------------------------------
# substitutions

def subst_term(s: Mapping[Var, Term], t: Term) -> Term:
    if isinstance(t, Var):
        return s.get(t, t)
    if isinstance(t, Func):
        return Func(t.symbol, tuple(subst_term(s, a) for a in t.args))
    return t


def subst_atom(s: Mapping[Var, Term], a: Atom) -> Atom:
    return Atom(a.pred, tuple(subst_term(s, t) for t in a.args))


def subst_atoms(s: Mapping[Var, Term], atoms: Iterable[Atom]) -> frozenset:
    return frozenset(subst_atom(s, a) for a in atoms)


def compose(outer: Mapping[Var, Term], inner: Mapping[Var, Term]) -> Substitution:
    """Substitution composition: (outer . inner)(A) == outer(inner(A))."""
    out: Substitution = {v: subst_term(outer, t) for v, t in inner.items()}
    for v, t in outer.items():
        out.setdefault(v, t)
    return out


def apply_term_map(m: Mapping[Term, Term], atoms: Iterable[Atom]) -> frozenset:
    """Like subst_atoms but keyed on whole terms (constants included)."""
    def one(t: Term) -> Term:
        return m.get(t, t)
    return frozenset(Atom(a.pred, tuple(one(t) for t in a.args)) for a in atoms)


# ---------------------------------------------------------------------------
# freezing and null handling

def freeze(atoms: Iterable[Atom]) -> Tuple[frozenset, Dict[Var, Const]]:
    """Replace every variable by a reserved constant, bijectively.

    The "~" prefix keeps frozen constants outside the user namespace.
    Idempotent on ground input; the variable-to-constant map is returned
    alongside the frozen atomset.
    """
    vs = sorted(vars_of(atoms), key=term_key)
    fmap = {v: Const("~%d.%s" % (i, v.name)) for i, v in enumerate(vs)}
    return subst_atoms(fmap, atoms), fmap


def as_nulls(atoms: Iterable[Atom]) -> frozenset:
    """Replace each distinct functional argument term by one fresh variable.

    Turns a skolem-chase result into the isomorphic labelled-null form, so
    results of different chase variants can be compared homomorphically.
    """
    memo: Dict[Term, Var] = {}

    def null(t: Term) -> Term:
        if not isinstance(t, Func):
            return t
        if t not in memo:
            memo[t] = Var("N%d" % len(memo), ns="!null%d" % len(memo))
        return memo[t]

    return frozenset(Atom(a.pred, tuple(null(t) for t in a.args)) for a in atoms)


def isomorphic(a: Iterable[Atom], b: Iterable[Atom], *, null_funcs: bool = False) -> bool:
    """True iff b is a bijective renaming of a.

    Constants must map to themselves.  Variables map bijectively onto
    variables; with ``null_funcs`` functional terms are treated as opaque
    nulls as well (used for the fresh-variable/skolem-term correspondence).
    """
    a = sorted_atoms(a)
    b_set = set(b)
    if len(a) != len(b_set):
        return False

    def renameable(t: Term) -> bool:
        return isinstance(t, Var) or (null_funcs and isinstance(t, Func))

    def match(i, fwd, bwd, used):
        if i == len(a):
            return True
        src = a[i]
        for tgt in b_set:
            if tgt in used or tgt.pred != src.pred or len(tgt.args) != len(src.args):
                continue
            f2, b2 = dict(fwd), dict(bwd)
            ok = True
            for s, t in zip(src.args, tgt.args):
                if renameable(s):
                    if not renameable(t):
                        ok = False
                        break
                    if s in f2 and f2[s] != t:
                        ok = False
                        break
                    if t in b2 and b2[t] != s:
                        ok = False
                        break
                    f2[s] = t
                    b2[t] = s
                elif s != t:
                    ok = False
                    break
            if ok and match(i + 1, f2, b2, used | {tgt}):
                return True
        return False

    return match(0, {}, {}, frozenset())
