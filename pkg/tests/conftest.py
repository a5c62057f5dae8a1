"""Shared fixtures and brute-force oracles for the test suite."""
import itertools
import pathlib
import random

import pytest

from exrules import parse
from exrules.terms import (
    Atom,
    Const,
    Var,
    atom_key,
    sorted_atoms,
    subst_atoms,
    terms_of,
    vars_of,
)

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def load_kb(name):
    return parse((FIXTURES / (name + ".kbr")).read_text())


@pytest.fixture
def kb():
    return load_kb


# ---------------------------------------------------------------------------
# oracles

def brute_homomorphisms(source, target, seed=None):
    """Exhaustive assignment enumeration, the independent oracle."""
    source = frozenset(source)
    target = frozenset(target)
    vs = sorted(vars_of(source), key=lambda v: (v.name, v.ns or ""))
    pool = sorted(terms_of(target), key=str)
    out = []
    seed = dict(seed) if seed else {}
    free = [v for v in vs if v not in seed]
    for combo in itertools.product(pool, repeat=len(free)):
        sub = dict(seed)
        sub.update(zip(free, combo))
        if subst_atoms(sub, source) <= target:
            out.append(sub)
    return out


def brute_core_size(atoms):
    """Size of the smallest subset that the atomset retracts onto."""
    atoms = frozenset(atoms)
    items = list(atoms)
    for size in range(len(items) + 1):
        for combo in itertools.combinations(items, size):
            sub = frozenset(combo)
            if brute_homomorphisms(atoms, sub):
                return size
    return len(items)


def gl_stable_models(facts, rules):
    """Gelfond-Lifschitz stable models of a ground program, by enumeration.

    A rule fires under the reduct for candidate M iff none of its negative
    bodies is fully contained in M.
    """
    base = set(facts)
    for r in rules:
        base |= set(r.body) | set(r.head)
        for nb in r.negbodies:
            base |= set(nb)
    base = sorted(base, key=atom_key)
    models = []
    for bits in itertools.product((0, 1), repeat=len(base)):
        m = frozenset(a for a, b in zip(base, bits) if b)
        reduct = [r for r in rules if all(not (nb <= m) for nb in r.negbodies)]
        lfp = frozenset(facts)
        while True:
            new = set(lfp)
            for r in reduct:
                if r.body <= lfp:
                    new |= set(r.head)
            new = frozenset(new)
            if new == lfp:
                break
            lfp = new
        if lfp == m:
            models.append(m)
    return models


# ---------------------------------------------------------------------------
# random generators (all seeded by the caller)

PREDS = (("p", 2), ("q", 1), ("r", 2), ("s", 1))


def random_atom(rng, var_pool, const_pool, pred_pool=PREDS):
    pred, arity = rng.choice(pred_pool)
    args = tuple(
        rng.choice(var_pool) if rng.random() < 0.8 else Const(rng.choice(const_pool))
        for _ in range(arity))
    return Atom(pred, args)


def random_rule(rng, rid, max_atoms=3):
    scope = rid
    var_pool = [Var(n, ns=scope) for n in ("X", "Y", "Z", "W")]
    consts = ["a", "b"]
    body = frozenset(random_atom(rng, var_pool, consts)
                     for _ in range(rng.randint(1, max_atoms)))
    head = frozenset(random_atom(rng, var_pool, consts)
                     for _ in range(rng.randint(1, max_atoms)))
    from exrules import Rule
    return Rule(rid, body, head)


def random_rule_set(rng, max_rules=4, max_atoms=3):
    n = rng.randint(1, max_rules)
    return [random_rule(rng, "g%d" % i, max_atoms) for i in range(1, n + 1)]


def random_facts(rng, n=3):
    consts = ["a", "b", "c"]
    out = set()
    for _ in range(n):
        pred, arity = rng.choice(PREDS)
        out.add(Atom(pred, tuple(Const(rng.choice(consts)) for _ in range(arity))))
    return frozenset(out)


def random_ground_program(rng, max_atoms=6, max_rules=5):
    """Ground NME program over a tiny herbrand base."""
    from exrules import Rule
    base = [Atom(p, (Const("a"),)) for p in ("p", "q", "r", "s", "t", "u")][:max_atoms]
    facts = frozenset(rng.sample(base, rng.randint(0, 2)))
    rules = []
    for i in range(rng.randint(1, max_rules)):
        body = frozenset(rng.sample(base, rng.randint(0, 2)))
        negs = []
        for _ in range(rng.randint(0, 2)):
            negs.append(frozenset(rng.sample(base, rng.randint(1, 2))))
        head = frozenset(rng.sample(base, rng.randint(1, 2)))
        rules.append(Rule("n%d" % (i + 1), body, head, tuple(negs)))
    return facts, rules


def canonical_atoms(atoms):
    """Structure of an atomset with variables numbered by first occurrence."""
    names = {}

    def canon_term(t):
        if isinstance(t, Var):
            if t not in names:
                names[t] = "v%d" % len(names)
            return names[t]
        return str(t)

    return tuple(sorted(
        (a.pred, tuple(canon_term(t) for t in a.args)) for a in sorted_atoms(atoms)))
