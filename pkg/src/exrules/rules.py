"""Existential rules, rule application and skolemization.

A single Rule class covers both plain existential rules and rules with
nonmonotonic negation: the negative bodies default to the empty tuple, and
``pos`` projects them away.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Optional, Tuple

from .homomorphism import homomorphisms
from .terms import (
    Atom,
    FreshVars,
    Func,
    Substitution,
    Term,
    Var,
    sorted_atoms,
    subst_atoms,
    vars_of,
)

#: reserved predicate used by agglomerated rules; rejected in user input
FR_PRED = "fr"

_session_fresh = FreshVars()


@dataclass(frozen=True)
class Rule:
    """body -> head, with optional negated conjunctions in the body.

    ``body`` is the positive body.  Frontier and existential variables are
    derived from the positive body and the head.
    """

    id: str
    body: frozenset
    head: frozenset
    negbodies: Tuple[frozenset, ...] = ()

    @property
    def frontier(self) -> frozenset:
        return vars_of(self.body) & vars_of(self.head)

    @property
    def existentials(self) -> frozenset:
        return vars_of(self.head) - vars_of(self.body)

    @property
    def vars(self) -> frozenset:
        vs = vars_of(self.body) | vars_of(self.head)
        for nb in self.negbodies:
            vs |= vars_of(nb)
        return vs

    def existential_order(self) -> list:
        """Existentials in order of first occurrence in the sorted head."""
        seen, out = set(), []
        ex = self.existentials
        for a in sorted_atoms(self.head):
            for t in a.args:
                if isinstance(t, Var) and t in ex and t not in seen:
                    seen.add(t)
                    out.append(t)
        return out

    def frontier_order(self) -> list:
        """Frontier variables in order of first occurrence in the sorted body."""
        seen, out = set(), []
        fr = self.frontier
        for a in sorted_atoms(self.body):
            for t in a.args:
                if isinstance(t, Var) and t in fr and t not in seen:
                    seen.add(t)
                    out.append(t)
        return out

    def __str__(self) -> str:
        parts = [str(a) for a in sorted_atoms(self.body)]
        for nb in self.negbodies:
            atoms = sorted_atoms(nb)
            if len(atoms) == 1:
                parts.append("not %s" % atoms[0])
            else:
                parts.append("not (%s)" % ", ".join(str(a) for a in atoms))
        return "%s: %s -> %s" % (
            self.id,
            ", ".join(parts),
            ", ".join(str(a) for a in sorted_atoms(self.head)),
        )


def pos(rule: Rule) -> Rule:
    """The existential rule obtained by dropping the negative bodies."""
    if not rule.negbodies:
        return rule
    return replace(rule, negbodies=())


def is_self_blocking(rule: Rule) -> bool:
    """A rule carrying one of its own negative bodies in its positive part.

    Such a rule can never fire soundly.  Purely syntactic subset test.
    """
    scope = rule.body | rule.head
    return any(nb <= scope for nb in rule.negbodies)


def rename_apart(rule: Rule, tag: str) -> Tuple[Rule, Dict[Var, Var]]:
    """Copy of the rule over fresh variables; returns the renaming map."""
    vmap = {v: Var(v.name, ns="%s^%s" % (v.ns or "", tag)) for v in rule.vars}
    return (
        Rule(
            rule.id,
            subst_atoms(vmap, rule.body),
            subst_atoms(vmap, rule.head),
            tuple(subst_atoms(vmap, nb) for nb in rule.negbodies),
        ),
        vmap,
    )


def apply(facts: frozenset, rule: Rule, trigger: Substitution,
          fresh: Optional[FreshVars] = None) -> frozenset:
    """facts plus trigger(safe(head)); the input atomset is not mutated.

    ``safe`` renames every existential variable of the head to a globally
    fresh variable.  Rejects triggers that are not homomorphisms of the full
    positive body.
    """
    if not subst_atoms(trigger, rule.body) <= facts:
        raise ValueError("trigger is not a homomorphism of the body of %s" % rule.id)
    fresh = fresh or _session_fresh
    sigma = dict(trigger)
    for z in rule.existential_order():
        sigma[z] = fresh.mint(z.name)
    return frozenset(facts) | subst_atoms(sigma, rule.head)


def is_useful(trigger: Substitution, rule: Rule, facts: frozenset) -> bool:
    """True iff the trigger cannot be extended to map body+head into facts."""
    seed = {v: t for v, t in trigger.items() if v in vars_of(rule.head)}
    return next(homomorphisms(rule.head, facts, seed), None) is None


def skolemize(rule: Rule) -> Rule:
    """Replace each existential y by the functional term f_<rule>_<y>(frontier).

    The frontier argument vector follows first occurrence in the body; rules
    without existential variables are returned unchanged.
    """
    ex = rule.existential_order()
    if not ex:
        return rule
    frontier = tuple(rule.frontier_order())
    smap: Substitution = {
        z: Func("f_%s_%s" % (rule.id, z.name), frontier) for z in ex
    }
    return replace(rule, head=subst_atoms(smap, rule.head))


def skolemize_facts(facts: Iterable[Atom], tag: str = "facts") -> frozenset:
    """Replace fact variables (labelled nulls) by 0-ary skolem terms."""
    vs = sorted(vars_of(facts), key=lambda v: (v.name, v.ns or ""))
    smap: Substitution = {v: Func("f_%s_%s" % (tag, v.name)) for v in vs}
    return subst_atoms(smap, facts)
