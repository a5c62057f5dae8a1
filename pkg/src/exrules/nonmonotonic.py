"""Stable sets for existential rules with nonmonotonic negation.

The search explores the chase tree: nodes carry the derived atomset (in),
the forbidden atomsets (out) and the must-be-proven obligations (mbt).  The
first applicable unblocked trigger that produces something new spawns one
positive child (the rule fires; its instantiated negative bodies become
forbidden) and one negative child per negative body (the rule is refused;
that body must eventually be proven).  A branch yields a stable set when it
ends soundly with every obligation inside the final atomset.

Only the skolem and the core criterion are admitted: the other chase
variants can produce non-equivalent stable sets from equivalent knowledge
bases, so they are rejected with a diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .acyclicity import AnalysisReport, analyze
from .chase import Criterion, _frozen, _sorted_homs
from .homomorphism import core, core_with_fold
from .rules import (
    Rule,
    apply,
    is_self_blocking,
    pos,
    skolemize,
    skolemize_facts,
)
from .terms import (
    Atom,
    FreshVars,
    Substitution,
    isomorphic,
    subst_atoms,
    subst_term,
)
from .unification import Unifier, depends

__all__ = [
    "TreeBudget", "TreeNode", "StableSet", "StableSearchResult",
    "pos", "self_blocking", "nm_depends", "expand", "stable_sets", "nm_analyze",
]

# spec ops housed here
self_blocking = is_self_blocking


def nm_depends(producer: Rule, consumer: Rule) -> List[Unifier]:
    """Positive reliance: dependency witnessed by a non-self-blocking unifier."""
    return depends(producer, consumer, negation_aware=True)


@dataclass
class TreeBudget:
    max_depth: int = 64
    max_nodes: int = 5000


@dataclass(frozen=True)
class TreeNode:
    in_: frozenset
    out: Tuple[frozenset, ...]
    mbt: Tuple[frozenset, ...]
    refused: frozenset  # (rule id, frozen trigger) decided blocked on this branch
    depth: int
    steps: Tuple[str, ...]

    def unsound(self) -> bool:
        """A forbidden atomset has been inferred or has to be proven."""
        for o in self.out:
            if o <= self.in_:
                return True
            for m in self.mbt:
                if o <= m:
                    return True
        return False


def _transform(sigma: Substitution, sets: Iterable[frozenset]) -> Tuple[frozenset, ...]:
    if not sigma:
        return tuple(sets)
    return tuple(subst_atoms(sigma, s) for s in sets)


def _transform_refused(sigma: Substitution, refused: frozenset) -> frozenset:
    if not sigma:
        return refused
    return frozenset(
        (rid, frozenset((v, subst_term(sigma, t)) for v, t in items))
        for rid, items in refused)


def expand(node: TreeNode, rules: Sequence[Rule], criterion: Criterion,
           fresh: Optional[FreshVars] = None) -> List[TreeNode]:
    """Children for the next qualifying trigger, positive child first.

    Empty when no trigger qualifies, in which case the branch is complete:
    every remaining trigger is definitively blocked, refused earlier on the
    branch, or productive of nothing new.
    """
    fresh = fresh or FreshVars()
    for rule in rules:
        for pi in _sorted_homs(rule.body, node.in_):
            key = (rule.id, _frozen(pi))
            if key in node.refused:
                continue
            inst_negs = [subst_atoms(pi, nb) for nb in rule.negbodies]
            if any(nb <= node.in_ for nb in inst_negs):
                continue  # definitively blocked, no branching needed
            applied = apply(node.in_, pos(rule), pi, fresh)
            if criterion is Criterion.CORE:
                new_in, sigma = core_with_fold(applied)
            else:
                new_in, sigma = applied, {}
            if new_in <= node.in_:
                continue  # produces nothing new
            children = [TreeNode(
                new_in,
                _transform(sigma, node.out) + _transform(sigma, inst_negs),
                _transform(sigma, node.mbt),
                _transform_refused(sigma, node.refused),
                node.depth + 1,
                node.steps + ("%s+" % rule.id,),
            )]
            for i, nb in enumerate(inst_negs):
                children.append(TreeNode(
                    node.in_, node.out, node.mbt + (nb,),
                    node.refused | {key},
                    node.depth + 1,
                    node.steps + ("%s-not%d" % (rule.id, i + 1),),
                ))
            return children
    return []


def _unprovable(node: TreeNode, head_preds: frozenset) -> bool:
    """Predicate-level under-approximation of unprovable branches.

    An obligation atom that is absent and whose predicate no rule head can
    ever produce will never be proven; the branch can be discarded early.
    """
    for m in node.mbt:
        for a in m:
            if a not in node.in_ and a.pred not in head_preds:
                return True
    return False


@dataclass(frozen=True)
class StableSet:
    atoms: frozenset
    criterion: Criterion
    branch: Tuple[str, ...]


@dataclass
class StableSearchResult:
    stable_sets: List[StableSet]
    exhaustive: bool
    explored: int


def stable_sets(facts: Iterable[Atom], rules: Sequence[Rule],
                criterion: Criterion = Criterion.SKOLEM,
                budget: Optional[TreeBudget] = None) -> StableSearchResult:
    """All stable sets found within budget, flagged exhaustive when the
    whole tree was finite.

    In skolem mode facts and rules are skolemized up front (fact nulls
    become 0-ary skolem terms); in core mode every application is followed
    by a fold, which also rewrites the forbidden and must-be-proven sets.
    """
    if criterion not in (Criterion.SKOLEM, Criterion.CORE):
        raise ValueError(
            "stable sets are only defined for the skolem and core criteria: "
            "the %s chase can produce non-equivalent stable sets from "
            "equivalent knowledge bases" % criterion)
    budget = budget or TreeBudget()
    fresh = FreshVars()
    if criterion is Criterion.SKOLEM:
        root_in = skolemize_facts(facts)
        prepped = [skolemize(r) for r in rules]
    else:
        root_in = core(facts)
        prepped = list(rules)
    head_preds = frozenset(a.pred for r in prepped for a in r.head)

    root = TreeNode(frozenset(root_in), (), (), frozenset(), 0, ())
    stack = [root]
    found: List[StableSet] = []
    explored = 0
    exhaustive = True
    while stack:
        node = stack.pop()
        if explored >= budget.max_nodes:
            exhaustive = False
            break
        explored += 1
        if node.unsound() or _unprovable(node, head_preds):
            continue
        children = expand(node, prepped, criterion, fresh)
        if not children:
            if all(m <= node.in_ for m in node.mbt):
                found.append(StableSet(node.in_, criterion, node.steps))
            continue
        if node.depth + 1 > budget.max_depth:
            exhaustive = False
            continue
        stack.extend(reversed(children))

    uniq: List[StableSet] = []
    for s in found:
        if not any(isomorphic(s.atoms, u.atoms) for u in uniq):
            uniq.append(s)
    return StableSearchResult(uniq, exhaustive, explored)


def nm_analyze(rules: Sequence[Rule], *, cycle_cap: int = 10000,
               seq_cap: int = 256) -> AnalysisReport:
    """Negation-aware termination analysis of the chase tree.

    Self-blocking rules can never fire and are dropped; the remaining rules
    are analyzed positively but with the negation-aware dependency relation
    and unifier graph (self-blocking unifiers and compatible cycles are
    discounted).  Any satisfied property certifies that both the skolem and
    the core chase tree halt on every fact base.
    """
    kept = [r for r in rules if not is_self_blocking(r)]
    dropped = tuple(r.id for r in rules if is_self_blocking(r))
    report = analyze(kept, negation_aware=True,
                     cycle_cap=cycle_cap, seq_cap=seq_cap)
    report.dropped_rules = dropped
    any_sat = any(v.satisfied for v in report.verdicts)
    verdict = "guaranteed" if any_sat else "not-guaranteed"
    report.stable = {"skolem-chase-tree": verdict, "core-chase-tree": verdict}
    return report
