"""Breadth-first chase under the five redundancy criteria.

Each round collects all triggers against the round-start atomset, then
applies them sequentially in deterministic order (rule order, then
homomorphism order) with per-criterion skipping.  The run terminates when a
full round leaves the produced atomset unchanged; otherwise the budget is
exhausted and the partial trace is returned.

Termination under the restricted criterion is order-relative; the
deterministic trigger order makes the behaviour reproducible.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .homomorphism import entails, core_with_fold, homomorphisms
from .parser import atom_json, term_json
from .rules import Rule, apply, is_useful, skolemize
from .terms import (
    Atom,
    FreshVars,
    Substitution,
    sorted_atoms,
    subst_term,
    term_key,
)


class Criterion(enum.Enum):
    OBLIVIOUS = "oblivious"
    FRONTIER = "frontier"
    SKOLEM = "skolem"
    RESTRICTED = "restricted"
    CORE = "core"

    @property
    def local(self) -> bool:
        """All variants except the core chase only ever grow the atomset."""
        return self is not Criterion.CORE

    def __str__(self) -> str:
        return self.value


FOLD_STEP = "(core)"


@dataclass(frozen=True)
class DerivationStep:
    round: int
    rule: str
    trigger: Dict
    added: frozenset
    simplification: Dict
    skipped: bool

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "rule": self.rule,
            "trigger": {str(v): term_json(t) for v, t in sorted(
                self.trigger.items(), key=lambda kv: term_key(kv[0]))},
            "added": [atom_json(a) for a in sorted_atoms(self.added)],
            "simplification": {str(v): term_json(t) for v, t in sorted(
                self.simplification.items(), key=lambda kv: term_key(kv[0]))},
            "skipped": self.skipped,
        }


@dataclass
class Budget:
    max_rounds: int = 64
    max_steps: int = 10000


@dataclass
class ChaseResult:
    status: str  # "terminated" | "budget-exhausted"
    produced: frozenset
    trace: Tuple[DerivationStep, ...]
    rounds: int

    @property
    def terminated(self) -> bool:
        return self.status == "terminated"


def _frozen(trigger: Substitution) -> frozenset:
    return frozenset(trigger.items())


def _order_key(trigger: Substitution) -> tuple:
    return tuple(sorted((term_key(v), term_key(t)) for v, t in trigger.items()))


def _sorted_homs(body: frozenset, target: frozenset) -> List[Substitution]:
    homs = list(homomorphisms(body, target))
    homs.sort(key=_order_key)
    return homs


class ChaseEngine:
    """One derivation; single-threaded, owns its fresh-variable counter."""

    def __init__(self, facts: Iterable[Atom], rules: Iterable[Rule],
                 criterion: Criterion = Criterion.SKOLEM,
                 budget: Optional[Budget] = None):
        for r in rules:
            if r.negbodies:
                raise ValueError(
                    "the positive chase only accepts rules without negation "
                    "(rule %s); use the stable-set engine instead" % r.id)
        self.criterion = criterion
        self.rules = [skolemize(r) if criterion is Criterion.SKOLEM else r
                      for r in rules]
        self.budget = budget or Budget()
        self.fresh = FreshVars()
        self.current = frozenset(facts)
        self.trace: List[DerivationStep] = []
        self.rounds = 0
        self.steps = 0
        self.done = False
        self.exhausted = False
        self._seen: set = set()           # (rule id, frozen trigger) processed
        self._seen_frontier: set = set()  # (rule id, frozen frontier part)

    def round(self) -> bool:
        """Run one round; returns True when the produced atomset changed."""
        if self.done or self.exhausted:
            return False
        if self.rounds >= self.budget.max_rounds:
            self.exhausted = True
            return False
        self.rounds += 1
        base = self.current
        triggers = []
        for rule in self.rules:
            for pi in _sorted_homs(rule.body, base):
                if (rule.id, _frozen(pi)) in self._seen:
                    continue
                triggers.append((rule, pi))

        for rule, pi in triggers:
            if self.steps >= self.budget.max_steps:
                self.exhausted = True
                break
            self._seen.add((rule.id, _frozen(pi)))
            if self.criterion is Criterion.FRONTIER:
                fkey = (rule.id, _frozen(
                    {v: t for v, t in pi.items() if v in rule.frontier}))
                if fkey in self._seen_frontier:
                    self._record(rule.id, pi, frozenset(), {}, skipped=True)
                    continue
                self._seen_frontier.add(fkey)
            elif self.criterion is Criterion.RESTRICTED:
                if not is_useful(pi, rule, self.current):
                    self._record(rule.id, pi, frozenset(), {}, skipped=True)
                    continue
            new = apply(self.current, rule, pi, self.fresh)
            self._record(rule.id, pi, new - self.current, {}, skipped=False)
            self.current = new
            self.steps += 1

        if self.criterion is Criterion.CORE:
            folded, sigma = core_with_fold(self.current)
            if folded != self.current:
                self._record(FOLD_STEP, {}, frozenset(), sigma, skipped=False)
                self.current = folded
                self._seen = {
                    (rid, frozenset((v, subst_term(sigma, t)) for v, t in items))
                    for rid, items in self._seen
                }

        changed = self.current != base
        if not changed and not self.exhausted:
            self.done = True
        return changed

    def _record(self, rule_id, trigger, added, simplification, skipped):
        self.trace.append(DerivationStep(
            self.rounds, rule_id, dict(trigger), frozenset(added),
            dict(simplification), skipped))

    def run(self) -> ChaseResult:
        while not self.done and not self.exhausted:
            self.round()
        status = "terminated" if self.done else "budget-exhausted"
        return ChaseResult(status, self.current, tuple(self.trace), self.rounds)


def run(facts: Iterable[Atom], rules: Iterable[Rule],
        criterion: Criterion = Criterion.SKOLEM,
        budget: Optional[Budget] = None) -> ChaseResult:
    """Saturate facts under rules with the given criterion and budget."""
    return ChaseEngine(facts, rules, criterion, budget).run()


@dataclass
class AnswerResult:
    answer: str  # "yes" | "no" | "no-within-budget"
    rounds: int

    @property
    def definitive(self) -> bool:
        return self.answer in ("yes", "no")


def answer(facts: Iterable[Atom], rules: Iterable[Rule], query: Iterable[Atom],
           criterion: Criterion = Criterion.SKOLEM,
           budget: Optional[Budget] = None) -> AnswerResult:
    """Entailment check by saturation, probing the query after every round.

    A terminated chase is a universal model, so failure to entail after
    termination is a definitive no; running out of budget is not.
    """
    eng = ChaseEngine(facts, rules, criterion, budget)
    if entails(eng.current, query):
        return AnswerResult("yes", 0)
    while not eng.done and not eng.exhausted:
        eng.round()
        if entails(eng.current, query):
            return AnswerResult("yes", eng.rounds)
    if eng.done:
        return AnswerResult("no", eng.rounds)
    return AnswerResult("no-within-budget", eng.rounds)


def trace_jsonl(result: ChaseResult) -> str:
    return "\n".join(json.dumps(s.to_json(), sort_keys=True) for s in result.trace)
