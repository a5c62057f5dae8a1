"""Homomorphism search, entailment and core computation.

The search is plain backtracking over the source atoms, most-constrained
atom first, with forward checking on already-bound variables.  Candidate
atoms are always visited in the deterministic atom order, so every "first
homomorphism" choice made by the engines is replayable.
"""
from __future__ import annotations

from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple

from .terms import (
    Atom,
    Const,
    Func,
    Substitution,
    Term,
    Var,
    atom_key,
    compose,
    mint_ordinal,
    sorted_atoms,
    subst_atoms,
    term_key,
    vars_of,
)


def match_term(s: Term, t: Term, binding: Substitution) -> Optional[Substitution]:
    """Extend binding so that binding(s) == t, or return None."""
    if isinstance(s, Const):
        return binding if s == t else None
    if isinstance(s, Var):
        cur = binding.get(s)
        if cur is None:
            b2 = dict(binding)
            b2[s] = t
            return b2
        return binding if cur == t else None
    if not isinstance(t, Func) or t.symbol != s.symbol or len(t.args) != len(s.args):
        return None
    for sa, ta in zip(s.args, t.args):
        binding = match_term(sa, ta, binding)
        if binding is None:
            return None
    return binding


def match_atom(s: Atom, t: Atom, binding: Substitution) -> Optional[Substitution]:
    if s.pred != t.pred or len(s.args) != len(t.args):
        return None
    for sa, ta in zip(s.args, t.args):
        binding = match_term(sa, ta, binding)
        if binding is None:
            return None
    return binding


def homomorphisms(
    source: Iterable[Atom],
    target: Iterable[Atom],
    seed: Optional[Mapping[Var, Term]] = None,
) -> Iterator[Substitution]:
    """All substitutions s extending seed with s(source) <= target.

    Exhaustive and duplicate-free; yields nothing when no homomorphism
    exists.  The seed must bind variables of the source to terms of the
    target.
    """
    atoms = sorted_atoms(source)
    by_pred: Dict[tuple, list] = {}
    for t in set(target):
        by_pred.setdefault((t.pred, len(t.args)), []).append(t)
    for k in by_pred:
        by_pred[k].sort(key=atom_key)

    def candidates(a: Atom, binding: Substitution):
        out = []
        for t in by_pred.get((a.pred, len(a.args)), ()):
            ext = match_atom(a, t, binding)
            if ext is not None:
                out.append(ext)
        return out

    def search(remaining, binding):
        if not remaining:
            yield dict(binding)
            return
        best_i, best = 0, None
        for i, a in enumerate(remaining):
            cand = candidates(a, binding)
            if best is None or len(cand) < len(best):
                best_i, best = i, cand
            if not cand:
                return
        rest = remaining[:best_i] + remaining[best_i + 1:]
        for ext in best:
            yield from search(rest, ext)

    yield from search(atoms, dict(seed) if seed else {})


def entails(f: Iterable[Atom], q: Iterable[Atom]) -> bool:
    """F entails Q iff some homomorphism maps Q into F."""
    return next(homomorphisms(q, f), None) is not None


def equivalent(a: Iterable[Atom], b: Iterable[Atom]) -> bool:
    return entails(a, b) and entails(b, a)


def _retraction(atoms: frozenset, removed: Atom) -> Optional[Substitution]:
    """Endomorphism of atoms whose image avoids ``removed``.

    Prefers to keep every other atom fixed: each source atom tries itself
    as the first candidate.  Returns None when no such endomorphism exists.
    """
    target = set(atoms) - {removed}
    by_pred: Dict[tuple, list] = {}
    for t in target:
        by_pred.setdefault((t.pred, len(t.args)), []).append(t)
    for k in by_pred:
        by_pred[k].sort(key=atom_key)

    ordered = [removed] + [a for a in sorted_atoms(atoms) if a != removed]

    def search(i, binding):
        if i == len(ordered):
            return binding
        a = ordered[i]
        cand = by_pred.get((a.pred, len(a.args)), ())
        if a in target:
            cand = [a] + [t for t in cand if t != a]
        for t in cand:
            ext = match_atom(a, t, binding)
            if ext is not None:
                res = search(i + 1, ext)
                if res is not None:
                    return res
        return None

    return search(0, {})


def _removal_key(a: Atom):
    newest = max((mint_ordinal(v) for v in vars_of(a)), default=-1)
    return (-newest, atom_key(a))


def core_with_fold(atoms: Iterable[Atom]) -> Tuple[frozenset, Substitution]:
    """Core of an atomset together with the folding endomorphism.

    Iterated folding: repeatedly look for an endomorphism whose image drops
    one atom, apply it, restart.  Atoms built on the newest engine-minted
    variables are tried first so that folding prefers to erase freshly added
    redundancy rather than rename surviving atoms.
    """
    current = frozenset(atoms)
    total: Substitution = {}
    while True:
        sigma = None
        for a in sorted(current, key=_removal_key):
            sigma = _retraction(current, a)
            if sigma is not None:
                break
        if sigma is None:
            return current, total
        current = subst_atoms(sigma, current)
        total = compose(sigma, total) if total else dict(sigma)


def core(atoms: Iterable[Atom]) -> frozenset:
    """Equivalent sub-atomset with no endomorphism into a strict subset."""
    return core_with_fold(atoms)[0]
