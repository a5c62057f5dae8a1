"""Piece-unifiers, rule dependency, agglomeration and unifier sequences.

A unifier of a rule body B2 with a rule head H1 is kept as a partition of
the terms of the unified parts: every class holds terms forced equal, at
most one of them a constant.  Composition of unifiers along a sequence is
then plain union-find merging; no term rewriting is needed.

Admissibility of a piece-unifier: a class containing an existential
variable of the unified head part must contain no constant, no other
variable of the producer's head, and no separating variable of the unified
body part.  This is slightly stronger than requiring only the separating
condition, and it is the reading under which the worked examples of the
dependency analysis come out right (the full-cover unifier that merges an
existential with a head frontier variable is rejected).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .homomorphism import homomorphisms
from .rules import FR_PRED, Rule, apply, is_self_blocking, is_useful, pos, rename_apart
from .terms import (
    Atom,
    Const,
    FreshVars,
    Func,
    Term,
    Var,
    apply_term_map,
    atom_key,
    freeze,
    sorted_atoms,
    subst_atoms,
    term_key,
    terms_of,
    vars_of,
)


class UnifierCapError(Exception):
    """Enumeration limits exceeded; callers report 'unknown', never prune."""


# ---------------------------------------------------------------------------
# union-find over terms

class _UF:
    def __init__(self):
        self.parent: Dict[Term, Term] = {}

    def add(self, t: Term):
        self.parent.setdefault(t, t)

    def find(self, t: Term) -> Term:
        self.add(t)
        root = t
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[t] != root:
            self.parent[t], t = root, self.parent[t]
        return root

    def union(self, a: Term, b: Term):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def classes(self) -> List[frozenset]:
        groups: Dict[Term, set] = {}
        for t in self.parent:
            groups.setdefault(self.find(t), set()).add(t)
        out = [frozenset(g) for g in groups.values()]
        out.sort(key=lambda c: min(term_key(t) for t in c))
        return out

    def copy(self) -> "_UF":
        n = _UF()
        n.parent = dict(self.parent)
        return n

    def same(self, a: Term, b: Term) -> bool:
        if a == b:
            return True
        if a not in self.parent or b not in self.parent:
            return False
        return self.find(a) == self.find(b)


# ---------------------------------------------------------------------------
# unifiers

@dataclass(frozen=True)
class Unifier:
    """Partition-based unifier of a body part with a head part."""

    producer: str
    consumer: str
    body_part: frozenset
    head_part: frozenset
    classes: Tuple[frozenset, ...]
    reps: Tuple[Term, ...]
    piece: bool

    def term_map(self) -> Dict[Term, Term]:
        out: Dict[Term, Term] = {}
        for cls, rep in zip(self.classes, self.reps):
            for t in cls:
                out[t] = rep
        return out

    def rep_of(self, t: Term) -> Term:
        for cls, rep in zip(self.classes, self.reps):
            if t in cls:
                return rep
        return t

    def merges(self, a: Term, b: Term) -> bool:
        return self.rep_of(a) == self.rep_of(b)

    def __str__(self) -> str:
        cls = " ".join(
            "{%s}" % ",".join(str(t) for t in sorted(c, key=term_key))
            for c in self.classes)
        return "unify[%s->%s] B'=%s H'=%s %s" % (
            self.producer, self.consumer,
            "{%s}" % ",".join(str(a) for a in sorted_atoms(self.body_part)),
            "{%s}" % ",".join(str(a) for a in sorted_atoms(self.head_part)),
            cls)


def _pick_rep(cls: frozenset, preferred_vars: frozenset) -> Optional[Term]:
    consts = [t for t in cls if isinstance(t, Const)]
    if len(consts) > 1:
        return None
    if consts:
        return consts[0]
    pref = sorted((t for t in cls if t in preferred_vars), key=term_key)
    if pref:
        return pref[0]
    return sorted(cls, key=term_key)[0]


def _admissible(producer: Rule, consumer: Rule,
                body_part: frozenset, head_part: frozenset,
                classes: Sequence[frozenset]) -> bool:
    pex = producer.existentials & vars_of(head_part)
    phead = vars_of(producer.head)
    sep = vars_of(body_part) & vars_of(frozenset(consumer.body) - body_part)
    for cls in classes:
        if not (cls & pex):
            continue
        if any(isinstance(t, Const) for t in cls):
            return False
        if len(cls & phead) > 1:
            return False
        if cls & sep:
            return False
    return True


def _mk_unifier(producer: Rule, consumer: Rule,
                match: Iterable[Tuple[Atom, Atom]]) -> Optional[Unifier]:
    uf = _UF()
    for b, h in match:
        for tb, th in zip(b.args, h.args):
            uf.union(tb, th)
    classes = tuple(uf.classes())
    preferred = vars_of(producer.body) | vars_of(producer.head)
    reps = []
    for cls in classes:
        rep = _pick_rep(cls, preferred)
        if rep is None:
            return None
        reps.append(rep)
    body_part = frozenset(b for b, _ in match)
    head_part = frozenset(h for _, h in match)
    return Unifier(
        producer.id, consumer.id, body_part, head_part, classes, tuple(reps),
        _admissible(producer, consumer, body_part, head_part, classes))


def unifiers(consumer: Rule, producer: Rule, require_piece: bool = True,
             cap_pairs: int = 16) -> List[Unifier]:
    """All unifiers of the consumer's body with the producer's head.

    Enumerates every covering relation between body and head atoms of the
    same predicate, deduplicated by the induced partition.  With
    ``require_piece`` only admissible piece-unifiers are kept.
    """
    if len(producer.head) > 12 or len(consumer.body) > 12:
        raise UnifierCapError(
            "rule sides beyond 12 atoms (%s / %s)" % (producer.id, consumer.id))
    pairs = [
        (b, h)
        for b in sorted_atoms(consumer.body)
        for h in sorted_atoms(producer.head)
        if b.pred == h.pred and len(b.args) == len(h.args)
    ]
    if len(pairs) > cap_pairs:
        raise UnifierCapError(
            "%d unifiable atom pairs between %s and %s exceed the cap"
            % (len(pairs), producer.id, consumer.id))
    out: List[Unifier] = []
    seen = set()
    for mask in range(1, 1 << len(pairs)):
        match = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        u = _mk_unifier(producer, consumer, match)
        if u is None:
            continue
        key = (u.body_part, u.head_part, u.classes)
        if key in seen:
            continue
        seen.add(key)
        if u.piece or not require_piece:
            out.append(u)
    return out


# ---------------------------------------------------------------------------
# rule dependency and the GRD

def _validates(producer: Rule, consumer: Rule, u: Unifier) -> bool:
    """Frozen-instance check that the unifier witnesses a real dependency.

    Builds the unified frozen atomset, applies the producer on it, and asks
    for a homomorphism of the consumer's body that is new (not already in
    the pre-application set) and useful.
    """
    mu = u.term_map()
    f0 = apply_term_map(mu, producer.body) | apply_term_map(
        mu, frozenset(consumer.body) - u.body_part)
    frozen, fmap = freeze(f0)
    trig = {}
    for v in vars_of(producer.body):
        t = mu.get(v, v)
        if isinstance(t, Var):
            t = fmap.get(t, t)
        trig[v] = t
    after = apply(frozen, pos(producer), trig, FreshVars())
    for pp in homomorphisms(consumer.body, after):
        if subst_atoms(pp, consumer.body) <= frozen:
            continue
        if is_useful(pp, pos(consumer), after):
            return True
    return False


def depends(producer: Rule, consumer: Rule, *,
            negation_aware: bool = False) -> List[Unifier]:
    """Validated piece-unifiers witnessing that consumer depends on producer.

    Empty list means no dependency.  In negation-aware mode, unifiers whose
    unified rule is self-blocking are discarded (positive reliance).
    """
    consumer2, _ = rename_apart(consumer, "dep")
    out = []
    for u in unifiers(consumer2, producer, require_piece=True):
        if negation_aware and is_self_blocking(unified_rule(producer, u, consumer2)):
            continue
        if _validates(producer, consumer2, u):
            out.append(u)
    return out


@dataclass
class DependencyGraph:
    """GRD: edge (Ri, Rj) iff Rj depends on Ri, with witnessing unifiers."""

    nodes: Tuple[str, ...]
    edges: Dict[Tuple[str, str], Tuple[Unifier, ...]]

    def successors(self, rid: str) -> List[str]:
        return sorted(c for (p, c) in self.edges if p == rid)

    def predecessors(self, rid: str) -> List[str]:
        return sorted(p for (p, c) in self.edges if c == rid)

    def reachable_from(self, rid: str) -> frozenset:
        """Nodes reachable by a path of length >= 1."""
        out, frontier = set(), [rid]
        while frontier:
            nxt = []
            for n in frontier:
                for s in self.successors(n):
                    if s not in out:
                        out.add(s)
                        nxt.append(s)
            frontier = nxt
        return frozenset(out)

    def has_path(self, a: str, b: str) -> bool:
        return b in self.reachable_from(a)

    def find_cycle(self) -> Optional[List[str]]:
        """Some elementary cycle (as a node list), or None if acyclic."""
        for n in sorted(self.nodes):
            parent: Dict[str, str] = {}
            frontier = [n]
            while frontier:
                cur = frontier.pop(0)
                for s in self.successors(cur):
                    if s == n:
                        path = [cur]
                        while path[-1] != n and path[-1] in parent:
                            path.append(parent[path[-1]])
                        if path[-1] != n:
                            path.append(n)
                        path.reverse()
                        return path
                    if s not in parent and s != n:
                        parent[s] = cur
                        frontier.append(s)
        return None

    def is_acyclic(self) -> bool:
        return self.find_cycle() is None

    def sccs(self) -> List[frozenset]:
        import networkx as nx

        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(self.edges)
        return [frozenset(c) for c in nx.strongly_connected_components(g)]

    def to_dot(self) -> str:
        lines = ["digraph grd {"]
        for n in self.nodes:
            lines.append('  "%s";' % n)
        for (p, c), ws in sorted(self.edges.items()):
            lines.append('  "%s" -> "%s" [label="%d"];' % (p, c, len(ws)))
        lines.append("}")
        return "\n".join(lines) + "\n"


def grd(rules: Sequence[Rule], *, negation_aware: bool = False) -> DependencyGraph:
    """Graph of rule dependencies over all ordered pairs, self-pairs included."""
    edges = {}
    for p in rules:
        for c in rules:
            ws = depends(p, c, negation_aware=negation_aware)
            if ws:
                edges[(p.id, c.id)] = tuple(ws)
    return DependencyGraph(tuple(r.id for r in rules), edges)


# ---------------------------------------------------------------------------
# unified rules and sequence folding

class FoldState:
    """Left fold of a rule sequence through a growing term partition.

    Representatives prefer constants, then terms of the earliest occurrence,
    so folded rules read in the first rule's variables.
    """

    def __init__(self, first: Rule):
        self.uf = _UF()
        self.rank: Dict[Term, tuple] = {}
        self.body = frozenset(first.body)
        self.head = frozenset(first.head)
        self.negs: List[frozenset] = list(first.negbodies)
        self.ids = [first.id]
        self._note(first, 0)

    def _note(self, rule: Rule, k: int):
        for atoms in (rule.body, rule.head) + tuple(rule.negbodies):
            for t in terms_of(atoms):
                self.rank.setdefault(t, (k,) + tuple([term_key(t)]))

    def rep(self, t: Term, uf: Optional[_UF] = None) -> Optional[Term]:
        uf = uf or self.uf
        if t not in uf.parent:
            return t
        cls = [x for x in uf.parent if uf.same(x, t)]
        consts = [x for x in cls if isinstance(x, Const)]
        if len(consts) > 1:
            return None
        if consts:
            return consts[0]
        return min(cls, key=lambda x: self.rank.get(x, (1 << 30, term_key(x))))

    def term_map(self) -> Optional[Dict[Term, Term]]:
        out = {}
        for t in self.uf.parent:
            r = self.rep(t)
            if r is None:
                return None
        # second pass once consistency is known
        for t in self.uf.parent:
            out[t] = self.rep(t)
        return out

    def existentials(self) -> frozenset:
        return vars_of(self.head) - vars_of(self.body)

    def extend(self, u: Unifier, consumer: Rule) -> bool:
        """Fold one more rule in; False when the merge is inconsistent."""
        self._note(consumer, len(self.ids))
        for cls in u.classes:
            first = None
            for t in cls:
                if first is None:
                    first = t
                else:
                    self.uf.union(first, t)
        m = self.term_map()
        if m is None:
            return False
        old_head = apply_term_map(m, self.head)
        self.body = apply_term_map(m, self.body) | (
            apply_term_map(m, consumer.body) - old_head)
        self.negs = [apply_term_map(m, nb) for nb in self.negs] + [
            apply_term_map(m, nb) for nb in consumer.negbodies]
        self.head = old_head | apply_term_map(m, consumer.head)
        self.ids.append(consumer.id)
        return True

    def as_rule(self) -> Rule:
        return Rule("+".join(self.ids), self.body, self.head, tuple(self.negs))


def unified_rule(r1: Rule, u: Unifier, r2: Rule) -> Rule:
    """Composition of r1 with r2 along a unifier of r2's body with r1's head.

    Head is the union of both unified heads; the body keeps r1's body plus
    whatever of r2's body was not supplied by r1's head.  Negative bodies of
    both rules are carried through the unification.
    """
    st = FoldState(r1)
    if not st.extend(u, r2):
        raise ValueError("inconsistent unifier (two constants in one class)")
    return st.as_rule()


def self_blocking_unifier(r1: Rule, u: Unifier, r2: Rule) -> bool:
    """True when the unified rule carries one of its own negative bodies."""
    return is_self_blocking(unified_rule(r1, u, r2))


# ---------------------------------------------------------------------------
# agglomerated rules

def with_fr(rule: Rule, terms: Iterable[Term]) -> Rule:
    fr_atoms = frozenset(Atom(FR_PRED, (t,)) for t in terms)
    return Rule(rule.id, frozenset(rule.body) | fr_atoms, rule.head, rule.negbodies)


def agglomerate(rules: Sequence[Rule], g: DependencyGraph,
                ri_id: str, rj_id: str, cap_states: int = 4096) -> Optional[Rule]:
    """Agglomerated rule for the pair (Ri, Rj), or None.

    Walks admissible paths from Ri towards direct predecessors of Rj in the
    GRD.  Each step piece-unifies the next rule's body with the accumulated
    head; head terms consumed along the way become fr() body atoms, which
    strips them of their existential status for subsequent unifications.
    The returned rule unions the consumed-term sets over every admissible
    complete path, which over-approximates any single choice of path set
    and therefore never loses a unifier-graph edge.  Returns None when no
    admissible path reaches a direct predecessor.
    """
    by_id = {r.id: r for r in rules}
    ri = by_id[ri_id]
    dpreds = {p for (p, c) in g.edges if c == rj_id}
    if not dpreds or not g.has_path(ri_id, rj_id):
        raise ValueError("%s is not reachable from %s in the GRD" % (rj_id, ri_id))
    accepted: List[frozenset] = []
    start = (ri_id, frozenset())
    if ri_id in dpreds:
        accepted.append(frozenset())
    visited = {start}
    queue = [start]
    while queue:
        if len(visited) > cap_states:
            raise UnifierCapError("agglomeration state cap exceeded for (%s,%s)"
                                  % (ri_id, rj_id))
        q, consumed = queue.pop(0)
        agg = with_fr(ri, consumed)
        for q2 in g.successors(q):
            consumer2, _ = rename_apart(by_id[q2], "agg")
            for u in unifiers(consumer2, agg, require_piece=True):
                new = consumed | terms_of(u.head_part)
                if q2 in dpreds and new not in accepted:
                    accepted.append(new)
                state = (q2, new)
                if state not in visited:
                    visited.add(state)
                    queue.append(state)
    if not accepted:
        return None
    total = frozenset().union(*accepted)
    return with_fr(ri, total)


# ---------------------------------------------------------------------------
# compatible unifiers and compatible sequences
#
# The position graph is duck-typed here to avoid an import cycle: it must
# provide head_positions_of(var) -> list of nodes, node_of(rule_id, side,
# atom, idx) -> node or None, successors(node), and is_existential(node) /
# node_term(node).

def _null_path(pgu, z: Var, target) -> bool:
    """Path from a position of z to target avoiding other existential positions."""
    starts = pgu.head_positions_of(z)
    if target is None:
        return False
    seen = set(starts)
    frontier = list(starts)
    while frontier:
        nxt = []
        for n in frontier:
            for s in pgu.successors(n):
                if s == target:
                    return True
                if s in seen:
                    continue
                if pgu.is_existential(s) and pgu.node_term(s) != z:
                    continue
                seen.add(s)
                nxt.append(s)
        frontier = nxt
    return False


def _step_compatible(state: FoldState, u: Unifier, consumer: Rule, pgu,
                     origin: Dict[Var, Var]) -> bool:
    """Compatibility of one unifier against the current fold.

    Piece-unifiers (with respect to the fold) are accepted outright.  For a
    relaxed unifier, every unified body position whose class contains an
    existential of the fold's head must be reachable in the unifier graph
    from a position of that existential without crossing another
    existential position.
    """
    tentative = state.uf.copy()
    for cls in u.classes:
        first = None
        for t in cls:
            if first is None:
                first = t
            else:
                tentative.union(first, t)

    def normalized(cls):
        return {state.rep(t) if t in state.uf.parent else t for t in cls}

    fold_ex = state.existentials()
    fold_head_vars = vars_of(state.head)
    sep = vars_of(u.body_part) & vars_of(frozenset(consumer.body) - u.body_part)

    merged = tentative.classes()
    piece = True
    for cls in merged:
        norm = normalized(cls)
        if None in norm:
            return False  # two constants forced equal
        zs = {t for t in norm if t in fold_ex}
        if not zs:
            continue
        if any(isinstance(t, Const) for t in norm):
            piece = False
        if len({t for t in norm if t in fold_head_vars}) > 1:
            piece = False
        if cls & sep:
            piece = False
    if piece:
        return True

    for atom in sorted_atoms(u.body_part):
        orig_atom = subst_atoms(origin, [atom]) if origin else frozenset([atom])
        orig_atom = next(iter(orig_atom))
        for i, t in enumerate(atom.args):
            if t not in tentative.parent:
                continue
            cls = frozenset(x for x in tentative.parent if tentative.same(x, t))
            zs = {x for x in normalized(cls) if x in fold_ex}
            if not zs:
                continue
            target = pgu.node_of(consumer.id, "body", orig_atom, i)
            ok = False
            for z in sorted(zs, key=term_key):
                zo = origin.get(z, z) if origin else z
                if _null_path(pgu, zo, target):
                    ok = True
                    break
            if not ok:
                return False
    return True


def fold_sequence(rules_seq: Sequence[Rule], unifs: Sequence[Unifier], pgu=None,
                  origin: Optional[Dict[Var, Var]] = None,
                  check_compatibility: bool = True) -> Tuple[bool, Optional[Rule]]:
    """Fold a variable-disjoint rule sequence along its unifiers.

    Returns (compatible, folded rule).  With ``check_compatibility`` each
    unifier is tested against the fold built so far, per the recursive
    definition of a compatible sequence.
    """
    if len(rules_seq) != len(unifs) + 1:
        raise ValueError("malformed alternation: %d rules for %d unifiers"
                         % (len(rules_seq), len(unifs)))
    origin = origin or {}
    state = FoldState(rules_seq[0])
    for u, consumer in zip(unifs, rules_seq[1:]):
        if check_compatibility and not _step_compatible(state, u, consumer, pgu, origin):
            return False, None
        if not state.extend(u, consumer):
            return False, None
    return True, state.as_rule()


def compatible(u: Unifier, pgu, producer: Optional[Rule] = None,
               consumer: Optional[Rule] = None,
               origin: Optional[Dict[Var, Var]] = None) -> bool:
    """Is the unifier realizable through the unifier position graph?

    ``producer``/``consumer`` default to the graph's own rules; pass folded
    rules explicitly when judging a unifier against a composition.
    """
    producer = producer if producer is not None else pgu.rule(u.producer)
    consumer = consumer if consumer is not None else pgu.rule(u.consumer)
    return _step_compatible(FoldState(producer), u, consumer, pgu, origin or {})


def compatible_sequence(items: Sequence, pgu,
                        origin: Optional[Dict[Var, Var]] = None) -> bool:
    """Compatibility of an alternating sequence [R1, u1, R2, ..., uk, Rk+1].

    The rules must be pairwise variable-disjoint instances (rename repeated
    rules apart and rebase the unifiers accordingly).
    """
    rules_seq = list(items[0::2])
    unifs = list(items[1::2])
    if not all(isinstance(r, Rule) for r in rules_seq) or not all(
            isinstance(x, Unifier) for x in unifs):
        raise ValueError("malformed alternation of rules and unifiers")
    ok, _ = fold_sequence(rules_seq, unifs, pgu, origin)
    return ok


def remap_unifier(u: Unifier, pmap: Dict[Var, Var], cmap: Dict[Var, Var]) -> Unifier:
    """Rebuild a unifier under renamings of its producer/consumer sides."""

    def r(t: Term) -> Term:
        if isinstance(t, Var):
            return cmap.get(t, pmap.get(t, t))
        return t

    return Unifier(
        u.producer,
        u.consumer,
        frozenset(subst_atoms(cmap, u.body_part)),
        frozenset(subst_atoms(pmap, u.head_part)),
        tuple(frozenset(r(t) for t in cls) for cls in u.classes),
        tuple(r(t) for t in u.reps),
        u.piece,
    )
