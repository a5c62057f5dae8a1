"""Position graphs, marking functions and acyclicity verdicts.

The basic position graph of a rule links frontier body positions to head
positions (same term, or any existential position).  Transition edges go
from head positions to body positions of the same predicate and argument
index; the full / dependency / unifier graph kinds admit a transition edge
under increasingly demanding conditions, so their edge sets shrink and the
induced acyclicity properties grow strictly stronger.

A marking function selects, per node, the reachable positions considered
dangerous; the shipped reference marking is weak acyclicity (everything
reachable).  Further markings can be registered by callers; the checker is
agnostic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import islice, product
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .rules import Rule, is_self_blocking, pos, rename_apart
from .terms import Atom, Const, Term, Var, atom_key, sorted_atoms, term_key, vars_of
from .unification import (
    DependencyGraph,
    Unifier,
    UnifierCapError,
    agglomerate,
    fold_sequence,
    grd,
    remap_unifier,
    unified_rule,
    unifiers,
)

KINDS = ("basic", "full", "dependency", "unifier")
_SUFFIX = {"full": "", "dependency": "^D", "unifier": "^U"}


@dataclass(frozen=True)
class PositionNode:
    rule: str
    side: str  # "body" | "head"
    atom: Atom
    idx: int
    kind: str  # "existential" | "frontier" | "other"

    @property
    def term(self) -> Term:
        return self.atom.args[self.idx]

    def __str__(self) -> str:
        return "%s:%s:[%s,%d]" % (self.rule, self.side, self.atom, self.idx + 1)


@dataclass(frozen=True)
class TransitionEdge:
    producer: str
    consumer: str
    witnesses: Tuple[Unifier, ...]
    consumer_vmap: Tuple[Tuple[Var, Var], ...] = ()

    def vmap(self) -> Dict[Var, Var]:
        return dict(self.consumer_vmap)


@dataclass
class PositionGraph:
    kind: str
    nodes: Tuple[PositionNode, ...]
    basic: Dict[PositionNode, Tuple[PositionNode, ...]]
    transitions: Dict[Tuple[PositionNode, PositionNode], TransitionEdge]
    _rules: Dict[str, Rule] = field(default_factory=dict)       # pos() view
    _originals: Dict[str, Rule] = field(default_factory=dict)   # with negation

    def __post_init__(self):
        self._index = {(n.rule, n.side, n.atom, n.idx): n for n in self.nodes}
        self._succ: Dict[PositionNode, list] = {n: [] for n in self.nodes}
        for n, targets in self.basic.items():
            self._succ[n].extend(targets)
        for (a, b) in self.transitions:
            self._succ[a].append(b)
        for n in self._succ:
            self._succ[n].sort(key=lambda m: (m.rule, m.side, atom_key(m.atom), m.idx))
        self._head_positions: Dict[Term, list] = {}
        for n in self.nodes:
            if n.side == "head":
                self._head_positions.setdefault(n.term, []).append(n)

    # -- protocol used by the unification module ------------------------------

    def rule(self, rid: str) -> Rule:
        return self._rules[rid]

    def original(self, rid: str) -> Rule:
        return self._originals[rid]

    def node_of(self, rid: str, side: str, atom: Atom, idx: int) -> Optional[PositionNode]:
        return self._index.get((rid, side, atom, idx))

    def head_positions_of(self, v: Term) -> List[PositionNode]:
        return list(self._head_positions.get(v, ()))

    def successors(self, n: PositionNode) -> List[PositionNode]:
        return self._succ.get(n, [])

    def is_existential(self, n: PositionNode) -> bool:
        return n.kind == "existential"

    def node_term(self, n: PositionNode) -> Term:
        return n.term

    # -- generic graph helpers -------------------------------------------------

    def existential_nodes(self) -> List[PositionNode]:
        return [n for n in self.nodes if n.kind == "existential"]

    def reachable(self, start: PositionNode) -> frozenset:
        out, frontier = set(), [start]
        while frontier:
            nxt = []
            for n in frontier:
                for s in self.successors(n):
                    if s not in out:
                        out.add(s)
                        nxt.append(s)
            frontier = nxt
        return frozenset(out)

    def edge_set(self) -> frozenset:
        out = set()
        for n, targets in self.basic.items():
            out.update((n, t) for t in targets)
        out.update(self.transitions)
        return frozenset(out)

    def cycle_through(self, start: PositionNode, allowed: frozenset) -> Optional[List[PositionNode]]:
        """Some cycle through start staying inside ``allowed``, or None."""
        if start not in allowed:
            return None
        parent: Dict[PositionNode, PositionNode] = {}
        frontier = [start]
        visited = set()
        while frontier:
            cur = frontier.pop(0)
            for s in self.successors(cur):
                if s == start:
                    path = [cur]
                    while path[-1] != start and path[-1] in parent:
                        path.append(parent[path[-1]])
                    if path[-1] != start:
                        path.append(start)
                    path.reverse()
                    return path
                if s in allowed and s not in visited:
                    visited.add(s)
                    parent[s] = cur
                    frontier.append(s)
        return None

    def to_networkx(self):
        import networkx as nx

        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        for n, targets in self.basic.items():
            for t in targets:
                g.add_edge(n, t)
        g.add_edges_from(self.transitions)
        return g

    def to_dot(self) -> str:
        names = {n: "n%d" % i for i, n in enumerate(sorted(
            self.nodes, key=lambda m: (m.rule, m.side, atom_key(m.atom), m.idx)))}
        lines = ["digraph pg {"]
        for n, name in names.items():
            shape = "doublecircle" if n.kind == "existential" else "ellipse"
            lines.append('  %s [label="%s" shape=%s];' % (name, n, shape))
        for a, targets in sorted(self.basic.items(), key=lambda kv: names[kv[0]]):
            for b in targets:
                lines.append("  %s -> %s;" % (names[a], names[b]))
        for (a, b), e in sorted(self.transitions.items(),
                                key=lambda kv: (names[kv[0][0]], names[kv[0][1]])):
            lines.append('  %s -> %s [style=bold label="%d"];'
                         % (names[a], names[b], len(e.witnesses)))
        lines.append("}")
        return "\n".join(lines) + "\n"


def _flag(rule: Rule, side: str, t: Term) -> str:
    if isinstance(t, Var):
        if side == "head" and t in rule.existentials:
            return "existential"
        if t in rule.frontier:
            return "frontier"
    return "other"


def build(kind: str, rules: Sequence[Rule], g: Optional[DependencyGraph] = None,
          agglomerates: Optional[Dict[Tuple[str, str], Optional[Rule]]] = None,
          negation_aware: bool = False) -> PositionGraph:
    """Build a position graph of the requested kind.

    ``g`` (the GRD) is required for the dependency and unifier kinds; the
    agglomerated rules are computed on demand unless supplied.  Negative
    bodies never contribute positions; with ``negation_aware`` the unifier
    kind additionally drops self-blocking edge witnesses.
    """
    if kind not in KINDS:
        raise ValueError("unknown position graph kind %r" % kind)
    if kind in ("dependency", "unifier") and g is None:
        raise ValueError("the %s position graph requires the GRD" % kind)

    originals = {r.id: r for r in rules}
    posrules = {r.id: pos(r) for r in rules}

    nodes: List[PositionNode] = []
    for rid in sorted(posrules):
        r = posrules[rid]
        for side, atoms in (("body", r.body), ("head", r.head)):
            for atom in sorted_atoms(atoms):
                for idx, t in enumerate(atom.args):
                    nodes.append(PositionNode(rid, side, atom, idx, _flag(r, side, t)))

    basic: Dict[PositionNode, Tuple[PositionNode, ...]] = {}
    by_rule: Dict[str, List[PositionNode]] = {}
    for n in nodes:
        by_rule.setdefault(n.rule, []).append(n)
    for rid, rule_nodes in by_rule.items():
        r = posrules[rid]
        heads = [n for n in rule_nodes if n.side == "head"]
        for b in rule_nodes:
            if b.side != "body" or b.term not in r.frontier:
                continue
            targets = tuple(h for h in heads
                            if h.term == b.term or h.kind == "existential")
            if targets:
                basic[b] = targets

    transitions: Dict[Tuple[PositionNode, PositionNode], TransitionEdge] = {}
    if kind != "basic":
        heads_by_pred: Dict[tuple, List[PositionNode]] = {}
        bodies_by_pred: Dict[tuple, List[PositionNode]] = {}
        for n in nodes:
            key = (n.atom.pred, len(n.atom.args), n.idx)
            if n.side == "head":
                heads_by_pred.setdefault(key, []).append(n)
            else:
                bodies_by_pred.setdefault(key, []).append(n)

        ids = sorted(posrules)
        if kind == "full":
            pairs = [(a, b) for a in ids for b in ids]
        else:
            reach = {rid: g.reachable_from(rid) for rid in ids}
            pairs = [(a, b) for a in ids for b in ids if b in reach[a]]

        witness_info: Dict[Tuple[str, str], tuple] = {}
        if kind == "unifier":
            for (a, b) in pairs:
                agg = None
                if agglomerates is not None and (a, b) in agglomerates:
                    agg = agglomerates[(a, b)]
                else:
                    agg = agglomerate(list(originals.values()), g, a, b)
                if agg is None:
                    continue
                if a == b:
                    consumer, cvmap = rename_apart(originals[b], "u")
                else:
                    consumer, cvmap = originals[b], {}
                us = unifiers(consumer, agg, require_piece=True)
                if negation_aware:
                    us = [u for u in us
                          if not is_self_blocking(unified_rule(originals[a], u, consumer))]
                if us:
                    witness_info[(a, b)] = (tuple(us), cvmap)

        pair_set = set(pairs)
        for key, hs in heads_by_pred.items():
            bs = bodies_by_pred.get(key, ())
            for h in hs:
                for b in bs:
                    pair = (h.rule, b.rule)
                    if pair not in pair_set:
                        continue
                    if kind == "unifier":
                        if pair not in witness_info:
                            continue
                        us, cvmap = witness_info[pair]
                        bterm = b.term
                        if isinstance(bterm, Var):
                            bterm = cvmap.get(bterm, bterm)
                        wit = tuple(u for u in us if u.merges(bterm, h.term))
                        if not wit:
                            continue
                        transitions[(h, b)] = TransitionEdge(
                            h.rule, b.rule, wit, tuple(sorted(
                                cvmap.items(), key=lambda kv: term_key(kv[0]))))
                    else:
                        transitions[(h, b)] = TransitionEdge(h.rule, b.rule, ())

    return PositionGraph(kind, tuple(nodes), basic, transitions,
                         _rules=posrules, _originals=originals)


# ---------------------------------------------------------------------------
# markings and verdicts

@dataclass(frozen=True)
class MarkingFunction:
    name: str
    assign: Callable[[PositionGraph, PositionNode], frozenset]


def wa_marking() -> MarkingFunction:
    """Weak acyclicity: every reachable position is marked."""
    return MarkingFunction("wa", lambda g, n: g.reachable(n))


def mark_nothing() -> MarkingFunction:
    """Degenerate upper bound used in tests: no cycle is ever marked."""
    return MarkingFunction("nothing", lambda g, n: frozenset())


@dataclass
class Witness:
    position: Optional[PositionNode] = None
    cycle: tuple = ()
    sequence: tuple = ()

    def describe(self) -> str:
        parts = []
        if self.position is not None:
            parts.append("position %s" % self.position)
        if self.cycle:
            parts.append("cycle: " + " -> ".join(str(n) for n in self.cycle))
        if self.sequence:
            parts.append("rules: " + " ".join(str(x) for x in self.sequence))
        return "; ".join(parts)


@dataclass
class AcyclicityVerdict:
    property: str
    outcome: str  # "satisfied" | "violated" | "unknown"
    witness: Optional[Witness] = None
    note: str = ""

    @property
    def satisfied(self) -> bool:
        return self.outcome == "satisfied"


def check(marking: MarkingFunction, g: PositionGraph) -> AcyclicityVerdict:
    """No existential position may lie on a cycle inside its own marking."""
    name = marking.name + _SUFFIX.get(g.kind, "?")
    for n in g.existential_nodes():
        allowed = marking.assign(g, n)
        cycle = g.cycle_through(n, allowed)
        if cycle is not None:
            return AcyclicityVerdict(name, "violated",
                                     Witness(position=n, cycle=tuple(cycle)))
    return AcyclicityVerdict(name, "satisfied")


def _occurrence_sequence(g: PositionGraph, cycle: List[PositionNode]):
    """Rule occurrences and transition edges visited by a cycle, in order."""
    edges = list(zip(cycle, cycle[1:] + [cycle[0]]))
    transitions = [(a, b) for (a, b) in edges if (a, b) in g.transitions]
    occ = [cycle[0].rule] + [b.rule for (_, b) in transitions]
    return occ, transitions


def _instantiate_sequence(g: PositionGraph, occ: List[str],
                          transitions, combo) -> tuple:
    """Variable-disjoint occurrence copies plus rebased unifiers."""
    insts, vmaps = [], []
    origin: Dict[Var, Var] = {}
    for k, rid in enumerate(occ):
        orig = g.original(rid)
        if k == 0:
            inst, vmap = orig, {}
        else:
            inst, vmap = rename_apart(orig, "occ%d" % k)
            for v, v2 in vmap.items():
                origin[v2] = v
        insts.append(inst)
        vmaps.append(vmap)
    unifs = []
    for k, ((a, b), u) in enumerate(zip(transitions, combo)):
        edge = g.transitions[(a, b)]
        cvmap = edge.vmap()
        cmap = {}
        for v in g.original(edge.consumer).vars:
            stored = cvmap.get(v, v)
            cmap[stored] = vmaps[k + 1].get(v, v)
        unifs.append(remap_unifier(u, vmaps[k], cmap))
    return insts, unifs, origin


def check_u_plus(marking: MarkingFunction, g: PositionGraph, *,
                 negation_aware: bool = False,
                 cycle_cap: int = 10000, seq_cap: int = 256) -> AcyclicityVerdict:
    """Marked cycles are discounted unless some induced unifier sequence is
    compatible (and, in negation-aware mode, not self-blocking).

    Elementary cycles are enumerated per strongly connected component with
    caps; tripping a cap yields "unknown", never a wrong "satisfied".
    """
    import networkx as nx

    if g.kind != "unifier":
        raise ValueError("the refined check runs on the unifier position graph")
    name = marking.name + "^U+"
    unknown = False
    nxg = g.to_networkx()
    for n in g.existential_nodes():
        allowed = marking.assign(g, n)
        if n not in allowed:
            continue
        sub = nxg.subgraph(allowed)
        enumerated = 0
        for cyc in nx.simple_cycles(sub):
            enumerated += 1
            if enumerated > cycle_cap:
                unknown = True
                break
            if n not in cyc:
                continue
            i = cyc.index(n)
            cyc = cyc[i:] + cyc[:i]
            occ, transitions = _occurrence_sequence(g, cyc)
            witness_lists = [g.transitions[e].witnesses for e in transitions]
            combos = product(*witness_lists)
            truncated = False
            for j, combo in enumerate(combos):
                if j >= seq_cap:
                    truncated = True
                    break
                insts, unifs, origin = _instantiate_sequence(g, occ, transitions, combo)
                ok, fold = fold_sequence(insts, unifs, g, origin)
                if not ok:
                    continue
                if negation_aware and fold is not None and is_self_blocking(fold):
                    continue
                return AcyclicityVerdict(
                    name, "violated",
                    Witness(position=n, cycle=tuple(cyc), sequence=tuple(occ)))
            if truncated:
                unknown = True
    if unknown:
        return AcyclicityVerdict(name, "unknown",
                                 note="cycle or sequence enumeration cap hit")
    return AcyclicityVerdict(name, "satisfied")


def scc_check(marking: MarkingFunction, rules: Sequence[Rule],
              g: DependencyGraph) -> str:
    """Per-component formulation: every s.c.c. of the GRD must satisfy the
    marking on its own full position graph, single loop-free rules exempt.

    Equivalent to checking the marking on the dependency position graph;
    kept as an independent route for cross-validation.
    """
    by_id = {r.id: r for r in rules}
    for scc in g.sccs():
        if len(scc) == 1:
            rid = next(iter(scc))
            if (rid, rid) not in g.edges:
                continue
        sub = [by_id[rid] for rid in sorted(scc)]
        pgf = build("full", sub)
        if check(marking, pgf).outcome != "satisfied":
            return "violated"
    return "satisfied"


# ---------------------------------------------------------------------------
# the analyzer

CHASE_VARIANTS = ("oblivious", "frontier", "skolem", "restricted", "core")


@dataclass
class AnalysisReport:
    verdicts: List[AcyclicityVerdict]
    chase: Dict[str, str]
    negation_aware: bool = False
    dropped_rules: Tuple[str, ...] = ()
    stable: Dict[str, str] = field(default_factory=dict)

    def verdict(self, name: str) -> AcyclicityVerdict:
        for v in self.verdicts:
            if v.property == name:
                return v
        raise KeyError(name)

    def outcome(self, name: str) -> str:
        return self.verdict(name).outcome

    def to_json(self) -> dict:
        out = {
            "version": 1,
            "properties": [
                {
                    "property": v.property,
                    "outcome": v.outcome,
                    **({"witness": v.witness.describe()} if v.witness else {}),
                }
                for v in self.verdicts
            ],
            "chase": dict(self.chase),
        }
        if self.negation_aware:
            out["negation_aware"] = True
            out["dropped_self_blocking_rules"] = list(self.dropped_rules)
            out["stable"] = dict(self.stable)
        return out

    def to_text(self) -> str:
        lines = []
        for v in self.verdicts:
            line = "%-8s %s" % (v.property, v.outcome)
            if v.witness is not None:
                line += "  (%s)" % v.witness.describe()
            if v.note:
                line += "  [%s]" % v.note
            lines.append(line)
        lines.append("")
        lines.append("chase termination guarantees:")
        for variant in CHASE_VARIANTS:
            lines.append("  %-10s %s" % (variant, self.chase[variant]))
        if self.negation_aware:
            if self.dropped_rules:
                lines.append("self-blocking rules dropped: %s"
                             % ", ".join(self.dropped_rules))
            lines.append("stable-computation guarantees:")
            for k, v in sorted(self.stable.items()):
                lines.append("  %-10s %s" % (k, v))
        return "\n".join(lines) + "\n"


def analyze(rules: Sequence[Rule], *, negation_aware: bool = False,
            markings: Optional[Sequence[MarkingFunction]] = None,
            cycle_cap: int = 10000, seq_cap: int = 256) -> AnalysisReport:
    """Acyclicity verdicts plus the chase-variant termination matrix.

    Any satisfied property certifies universal termination of the skolem,
    frontier, restricted and core chase; an acyclic GRD additionally
    certifies the oblivious chase.
    """
    rules = list(rules)
    markings = list(markings) if markings else [wa_marking()]
    verdicts: List[AcyclicityVerdict] = []

    g: Optional[DependencyGraph] = None
    grd_note = ""
    try:
        g = grd(rules, negation_aware=negation_aware)
    except UnifierCapError as e:
        grd_note = str(e)

    if g is not None:
        cyc = g.find_cycle()
        verdicts.append(AcyclicityVerdict(
            "aGRD", "violated" if cyc else "satisfied",
            Witness(sequence=tuple(cyc)) if cyc else None))
    else:
        verdicts.append(AcyclicityVerdict("aGRD", "unknown", note=grd_note))

    pgf = build("full", rules)
    for m in markings:
        verdicts.append(check(m, pgf))

    if g is not None:
        pgd = build("dependency", rules, g)
        for m in markings:
            verdicts.append(check(m, pgd))
        try:
            pgu = build("unifier", rules, g, negation_aware=negation_aware)
            for m in markings:
                verdicts.append(check(m, pgu))
            for m in markings:
                verdicts.append(check_u_plus(
                    m, pgu, negation_aware=negation_aware,
                    cycle_cap=cycle_cap, seq_cap=seq_cap))
        except UnifierCapError as e:
            for m in markings:
                verdicts.append(AcyclicityVerdict(m.name + "^U", "unknown", note=str(e)))
                verdicts.append(AcyclicityVerdict(m.name + "^U+", "unknown", note=str(e)))
    else:
        for m in markings:
            for suffix in ("^D", "^U", "^U+"):
                verdicts.append(AcyclicityVerdict(m.name + suffix, "unknown",
                                                  note=grd_note))

    any_sat = any(v.satisfied for v in verdicts)
    agrd_sat = verdicts[0].satisfied
    chase = {}
    for variant in CHASE_VARIANTS:
        if variant == "oblivious":
            chase[variant] = "guaranteed" if agrd_sat else "not-guaranteed"
        else:
            chase[variant] = "guaranteed" if any_sat else "not-guaranteed"
    return AnalysisReport(verdicts, chase, negation_aware=negation_aware)
