import random

import pytest

from conftest import load_kb, random_rule_set

from exrules import (
    analyze,
    build,
    check,
    check_u_plus,
    grd,
    mark_nothing,
    scc_check,
    wa_marking,
)
from exrules.terms import Var
from exrules.unification import UnifierCapError


# ---------------------------------------------------------------------------
# independent oracle: weak acyclicity on the classical predicate-position
# graph with special edges

def classical_wa(rules):
    edges, special = set(), set()
    for r in rules:
        body_pos, head_pos = {}, {}
        for a in r.body:
            for i, t in enumerate(a.args):
                if isinstance(t, Var):
                    body_pos.setdefault(t, []).append((a.pred, i))
        for a in r.head:
            for i, t in enumerate(a.args):
                if isinstance(t, Var):
                    head_pos.setdefault(t, []).append((a.pred, i))
        for x in r.frontier:
            for src in body_pos.get(x, []):
                for dst in head_pos.get(x, []):
                    edges.add((src, dst))
                for y in r.existentials:
                    for dst in head_pos.get(y, []):
                        special.add((src, dst))
    adj = {}
    for (u, v) in edges | special:
        adj.setdefault(u, set()).add(v)

    def reach(s):
        out, stack = set(), [s]
        while stack:
            n = stack.pop()
            for m in adj.get(n, ()):
                if m not in out:
                    out.add(m)
                    stack.append(m)
        return out

    return all(u not in reach(v) for (u, v) in special)


def verify_cycle_witness(g, marking, verdict):
    w = verdict.witness
    assert w is not None and w.cycle
    assert g.is_existential(w.position)
    assert w.position in w.cycle
    allowed = marking.assign(g, w.position)
    cyc = list(w.cycle)
    for a, b in zip(cyc, cyc[1:] + [cyc[0]]):
        assert b in g.successors(a)
        assert a in allowed


# ---------------------------------------------------------------------------
# graph construction

def test_basic_edges_start_at_frontier_positions_only():
    kb = load_kb("pgd_pgu")
    pg = build("basic", kb.rules)
    sources = {n for n in pg.basic}
    assert all(n.side == "body" for n in sources)
    assert all(n.kind == "frontier" for n in sources)
    # u occurs only in the body of r2, so its positions have no out-edges
    assert not any(str(n.term) == "U" for n in sources)


def test_full_graph_cycle_and_dependency_graph_acyclic():
    kb = load_kb("weak_acyclicity")
    g = grd(kb.rules)
    wa = wa_marking()
    assert check(wa, build("full", kb.rules)).outcome == "violated"
    assert check(wa, build("dependency", kb.rules, g)).outcome == "satisfied"


def test_dependency_cyclic_unifier_acyclic():
    kb = load_kb("pgd_pgu")
    g = grd(kb.rules)
    wa = wa_marking()
    vd = check(wa, build("dependency", kb.rules, g))
    assert vd.outcome == "violated"
    assert vd.witness.position.term.name == "W"
    assert check(wa, build("unifier", kb.rules, g)).outcome == "satisfied"


def test_single_rule_without_existentials_acyclic_everywhere():
    kb = load_kb("swap_cycle")
    g = grd(kb.rules)
    wa = wa_marking()
    for kind in ("full", "dependency", "unifier"):
        pg = build(kind, kb.rules, g)
        assert check(wa, pg).outcome == "satisfied"


def test_edge_inclusion_chain():
    for name in ("weak_acyclicity", "pgd_pgu", "further_refinements", "swap_cycle"):
        kb = load_kb(name)
        g = grd(kb.rules)
        full = build("full", kb.rules).edge_set()
        dep = build("dependency", kb.rules, g).edge_set()
        uni = build("unifier", kb.rules, g).edge_set()
        assert uni <= dep <= full, name


def test_dependency_equals_full_when_closure_complete():
    kb = load_kb("pgd_pgu")
    g = grd(kb.rules)
    assert build("dependency", kb.rules, g).edge_set() == \
        build("full", kb.rules).edge_set()


def test_missing_grd_is_an_error():
    kb = load_kb("weak_acyclicity")
    with pytest.raises(ValueError):
        build("dependency", kb.rules)


# ---------------------------------------------------------------------------
# markings and verdicts

def test_wa_matches_classical_construction_on_fixtures():
    wa = wa_marking()
    for name in ("weak_acyclicity", "pgd_pgu", "further_refinements",
                 "swap_cycle", "restricted_core", "example1"):
        kb = load_kb(name)
        rules = kb.rules
        got = check(wa, build("full", rules)).outcome == "satisfied"
        assert got == classical_wa(rules), name


def test_mark_nothing_satisfies_everything():
    kb = load_kb("weak_acyclicity")
    assert check(mark_nothing(), build("full", kb.rules)).outcome == "satisfied"


def test_violated_witnesses_reverify():
    wa = wa_marking()
    kb = load_kb("weak_acyclicity")
    pg = build("full", kb.rules)
    v = check(wa, pg)
    assert v.outcome == "violated"
    verify_cycle_witness(pg, wa, v)


def test_scc_crosscheck_on_fixtures():
    wa = wa_marking()
    for name in ("weak_acyclicity", "pgd_pgu", "further_refinements",
                 "swap_cycle", "restricted_core"):
        kb = load_kb(name)
        g = grd(kb.rules)
        pgd = build("dependency", kb.rules, g)
        assert check(wa, pgd).outcome == scc_check(wa, kb.rules, g), name


def test_u_plus_violated_on_refinements_cycle():
    kb = load_kb("further_refinements")
    g = grd(kb.rules)
    pgu = build("unifier", kb.rules, g)
    v = check_u_plus(wa_marking(), pgu)
    assert v.outcome == "violated"
    assert tuple(v.witness.sequence) == ("r1", "r2", "r3", "r1")


def test_u_plus_negation_aware_discounts_self_blocking_cycle():
    kb = load_kb("selfblock_cycle")
    g = grd(kb.rules, negation_aware=True)
    pgu = build("unifier", kb.rules, g, negation_aware=True)
    plain = check_u_plus(wa_marking(), pgu)
    aware = check_u_plus(wa_marking(), pgu, negation_aware=True)
    assert plain.outcome == "violated"
    assert aware.outcome == "satisfied"


def test_u_plus_vacuous_on_acyclic_graph():
    kb = load_kb("weak_acyclicity")
    g = grd(kb.rules)
    pgu = build("unifier", kb.rules, g)
    assert check_u_plus(wa_marking(), pgu).outcome == "satisfied"


# ---------------------------------------------------------------------------
# the analyzer

def test_analyze_weak_acyclicity_fixture():
    kb = load_kb("weak_acyclicity")
    rep = analyze(kb.rules)
    assert rep.outcome("wa") == "violated"
    assert rep.outcome("aGRD") == "satisfied"
    assert rep.outcome("wa^D") == "satisfied"
    assert rep.chase["oblivious"] == "guaranteed"
    assert rep.chase["skolem"] == "guaranteed"


def test_analyze_pgd_pgu_fixture():
    kb = load_kb("pgd_pgu")
    rep = analyze(kb.rules)
    assert rep.outcome("aGRD") == "violated"
    assert rep.outcome("wa") == "violated"
    assert rep.outcome("wa^D") == "violated"
    assert rep.outcome("wa^U") == "satisfied"
    assert rep.chase["oblivious"] == "not-guaranteed"
    assert rep.chase["core"] == "guaranteed"


def test_analyze_swap_cycle():
    kb = load_kb("swap_cycle")
    rep = analyze(kb.rules)
    assert rep.outcome("aGRD") == "violated"
    assert rep.outcome("wa") == "satisfied"


def test_analyze_empty_rule_set_all_satisfied():
    rep = analyze([])
    assert all(v.outcome == "satisfied" for v in rep.verdicts)
    assert all(s == "guaranteed" for s in rep.chase.values())


def test_analyze_report_serialization():
    kb = load_kb("weak_acyclicity")
    rep = analyze(kb.rules)
    doc = rep.to_json()
    assert doc["version"] == 1
    assert {p["property"] for p in doc["properties"]} == {
        "aGRD", "wa", "wa^D", "wa^U", "wa^U+"}
    text = rep.to_text()
    assert "chase termination guarantees" in text


def test_dot_exports():
    kb = load_kb("weak_acyclicity")
    g = grd(kb.rules)
    assert g.to_dot().startswith("digraph")
    assert 'label="1"' in g.to_dot()
    pg = build("unifier", kb.rules, g)
    assert pg.to_dot().startswith("digraph")


def test_verdict_monotonicity_on_random_rule_sets():
    rng = random.Random(4242)
    order = ("wa", "wa^D", "wa^U", "wa^U+")
    checked = 0
    for _ in range(15):
        rules = random_rule_set(rng, max_rules=3, max_atoms=2)
        try:
            rep = analyze(rules)
        except UnifierCapError:
            continue
        outcomes = [rep.outcome(n) for n in order]
        if "unknown" in outcomes:
            continue
        checked += 1
        for a, b in zip(outcomes, outcomes[1:]):
            if a == "satisfied":
                assert b == "satisfied", [str(r) for r in rules]
        g = grd(rules)
        assert rep.outcome("wa^D") == scc_check(wa_marking(), rules, g)
        full = build("full", rules).edge_set()
        dep = build("dependency", rules, g).edge_set()
        uni = build("unifier", rules, g).edge_set()
        assert uni <= dep <= full
        assert (check(wa_marking(), build("full", rules)).outcome
                == ("satisfied" if classical_wa(rules) else "violated"))
    assert checked >= 10
