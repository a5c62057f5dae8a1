import pytest

from conftest import canonical_atoms, load_kb

from exrules import (
    agglomerate,
    build,
    compatible,
    compatible_sequence,
    depends,
    grd,
    parse_atoms,
    self_blocking_unifier,
    unified_rule,
    unifiers,
)
from exrules.rules import is_self_blocking, rename_apart
from exrules.terms import Var, vars_of
from exrules.unification import FoldState, fold_sequence, remap_unifier


def A(text):
    return parse_atoms(text)


def names(terms):
    return {t.name for t in terms if isinstance(t, Var)}


def test_no_piece_unifier_when_separating_variable_meets_existential():
    kb = load_kb("weak_acyclicity")
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    assert unifiers(r2, r1, require_piece=True) == []
    # without the piece condition the p-atoms do unify
    assert unifiers(r2, r1, require_piece=False)


def test_unique_piece_unifier_merges_u_and_y_only():
    kb = load_kb("pgd_pgu")
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    us = unifiers(r2, r1, require_piece=True)
    assert len(us) == 1
    (u,) = us
    assert canonical_atoms(u.body_part) == canonical_atoms(A("q(U)"))
    assert len(u.classes) == 1
    assert names(u.classes[0]) == {"U", "Y"}


def test_relaxed_unifiers_include_the_full_cover():
    kb = load_kb("pgd_pgu")
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    us = unifiers(r2, r1, require_piece=False)
    assert any(names(frozenset().union(*u.classes)) == {"U", "V", "Y", "Z"}
               and len(u.classes) == 1 for u in us)
    assert all(u.piece == (len(u.classes) == 1 and names(u.classes[0]) == {"U", "Y"})
               for u in us)


def test_dependency_weak_acyclicity_fixture():
    kb = load_kb("weak_acyclicity")
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    assert not depends(r1, r2)
    assert depends(r2, r1)


def test_rule_depends_on_itself_without_existentials():
    kb = load_kb("swap_cycle")
    (r,) = kb.rules
    assert depends(r, r)


def test_no_dependency_without_shared_predicates():
    kb = load_kb("weak_acyclicity")
    from exrules import Rule
    other = Rule("o", A("zz(X)"), A("ww(X)"))
    assert not depends(kb.rule("r1"), other)


def test_grd_weak_acyclicity_single_edge():
    kb = load_kb("weak_acyclicity")
    g = grd(kb.rules)
    assert set(g.edges) == {("r2", "r1")}
    assert g.is_acyclic() and g.find_cycle() is None


def test_grd_empty_rule_set():
    g = grd([])
    assert g.nodes == () and g.edges == {}


def test_grd_two_cycle_on_pgd_pgu():
    kb = load_kb("pgd_pgu")
    g = grd(kb.rules)
    assert set(g.edges) == {("r1", "r2"), ("r2", "r1")}
    assert not g.is_acyclic()


def test_unified_rule_paper_example():
    kb = load_kb("further_refinements")
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    (u,) = unifiers(r2, r1, require_piece=True)
    folded = unified_rule(r1, u, r2)
    assert folded.body == r1.body
    assert canonical_atoms(folded.body | folded.head) == canonical_atoms(
        A("p(X1,Y1), q(Y1,Z1), r(Y1,Z1)"))
    assert names(folded.existentials) == {"Z1"}


def test_unified_rule_carries_negative_bodies():
    kb = load_kb("selfblock_pair")
    ra, rb = kb.rule("ra"), kb.rule("rb")
    rb2, _ = rename_apart(rb, "c")
    (u,) = unifiers(rb2, ra, require_piece=True)
    folded = unified_rule(ra, u, rb2)
    assert len(folded.negbodies) == 1
    assert canonical_atoms(folded.body | folded.head | folded.negbodies[0]) == \
        canonical_atoms(A("q(X), r(X,Y), p(X), q(Y)"))
    assert is_self_blocking(folded)


def test_unified_rule_without_negation_has_no_negative_bodies():
    kb = load_kb("further_refinements")
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    (u,) = unifiers(r2, r1, require_piece=True)
    assert unified_rule(r1, u, r2).negbodies == ()


def test_self_blocking_unifier():
    kb = load_kb("selfblock_pair")
    ra, rb = kb.rule("ra"), kb.rule("rb")
    rb2, _ = rename_apart(rb, "c")
    (u,) = unifiers(rb2, ra, require_piece=True)
    assert self_blocking_unifier(ra, u, rb2)
    pos_kb = load_kb("further_refinements")
    r1, r2 = pos_kb.rule("r1"), pos_kb.rule("r2")
    (u2,) = unifiers(r2, r1, require_piece=True)
    assert not self_blocking_unifier(r1, u2, r2)


def test_self_blocking_composite_cycle():
    kb = load_kb("selfblock_cycle")
    r1, r2, r3 = kb.rule("r1"), kb.rule("r2"), kb.rule("r3")
    (u1,) = unifiers(r2, r1, require_piece=True)
    st = FoldState(r1)
    assert st.extend(u1, r2)
    f12 = st.as_rule()
    (u2,) = unifiers(r3, f12, require_piece=True)
    assert st.extend(u2, r3)
    f123 = st.as_rule()
    assert is_self_blocking(f123)
    assert canonical_atoms(f123.head) == canonical_atoms(
        A("r(X1,Y1), s(X1,Y1), p(X1), q(Y1)"))


def test_agglomerate_trivial_path_only():
    kb = load_kb("pgd_pgu")
    g = grd(kb.rules)
    agg = agglomerate(kb.rules, g, "r1", "r2")
    assert agg is not None
    assert agg.body == kb.rule("r1").body  # consumed-term set is empty
    assert agg.head == kb.rule("r1").head


def test_agglomerate_direct_predecessor():
    kb = load_kb("weak_acyclicity")
    g = grd(kb.rules)
    agg = agglomerate(kb.rules, g, "r2", "r1")
    assert agg.body == kb.rule("r2").body


def test_agglomerate_rejects_unreachable_pair():
    kb = load_kb("weak_acyclicity")
    g = grd(kb.rules)
    with pytest.raises(ValueError):
        agglomerate(kb.rules, g, "r1", "r2")


def test_agglomerate_collects_consumed_head_terms():
    kb = load_kb("further_refinements")
    g = grd(kb.rules)
    agg = agglomerate(kb.rules, g, "r1", "r3")
    fr_terms = {a.args[0] for a in agg.body if a.pred == "fr"}
    assert names(fr_terms) == {"Y1", "Z1"}
    assert not agg.existentials  # fr(Z1) strips the existential status


def test_piece_unifiers_are_compatible():
    kb = load_kb("further_refinements")
    g = grd(kb.rules)
    pgu = build("unifier", kb.rules, g)
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    (u,) = unifiers(r2, r1, require_piece=True)
    assert compatible(u, pgu)


def test_relaxed_unifier_compatible_through_the_graph():
    kb = load_kb("further_refinements")
    g = grd(kb.rules)
    pgu = build("unifier", kb.rules, g)
    r1, r2, r3 = kb.rule("r1"), kb.rule("r2"), kb.rule("r3")
    (u1,) = unifiers(r2, r1, require_piece=True)
    f12 = unified_rule(r1, u1, r2)
    # relaxed unifier of B3 with the folded head, merging Y3 with Z1
    relaxed = [u for u in unifiers(r3, f12, require_piece=False) if not u.piece]
    assert relaxed
    target = [u for u in relaxed
              if any(names(c) >= {"Y3", "Z1"} for c in u.classes)]
    assert target
    assert compatible(target[0], pgu, producer=f12, consumer=r3)


def test_incompatible_when_existential_position_has_no_path():
    kb = load_kb("pgd_pgu")
    g = grd(kb.rules)
    pgu = build("unifier", kb.rules, g)
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    # sequence (r2 u1 r1 u2 r2'): the second unifier sends a body term of the
    # copied r2 onto the existential Z of r1, whose positions have no
    # outgoing transition edges in the unifier graph.
    (u1,) = unifiers(r1, r2, require_piece=True)
    st = FoldState(r2)
    assert st.extend(u1, r1)
    f21 = st.as_rule()
    r2c, vmap = rename_apart(r2, "cp")
    origin = {v2: v for v, v2 in vmap.items()}
    cand = [u for u in unifiers(r2c, f21, require_piece=False)
            if any("Z" in names(c) and names(c) & {"U"} for c in u.classes)]
    assert cand
    assert not compatible(cand[0], pgu, producer=f21, consumer=r2c, origin=origin)


def test_compatible_sequence_from_the_refinements_example():
    kb = load_kb("further_refinements")
    g = grd(kb.rules)
    pgu = build("unifier", kb.rules, g)
    r1, r2, r3 = kb.rule("r1"), kb.rule("r2"), kb.rule("r3")
    (u1,) = unifiers(r2, r1, require_piece=True)
    (u2,) = unifiers(r3, r2, require_piece=True)
    r1c, vmap = rename_apart(r1, "cp")
    origin = {v2: v for v, v2 in vmap.items()}
    (u3,) = unifiers(r1c, r3, require_piece=True)
    assert compatible_sequence([r1, u1, r2, u2, r3, u3, r1c], pgu, origin)


def test_compatible_sequence_length_one():
    kb = load_kb("further_refinements")
    g = grd(kb.rules)
    pgu = build("unifier", kb.rules, g)
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    (u1,) = unifiers(r2, r1, require_piece=True)
    assert compatible_sequence([r1, u1, r2], pgu)


def test_compatible_sequence_rejects_unreachable_merge():
    kb = load_kb("pgd_pgu")
    g = grd(kb.rules)
    pgu = build("unifier", kb.rules, g)
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    (u1,) = unifiers(r1, r2, require_piece=True)
    r2c, vmap = rename_apart(r2, "cp")
    origin = {v2: v for v, v2 in vmap.items()}
    f21 = unified_rule(r2, u1, r1)
    cand = [u for u in unifiers(r2c, f21, require_piece=False)
            if any("Z" in names(c) and names(c) & {"U"} for c in u.classes)]
    assert not compatible_sequence([r2, u1, r1, cand[0], r2c], pgu, origin)


def test_malformed_alternation_raises():
    kb = load_kb("further_refinements")
    r1, r2 = kb.rule("r1"), kb.rule("r2")
    (u1,) = unifiers(r2, r1, require_piece=True)
    with pytest.raises(ValueError):
        compatible_sequence([r1, u1], None)


def test_depends_is_validated_against_frozen_instances():
    # brute-force oracle: try pairs of rule applications on frozen bodies
    from exrules.rules import apply
    from exrules.homomorphism import homomorphisms
    from exrules.rules import is_useful, pos as positive
    from exrules.terms import freeze, subst_atoms, FreshVars

    def oracle(producer, consumer):
        """Semantic dependency over one frozen application, all unifier guesses."""
        consumer2, _ = rename_apart(consumer, "or")
        for u in unifiers(consumer2, producer, require_piece=False):
            mu = u.term_map()
            from exrules.terms import apply_term_map
            f0 = apply_term_map(mu, producer.body) | apply_term_map(
                mu, frozenset(consumer2.body) - u.body_part)
            frozen, fmap = freeze(f0)
            trig = {}
            for v in vars_of(producer.body):
                t = mu.get(v, v)
                if not isinstance(t, Var):
                    trig[v] = t
                else:
                    trig[v] = fmap.get(t, t)
            after = apply(frozen, positive(producer), trig, FreshVars())
            for pp in homomorphisms(consumer2.body, after):
                if subst_atoms(pp, consumer2.body) <= frozen:
                    continue
                if is_useful(pp, positive(consumer2), after):
                    return True
        return False

    for name in ("weak_acyclicity", "pgd_pgu", "further_refinements", "swap_cycle"):
        kb = load_kb(name)
        for p in kb.rules:
            for c in kb.rules:
                assert bool(depends(p, c)) == oracle(p, c), (name, p.id, c.id)
