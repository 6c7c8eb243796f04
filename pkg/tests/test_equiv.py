import pytest
from conftest import load

from smt.dsl import load_spec
from smt.equiv import (ALPHA, Schema, alpha_equivalent, declare_name_group, free_names,
                       register_equivalence, substitute, swap_names)
from smt.errors import (HoleEquivalenceViolation, IllFormed, NotSameGroup, OverlappingGroup,
                        SubstUndefined, UndefinedFreeNames)
from smt.patterns import PConst
from smt.terms import HOLE
from smt.universe import Universe

PLAIN = """
names x;
constructor "λ" [] "." [] prec 1;
constructor [] [] prec 2 assoc left;
binder "λ" [] "." [] binds 1 in {2};
"""


@pytest.fixture
def lam():
    return load("lambda")


@pytest.fixture
def plain():
    return load_spec(PLAIN)


def shown(g, objs):
    return sorted(g.show(o) for o in objs)


def test_groups_may_not_overlap():
    u = Universe()
    declare_name_group(u, "x")
    with pytest.raises(OverlappingGroup):
        declare_name_group(u, "x")


def test_free_names_respect_binding(lam):
    assert shown(lam, free_names(lam.u, lam.term(r"\ x1 . x1 x2"))) == ["x2"]
    assert shown(lam, free_names(lam.u, lam.term(r"(\ x1 . x1) x1"))) == ["x1"]
    assert free_names(lam.u, lam.term(r"\ x1 . \ x2 . x1 x2")) == frozenset()


def test_binder_may_scope_over_its_own_position():
    g = load_spec('names x; constructor "let" [] "=" [] "in" [] prec 1;'
                  'constructor [] [] prec 2 assoc left;'
                  'binder "let" [] "=" [] "in" [] binds 1 in {1, 3};')
    assert shown(g, free_names(g.u, g.term("let x1 = x3 in x1 x2"))) == ["x2", "x3"]
    # the second hole lies outside the scope, so x1 there stays free
    assert shown(g, free_names(g.u, g.term("let x1 = x1 in x1 x2"))) == ["x1", "x2"]


def test_swap_exchanges_every_occurrence(plain):
    t = plain.term(r"\ x1 . x1 x2")
    got = swap_names(plain.u, plain.term("x1"), plain.term("x2"), t)
    assert got is plain.term(r"\ x2 . x2 x1")
    assert swap_names(plain.u, plain.term("x1"), plain.term("x2"), got) is t


def test_swap_needs_names_of_one_group():
    g = load_spec("names x, y; constructor [] [] prec 2 assoc left;")
    with pytest.raises(NotSameGroup):
        swap_names(g.u, g.term("x1"), g.term("y1"), g.term("x1 y1"))
    with pytest.raises(NotSameGroup):
        swap_names(g.u, g.term("x1"), g.term("O"), g.term("x1"))


def test_alpha_only_when_declared(lam, plain):
    assert lam.term(r"\ x1 . x1") is lam.term(r"\ x7 . x7")
    assert plain.term(r"\ x1 . x1") is not plain.term(r"\ x7 . x7")
    assert alpha_equivalent(lam.u, lam.term(r"\ x1 . x2"), lam.term(r"\ x3 . x2"))
    assert not alpha_equivalent(lam.u, lam.term(r"\ x1 . x2"), lam.term(r"\ x2 . x2"))


def test_alpha_is_registered_once_and_bumps_version():
    u = Universe()
    v = u.version
    assert register_equivalence(u, ALPHA) == v + 1 and u.alpha


def test_contexts_are_not_merged_by_alpha(lam):
    # objects containing holes keep their exact arrangement
    assert lam.term(r"\ x1 . []") is not lam.term(r"\ x2 . []")


def test_substitution_basics(lam):
    u = lam.u
    x1, x2 = lam.term("x1"), lam.term("x2")
    assert substitute(u, x1, x1, x2) is x2
    t = lam.term(r"\ x1 . x1")
    assert substitute(u, t, x1, x2) is t
    got = substitute(u, lam.term(r"(\ x1 . x1 x2) x2"), x2, lam.term("x3"))
    assert got is lam.term(r"(\ x1 . x1 x3) x3")


def test_substitution_avoids_capture_under_alpha(lam):
    got = substitute(lam.u, lam.term(r"\ x1 . x2"), lam.term("x2"), lam.term("x1"))
    assert shown(lam, free_names(lam.u, got)) == ["x1"]
    assert got is lam.term(r"\ x9 . x1")


def test_substitution_capture_is_undefined_without_alpha(plain):
    with pytest.raises(SubstUndefined):
        substitute(plain.u, plain.term(r"\ x1 . x2"), plain.term("x2"), plain.term("x1"))
    # the binder shields its own name, so no capture question arises
    t = plain.term(r"\ x1 . x1")
    assert substitute(plain.u, t, plain.term("x1"), plain.term("x2")) is t


def test_substitution_target_must_be_a_name(lam):
    with pytest.raises(IllFormed):
        substitute(lam.u, lam.term("x1"), lam.term("x1 x2"), lam.term("x3"))


def test_schemas_may_not_relate_holes():
    u = Universe()
    with pytest.raises(HoleEquivalenceViolation):
        register_equivalence(u, Schema(PConst(HOLE), PConst(u.atom("a")),
                                       PConst(HOLE), PConst(u.atom("a"))))


def test_schemas_may_not_cross_groups():
    with pytest.raises(NotSameGroup):
        load_spec("names x, y; equiv x1 <=> y1;")


def test_commutativity_schema_merges_both_orders():
    g = load_spec('constructor [] "+" [] prec 1; set exp (e) ::= a | b | e + e;'
                  'equiv e1 + e2 <=> e2 + e1;')
    assert g.term("a + b") is g.term("b + a")
    assert g.term("(a + b) + a") is g.term("a + (b + a)")


def test_free_names_must_agree_across_representatives():
    g = load_spec('names x; constructor "K" [] [] prec 1; set exp (e) ::= a;'
                  'equiv K x1 e <=> K x2 e;')
    t = g.term("K x1 a")
    assert t is g.term("K x2 a")
    with pytest.raises(UndefinedFreeNames):
        free_names(g.u, t)


def test_beta_with_schemas_declared():
    g = load("records")
    assert free_names(g.u, g.term("x2")) == {g.term("x2")}
    step = g.step(["beta"])
    assert step(g.term(r"(\ x0 : ty0 . x0 x0) x2")) == [g.term("x2 x2")]
