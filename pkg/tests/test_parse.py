import pytest

from smt.contexts import decompose
from smt.dsl import load_spec
from smt.errors import AmbiguousParse, NoParse, SpecSyntaxError

OPS = """
constructor [] "+" [] prec 1 assoc left;
constructor [] "*" [] prec 2 assoc left;
constructor [] "^" [] prec 3 assoc right;
constructor [] "=" [] prec 0 assoc none;
"""


@pytest.fixture
def g():
    return load_spec(OPS)


def test_precedence(g):
    assert g.term("a + b * c") is g.term("a + (b * c)")
    assert g.term("a * b + c") is g.term("(a * b) + c")
    assert g.term("a = b + c") is g.term("a = (b + c)")


def test_associativity(g):
    assert g.term("a + b + c") is g.term("(a + b) + c")
    assert g.term("a ^ b ^ c") is g.term("a ^ (b ^ c)")


def test_assoc_none_forbids_nesting(g):
    with pytest.raises(NoParse):
        g.term("a = b = c", strict=True)
    # outside strict mode the whole arrangement declares a new constructor
    (ctor, subs), = decompose(g.u, g.term("a = b = c"))
    assert len(subs) == 3


def test_undeclared_associativity_is_ambiguous():
    g = load_spec('constructor [] "+" [] prec 1;')
    with pytest.raises(AmbiguousParse):
        g.term("a + b + c")
    assert g.term("(a + b) + c") is not g.term("a + (b + c)")


def test_unknown_shape_is_rejected_in_strict_mode(g):
    with pytest.raises(NoParse):
        g.term("a ? b", strict=True)
    assert g.show(g.term("a ? b")) == "a ? b"


def test_explicit_parentheses_win(g):
    assert g.show(g.term("(a + b) * c")) == "(a + b) * c"


def test_first_use_declares_a_constructor():
    g = load_spec("")
    o = g.term("O1 @ O2")
    (ctor, subs), = decompose(g.u, o)
    assert g.show(ctor) == "[] @ []"
    assert subs == (g.term("O1"), g.term("O2"))
    (again, subs), = decompose(g.u, g.term("(O3 @ O4) @ O5"))
    assert again is ctor and subs[0] is g.term("O3 @ O4")


def test_splicing_two_constructors():
    g = load_spec("")
    g.term("⟨ O1 ⟩")
    g.term("! O2")
    assert g.term("⟨ ! O ⟩") is g.term("⟨ (! O) ⟩")
    # obj{...} suppresses splicing
    assert g.term("obj{⟨ ! O ⟩}") is not g.term("⟨ (! O) ⟩")


def test_unbalanced_parenthesis():
    g = load_spec(OPS)
    with pytest.raises(SpecSyntaxError):
        g.term("(a + b")
