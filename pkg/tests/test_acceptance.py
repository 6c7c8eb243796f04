"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Tolerances are exact (zero disagreements, set equality) and every item must
finish within TIME_BUDGET seconds."""
import random
import time

import oracles as O
import pytest
from conftest import corpus_text, load, to_text, to_tuple

from smt.contexts import fill
from smt.dsl import load_spec
from smt.equiv import alpha_equivalent, free_names, substitute
from smt.errors import AmbiguousParse, ArityMismatch, SubstUndefined
from smt.grammar import NO, UNKNOWN, YES
from smt.rewriting import normal_forms
from smt.terms import Ref, Sym

TIME_BUDGET = 10.0
DEPTHS = (0, 1, 2, 3)
FRESH = 3

LAMBDA_NO_ALPHA = """
names x;
constructor "λ" [] "." [] prec 1;
constructor [] [] prec 2 assoc left;
binder "λ" [] "." [] binds 1 in {2};
"""


@pytest.fixture
def verdict(capsys):
    start = time.perf_counter()

    def report(n, title, ok, detail=""):
        elapsed = time.perf_counter() - start
        ok = bool(ok) and elapsed < TIME_BUDGET
        line = f"[{'PASS' if ok else 'FAIL'}] AC{n} {title}: {detail} ({elapsed:.2f}s)"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def names_of(g, objs):
    return sorted(g.show(o) for o in objs)


# ------------------------------------------------------------------ 1

def test_ac1_hole_filling(verdict):
    g = load_spec("")
    cases = [
        ("[] []", ["O", "O"], "O O"),
        ("over{ [] }", ["O"], "over{ O }"),
        ("([] -> O1)", ["O2 -> O2"], "(O2 -> O2) -> O1"),
        ("[] ⁅ [] := [] ⁆", ["O1", "O2", "O3"], "O1 ⁅ O2 := O3 ⁆"),
    ]
    bad = []
    for ctx, args, want in cases:
        got = fill(g.u, g.term(ctx), [g.term(a) for a in args])
        if got is not g.term(want):
            bad.append((ctx, g.show(got), want))
    raised = 0
    for ctx, n in (("[] []", 1), ("[] []", 3), ("[] ⁅ [] := [] ⁆", 2), ("over{ [] }", 0)):
        try:
            fill(g.u, g.term(ctx), [g.term(f"O{i}") for i in range(n)])
        except ArityMismatch:
            raised += 1
    verdict(1, "hole filling", not bad and raised == 4,
            f"{len(cases) - len(bad)}/4 goldens, {raised}/4 arity mismatches raised")


# ------------------------------------------------------------------ 2

def test_ac2_free_names(verdict):
    g = load("lambda")
    app = names_of(g, free_names(g.u, g.term(r"(\ x1 . (x1 x2)) x3")))
    h = load_spec('names x; constructor "let" [] "=" [] "in" [] prec 1;'
                  'constructor [] [] prec 2 assoc left;'
                  'binder "let" [] "=" [] "in" [] binds 1 in {1, 3};')
    let = names_of(h, free_names(h.u, h.term("let x1 = x3 in (x1 x2)")))
    want = ["x2", "x3"]
    verdict(2, "free names", app == want and let == want, f"application {app}, let {let}")


# ------------------------------------------------------------------ 3

def test_ac3_alpha(verdict):
    g = load("lambda")
    plain = load_spec(LAMBDA_NO_ALPHA)
    modulo = g.term(r"\ x1 . x1") is g.term(r"\ x2 . x2")
    identity = plain.term(r"\ x1 . x1") is not plain.term(r"\ x2 . x2")

    u = g.u
    memo = {}

    def build(t):
        got = memo.get(t)
        if got is None:
            if t[0] == "v":
                got = u.name("x", t[1])
            elif t[0] == "lam":
                got = u.make((Sym("λ"), Ref(u.name("x", t[1])), Sym("."), Ref(build(t[2]))))
            else:
                got = u.make((Ref(build(t[1])), Ref(build(t[2]))))
            memo[t] = got
        return got

    pool = range(3)
    terms = O.lambda_terms(4, pool)
    classes = O.swap_classes(terms, pool)
    objs = {t: build(t) for t in terms}
    by_obj, by_class = {}, {}
    for t in terms:
        by_obj.setdefault(objs[t], set()).add(classes[t])
        by_class.setdefault(classes[t], set()).add(objs[t])
    bad = sum(len(s) > 1 for s in by_obj.values()) + sum(len(s) > 1 for s in by_class.values())
    verdict(3, "alpha equivalence", modulo and identity and bad == 0,
            f"modulo={modulo} identity-differs={identity}, {len(terms)} terms, "
            f"{len(by_class)} classes, {bad} disagreements")


# ------------------------------------------------------------------ 4

def _rand_term(rng, n):
    if n == 0 or rng.random() < 0.25:
        return ("v", rng.randrange(4))
    if rng.random() < 0.5:
        return ("lam", rng.randrange(4), _rand_term(rng, n - 1))
    k = rng.randrange(n)
    return ("app", _rand_term(rng, k), _rand_term(rng, n - 1 - k))


def test_ac4_substitution(verdict):
    plain = load_spec(LAMBDA_NO_ALPHA)
    alpha = load("lambda")
    t, x, r = r"\ x1 . x2", "x2", "x1"
    try:
        substitute(plain.u, plain.term(t), plain.term(x), plain.term(r))
        capture_undefined = False
    except SubstUndefined:
        capture_undefined = True
    got = substitute(alpha.u, alpha.term(t), alpha.term(x), alpha.term(r))
    capture_alpha = alpha_equivalent(alpha.u, got, alpha.term(r"\ x5 . x1"))

    rng = random.Random(7)
    bad = 0
    for alpha_mode, g in ((False, plain), (True, alpha)):
        for _ in range(200):
            t, r = _rand_term(rng, 4), _rand_term(rng, 2)
            x = rng.randrange(4)
            pool = range(max(O.names(t) | O.names(r) | {x}) + 3)
            want = O.subst(t, x, r, alpha_mode, pool)
            if want != O.UNDEF and alpha_mode:
                want = O.key(want)
            try:
                res = substitute(g.u, g.term(to_text(t)), g.u.name("x", x), g.term(to_text(r)))
                res = to_tuple(g.u, res)
                res = O.key(res) if alpha_mode else res
            except SubstUndefined:
                res = O.UNDEF
            bad += res != want
    verdict(4, "substitution", capture_undefined and capture_alpha and bad == 0,
            f"capture undefined under identity={capture_undefined}, "
            f"defined under alpha={capture_alpha}, 200 random instances per mode, "
            f"{bad} disagreements")


# ------------------------------------------------------------------ 5

def test_ac5_fixed_points(verdict):
    oracles = {
        "lambda": lambda: [{"exp": s} for s in O.lambda_strata(3, FRESH)],
        "stlc": lambda: O.stlc_strata(3, FRESH),
        "records": lambda: O.stlc_strata(3, FRESH, records=True),
    }
    mismatches, non_monotone, checked = [], [], 0
    for name, make in oracles.items():
        g = load(name, fresh=FRESH)
        strata = make()
        for s in g.rules:
            prev = frozenset()
            for d in DEPTHS:
                got = g.enumerate(s, d)
                keys = {O.key(to_tuple(g.u, o)) for o in got}
                if keys != set(strata[d][s]):
                    mismatches.append((name, s, d))
                if not prev <= got:
                    non_monotone.append((name, s, d))
                prev = got
                checked += 1
    verdict(5, "fixed points", not mismatches and not non_monotone,
            f"{checked} (spec, set, depth) strata, mismatches {mismatches}, "
            f"monotonicity failures {non_monotone}")


# ------------------------------------------------------------------ 6

def test_ac6_parsing(verdict):
    g = load_spec("constructor [] [] prec 2 assoc left;")
    left = g.term("O1 O2 O3") is g.term("(O1 O2) O3")
    h = load_spec("constructor [] [] prec 2;")
    try:
        h.term("O1 O2 O3")
        ambiguous = False
    except AmbiguousParse:
        ambiguous = True
    k = load_spec("")
    k.term("⟨ O1 ⟩")
    k.term("! O2")
    spliced = k.term("⟨ ! O ⟩")
    two = spliced is k.term("⟨ (! O) ⟩") and spliced is not k.term("obj{⟨ ! O ⟩}")
    verdict(6, "parsing", left and ambiguous and two,
            f"left-assoc={left}, undeclared assoc ambiguous={ambiguous}, splice={two}")


# ------------------------------------------------------------------ 7

H = O.HOLE


def _lam(i, b):
    return ("lam", i, b)


def _app(a, b):
    return ("app", a, b)


# (Â, A, Ǎ, E1, E2) with the bound name x0
CBN_POSITIVES = [
    (H, H, H, H, H),
    (H, H, H, _app(H, ("v", 1)), H),
    (H, H, H, H, _app(H, ("v", 1))),
    (H, _app(_lam(1, H), ("v", 2)), H, H, H),
    (H, H, _app(_lam(1, H), ("v", 2)), H, H),
    (H, H, _app(_lam(1, H), ("v", 2)), _app(H, ("v", 1)), H),
    (H, H, _app(_lam(1, H), ("v", 2)), H, _app(H, ("v", 1))),
    (H, H, H, _app(H, ("v", 1)), _app(H, ("v", 2))),
    (H, _app(_lam(1, H), ("v", 2)), _app(_lam(2, H), ("v", 1)), H, H),
    (H, _app(_lam(1, H), ("v", 2)), H, _app(H, ("v", 1)), _app(H, ("v", 2))),
]

CBN_VIOLATORS = [
    "((λ x0 . (λ x1 . x0)) [])",
    "((λ x0 . (λ x1 . (x0 x1))) [])",
    "((λ x0 . (x1 x0)) [])",
    "((λ x0 . (x1 (x0 x1))) [])",
    "(((λ x0 . (x1 x0)) []) x2)",
    "(((λ x0 . (x1 (x0 x1))) []) x2)",
    "((λ x0 . (λ x1 . (x0 x2))) [])",
    "((λ x0 . (λ x1 . ((x0 x1) x2))) [])",
    "(((λ x0 . (λ x1 . (x0 x2))) []) x2)",
    "(((λ x0 . (λ x1 . ((x0 x1) x2))) []) x2)",
]


def test_ac7_call_by_need(verdict, grammars):
    g = grammars["cbn"]
    strata = O.cbn_strata(3, FRESH)[3]
    yes = 0
    for Ah, A, Ac, E1, E2 in CBN_POSITIVES:
        t = O.fill(Ah, _app(O.fill(A, _lam(0, O.fill(Ac, O.fill(E1, ("v", 0))))), E2))
        oracle_ok = (O.key(O.fill(Ah, Ac)) in strata["sA"] and O.key(t) in strata["sE"])
        yes += oracle_ok and g.member(g.term(to_text(t)), "sE", 3) == YES
    rejected = 0
    for text in CBN_VIOLATORS:
        t = g.term(text)
        oracle_out = O.key(to_tuple(g.u, t)) not in strata["sE"]
        rejected += oracle_out and g.member(t, "sE", 3) in (NO, UNKNOWN)
    redex = g.term("(λ x0 . x0 x1) (λ x2 . x2)")
    out = g.step(["R"])(redex)
    fired = [o for o in out if o is g.term("(λ x0 . x0) x1")]
    reenters = bool(fired) and g.member(fired[0], "se", 3) == YES
    verdict(7, "call-by-need contexts", yes == 10 and rejected == 10 and reenters,
            f"positives {yes}/10 Yes, violators {rejected}/10 rejected, "
            f"redex -> {names_of(g, out)} in se={reenters}")


# ------------------------------------------------------------------ 8

def test_ac8_records(verdict, grammars):
    g = grammars["records"]
    same = g.term("{ y1 = x0 , y2 = x1 , ε }") is g.term("{ y2 = x1 , y1 = x0 , ε }")
    dup = g.member(g.term("y1 = x0 , y1 = x1 , ε"), "Term-Records", 3)
    ok = g.member(g.term("y1 = x0 , y2 = x1 , ε"), "Term-Records", 3)
    labels_distinct = all(len(set(_labels(to_tuple(g.u, r)))) == len(_labels(to_tuple(g.u, r)))
                          for r in g.enumerate("Term-Records", 3))

    def rcd(gr):
        return lambda t: [s for s, _ in gr.step_root("RCD", t)]

    cases = {
        "{ y1 = x0 , y2 = x1 , ε } . y2": "x1",
        "{ y1 = ({ y2 = x1 , ε } . y2) , ε } . y1": "x1",
        "{ y2 = ({ y1 = x0 , ε } . y1) , ε } . y2": "x0",
    }
    normal = all(normal_forms(rcd(g), g.term(t), 10)[0] == {g.term(v)}
                 for t, v in cases.items())
    # without the congruence rules the nested projection is stuck
    bare = load_spec(corpus_text("records").split("// congruence")[0])
    nested = "{ y1 = ({ y2 = x1 , ε } . y2) , ε } . y1"
    stuck = normal_forms(rcd(bare), bare.term(nested), 10)[0] == {bare.term(nested)}
    passed = same and dup == NO and ok == YES and labels_distinct and normal and stuck
    verdict(8, "records", passed,
            f"reorder same={same}, duplicate label {dup}, distinct {ok}, "
            f"RCD normal forms={normal}, congruence needed={stuck}")


def _labels(t):
    out = []
    while t[0] == "cons":
        out.append(t[1])
        t = t[3]
    return out


# ------------------------------------------------------------------ 9

EFFECT_HEAD = """
names x;
constructor "λ" [] "." [] prec 1;
constructor [] [] prec 2 assoc left;
"""


def _strata(g, name):
    return [g.enumerate(name, d) for d in DEPTHS]


def _as_keys(g, strata):
    return [{O.key(to_tuple(g.u, o)) for o in s} for s in strata]


def test_ac9_effects(verdict):
    # a rule without a leading ellipsis forgets what came before
    replaced = load_spec(EFFECT_HEAD + 'set exp (e) ::= x | e e;'
                         'set exp (e) ::= x | "λ" x "." e;')
    fresh = load_spec(EFFECT_HEAD + 'set exp (e) ::= x | "λ" x "." e;')
    replace_ok = _as_keys(replaced, _strata(replaced, "exp")) == \
        _as_keys(fresh, _strata(fresh, "exp"))

    # single-alternative rules accumulate
    single = load_spec(EFFECT_HEAD + 'set exp (e) ::= x; set exp (e) ::= e e;'
                       'set exp (e) ::= "λ" x "." e;')
    oracle = [set(s) for s in O.lambda_strata(3, FRESH)]
    merge_ok = _as_keys(single, _strata(single, "exp")) == oracle

    # m m becomes m1 m2: both sides are chosen independently
    dec = load_spec("names x; constructor [] [] prec 2 assoc left; set M (m) ::= x | m m;")
    linked = load_spec("names x; constructor [] [] prec 2 assoc left;"
                       "set M (m) linked ::= x | m m;")
    xs = [("v", i) for i in range(FRESH)]
    indep = {O.key(t) for t in xs + [("app", a, b) for a in xs for b in xs]}
    tied = {O.key(t) for t in xs + [("app", a, a) for a in xs]}
    dec_ok = _as_keys(dec, [dec.enumerate("M", 2)])[0] == indep
    linked_ok = _as_keys(linked, [linked.enumerate("M", 2)])[0] == tied
    verdict(9, "effect semantics", replace_ok and merge_ok and dec_ok and linked_ok,
            f"replace={replace_ok}, single-alternative merge={merge_ok}, "
            f"independent m1 m2={dec_ok} (linked reading {linked_ok})")


def test_positive_components_are_grammatical():
    # each hand-built component belongs to its oracle set
    strata = O.cbn_strata(3, FRESH)[3]
    for Ah, A, Ac, E1, E2 in CBN_POSITIVES:
        assert O.key(Ah) in strata["sÂ"]
        assert O.key(A) in strata["sA"]
        assert O.key(Ac) in strata["sǍ"]
        assert O.key(E1) in strata["sE"] and O.key(E2) in strata["sE"]

