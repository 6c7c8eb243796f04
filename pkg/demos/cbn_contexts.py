"""Call-by-need evaluation contexts: hole filling and the R reduction."""
from importlib.resources import files

from smt.contexts import fill, splits
from smt.dsl import load_spec
from smt.grammar import YES


def main():
    g = load_spec((files("smt") / "corpus" / "cbn.smt").read_text(encoding="utf-8"))
    u = g.u
    ctx = g.term("(λ x0 . []) x1")
    print("context:", g.show(ctx))
    print("filled with x2:", g.show(fill(u, ctx, [g.term("x2")])))

    t = g.term("x0 x1")
    print(f"ways to split {g.show(t)}:")
    for c, sub in splits(u, t):
        print(f"  {g.show(c):12} with {g.show(sub)}")

    for text in ("[] x1", "(λ x0 . x0) []", "λ x0 . []"):
        answer = g.member(g.term(text), "sE", 3)
        print(f"{text!r} in E at depth 3:", answer)

    redex = g.term(r"(λ x0 . x0 x1) (λ x2 . x2)")
    out = g.step(["R"])(redex)
    print(g.show(redex), "->", [g.show(o) for o in out])
    print("result is an expression:", all(g.member(o, "se", 4) == YES for o in out))


if __name__ == "__main__":
    main()
