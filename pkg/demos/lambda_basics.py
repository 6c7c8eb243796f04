"""Untyped lambda terms: alpha classes, free names, substitution and beta."""
from importlib.resources import files

from smt.dsl import load_spec
from smt.equiv import free_names, substitute
from smt.rewriting import frontiers, normal_forms


def corpus(name):
    return load_spec((files("smt") / "corpus" / f"{name}.smt").read_text(encoding="utf-8"))


def main():
    g = corpus("lambda")
    u = g.u
    # bound names are canonical, so alpha-equivalent terms are the same object
    a, b = g.term(r"\ x5 . x5 x9"), g.term(r"\ x1 . x1 x9")
    print("alpha classes coincide:", a is b, "->", g.show(a))
    print("free names:", sorted(g.show(n) for n in free_names(u, a)))

    # substitution renames the binder instead of capturing x0
    t = g.term(r"\ x0 . x1")
    print("(λ x0 . x1)[x1 := x0] =", g.show(substitute(u, t, g.term("x1"), g.term("x0"))))

    for d in range(4):
        print(f"exp at depth {d}: {len(g.enumerate('exp', d))} classes")

    step = g.step(["beta"])
    start = g.term(r"(\ x0 . x0 x0) ((\ x1 . x1) x2)")
    print("start:", g.show(start))
    for i, layer in enumerate(frontiers(step, start, 5), 1):
        print(f"  step {i}:", sorted(g.show(o) for o in layer))
    forms, truncated = normal_forms(step, start, 10)
    print("normal forms:", sorted(g.show(o) for o in forms), "(truncated)" if truncated else "")


if __name__ == "__main__":
    main()
