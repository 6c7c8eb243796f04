"""Records modulo field order, typed lambda terms and projection."""
from importlib.resources import files

from smt.dsl import load_spec
from smt.rewriting import normal_forms


def main():
    g = load_spec((files("smt") / "corpus" / "records.smt").read_text(encoding="utf-8"))
    a = g.term("{ y2 = x1 , y1 = x0 , ε }")
    b = g.term("{ y1 = x0 , y2 = x1 , ε }")
    print("field order is irrelevant:", a is b, "->", g.show(a))
    print("duplicate labels form a record:",
          g.member(g.term("{ y1 = x0 , y1 = x1 , ε }"), "texp", 4))

    step = g.step(["RCD", "beta"])
    for text in ("{ y1 = x0 , ε } . y1", "({ y2 = λ x0 : ty0 . x0 , ε } . y2) x3",
                 r"(\ x0 : ty0 . x0) ({ y1 = x2 , ε } . y1)"):
        forms, _ = normal_forms(step, g.term(text), 10)
        print(f"{text}  =>  {sorted(g.show(o) for o in forms)}")


if __name__ == "__main__":
    main()
