import sys
from importlib.resources import files
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import EPS, HOLE  # noqa: E402
from smt.dsl import load_spec  # noqa: E402
from smt.terms import Sym, constructor_of, name_parts  # noqa: E402

CORPUS = ("lambda", "stlc", "records", "cbn")


def corpus_text(name):
    return (files("smt") / "corpus" / f"{name}.smt").read_text(encoding="utf-8")


def load(name, fresh=3):
    return load_spec(corpus_text(name), f"{name}.smt", fresh=fresh)


@pytest.fixture(scope="session")
def grammars():
    return {n: load(n) for n in CORPUS}


TAGS = {("λ", "."): "lam", (): "app", ("->",): "arr", ("λ", ":", "."): "lamT",
        ("=", ","): "cons", (":", ","): "tcons", ("{", "}"): "rec", (".",): "proj"}
NAME_TAGS = {"x": "v", "ty": "tv", "y": "y"}


def to_tuple(u, obj):
    """Read an engine object back into the oracle's tuple shape."""
    if obj.is_hole:
        return HOLE
    parts = name_parts(obj)
    if parts is not None:
        return (NAME_TAGS[parts[0]], parts[1])
    if obj is u.epsilon:
        return EPS
    ctor, subs = constructor_of(obj.arr)
    tag = TAGS[tuple(it.glyph for it in ctor if type(it) is Sym)]
    kids = [to_tuple(u, s) for s in subs]
    if tag == "lam":
        return ("lam", kids[0][1], kids[1])
    if tag == "lamT":
        return ("lamT", kids[0][1], kids[1], kids[2])
    return (tag,) + tuple(kids)


def to_text(t):
    """Fully parenthesised linear syntax for an oracle tuple."""
    tag = t[0]
    if tag == "v":
        return f"x{t[1]}"
    if tag == "tv":
        return f"ty{t[1]}"
    if tag == "y":
        return f"y{t[1]}"
    if tag == "hole":
        return "[]"
    if tag == "eps":
        return "ε"
    if tag == "lam":
        return f"(λ x{t[1]} . {to_text(t[2])})"
    if tag == "lamT":
        return f"(λ x{t[1]} : {to_text(t[2])} . {to_text(t[3])})"
    if tag == "app":
        return f"({to_text(t[1])} {to_text(t[2])})"
    if tag == "arr":
        return f"({to_text(t[1])} -> {to_text(t[2])})"
    if tag == "cons":
        return f"({to_text(t[1])} = {to_text(t[2])} , {to_text(t[3])})"
    if tag == "tcons":
        return f"({to_text(t[1])} : {to_text(t[2])} , {to_text(t[3])})"
    if tag == "rec":
        return "{ " + to_text(t[1]) + " }"
    if tag == "proj":
        return f"({to_text(t[1])} . {to_text(t[2])})"
    raise ValueError(t)
