"""Command-line front end: ``smt <command> [flags] args...``.

Exit codes: 0 answered, 1 negative answer, 2 usage or spec error, 3 engine error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .contexts import fill
from .dsl import diagnostic, load_spec, read_term
from .equiv import alpha_equivalent, free_names, substitute
from .errors import DuplicateSetName, SMTError, SpecSyntaxError, UnknownSet
from .grammar import NO, UNKNOWN, YES, Grammar
from .patterns import object_key
from .rewriting import frontiers, normal_forms

SCHEMA = "smt/1"
USAGE_ERRORS = (SpecSyntaxError, UnknownSet, DuplicateSetName)


class UsageError(Exception):
    pass


def corpus_names():
    return sorted(p.name for p in resources.files("smt").joinpath("corpus").iterdir()
                  if p.name.endswith(".smt"))


def find_spec(name):
    """A spec path, or the name of a bundled spec (with or without ``.smt``)."""
    p = Path(name)
    if p.is_file():
        return p.read_text(encoding="utf-8"), str(p)
    corpus = resources.files("smt").joinpath("corpus")
    for cand in (name, name + ".smt"):
        f = corpus.joinpath(Path(cand).name)
        if f.is_file():
            return f.read_text(encoding="utf-8"), Path(cand).name
    raise UsageError(f"no spec file {name!r} (bundled: {', '.join(corpus_names())})")


def open_grammar(args) -> Grammar:
    if not args.spec:
        return Grammar(fresh=args.fresh)
    text, file = find_spec(args.spec)
    args.spec_file = file
    return load_spec(text, file, fresh=args.fresh)


def set_name(g, name):
    """Accept a set name or one of its metavariables."""
    if name in g.rules:
        return name
    if name in g.metavars:
        return g.metavars[name]
    raise UnknownSet(f"no set named {name}")


def _color(text, code):
    env = os.environ.get("SMT_COLOR")
    on = sys.stdout.isatty() if env is None else env == "1"
    return f"\x1b[{code}m{text}\x1b[0m" if on else text


def _sorted(g, objs):
    return sorted((g.show(o) for o in objs))


def emit(args, text_lines, payload):
    if args.format == "json":
        out = {"schema": SCHEMA, "command": args.command}
        out.update(payload)
        print(json.dumps(out, ensure_ascii=False, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


# ------------------------------------------------------------------ commands

def cmd_check(args, g):
    name = set_name(g, args.set)
    t = g.term(args.term)
    ans = g.member(t, name, args.depth)
    shown = _color(ans, {YES: "32", NO: "31"}.get(ans, "33"))
    emit(args, [shown], {"set": name, "term": g.show(t), "depth": args.depth, "answer": ans})
    return 0 if ans == YES else 1


def cmd_enumerate(args, g):
    name = set_name(g, args.set)
    terms = _sorted(g, g.enumerate(name, args.depth))
    emit(args, terms, {"set": name, "depth": args.depth, "fresh": args.fresh,
                       "count": len(terms), "terms": terms})
    return 0


def cmd_fill(args, g):
    target = g.term(args.context)
    reps = [g.term(a) for a in args.args]
    res = fill(g.u, target, reps)
    shown = g.show(res)
    emit(args, [shown], {"result": shown})
    return 0


def cmd_fv(args, g):
    t = g.term(args.term)
    names = [g.show(n) for n in sorted(free_names(g.u, t), key=object_key)]
    emit(args, ["{" + ", ".join(names) + "}"], {"term": g.show(t), "free": names})
    return 0


def cmd_subst(args, g):
    t, x, r = g.term(args.term), g.term(args.name), g.term(args.repl)
    shown = g.show(substitute(g.u, t, x, r))
    emit(args, [shown], {"result": shown})
    return 0


def cmd_alphaeq(args, g):
    a, b = g.term(args.left), g.term(args.right)
    same = alpha_equivalent(g.u, a, b)
    ans = YES if same else NO
    emit(args, [_color(ans, "32" if same else "31")], {"answer": ans})
    return 0 if same else 1


def _relations(args, g):
    if args.rel:
        names = [r.strip() for r in args.rel.split(",") if r.strip()]
        for r in names:
            g.relation(r)
        return names
    if not g.relations:
        raise UsageError("the spec declares no relations")
    return list(g.relations)


def cmd_reduce(args, g):
    names = _relations(args, g)
    t = g.term(args.term)
    layers = frontiers(g.step(names), t, args.steps)
    lines = [f"0: {g.show(t)}"]
    data = []
    for i, layer in enumerate(layers, 1):
        shown = _sorted(g, layer)
        data.append(shown)
        lines.append(f"{i}: " + " | ".join(shown))
    emit(args, lines, {"term": g.show(t), "relations": names, "frontiers": data})
    return 0


def cmd_normalize(args, g):
    names = _relations(args, g)
    t = g.term(args.term)
    forms, truncated = normal_forms(g.step(names), t, args.steps)
    shown = _sorted(g, forms)
    if truncated:
        print(f"note: search stopped after {args.steps} steps", file=sys.stderr)
    emit(args, shown, {"term": g.show(t), "relations": names, "normal_forms": shown,
                       "truncated": truncated})
    return 0 if shown else 1


# ------------------------------------------------------------------ parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=int, default=3, help="stratum depth (default 3)")
    common.add_argument("--fresh", type=int, default=3,
                        help="size of each presumed-fresh name pool (default 3)")
    common.add_argument("--steps", type=int, default=20, help="rewrite step bound (default 20)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--rel", help="comma-separated relations to close over (default: all)")

    p = argparse.ArgumentParser(prog="smt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def spec_cmd(name, help_):
        c = sub.add_parser(name, parents=[common], help=help_)
        c.add_argument("spec", help="spec file or bundled spec name")
        return c

    c = spec_cmd("check", "membership of a term in a set")
    c.add_argument("set")
    c.add_argument("term")
    c = spec_cmd("enumerate", "list a set's members up to --depth")
    c.add_argument("set")
    c = sub.add_parser("fill", parents=[common], help="fill the holes of a context")
    c.add_argument("context")
    c.add_argument("args", nargs="*")
    c.add_argument("--spec", help="spec whose constructors and equivalences apply")
    c = spec_cmd("fv", "free names of a term")
    c.add_argument("term")
    c = spec_cmd("subst", "capture-avoiding substitution term[name := repl]")
    c.add_argument("term")
    c.add_argument("name")
    c.add_argument("repl")
    c = spec_cmd("alphaeq", "alpha-equivalence of two terms")
    c.add_argument("left")
    c.add_argument("right")
    c = spec_cmd("reduce", "rewrite frontiers, one line per step")
    c.add_argument("term")
    c = spec_cmd("normalize", "normal forms reachable within --steps")
    c.add_argument("term")
    return p


COMMANDS = {"check": cmd_check, "enumerate": cmd_enumerate, "fill": cmd_fill, "fv": cmd_fv,
            "subst": cmd_subst, "alphaeq": cmd_alphaeq, "reduce": cmd_reduce,
            "normalize": cmd_normalize}


def _report(args, exc, code):
    name = getattr(exc, "code", None) or type(exc).__name__
    if getattr(args, "format", "text") == "json":
        diag = diagnostic(exc, getattr(args, "spec_file", None) or "<input>")
        diag["code"] = name
        print(json.dumps(diag, ensure_ascii=False), file=sys.stderr)
    else:
        print(f"{name}: {exc}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.depth < 0 or args.fresh < 0 or args.steps < 0:
        print("UsageError: --depth, --fresh and --steps must be non-negative", file=sys.stderr)
        return 2
    try:
        g = open_grammar(args)
        return COMMANDS[args.command](args, g)
    except UsageError as exc:
        return _report(args, exc, 2)
    except USAGE_ERRORS as exc:
        return _report(args, exc, 2)
    except SMTError as exc:
        return _report(args, exc, 3)
    except RecursionError as exc:
        return _report(args, exc, 3)


if __name__ == "__main__":
    sys.exit(main())
