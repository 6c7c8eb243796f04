"""Compiled templates: patterns over objects with metavariables.

A template such as ``"λ" x "." e`` is splice-parsed once into a pattern
tree.  Patterns are evaluated under an environment (metavariable -> object)
to build objects, and matched against objects to recover environments.
Matching is parameterised by a matcher object that decides which objects a
metavariable may take and which decompositions of an object to consider.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import IllTypedCondition, SMTError
from .terms import HOLE, Obj, constructor_of, name_parts, plug


@dataclass(frozen=True)
class PVar:
    key: str            # decorated occurrence, e.g. "e1"
    base: str           # undecorated metavariable, e.g. "e"
    set: str | None     # None: presumed to range over fresh atoms ``base_i``


@dataclass(frozen=True)
class PFamily:
    """``x_i``: any name of the group ``base``.  Each occurrence is its own variable."""
    key: str
    base: str


@dataclass(frozen=True)
class PConst:
    obj: Obj


@dataclass(frozen=True)
class PNode:
    pattern: tuple      # primitive constructor arrangement (holes in every slot)
    kids: tuple


@dataclass(frozen=True)
class PFill:
    ctx: object
    args: tuple


@dataclass(frozen=True)
class PSubst:
    body: object
    name: object
    repl: object


# ------------------------------------------------------------ conditions

@dataclass(frozen=True)
class CBool:
    value: bool


@dataclass(frozen=True)
class CAnd:
    parts: tuple


@dataclass(frozen=True)
class COr:
    parts: tuple


@dataclass(frozen=True)
class CNot:
    part: object


@dataclass(frozen=True)
class CIn:
    term: object
    where: object       # set name (str) or a set expression


@dataclass(frozen=True)
class CEq:
    left: object
    right: object


@dataclass(frozen=True)
class CBefore:
    left: object
    right: object


@dataclass(frozen=True)
class CCall:
    """``R(a, b)``: a one-step premise of relation ``R``."""
    name: str
    args: tuple


@dataclass(frozen=True)
class SLit:
    terms: tuple


@dataclass(frozen=True)
class SApp:
    fn: str
    arg: object


@dataclass(frozen=True)
class SUnion:
    parts: tuple


TRUE = CBool(True)


def pattern_vars(p, out=None) -> list:
    """Variable keys of a pattern (or condition) in first-occurrence order."""
    if out is None:
        out = []
    t = type(p)
    if t in (PVar, PFamily):
        if p.key not in out:
            out.append(p.key)
    elif t is PNode:
        for k in p.kids:
            pattern_vars(k, out)
    elif t is PFill:
        pattern_vars(p.ctx, out)
        for a in p.args:
            pattern_vars(a, out)
    elif t is PSubst:
        pattern_vars(p.body, out)
        pattern_vars(p.name, out)
        pattern_vars(p.repl, out)
    elif t in (CAnd, COr):
        for q in p.parts:
            pattern_vars(q, out)
    elif t is CNot:
        pattern_vars(p.part, out)
    elif t is CIn:
        pattern_vars(p.term, out)
        pattern_vars(p.where, out)
    elif t in (CEq, CBefore):
        pattern_vars(p.left, out)
        pattern_vars(p.right, out)
    elif t is CCall:
        for a in p.args:
            pattern_vars(a, out)
    elif t is SLit:
        for q in p.terms:
            pattern_vars(q, out)
    elif t is SApp:
        pattern_vars(p.arg, out)
    elif t is SUnion:
        for q in p.parts:
            pattern_vars(q, out)
    return out


def pattern_bases(p) -> set:
    """Undecorated metavariables mentioned anywhere in ``p``."""
    found = set()

    def walk(q):
        t = type(q)
        if t is PVar:
            found.add(q.base)
        elif t is PNode:
            for k in q.kids:
                walk(k)
        elif t is PFill:
            walk(q.ctx)
            for a in q.args:
                walk(a)
        elif t is PSubst:
            walk(q.body)
            walk(q.name)
            walk(q.repl)
        elif t in (CAnd, COr):
            for x in q.parts:
                walk(x)
        elif t is CNot:
            walk(q.part)
        elif t is CIn:
            walk(q.term)
            if isinstance(q.where, str):
                found.add(q.where)
            else:
                walk(q.where)
        elif t in (CEq, CBefore):
            walk(q.left)
            walk(q.right)
        elif t is CCall:
            for a in q.args:
                walk(a)
        elif t is SLit:
            for x in q.terms:
                walk(x)
        elif t is SApp:
            walk(q.arg)
        elif t is SUnion:
            for x in q.parts:
                walk(x)

    walk(p)
    return found


def contains_hole_const(p) -> bool:
    t = type(p)
    if t is PConst:
        return p.obj is HOLE
    if t is PNode:
        return any(contains_hole_const(k) for k in p.kids)
    if t is PFill:
        return contains_hole_const(p.ctx) or any(contains_hole_const(a) for a in p.args)
    if t is PSubst:
        return any(contains_hole_const(q) for q in (p.body, p.name, p.repl))
    return False


def constants(p) -> list:
    t = type(p)
    if t is PConst:
        return [p.obj]
    if t is PNode:
        return [c for k in p.kids for c in constants(k)]
    if t is PFill:
        return constants(p.ctx) + [c for a in p.args for c in constants(a)]
    if t is PSubst:
        return constants(p.body) + constants(p.name) + constants(p.repl)
    return []


# ------------------------------------------------------------ evaluation

def evaluate(u, p, env) -> Obj:
    t = type(p)
    if t in (PVar, PFamily):
        try:
            return env[p.key]
        except KeyError:
            raise SMTError(f"metavariable {p.key} is unbound") from None
    if t is PConst:
        return u.recoerce(p.obj)
    if t is PNode:
        return u.make(plug(p.pattern, [evaluate(u, k, env) for k in p.kids]))
    if t is PFill:
        from .contexts import fill
        return fill(u, evaluate(u, p.ctx, env), [evaluate(u, a, env) for a in p.args])
    if t is PSubst:
        from .equiv import substitute
        return substitute(u, evaluate(u, p.body, env), evaluate(u, p.name, env),
                          evaluate(u, p.repl, env))
    raise SMTError(f"cannot evaluate {p!r}")


def evaluate_arrangement(u, p, env) -> tuple:
    """Like ``evaluate`` but stops before the outermost coercion."""
    if type(p) is PNode:
        return plug(p.pattern, [evaluate(u, k, env) for k in p.kids])
    obj = evaluate(u, p, env)
    if obj.is_hole:
        raise SMTError("the hole has no arrangement")
    return obj.arr


# ------------------------------------------------------------ matching

class PlainMatcher:
    """Structural matching on canonical representatives; variables take any hole-free object."""

    def __init__(self, u):
        self.u = u

    def accept_var(self, p, obj):
        from .terms import arity
        return arity(obj) == 0

    def accept_family(self, p, obj):
        return self.u.is_name(obj) and name_parts(obj)[0] == p.base

    def decompositions(self, obj):
        return (constructor_of(obj.arr),)

    def splits(self, obj):
        from .contexts import splits
        return splits(self.u, obj)


def match(mc, p, obj, env):
    """Yield every extension of ``env`` under which ``p`` denotes ``obj``."""
    t = type(p)
    if t is PVar or t is PFamily:
        bound = env.get(p.key)
        if bound is not None:
            if bound is obj:
                yield env
            return
        ok = mc.accept_var(p, obj) if t is PVar else mc.accept_family(p, obj)
        if ok:
            new = dict(env)
            new[p.key] = obj
            yield new
    elif t is PConst:
        if mc.u.recoerce(p.obj) is obj:
            yield env
    elif t is PNode:
        if obj.is_hole:
            return
        seen = set()
        for ctor, subs in mc.decompositions(obj):
            if ctor != p.pattern or len(subs) != len(p.kids):
                continue
            if subs in seen:
                continue
            seen.add(subs)
            yield from match_all(mc, p.kids, subs, env)
    elif t is PFill:
        if len(p.args) != 1:
            raise SMTError("only single-hole fills can be matched")
        for ctx, sub in mc.splits(obj):
            for e1 in match(mc, p.args[0], sub, env):
                yield from match(mc, p.ctx, ctx, e1)
    elif t is PSubst:
        raise SMTError("a substitution cannot be used as a pattern")
    else:
        raise SMTError(f"cannot match {p!r}")


def match_all(mc, kids, subs, env):
    if not kids:
        yield env
        return
    for e in match(mc, kids[0], subs[0], env):
        yield from match_all(mc, kids[1:], subs[1:], e)


def match_arrangement(mc, p, arr, env):
    """Match a constructor pattern against a raw (not yet coerced) arrangement."""
    if type(p) is not PNode:
        raise SMTError("equivalence schemas must be constructor patterns")
    ctor, subs = constructor_of(arr)
    if ctor != p.pattern or len(subs) != len(p.kids):
        return
    yield from match_all(mc, p.kids, subs, env)


# ------------------------------------------------------------ plain conditions

def eval_plain_condition(u, c, env) -> bool:
    """Conditions that need no grammar: equality, ordering and connectives."""
    t = type(c)
    if t is CBool:
        return c.value
    if t is CAnd:
        return all(eval_plain_condition(u, q, env) for q in c.parts)
    if t is COr:
        return any(eval_plain_condition(u, q, env) for q in c.parts)
    if t is CNot:
        return not eval_plain_condition(u, c.part, env)
    if t is CEq:
        return evaluate(u, c.left, env) is evaluate(u, c.right, env)
    if t is CBefore:
        return object_key(evaluate(u, c.left, env)) < object_key(evaluate(u, c.right, env))
    raise IllTypedCondition(f"{type(c).__name__} needs a grammar to evaluate")


def object_key(obj):
    """Total order on objects: hole, then indexed atoms, then by structure."""
    if obj.is_hole:
        return (0,)
    k = obj.cache.get("key")
    if k is None:
        parts = name_parts(obj)
        if parts is not None:
            k = (1, parts[0], parts[1])
        else:
            k = (2, _arr_key(obj.arr))
        obj.cache["key"] = k
    return k


def _arr_key(arr):
    from .terms import Deco, Nat, Ref, Scripted, Sym
    out = []
    for item in arr:
        t = type(item)
        if t is Sym:
            out.append((0, item.glyph))
        elif t is Nat:
            out.append((1, item.value))
        elif t is Ref:
            out.append((2, object_key(item.obj)))
        elif t is Deco:
            out.append((3, item.kind, _arr_key(item.body)))
        elif t is Scripted:
            out.append((4, _arr_key(item.base),
                        tuple((p.value, _arr_key(s)) for p, s in item.scripts)))
    return tuple(out)
