"""Contexts: filling holes, single-hole splits and decomposition."""
from __future__ import annotations

from .errors import ArityMismatch, NotDecomposable, OpaqueClassDescent
from .terms import HOLE, Obj, Ref, arity, constructor_of, map_refs
from .universe import ConstructorDecl


def declare_constructor(u, arr, prec=None, assoc=None, explicit=False) -> ConstructorDecl:
    """Register the primitive constructor underlying ``arr`` (idempotent)."""
    pattern, _ = constructor_of(tuple(arr))
    if len(pattern) == 1 and type(pattern[0]) is Ref:
        raise NotDecomposable("a bare hole is not a constructor")
    if assoc not in (None, "left", "right", "none"):
        raise ValueError(f"unknown associativity {assoc!r}")
    with u.lock:
        decl = u.constructors.get(pattern)
        if decl is None:
            decl = ConstructorDecl(pattern, arity(pattern))
            u.constructors[pattern] = decl
        if prec is not None:
            decl.prec = prec
        if assoc is not None:
            decl.assoc = assoc
        decl.explicit = decl.explicit or explicit
    return decl


def fill(u, target, replacements):
    """Replace the holes of ``target`` left to right by ``replacements``.

    ``target`` may be an object, an object id or an arrangement; the result
    has the same kind.  Exactly ``arity(target)`` replacements are required."""
    reps = list(replacements)
    if isinstance(target, int):
        return fill(u, u.deref(target), reps).id
    if isinstance(target, Obj):
        res, used = _fill_obj(u, u.recoerce(target), reps, 0)
    else:
        res, used = _fill_arr(u, tuple(target), reps, 0)
    if used != len(reps):
        raise ArityMismatch(f"{len(reps)} replacements for {used} holes")
    return res


def _fill_obj(u, o, reps, k):
    if o.is_hole:
        if k >= len(reps):
            raise ArityMismatch(f"more holes than the {len(reps)} replacements")
        return reps[k], k + 1
    if arity(o) == 0:
        return o, k
    from .equiv import merges_context
    if merges_context(u, o):
        raise OpaqueClassDescent("cannot fill a context whose class is not a singleton")
    arr, k = _fill_arr(u, o.arr, reps, k)
    return u.make(arr), k


def _fill_arr(u, arr, reps, k):
    state = [k]

    def put(o):
        new, state[0] = _fill_obj(u, o, reps, state[0])
        return new

    out = map_refs(arr, put)
    return out, state[0]


def splits(u, obj) -> list:
    """All ``(C, s)`` with ``C`` a one-hole context and ``C[s] = obj`` positionally."""
    key = ("splits", u.version)
    got = obj.cache.get(key) if not obj.is_hole else None
    if got is not None:
        return got
    out = [(HOLE, obj)]
    if not obj.is_hole:
        total = arity(obj)
        refs = []
        map_refs(obj.arr, lambda o: refs.append(o) or o)
        for k, sub in enumerate(refs):
            if total - arity(sub) != 0:
                continue
            for ctx, s in splits(u, sub):
                out.append((_replace_nth(u, obj.arr, k, ctx), s))
        obj.cache[key] = out
    return out


def _replace_nth(u, arr, n, new):
    state = [0]

    def put(o):
        i = state[0]
        state[0] += 1
        return new if i == n else o

    return u.make(map_refs(arr, put))


def decompose(u, obj) -> list:
    """``(constructor, subobjects)`` for each representative considered for ``obj``."""
    from .equiv import class_arrangements
    if obj.is_hole:
        raise NotDecomposable("the hole has no decomposition")
    obj = u.recoerce(obj)
    out = []
    for arr in class_arrangements(u, obj):
        ctor, subs = constructor_of(arr)
        pair = (u.make(ctor), subs)
        if pair not in out:
            out.append(pair)
    return out
