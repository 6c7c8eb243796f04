"""Equivalences on arrangements: name groups, binders, alpha and schemas.

Free names follow binder declarations: a constructor pattern may declare that
its ``b``-th subobject (a name) binds in the subobjects listed in ``J``.
Alpha-equivalence renames non-free names by a permutation that fixes the
free ones.  Canonical forms rename bound names to the lowest indices in
first-occurrence order, so equal canonical forms mean alpha-equivalence.

Schema equivalences ``lhs <=> rhs`` relate arrangements matching the two
sides; canonicalization rewrites along the chosen orientation until no
orientation applies.  Arrangements containing holes are never merged.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import (HoleEquivalenceViolation, IllFormed, NotSameGroup, OverlappingGroup,
                     SMTError, SubstUndefined, UndefinedFreeNames)
from .patterns import (PlainMatcher, _arr_key, constants, contains_hole_const,
                       eval_plain_condition, evaluate_arrangement, match_arrangement)
from .terms import (Deco, Obj, Ref, Scripted, arity, constructor_of, iter_refs, map_refs,
                    name_parts, plug, subobjects)

MAX_REWRITES = 1000
MAX_VARIANTS = 48


@dataclass(frozen=True)
class Schema:
    lhs: object
    rhs: object
    orient_lhs: object
    orient_rhs: object
    cond: object = None
    text: str = ""


ALPHA = "alpha"


# ------------------------------------------------------------ declarations

def declare_name_group(u, base: str):
    if base in u.groups:
        raise OverlappingGroup(f"name group {base} is already declared")
    u.groups[base] = base
    u.bump()
    return base


def declare_binder(u, pattern, binder: int, scope):
    """Declare that subobject ``binder`` of ``pattern`` binds in subobjects ``scope`` (1-based)."""
    from .contexts import declare_constructor
    decl = declare_constructor(u, pattern)
    scope = frozenset(scope)
    n = decl.arity
    if not 1 <= binder <= n or any(not 1 <= j <= n for j in scope):
        raise IllFormed(f"binder positions must lie in 1..{n}")
    entries = u.bindings.get(decl.pattern, ())
    if (binder, scope) not in entries:
        u.bindings[decl.pattern] = entries + ((binder, scope),)
        u.bump()
    return decl


def register_equivalence(u, axiom) -> int:
    """Add ``ALPHA`` or a ``Schema`` to the equivalence; returns the new version."""
    if axiom == ALPHA:
        u.alpha = True
        return u.bump()
    if not isinstance(axiom, Schema):
        raise TypeError("expected ALPHA or a Schema")
    sides = (axiom.lhs, axiom.rhs, axiom.orient_lhs, axiom.orient_rhs)
    if axiom.lhs != axiom.rhs and any(contains_hole_const(s) for s in sides):
        raise HoleEquivalenceViolation("a schema may not relate arrangements containing holes")
    groups = []
    for side in (axiom.lhs, axiom.rhs):
        groups.append({name_parts(c)[0] for c in constants(side) if u.is_name(c)})
    if groups[0] and groups[1] and groups[0] != groups[1]:
        raise NotSameGroup("a schema may not relate names of different groups")
    u.schemas.append(axiom)
    return u.bump()


# ------------------------------------------------------------ free names

def fv(u, obj: Obj) -> frozenset:
    """Free names of the canonical representative (no class agreement check)."""
    if obj.is_hole:
        return frozenset()
    if u.is_name(obj):
        return frozenset((obj,))
    key = ("fv", u.version)
    got = obj.cache.get(key)
    if got is None:
        got = obj.cache[key] = fv_arrangement(u, obj.arr)
    return got


def fv_arrangement(u, arr) -> frozenset:
    ctor, subs = constructor_of(arr)
    if not subs:
        return frozenset()
    entries = u.bindings.get(ctor, ())
    binders = {b for b, _ in entries}
    out = set()
    for i, sub in enumerate(subs, 1):
        if i in binders and u.is_name(sub):
            continue
        f = fv(u, sub)
        if not f:
            continue
        bound = {subs[b - 1] for b, scope in entries if i in scope}
        out |= f - bound
    return frozenset(out)


def free_names(u, x) -> frozenset:
    """Free names of an object; every class representative must agree."""
    obj = x if isinstance(x, Obj) else u.make(x)
    obj = u.recoerce(obj)
    base = fv(u, obj)
    if u.schemas and not obj.is_hole and not u.is_name(obj):
        for arr in schema_variants(u, obj.arr):
            if fv_arrangement(u, arr) != base:
                raise UndefinedFreeNames("representatives disagree on free names")
    return base


def occurrence_order(u, arr) -> list:
    """Names free in the immediate subobjects of ``arr``, in first-occurrence order."""
    out = []
    seen = set()
    for r in iter_refs(arr):
        o = r.obj
        names = (o,) if u.is_name(o) else free_order(u, o)
        for n in names:
            if n not in seen:
                seen.add(n)
                out.append(n)
    return out


def free_order(u, obj) -> tuple:
    if obj.is_hole:
        return ()
    if u.is_name(obj):
        return (obj,)
    key = ("forder", u.version)
    got = obj.cache.get(key)
    if got is None:
        f = fv(u, obj)
        got = obj.cache[key] = tuple(n for n in occurrence_order(u, obj.arr) if n in f)
    return got


def all_names(u, obj) -> frozenset:
    """Every name occurring anywhere inside ``obj``."""
    if obj.is_hole:
        return frozenset()
    if u.is_name(obj):
        return frozenset((obj,))
    key = ("names", u.version)
    got = obj.cache.get(key)
    if got is None:
        acc = set()
        for sub in subobjects(obj.arr):
            acc |= all_names(u, sub)
        got = obj.cache[key] = frozenset(acc)
    return got


# ------------------------------------------------------------ permutations

def permute(u, obj, perm: dict) -> Obj:
    """Apply a name permutation everywhere inside ``obj`` and re-coerce."""
    if obj.is_hole:
        return obj
    hit = perm.get(obj)
    if hit is not None:
        return hit
    if u.is_name(obj) or not subobjects(obj.arr):
        return obj
    if not (all_names(u, obj) & perm.keys()):
        return obj
    return u.make(map_refs(obj.arr, lambda o: permute(u, o, perm)))


def complete_permutation(partial: dict) -> dict:
    """Extend an injective map to a permutation of its domain plus codomain."""
    perm = {a: b for a, b in partial.items() if a is not b}
    dom = list(perm)
    cod = list(perm.values())
    dangling = [b for b in cod if b not in perm]
    free_slots = [a for a in dom if a not in set(cod)]
    for b, a in zip(dangling, free_slots):
        perm[b] = a
    return perm


def swap_names(u, a: Obj, b: Obj, x):
    """``(a b)·x`` for two names of the same group, on an object or an arrangement."""
    pa, pb = name_parts(a), name_parts(b)
    if not (u.is_name(a) and u.is_name(b)):
        raise NotSameGroup("swap needs two names")
    if pa[0] != pb[0]:
        raise NotSameGroup(f"{pa[0]} and {pb[0]} are different name groups")
    perm = {} if a is b else {a: b, b: a}
    if isinstance(x, Obj):
        return permute(u, x, perm)
    return map_refs(tuple(x), lambda o: permute(u, o, perm))


def _lowest_free_index(used: set) -> int:
    j = 0
    while j in used:
        j += 1
    return j


def alpha_normalize(u, arr) -> tuple:
    f = fv_arrangement(u, arr)
    bound = [n for n in occurrence_order(u, arr) if n not in f]
    if not bound:
        return arr
    taken = {}
    target = {}
    for n in bound:
        base, _ = name_parts(n)
        used = taken.get(base)
        if used is None:
            used = taken[base] = {name_parts(m)[1] for m in f if name_parts(m)[0] == base}
        j = _lowest_free_index(used)
        used.add(j)
        target[n] = u.name(base, j)
    perm = complete_permutation(target)
    if not perm:
        return arr
    return map_refs(arr, lambda o: permute(u, o, perm))


def alpha_variant(u, obj, avoid=frozenset()) -> tuple:
    """An alpha-variant of ``obj`` whose top-level bound names are all fresh."""
    f = fv(u, obj)
    bound = [n for n in occurrence_order(u, obj.arr) if n not in f]
    if not bound:
        return obj.arr
    taken = {}
    for n in all_names(u, obj) | set(avoid):
        base, i = name_parts(n)
        taken.setdefault(base, set()).add(i)
    target = {}
    for n in bound:
        base, _ = name_parts(n)
        used = taken.setdefault(base, set())
        j = max(used, default=-1) + 1
        used.add(j)
        target[n] = u.name(base, j)
    perm = complete_permutation(target)
    return map_refs(obj.arr, lambda o: permute(u, o, perm))


# ------------------------------------------------------------ schemas

def schema_normalize(u, arr) -> tuple:
    """Rewrite along the oriented schemas; an unoriented schema that cycles yields the
    least arrangement on the cycle."""
    mc = PlainMatcher(u)
    trail = {}
    for _ in range(MAX_REWRITES):
        if arr in trail:
            cycle = list(trail)[trail[arr]:]
            return min(cycle, key=_arr_key)
        trail[arr] = len(trail)
        for s in u.schemas:
            new = None
            for env in match_arrangement(mc, s.orient_lhs, arr, {}):
                if s.cond is not None and not eval_plain_condition(u, s.cond, env):
                    continue
                cand = evaluate_arrangement(u, s.orient_rhs, env)
                if cand != arr:
                    new = cand
                    break
            if new is not None:
                arr = new
                break
        else:
            return arr
    return arr


def schema_variants(u, arr, limit=MAX_VARIANTS) -> list:
    """Arrangements reachable from ``arr`` by top-level schema steps in either direction."""
    if not u.schemas:
        return [arr]
    mc = _VariantMatcher(u)
    seen = {arr: None}
    queue = [arr]
    while queue and len(seen) < limit:
        cur = queue.pop(0)
        for s in u.schemas:
            for lhs, rhs in ((s.lhs, s.rhs), (s.rhs, s.lhs)):
                for env in match_arrangement(mc, lhs, cur, {}):
                    try:
                        nxt = evaluate_arrangement(u, rhs, env)
                    except SMTError:
                        continue
                    if nxt not in seen:
                        seen[nxt] = None
                        queue.append(nxt)
    return list(seen)


def merges_context(u, obj) -> bool:
    """True when a schema would relate this hole-containing object to another arrangement."""
    if obj.is_hole or not u.schemas:
        return False
    mc = _ContextMatcher(u)
    for s in u.schemas:
        for lhs, rhs in ((s.lhs, s.rhs), (s.rhs, s.lhs)):
            for env in match_arrangement(mc, lhs, obj.arr, {}):
                try:
                    if evaluate_arrangement(u, rhs, env) != obj.arr:
                        return True
                except SMTError:
                    return True
    return False


class _VariantMatcher(PlainMatcher):
    """Sees every schema variant of a subobject, so nested schema instances are found."""

    def decompositions(self, obj):
        if arity(obj) > 0:
            return (constructor_of(obj.arr),)
        key = ("variants", self.u.version)
        got = obj.cache.get(key)
        if got is None:
            got = obj.cache[key] = [constructor_of(a) for a in schema_variants(self.u, obj.arr)]
        return got


class _ContextMatcher(PlainMatcher):
    def accept_var(self, p, obj):
        return True


# ------------------------------------------------------------ canonical forms

def canonicalize(u, arr) -> tuple:
    if not u.alpha and not u.schemas:
        return arr
    if arity(arr) > 0:
        return arr
    for _ in range(64):
        new = arr
        if u.schemas:
            new = schema_normalize(u, new)
        if u.alpha:
            new = alpha_normalize(u, new)
        if new == arr:
            return arr
        arr = new
    return arr


def class_arrangements(u, obj, alpha_fresh=True, avoid=frozenset()) -> list:
    """Representatives used for decomposition: canonical, schema variants and one fresh
    alpha-variant."""
    if obj.is_hole:
        return []
    if arity(obj) > 0:
        return [obj.arr]
    reps = schema_variants(u, obj.arr)
    if u.alpha and alpha_fresh:
        v = alpha_variant(u, obj, avoid)
        if v not in reps:
            reps.append(v)
    return reps


def is_well_formed(u, obj) -> bool:
    if obj.is_hole:
        return True
    try:
        from .terms import check_arrangement
        check_arrangement(obj.arr)
    except IllFormed:
        return False
    if not all(is_well_formed(u, s) for s in subobjects(obj.arr)):
        return False
    if arity(obj) > 0:
        return not merges_context(u, obj)
    if obj.version != u.version:
        return canonicalize(u, obj.arr) == obj.arr and all(
            u.recoerce(s) is s for s in subobjects(obj.arr))
    return True


# ------------------------------------------------------------ alpha-equivalence

def alpha_key(u, obj):
    """Structure of ``obj`` with non-free names replaced by first-occurrence numbering."""
    f = fv(u, obj)
    mapping = {}
    counters = {}

    def tok(o):
        if o.is_hole:
            return ("hole",)
        if u.is_name(o):
            if o in f:
                return ("free", o.id)
            m = mapping.get(o)
            if m is None:
                base = name_parts(o)[0]
                k = counters.get(base, 0)
                counters[base] = k + 1
                m = mapping[o] = ("bound", base, k)
            return m
        return ("obj", ser(o.arr))

    def ser(arr):
        out = []
        for item in arr:
            t = type(item)
            if t is Ref:
                out.append(tok(item.obj))
            elif t is Deco:
                out.append(("deco", item.kind, ser(item.body)))
            elif t is Scripted:
                out.append(("scr", ser(item.base),
                            tuple((p, ser(s)) for p, s in item.scripts)))
            else:
                out.append(item)
        return tuple(out)

    return tok(obj)


def alpha_equivalent(u, a: Obj, b: Obj) -> bool:
    a, b = u.recoerce(a), u.recoerce(b)
    if a is b:
        return True
    if fv(u, a) != fv(u, b):
        return False
    return alpha_key(u, a) == alpha_key(u, b)


# ------------------------------------------------------------ substitution

def substitute(u, obj: Obj, x: Obj, repl: Obj) -> Obj:
    """Capture-avoiding ``obj[x := repl]``.

    Every considered decomposition of ``obj`` that avoids capture must agree;
    if none avoids capture the substitution is undefined.
    """
    obj, x, repl = u.recoerce(obj), u.recoerce(x), u.recoerce(repl)
    if not u.is_name(x):
        raise IllFormed("substitution replaces a name")
    fvr = free_names(u, repl)
    avoid = all_names(u, repl) | {x}
    return _subst(u, obj, x, repl, fvr, avoid, {})


def _subst(u, o, x, r, fvr, avoid, memo):
    if o is x:
        return r
    if o.is_hole or x not in fv(u, o):
        return o
    hit = memo.get(o)
    if hit is not None:
        if isinstance(hit, SMTError):
            raise hit
        return hit
    results = []
    for arr in class_arrangements(u, o, avoid=avoid):
        res = _subst_decomposition(u, arr, x, r, fvr, avoid, memo)
        if res is not None:
            results.append(res)
    if not results:
        err = SubstUndefined("every decomposition captures a free name of the replacement")
        memo[o] = err
        raise err
    first = results[0]
    if any(res is not first for res in results[1:]):
        err = SubstUndefined("decompositions disagree on the substitution result")
        memo[o] = err
        raise err
    memo[o] = first
    return first


def _subst_decomposition(u, arr, x, r, fvr, avoid, memo):
    ctor, subs = constructor_of(arr)
    entries = u.bindings.get(ctor, ())
    shielded = set()
    for b, scope in entries:
        if subs[b - 1] is x:
            shielded |= scope | {b}
    new = []
    for i, sub in enumerate(subs, 1):
        if i in shielded or x not in fv(u, sub):
            new.append(sub)
            continue
        binders = {subs[b - 1] for b, scope in entries if i in scope}
        if binders & fvr:
            return None
        try:
            new.append(_subst(u, sub, x, r, fvr, avoid, memo))
        except SubstUndefined:
            return None
    return u.make(plug(ctor, new))
