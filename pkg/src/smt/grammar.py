"""Production rules evaluated as depth-bounded least fixed points.

Each declared set ``S`` has a list of alternatives (template plus side
condition).  Stratum ``F_0(S)`` is empty and ``F_{d+1}(S)`` holds every
object obtained by evaluating an alternative with metavariables drawn from
the stratum-``d`` sets (presumed-fresh metavariables draw from a finite pool
of atoms ``base_0 .. base_{k-1}``) whose side condition holds at stratum
``d``.  Membership is answered goal-directed by matching templates against
the candidate, which agrees with stratum membership but avoids building the
whole stratum.

Side conditions are three-valued.  A membership atom that fails at the
current stratum is *unknown* when the candidate does belong to the set at
some depth, and *false* otherwise; unknown never admits a candidate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .contexts import fill, splits
from .equiv import class_arrangements, free_names
from .errors import (ArityMismatch, IllTypedCondition, NoLeastFixpoint, OpaqueClassDescent,
                     SMTError, SubstUndefined, UnknownSet)
from .patterns import (CAnd, CBefore, CBool, CCall, CEq, CIn, CNot, COr, PFamily, PFill, PNode,
                       PSubst, PVar, SApp, SLit, SUnion, evaluate, match, object_key,
                       pattern_vars)
from .rewriting import Relation, RelRule, Rewrite
from .terms import HOLE, arity, constructor_of, name_parts
from .universe import Universe

YES, NO, UNKNOWN = "Yes", "No", "UnknownAtDepth"
ELLIPSIS = "..."
SAMPLE_SIZE = 6
SAMPLE_DEPTH = 2


@dataclass
class Alternative:
    template: object
    cond: object = None
    text: str = ""
    span: object = None
    varinfo: dict = field(default_factory=dict)     # key -> PVar | PFamily
    template_vars: list = field(default_factory=list)
    cond_vars: list = field(default_factory=list)
    unit: str | None = None      # set name when the template is a lone metavariable of a set


@dataclass
class SetRule:
    name: str
    alternatives: list
    metavars: tuple = ()
    global_cond: object = None
    span: object = None


def _collect_vars(p, out):
    t = type(p)
    if t is PVar or t is PFamily:
        out.setdefault(p.key, p)
    elif t is PNode:
        for k in p.kids:
            _collect_vars(k, out)
    elif t is PFill:
        _collect_vars(p.ctx, out)
        for a in p.args:
            _collect_vars(a, out)
    elif t is PSubst:
        for q in (p.body, p.name, p.repl):
            _collect_vars(q, out)
    elif t in (CAnd, COr):
        for q in p.parts:
            _collect_vars(q, out)
    elif t is CNot:
        _collect_vars(p.part, out)
    elif t is CIn:
        _collect_vars(p.term, out)
        if not isinstance(p.where, str):
            _collect_vars(p.where, out)
    elif t in (CEq, CBefore):
        _collect_vars(p.left, out)
        _collect_vars(p.right, out)
    elif t is CCall:
        for a in p.args:
            _collect_vars(a, out)
    elif t is SLit:
        for q in p.terms:
            _collect_vars(q, out)
    elif t is SApp:
        _collect_vars(p.arg, out)
    elif t is SUnion:
        for q in p.parts:
            _collect_vars(q, out)


def conjuncts(c) -> list:
    if c is None:
        return []
    if type(c) is CAnd:
        return [x for q in c.parts for x in conjuncts(q)]
    if type(c) is CBool and c.value:
        return []
    return [c]


def conjoin(a, b):
    parts = conjuncts(a) + conjuncts(b)
    if not parts:
        return None
    return parts[0] if len(parts) == 1 else CAnd(tuple(parts))


def make_alternative(template, cond=None, text="", span=None) -> Alternative:
    info = {}
    _collect_vars(template, info)
    tvars = list(info)
    _collect_vars(cond, info) if cond is not None else None
    cvars = [k for k in info if k not in tvars]
    unit = template.set if type(template) is PVar else None
    return Alternative(template, cond, text, span, info, tvars, cvars, unit)


class _Matcher:
    """Matching for membership: metavariables must lie in their sets."""

    def __init__(self, g, mode, k):
        self.g = g
        self.u = g.u
        self.mode = mode
        self.k = k

    def accept_var(self, p, obj):
        if p.set is None:
            return self.g._fresh_ok(p.base, obj, self.mode != "inset")
        return self.g._holds(obj, p.set, self.mode, self.k)

    def accept_family(self, p, obj):
        return self.g._family_ok(p.base, obj, self.mode != "inset")

    def decompositions(self, obj):
        return self.g._decompositions(obj)

    def splits(self, obj):
        return splits(self.u, obj)


class _LooseMatcher(_Matcher):
    """Matching for function clauses: any hole-free object fits any metavariable."""

    def __init__(self, g):
        super().__init__(g, "inset", 0)

    def accept_var(self, p, obj):
        return True

    def accept_family(self, p, obj):
        return self.u.is_name(obj) and name_parts(obj)[0] == p.base


class Grammar:
    def __init__(self, universe: Universe | None = None, fresh: int = 3):
        self.u = universe if universe is not None else Universe()
        self.fresh = fresh
        self.rules: dict[str, list[Alternative]] = {}
        self.decls: dict[str, list[SetRule]] = {}
        self.metavars: dict[str, str] = {}
        self.relations: dict[str, Relation] = {}
        self.functions: dict[str, list] = {}
        self._single_stream: dict[str, bool] = {}
        self._reset_caches()

    # ------------------------------------------------------------ declarations

    def _reset_caches(self):
        self._seen = (getattr(self.u, "version", 0), self.fresh)
        self._strata = {}
        self._derive = {}
        self._inset = {}
        self._inset_stack = {}     # (object, set) -> negation level on entry
        self._neg_level = 0
        self._derive_stack = set()
        self._cycle_hit = False
        self._ctx_ok = {}
        self._samples = {}

    def _sync(self):
        if self._seen != (self.u.version, self.fresh):
            self._reset_caches()

    def invalidate(self):
        self._reset_caches()

    def declare_rule(self, name, alternatives, metavars=(), global_cond=None, span=None):
        """Add a production rule; applies decoration binding, global conditions and merge/replace.

        ``alternatives`` holds ``Alternative`` values or the ``ELLIPSIS`` marker."""
        for mv in metavars:
            self.metavars[mv] = name
        merge = bool(alternatives) and alternatives[0] == ELLIPSIS
        real = [a for a in alternatives if a != ELLIPSIS]
        if global_cond is not None:
            real = [make_alternative(a.template, conjoin(a.cond, global_cond), a.text, a.span)
                    for a in real]
        single = len(real) == 1 and len(alternatives) == 1
        if name in self.rules and not merge and single and self._single_stream.get(name, False):
            merge = True
        if name in self.rules and merge:
            self.rules[name] = self.rules[name] + real
            self._single_stream[name] = self._single_stream[name] and single
        else:
            self.rules[name] = list(real)
            self._single_stream[name] = single
        self.decls.setdefault(name, []).append(
            SetRule(name, list(alternatives), tuple(metavars), global_cond, span))
        self.invalidate()

    def declare_relation(self, name, carrier, lhs, rhs, cond=None, text=""):
        rel = self.relations.get(name)
        if rel is None:
            rel = self.relations[name] = Relation(name, carrier)
        elif rel.carrier != carrier:
            raise SMTError(f"relation {name} already lives on {rel.carrier}")
        rel.rules.append(RelRule(lhs, rhs, cond, text))
        self.invalidate()
        return rel

    def declare_function(self, name, param, body):
        self.functions.setdefault(name, []).append((param, body))
        self.invalidate()

    @property
    def set_names(self):
        return list(self.rules)

    def _check_set(self, name):
        if name not in self.rules:
            raise UnknownSet(f"no set named {name}")

    # ------------------------------------------------------------ pools

    def pool(self, base):
        return [self.u.indexed(base, i) for i in range(self.fresh)]

    def _fresh_ok(self, base, obj, bounded):
        parts = name_parts(obj)
        return parts is not None and parts[0] == base and (not bounded or parts[1] < self.fresh)

    def _family_ok(self, base, obj, bounded):
        return self.u.is_name(obj) and self._fresh_ok(base, obj, bounded)

    def _domain(self, p, k):
        if type(p) is PFamily:
            return self.pool(p.base)
        if p.set is None:
            return self.pool(p.base)
        return sorted(self.stratum(p.set, k), key=object_key)

    # ------------------------------------------------------------ strata

    def stratum(self, name, d):
        """``F_d(name)``: members derivable in at most ``d`` rounds.

        A round applies every alternative to the previous stratum.  Unit
        alternatives ``S ::= m`` are subset constraints and are closed
        within the round, so depth counts constructor layers."""
        self._sync()
        self._check_set(name)
        if d <= 0:
            return frozenset()
        got = self._strata.get((name, d))
        if got is not None:
            return got
        group = self._unit_closure(name)
        found = {}
        for s in group:
            found[s] = set()
            for alt in self.rules[s]:
                if alt.unit is None:
                    found[s].update(self._instances(alt, d - 1))
        changed = True
        while changed:
            changed = False
            for s in group:
                for alt in self.rules[s]:
                    if alt.unit is None:
                        continue
                    new = [o for o in found[alt.unit] if o not in found[s]
                           and self._admits(alt, {alt.template.key: o}, "strata", d - 1)]
                    if new:
                        found[s].update(new)
                        changed = True
        for s in group:
            out = frozenset(found[s])
            prev = self.stratum(s, d - 1)
            if not prev <= out:
                lost = sorted(prev - out, key=object_key)[0]
                raise NoLeastFixpoint(
                    f"{s}: a member of stratum {d - 1} is not re-derived at stratum {d} ({lost!r})")
            self._strata[(s, d)] = out
        return self._strata[(name, d)]

    def _unit_closure(self, name):
        out = [name]
        for s in out:
            for alt in self.rules[s]:
                if alt.unit is not None and alt.unit not in out:
                    self._check_set(alt.unit)
                    out.append(alt.unit)
        return out

    def enumerate(self, name, d):
        return self.stratum(name, d)

    def recalculate(self, d):
        return {name: self.stratum(name, d) for name in self.rules}

    def _instances(self, alt, k):
        """Objects produced by ``alt`` with metavariables drawn from stratum ``k``."""
        conds = conjuncts(alt.cond)
        cond_keys = [set(pattern_vars(c)) for c in conds]
        order = []
        for ks in cond_keys:
            for key in sorted(ks, key=list(alt.varinfo).index):
                if key not in order:
                    order.append(key)
        for key in alt.template_vars + alt.cond_vars:
            if key not in order:
                order.append(key)
        # check each conjunct as soon as its variables are bound
        due = {i: [] for i in range(-1, len(order))}
        for c, ks in zip(conds, cond_keys):
            due[max((order.index(x) for x in ks), default=-1)].append(c)
        for c in due[-1]:
            if self._cond(c, {}, "strata", k) is not True:
                return []
        domains = [self._domain(alt.varinfo[key], k) for key in order]
        out = []
        env = {}

        def rec(i):
            if i == len(order):
                try:
                    out.append(evaluate(self.u, alt.template, env))
                except (ArityMismatch, SubstUndefined, OpaqueClassDescent):
                    pass
                return
            key = order[i]
            for val in domains[i]:
                env[key] = val
                if all(self._cond(c, env, "strata", k) is True for c in due[i]):
                    rec(i + 1)
            env.pop(key, None)

        rec(0)
        return out

    # ------------------------------------------------------------ membership

    def member(self, t, name, d):
        """``Yes`` if ``t`` is in stratum ``d``; ``No`` if it is in no stratum; else
        ``UnknownAtDepth``."""
        self._sync()
        self._check_set(name)
        t = self.u.recoerce(t)
        cached = self._strata.get((name, d))
        yes = (t in cached) if cached is not None else self.derivable(t, name, d)
        if yes:
            return YES
        return UNKNOWN if self.in_set(t, name) else NO

    def derivable(self, t, name, d):
        """Goal-directed test of ``t`` in ``F_d(name)``."""
        self._sync()
        self._check_set(name)
        if d <= 0:
            return False
        cached = self._strata.get((name, d))
        if cached is not None:
            return t in cached
        key = (t, name, d)
        got = self._derive.get(key)
        if got is not None:
            return got
        # unit alternatives can form cycles within one stratum
        if key in self._derive_stack:
            self._cycle_hit = True
            return False
        self._derive_stack.add(key)
        outer = self._cycle_hit
        self._cycle_hit = False
        try:
            res = self._matches_some(t, name, "derive", d - 1)
        finally:
            self._derive_stack.discard(key)
        hit = self._cycle_hit
        if res or not hit:
            self._derive[key] = res
        self._cycle_hit = outer or (hit and not res)
        return res

    def in_set(self, t, name):
        """Membership at any depth (cycles through unproductive unit rules count as failure)."""
        self._sync()
        self._check_set(name)
        key = (t, name)
        got = self._inset.get(key)
        if got is not None:
            return got
        if key in self._inset_stack:
            if self._neg_level > self._inset_stack[key]:
                raise NoLeastFixpoint(f"{name}: membership of {self.show(t)} depends on "
                                      f"its own negation")
            self._cycle_hit = True
            return False
        self._inset_stack[key] = self._neg_level
        outer = self._cycle_hit
        self._cycle_hit = False
        try:
            res = self._matches_some(t, name, "inset", None)
        finally:
            self._inset_stack.pop(key, None)
        hit = self._cycle_hit
        if res or not hit:
            self._inset[key] = res
        self._cycle_hit = outer or (hit and not res)
        return res

    def _matches_some(self, t, name, mode, k):
        mc = _Matcher(self, mode, k)
        for alt in self.rules[name]:
            if alt.unit is not None and mode != "inset":
                if mode == "derive":
                    ok = self.derivable(t, alt.unit, k + 1)
                else:
                    ok = t in self.stratum(alt.unit, k + 1)
                if ok and self._admits(alt, {alt.template.key: t}, mode, k):
                    return True
                continue
            for env in match(mc, alt.template, t, {}):
                if self._admits(alt, env, mode, k):
                    return True
        return False

    def _admits(self, alt, env, mode, k):
        extra = [key for key in alt.cond_vars if key not in env]
        if not extra:
            return self._cond(alt.cond, env, mode, k) is True if alt.cond is not None else True
        depth = k if mode != "inset" else SAMPLE_DEPTH + 1
        domains = [self._domain(alt.varinfo[key], depth) for key in extra]
        for vals in itertools.product(*domains):
            e2 = dict(env)
            e2.update(zip(extra, vals))
            if self._cond(alt.cond, e2, mode, k) is True:
                return True
        return False

    def _holds(self, obj, name, mode, k):
        if mode == "derive":
            return self.derivable(obj, name, k)
        if mode == "strata":
            return obj in self.stratum(name, k)
        return self.in_set(obj, name)

    def _decompositions(self, obj):
        key = ("decomps", self.u.version)
        got = obj.cache.get(key)
        if got is None:
            got = obj.cache[key] = [constructor_of(a)
                                    for a in class_arrangements(self.u, obj, alpha_fresh=False)]
        return got

    # ------------------------------------------------------------ conditions

    def eval_condition(self, c, env, depth=None):
        """Three-valued: True, False or None (unknown).  ``depth=None`` means unbounded."""
        self._sync()
        if depth is None:
            return self._cond(c, env, "inset", None)
        return self._cond(c, env, "derive", depth)

    def _term(self, p, env):
        try:
            return evaluate(self.u, p, env)
        except (ArityMismatch, OpaqueClassDescent) as exc:
            raise IllTypedCondition(str(exc)) from exc

    def _cond(self, c, env, mode, k, neg=False):
        if c is None:
            return True
        t = type(c)
        if t is CBool:
            return c.value
        if t is CAnd:
            res = True
            for q in c.parts:
                v = self._cond(q, env, mode, k, neg)
                if v is False:
                    return False
                if v is None:
                    res = None
            return res
        if t is COr:
            res = False
            for q in c.parts:
                v = self._cond(q, env, mode, k, neg)
                if v is True:
                    return True
                if v is None:
                    res = None
            return res
        if t is CNot:
            v = self._cond(c.part, env, mode, k, not neg)
            return None if v is None else not v
        if t is CIn:
            obj = self._term(c.term, env)
            if isinstance(c.where, str):
                self._check_set(c.where)
                self._neg_level += neg
                try:
                    if self._holds(obj, c.where, mode, k):
                        return True
                    if not neg or mode == "inset":
                        return False
                    return None if self.in_set(obj, c.where) else False
                finally:
                    self._neg_level -= neg
            return obj in self.eval_set(c.where, env)
        if t is CEq:
            return self._term(c.left, env) is self._term(c.right, env)
        if t is CBefore:
            return object_key(self._term(c.left, env)) < object_key(self._term(c.right, env))
        if t is CCall:
            if len(c.args) != 2:
                raise IllTypedCondition(f"{c.name} takes two arguments")
            a, b = (self._term(x, env) for x in c.args)
            return any(s is b for s, _ in self.step_root(c.name, a))
        raise IllTypedCondition(f"cannot evaluate {type(c).__name__} as a condition")

    def eval_set(self, s, env) -> frozenset:
        t = type(s)
        if t is SLit:
            return frozenset(self._term(q, env) for q in s.terms)
        if t is SUnion:
            out = set()
            for q in s.parts:
                out |= self.eval_set(q, env)
            return frozenset(out)
        if t is SApp:
            arg = self._term(s.arg, env)
            if s.fn == "fv":
                return free_names(self.u, arg)
            return self.apply_function(s.fn, arg)
        raise IllTypedCondition(f"{s!r} is not a set expression")

    def apply_function(self, name, arg) -> frozenset:
        clauses = self.functions.get(name)
        if clauses is None:
            raise IllTypedCondition(f"unknown function {name}")
        mc = _LooseMatcher(self)
        for param, body in clauses:
            for env in match(mc, param, arg, {}):
                return self.eval_set(body, env)
        raise IllTypedCondition(f"{name} is undefined on this argument")

    # ------------------------------------------------------------ relations

    def relation(self, name) -> Relation:
        rel = self.relations.get(name)
        if rel is None:
            raise UnknownSet(f"no relation named {name}")
        return rel

    def step_root(self, name, t):
        """Instances of the relation's own rules with ``t`` on the left."""
        self._sync()
        rel = self.relation(name)
        mc = _Matcher(self, "inset", None)
        seen = set()
        for rule in rel.rules:
            for env in match(mc, rule.lhs, t, {}):
                for env2 in self._solve(conjuncts(rule.cond), env):
                    try:
                        res = evaluate(self.u, rule.rhs, env2)
                    except (ArityMismatch, SubstUndefined, OpaqueClassDescent):
                        continue
                    if (res, rule) not in seen:
                        seen.add((res, rule))
                        yield res, rule

    def _solve(self, conds, env):
        """Extend ``env`` so every condition holds; premises ``R(a, b)`` may bind ``b``."""
        if not conds:
            yield env
            return
        c, rest = conds[0], conds[1:]
        if type(c) is CCall and len(c.args) == 2:
            a = self._term(c.args[0], env)
            mc = _Matcher(self, "inset", None)
            for s, _ in self.step_root(c.name, a):
                for e2 in match(mc, c.args[1], s, env):
                    yield from self._solve(rest, e2)
            return
        if self._cond(c, env, "inset", None) is True:
            yield from self._solve(rest, env)

    def rewrites(self, names, t):
        """One step of the carrier-compatible closure of the named relations."""
        self._sync()
        t = self.u.recoerce(t)
        seen = set()
        for name in names:
            rel = self.relation(name)
            for ctx, sub in splits(self.u, t):
                for new, rule in self.step_root(name, sub):
                    if ctx is not HOLE and not self.context_ok(ctx, rel.carrier):
                        continue
                    try:
                        target = fill(self.u, ctx, [new])
                    except SMTError:
                        continue
                    if target not in seen:
                        seen.add(target)
                        yield Rewrite(t, target, ctx, sub, new, rule)

    def step(self, names):
        """A step function suitable for the searches in ``rewriting``."""
        names = list(names)
        return lambda t: [r.target for r in self.rewrites(names, t)]

    def samples(self, name):
        got = self._samples.get(name)
        if got is None:
            members = sorted(self.stratum(name, SAMPLE_DEPTH), key=object_key)
            got = self._samples[name] = members[:SAMPLE_SIZE]
        return got

    def context_ok(self, ctx, name):
        """Sampled check that the one-hole context maps members of ``name`` into ``name``."""
        key = (ctx, name)
        got = self._ctx_ok.get(key)
        if got is not None:
            return got
        ok = arity(ctx) == 1
        if ok:
            for m in self.samples(name):
                try:
                    if not self.in_set(fill(self.u, ctx, [m]), name):
                        ok = False
                        break
                except SMTError:
                    ok = False
                    break
        self._ctx_ok[key] = ok
        return ok

    # ------------------------------------------------------------ conveniences

    def term(self, text, strict=False):
        from .dsl import read_term
        return read_term(text, self.u, strict=strict)

    def show(self, obj):
        from .dsl import print_term
        return print_term(obj, self.u)
