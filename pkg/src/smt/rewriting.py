"""Relations given by rewrite rules, their compatible closure, and closure searches."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field


@dataclass(frozen=True)
class RelRule:
    lhs: object
    rhs: object
    cond: object = None
    text: str = ""


@dataclass
class Relation:
    name: str
    carrier: str
    rules: list = field(default_factory=list)


@dataclass(frozen=True)
class Rewrite:
    """One closure step ``source = context[redex] -> context[contractum] = target``."""
    source: object
    target: object
    context: object
    redex: object
    contractum: object
    rule: RelRule


def reachable(step, start, bound):
    """Terms reachable in at most ``bound`` steps, and whether the search was cut off."""
    seen = {start}
    frontier = [start]
    for _ in range(bound):
        nxt = []
        for t in frontier:
            for s in step(t):
                if s not in seen:
                    seen.add(s)
                    nxt.append(s)
        frontier = nxt
        if not frontier:
            return seen, False
    truncated = any(True for t in frontier for _ in step(t))
    return seen, truncated


def frontiers(step, start, bound):
    """Breadth-first layers of new terms, one list per step."""
    seen = {start}
    layer = [start]
    out = []
    for _ in range(bound):
        nxt = []
        for t in layer:
            for s in step(t):
                if s not in seen:
                    seen.add(s)
                    nxt.append(s)
        if not nxt:
            break
        out.append(nxt)
        layer = nxt
    return out


def normal_forms(step, start, bound):
    """Reachable terms without successors; ``truncated`` if the bound cut the search."""
    seen, truncated = reachable(step, start, bound)
    forms = {t for t in seen if next(iter(step(t)), None) is None}
    return forms, truncated


def related(step, a, b, kind="refl-trans", bound=20):
    """Semi-decide ``a R* b`` or, for ``refl-sym-trans``, joinability of ``a`` and ``b``.

    Returns True, False (search exhausted) or None (bound reached)."""
    ra, ta = reachable(step, a, bound)
    if b in ra:
        return True
    if kind == "refl-trans":
        return None if ta else False
    rb, tb = reachable(step, b, bound)
    if ra & rb:
        return True
    return None if (ta or tb) else False
