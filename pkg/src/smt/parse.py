"""Splice parsing of flat item sequences against declared constructors.

Input is a sequence of items where operands (already-built objects or
template placeholders) sit among symbols.  Each declared constructor is a
pattern whose holes match non-empty sub-spans; the span parse is memoized
so the search is polynomial.  Precedence and associativity only restrict
children placed at the outer ends of a constructor: a child whose facing end
is itself open must bind tighter, or equally tight with no conflicting
associativity declaration.  One tree is the answer, several raise ``AmbiguousParse``,
none makes a new constructor from the whole sequence (or ``NoParse`` in
strict mode).
"""
from __future__ import annotations

from dataclasses import dataclass

from .contexts import declare_constructor
from .errors import AmbiguousParse, NoParse
from .terms import Deco, Nat, Ref, Scripted, Sym, map_refs, plug

MAX_TREES = 16


@dataclass(frozen=True)
class Operand:
    """A placeholder item standing for an already-parsed template piece."""
    payload: object


@dataclass(frozen=True)
class Leaf:
    item: object


@dataclass(frozen=True)
class Node:
    pattern: tuple
    kids: tuple


def is_operand(item) -> bool:
    return type(item) is Ref or type(item) is Operand


def operands(items) -> list:
    out = []
    map_refs_like(items, out.append)
    return out


def map_refs_like(items, visit):
    for item in items:
        t = type(item)
        if t is Ref or t is Operand:
            visit(item)
        elif t is Deco:
            map_refs_like(item.body, visit)
        elif t is Scripted:
            map_refs_like(item.base, visit)
            for _, s in item.scripts:
                map_refs_like(s, visit)


def shape(items) -> tuple:
    """The constructor pattern of an item sequence: every operand becomes a hole."""
    from .terms import HOLE_REF

    def conv(seq):
        out = []
        for item in seq:
            t = type(item)
            if t is Ref or t is Operand:
                out.append(HOLE_REF)
            elif t is Deco:
                out.append(Deco(item.kind, conv(item.body)))
            elif t is Scripted:
                out.append(Scripted(conv(item.base), tuple((p, conv(s)) for p, s in item.scripts)))
            else:
                out.append(item)
        return tuple(out)

    return conv(items)


def _nest_ok(parent, child, side) -> bool:
    if child.prec != parent.prec:
        return child.prec > parent.prec
    # equal precedence: undeclared associativity leaves both nestings open
    return all(a in (None, side) for a in (parent.assoc, child.assoc))


def boundary_allowed(parent, child_decl, left: bool, right: bool) -> bool:
    """May ``child_decl`` fill a hole of ``parent`` at its left and/or right edge?"""
    if left and child_decl.right_open and not _nest_ok(parent, child_decl, "left"):
        return False
    if right and child_decl.left_open and not _nest_ok(parent, child_decl, "right"):
        return False
    return True


class SpliceParser:
    def __init__(self, constructors):
        self.decls = sorted(constructors.values(), key=lambda d: len(d.pattern))
        self.memo = {}
        self.keep = []

    def span(self, seq, i, j) -> list:
        key = (id(seq), i, j)
        got = self.memo.get(key)
        if got is not None:
            return got
        self.memo[key] = []     # guards against left recursion through unit spans
        if j - i == 1 and is_operand(seq[i]):
            out = [Leaf(seq[i])]
        else:
            out = []
            first, last = seq[i], seq[j - 1]
            for d in self.decls:
                pat = d.pattern
                if len(pat) > j - i:
                    continue
                if type(pat[0]) is Sym and pat[0] != first:
                    continue
                if type(pat[-1]) is Sym and pat[-1] != last:
                    continue
                for kids in self._match(d, pat, 0, seq, i, j, True):
                    node = Node(d.pattern, tuple(kids))
                    if node not in out:
                        out.append(node)
                    if len(out) > MAX_TREES:
                        break
        self.memo[key] = out
        return out

    def _match(self, d, pat, k, seq, pos, end, top):
        if k == len(pat):
            if pos == end:
                yield []
            return
        if pos >= end:
            return
        p = pat[k]
        t = type(p)
        if t is Ref:
            left = top and k == 0
            right = top and k == len(pat) - 1
            rest = len(pat) - k - 1
            stops = [end] if k == len(pat) - 1 else range(pos + 1, end - rest + 1)
            for stop in stops:
                for tree in self.span(seq, pos, stop):
                    if type(tree) is Node and (left or right):
                        if not boundary_allowed(d, self._decl(tree), left, right):
                            continue
                    for more in self._match(d, pat, k + 1, seq, stop, end, top):
                        yield [tree] + more
        elif t is Sym or t is Nat:
            if seq[pos] == p:
                yield from self._match(d, pat, k + 1, seq, pos + 1, end, top)
        elif t is Deco:
            item = seq[pos]
            if type(item) is Deco and item.kind == p.kind:
                for inner in self._full(d, p.body, item.body):
                    for more in self._match(d, pat, k + 1, seq, pos + 1, end, top):
                        yield inner + more
        elif t is Scripted:
            item = seq[pos]
            if type(item) is Scripted and [q for q, _ in item.scripts] == [q for q, _ in p.scripts]:
                parts = [(p.base, item.base)]
                parts += [(a, b) for (_, a), (_, b) in zip(p.scripts, item.scripts)]
                for inner in self._product(d, parts):
                    for more in self._match(d, pat, k + 1, seq, pos + 1, end, top):
                        yield inner + more

    def _full(self, d, pat, seq):
        self.keep.append(seq)
        yield from self._match(d, pat, 0, seq, 0, len(seq), False)

    def _product(self, d, parts):
        if not parts:
            yield []
            return
        (pat, seq), rest = parts[0], parts[1:]
        for a in self._full(d, pat, seq):
            for b in self._product(d, rest):
                yield a + b

    def _decl(self, tree):
        return self._decls_by_pattern[tree.pattern]

    @property
    def _decls_by_pattern(self):
        got = getattr(self, "_dbp", None)
        if got is None:
            got = self._dbp = {d.pattern: d for d in self.decls}
        return got


def parse_items(u, items, strict=False):
    """Parse an item sequence into a tree of constructors over operands."""
    items = tuple(items)
    if len(items) == 1 and is_operand(items[0]):
        return Leaf(items[0])
    parser = SpliceParser(u.constructors)
    trees = parser.span(items, 0, len(items)) if items else []
    if len(trees) > 1:
        raise AmbiguousParse(f"{len(trees)} parses for {describe(items)}")
    if trees:
        return trees[0]
    if strict:
        raise NoParse(f"no constructor covers {describe(items)}")
    decl = declare_constructor(u, shape(items))
    return Node(decl.pattern, tuple(Leaf(x) for x in operands(items)))


def build_object(u, tree):
    if type(tree) is Leaf:
        return tree.item.obj
    return u.make(plug(tree.pattern, [build_object(u, k) for k in tree.kids]))


def describe(items) -> str:
    out = []
    for item in items:
        t = type(item)
        if t is Sym:
            out.append(item.glyph)
        elif t is Nat:
            out.append(f"#{item.value}")
        elif t is Deco:
            out.append(f"{item.kind}{{{describe(item.body)}}}")
        elif t is Scripted:
            out.append(describe(item.base) + "".join(
                f"{p.value}{{{describe(s)}}}" for p, s in item.scripts))
        else:
            out.append("_")
    return " ".join(out)


__all__ = ["Operand", "Leaf", "Node", "parse_items", "build_object", "shape", "operands",
           "boundary_allowed", "SpliceParser"]
