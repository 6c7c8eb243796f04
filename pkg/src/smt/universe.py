"""The object universe: intern table plus the equivalence in force.

``Universe.make`` is the coercion from arrangements to objects.  It refreshes
subobjects created under an older equivalence, canonicalizes hole-free
arrangements, and interns the result.  Every registration that changes the
equivalence bumps ``version``; objects remember the version they were
canonicalized under so stale ones can be re-coerced.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

from .errors import IllFormed
from .terms import (HOLE, InternTable, Obj, Ref, Sym, check_arrangement, indexed_arrangement,
                    iter_refs, map_refs, name_parts)


@dataclass
class ConstructorDecl:
    pattern: tuple
    arity: int
    prec: int = 0
    assoc: str | None = None    # "left" | "right" | "none"; None leaves nesting open
    explicit: bool = False

    @property
    def left_open(self):
        return type(self.pattern[0]) is Ref

    @property
    def right_open(self):
        return type(self.pattern[-1]) is Ref


class Universe:
    def __init__(self):
        self.table = InternTable()
        self.version = 0
        self.groups = {}            # base glyph -> declared name group
        self.bindings = {}          # constructor pattern -> ((binder, scope), ...)
        self.alpha = False
        self.schemas = []
        self.constructors = {}      # constructor pattern -> ConstructorDecl
        self.lock = threading.RLock()
        self._made = {}

    # -- versioning

    def bump(self):
        with self.lock:
            self.version += 1
            self._made.clear()
        return self.version

    # -- coercion

    def make(self, arr) -> Obj:
        """Coerce an arrangement to its object under the current equivalence."""
        arr = tuple(arr)
        hit = self._made.get(arr)
        if hit is not None:
            return hit
        check_arrangement(arr)
        with self.lock:
            fresh = arr
            if any(r.obj.version != self.version and not r.obj.is_hole for r in iter_refs(arr)):
                fresh = map_refs(arr, self.recoerce)
            from .equiv import canonicalize
            canon = canonicalize(self, fresh)
            obj = self.table.intern(canon, self.version)
            obj.version = self.version
            self._made[arr] = obj
            if fresh is not arr:
                self._made[fresh] = obj
            return obj

    def recoerce(self, obj: Obj) -> Obj:
        if obj.is_hole or obj.version == self.version:
            return obj
        return self.make(obj.arr)

    def intern(self, arr) -> int:
        return self.make(arr).id

    def deref(self, oid: int) -> Obj:
        return self.table.deref(oid)

    # -- names and atoms

    def is_name(self, obj) -> bool:
        parts = name_parts(obj)
        return parts is not None and parts[0] in self.groups

    def indexed(self, base: str, index: int) -> Obj:
        return self.make(indexed_arrangement(base, index))

    def name(self, base: str, index: int) -> Obj:
        if base not in self.groups:
            raise IllFormed(f"{base} is not a declared name group")
        return self.indexed(base, index)

    def atom(self, glyph: str) -> Obj:
        return self.make((Sym(glyph),))

    @property
    def epsilon(self) -> Obj:
        return self.make(())

    @property
    def hole(self) -> Obj:
        return HOLE

    def same(self, a: Obj, b: Obj) -> bool:
        return self.recoerce(a) is self.recoerce(b)

    def __repr__(self):
        return (f"Universe(v{self.version}, {len(self.table)} objects, "
                f"groups={sorted(self.groups)}, alpha={self.alpha}, schemas={len(self.schemas)})")

