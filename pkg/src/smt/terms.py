"""Arrangements, objects and the intern table.

An arrangement is a plain tuple of items.  Items are symbols, naturals,
pointers to objects (``Ref``), over/underlined arrangements (``Deco``) and
scripted chunks (``Scripted``), the last wrapping a base arrangement with
scripts at any of six positions.  The empty tuple is the empty arrangement.

Objects are interned: one ``Obj`` per canonical arrangement, so object
equality is identity.  ``HOLE`` is the distinguished hole object.
"""
from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Callable, Iterator

from .errors import IllFormed

FORBIDDEN_GLYPHS = frozenset({"[", "]", "[]", "□"})


class Position(enum.Enum):
    # declaration order is the fill traversal order
    SUP = "^"
    SUB = "_"
    PRESUP = "pre^"
    PRESUB = "pre_"
    ABOVE = "above"
    BELOW = "below"


POSITION_ORDER = {p: i for i, p in enumerate(Position)}


@dataclass(frozen=True, slots=True)
class Sym:
    glyph: str

    def __post_init__(self):
        if not self.glyph or self.glyph in FORBIDDEN_GLYPHS:
            raise IllFormed(f"{self.glyph!r} is not a symbol")


@dataclass(frozen=True, slots=True)
class Nat:
    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or self.value < 0:
            raise IllFormed(f"{self.value!r} is not a natural number")


@dataclass(frozen=True, slots=True)
class Ref:
    obj: "Obj"


@dataclass(frozen=True, slots=True)
class Deco:
    kind: str  # "over" | "under"
    body: tuple

    def __post_init__(self):
        if self.kind not in ("over", "under"):
            raise IllFormed(f"unknown decoration {self.kind!r}")
        if not self.body:
            raise IllFormed("decorated arrangement must be non-empty")


@dataclass(frozen=True, slots=True)
class Scripted:
    base: tuple
    scripts: tuple  # ((Position, arrangement), ...) sorted by POSITION_ORDER

    def __post_init__(self):
        if not self.base:
            raise IllFormed("scripted arrangement needs a non-empty base")
        if not self.scripts:
            raise IllFormed("scripted arrangement needs at least one script")
        seen = set()
        for pos, arr in self.scripts:
            if pos in seen:
                raise IllFormed(f"duplicate script position {pos.name}")
            seen.add(pos)
            if not arr:
                raise IllFormed("script arrangements must be non-empty")


def scripted(base, **scripts) -> Scripted:
    """``scripted(base, SUB=(Nat(1),))`` with scripts put in canonical order."""
    pairs = sorted(((Position[k], tuple(v)) for k, v in scripts.items()),
                   key=lambda kv: POSITION_ORDER[kv[0]])
    return Scripted(tuple(base), tuple(pairs))


class Obj:
    """An interned object.  Compare with ``is``/``==`` (identity)."""

    __slots__ = ("arr", "id", "version", "cache", "__weakref__")

    def __init__(self, arr, oid, version):
        self.arr = arr
        self.id = oid
        self.version = version
        self.cache = {}

    @property
    def is_hole(self):
        return self.arr is None

    def __hash__(self):
        return self.id

    def __repr__(self):
        if self.arr is None:
            return "Obj(HOLE)"
        return f"Obj#{self.id}{self.arr!r}"

    def __reduce__(self):
        raise TypeError("objects are bound to their intern table")


HOLE = Obj(None, 0, 0)
HOLE_REF = Ref(HOLE)


class InternTable:
    """Bijection between canonical arrangements and object handles."""

    def __init__(self):
        self._by_arr = {}
        self._by_id = [HOLE]
        self._lock = threading.Lock()

    def intern(self, arr, version=0) -> Obj:
        obj = self._by_arr.get(arr)
        if obj is not None:
            return obj
        with self._lock:
            obj = self._by_arr.get(arr)
            if obj is None:
                obj = Obj(arr, len(self._by_id), version)
                self._by_id.append(obj)
                self._by_arr[arr] = obj
        return obj

    def deref(self, oid) -> Obj:
        return self._by_id[oid]

    def __len__(self):
        return len(self._by_id)


# ---------------------------------------------------------------- traversal

def iter_refs(arr) -> Iterator[Ref]:
    """Pointers of one arrangement in fill order (not descending into objects)."""
    for item in arr:
        if type(item) is Ref:
            yield item
        elif type(item) is Deco:
            yield from iter_refs(item.body)
        elif type(item) is Scripted:
            yield from iter_refs(item.base)
            for _, sub in item.scripts:
                yield from iter_refs(sub)


def map_refs(arr, fn: Callable[[Obj], object]) -> tuple:
    """Rebuild ``arr`` replacing every pointer ``Ref(o)`` by ``fn(o)``.

    ``fn`` may return an ``Obj`` (wrapped in a ``Ref``) or any item."""
    out = []
    for item in arr:
        t = type(item)
        if t is Ref:
            new = fn(item.obj)
            out.append(Ref(new) if isinstance(new, Obj) else new)
        elif t is Deco:
            out.append(Deco(item.kind, map_refs(item.body, fn)))
        elif t is Scripted:
            out.append(Scripted(map_refs(item.base, fn),
                                tuple((p, map_refs(s, fn)) for p, s in item.scripts)))
        else:
            out.append(item)
    return tuple(out)


def subobjects(arr) -> tuple:
    return tuple(r.obj for r in iter_refs(arr))


def constructor_of(arr):
    """Split an arrangement into its primitive constructor pattern and subobjects."""
    subs = subobjects(arr)
    if not subs:
        return arr, ()
    return map_refs(arr, lambda o: HOLE), subs


def plug(pattern, objs) -> tuple:
    """Put ``objs`` into the pointer slots of ``pattern`` in fill order."""
    it = iter(objs)
    out = map_refs(pattern, lambda o: next(it))
    rest = next(it, None)
    if rest is not None:
        raise ValueError("too many objects for pattern")
    return out


def arity(x) -> int:
    """Number of hole occurrences reachable from an object or arrangement."""
    if isinstance(x, Obj):
        if x.is_hole:
            return 1
        n = x.cache.get("arity")
        if n is None:
            n = x.cache["arity"] = arity(x.arr)
        return n
    if isinstance(x, Ref):
        return arity(x.obj)
    return sum(arity(r.obj) for r in iter_refs(x))


def is_context(x) -> bool:
    return arity(x) > 0


def check_arrangement(arr):
    """Structural well-formedness shared by every coercion to an object."""
    if len(arr) == 1 and type(arr[0]) is Ref:
        raise IllFormed("an object cannot consist of a bare pointer")
    for item in arr:
        if not isinstance(item, (Sym, Nat, Ref, Deco, Scripted)):
            raise IllFormed(f"{item!r} is not an arrangement item")


def name_parts(obj):
    """``(base, index)`` if ``obj`` has the shape of an indexed atom ``base_index``."""
    if not isinstance(obj, Obj) or obj.arr is None or len(obj.arr) != 1:
        return None
    item = obj.arr[0]
    if type(item) is not Scripted or len(item.base) != 1 or len(item.scripts) != 1:
        return None
    (pos, sub), = item.scripts
    b = item.base[0]
    if pos is not Position.SUB or type(b) is not Sym or len(sub) != 1 or type(sub[0]) is not Nat:
        return None
    return b.glyph, sub[0].value


def indexed_arrangement(base: str, index: int) -> tuple:
    return (Scripted((Sym(base),), ((Position.SUB, (Nat(index),)),)),)


def size(obj) -> int:
    """Node count of the object tree (names and atoms count one)."""
    if obj.is_hole:
        return 1
    n = obj.cache.get("size")
    if n is None:
        n = obj.cache["size"] = 1 + sum(size(o) for o in subobjects(obj.arr))
    return n
