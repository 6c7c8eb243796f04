"""Linear syntax for terms and the ``.smt`` grammar-spec language.

Terms
    symbols are bare identifiers or quoted strings, ``#3`` (or ``3``) is a
    natural, ``[]`` or ``□`` the hole, ``ε``/``\\eps`` the empty arrangement,
    ``\\``/``\\lambda`` the glyph λ.  ``( ... )`` groups (meta-parentheses),
    ``obj{ ... }`` builds an object without splice parsing, ``over{}`` and
    ``under{}`` decorate, and ``^{}`` ``_{}`` ``pre^{}`` ``pre_{}``
    ``above{}`` ``below{}`` script the preceding item (``group{ ... }``
    scripts several items at once).  An identifier ending in digits such as
    ``x12`` or ``x_12`` is the indexed atom ``x`` sub 12, a name when ``x`` is
    a declared group.  Other identifiers are constructor glyphs when some
    declared constructor uses them and atoms otherwise.

Specs are ``;``-terminated statements::

    names x, y;
    constructor "λ" [] "." [] prec 1;
    binder "λ" [] "." [] binds 1 in {1, 2};
    modulo alpha;
    equiv L <=> R [orient L' => R'] [when COND];
    set Name [(mv, ...)] [linked] ::= ALT | ... [if COND];    ALT = TEMPLATE [where COND] | ...
    rel Name on Set: TEMPLATE => TEMPLATE [where COND];
    fun name(TEMPLATE) = SETEXPR;

Templates use the term syntax; identifiers are metavariables (``e``,
``e1``, ``e'``), name families (``x_i``) or glyphs, and ``C[t]`` fills,
``t[x := v]`` substitutes.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .contexts import declare_constructor, fill
from .equiv import (ALPHA, Schema, declare_binder, declare_name_group, register_equivalence,
                    substitute)
from .errors import DuplicateSetName, OverlappingGroup, SMTError, SpecSyntaxError
from .grammar import ELLIPSIS, Grammar, make_alternative
from .parse import Leaf, Operand, boundary_allowed, build_object, parse_items, shape
from .patterns import (CAnd, CBefore, CBool, CCall, CEq, CIn, CNot, COr, PConst, PFamily,
                       PFill, PNode, PSubst, PVar, SApp, SLit, SUnion)
from .terms import (HOLE, HOLE_REF, POSITION_ORDER, Deco, Nat, Position, Ref, Scripted, Sym,
                    constructor_of, name_parts, subobjects)
from .universe import Universe

# ------------------------------------------------------------------ lexing

_LETTER = r"[^\W\d_λ]"
_IDENT = rf"{_LETTER}(?:[^\W_λ]|'|-(?={_LETTER}))*(?:_(?:\d+|{_LETTER}+))?'*"

_TOKEN = re.compile(rf"""
  (?P<ws>\s+|//[^\n]*)
| (?P<hole>\[\s*\]|□)
| (?P<special>(?:over|under|obj|group|above|below|pre\^|pre_)\{{)
| (?P<script>[\^_]\{{)
| (?P<escape>\\(?:lambda|eps)\b|\\)
| (?P<op>::=|<=>|=>|->|:=|==|!=|\.\.\.|⋯)
| (?P<nat>\#\d+|\d+)
| (?P<str>"(?:[^"\\\n]|\\.)*")
| (?P<ident>{_IDENT})
| (?P<punct>[()\[\]{{}}|;,])
| (?P<sym>\S)
""", re.VERBOSE)

GLYPH_ALIASES = {"→": "->", "∪": "+"}
KEYWORD_OPS = {"∈": "in", "∉": "notin", "≠": "!="}


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col: int
    end_line: int
    end_col: int
    start: int
    end: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.col}"

    def join(self, other):
        return SourceSpan(self.file, self.line, self.col, other.end_line, other.end_col,
                          self.start, other.end)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan

    def is_(self, *texts):
        return self.kind in ("ident", "op", "punct", "sym") and self.text in texts


def lex(text, file="<input>"):
    out = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        kind = m.lastgroup
        s = m.group()
        end = m.end()
        col = pos - line_start + 1
        nl = s.count("\n")
        if nl:
            end_line = line + nl
            end_col = end - (pos + s.rfind("\n"))
        else:
            end_line, end_col = line, col + len(s)
        if kind != "ws":
            out.append(Token(kind, s, SourceSpan(file, line, col, end_line, end_col, pos, end)))
        if nl:
            line = end_line
            line_start = pos + s.rfind("\n") + 1
        pos = end
    eof = SourceSpan(file, line, pos - line_start + 1, line, pos - line_start + 1, pos, pos)
    out.append(Token("eof", "", eof))
    return out


def _unquote(s):
    return re.sub(r"\\(.)", r"\1", s[1:-1])


# ------------------------------------------------------------------ raw syntax

@dataclass(frozen=True)
class RIdent:
    text: str
    span: SourceSpan = field(compare=False, default=None)


@dataclass(frozen=True)
class RSym:
    glyph: str


@dataclass(frozen=True)
class RHole:
    pass


@dataclass(frozen=True)
class RNat:
    value: int


@dataclass(frozen=True)
class REps:
    pass


@dataclass(frozen=True)
class RParen:
    items: tuple


@dataclass(frozen=True)
class RObj:
    items: tuple


@dataclass(frozen=True)
class RDeco:
    kind: str
    items: tuple


@dataclass(frozen=True)
class RGroup:
    items: tuple


@dataclass(frozen=True)
class RScript:
    base: tuple
    pos: Position
    items: tuple
    grouped: bool = False   # base written as group{ ... }: never merged with inner scripts


def script_chain(r):
    """``x^{a}_{b}`` scripts one base twice; a repeated position nests instead."""
    scripts = [(r.pos, r.items)]
    while not r.grouped and len(r.base) == 1 and type(r.base[0]) is RScript \
            and all(p != r.base[0].pos for p, _ in scripts):
        r = r.base[0]
        scripts.append((r.pos, r.items))
    return r.base, scripts


def _scripted(base, scripts):
    return Scripted(tuple(base), tuple(sorted(scripts, key=lambda s: POSITION_ORDER[s[0]])))


@dataclass(frozen=True)
class RFill:
    target: object
    args: tuple


@dataclass(frozen=True)
class RSubst:
    target: object
    name: tuple
    repl: tuple


@dataclass(frozen=True)
class RTemplate:
    items: tuple
    span: SourceSpan = field(compare=False, default=None)


_SCRIPT_POS = {"^{": Position.SUP, "_{": Position.SUB, "pre^{": Position.PRESUP,
               "pre_{": Position.PRESUB, "above{": Position.ABOVE, "below{": Position.BELOW}

STMT_STOPS = frozenset({";", "|", "where", "if", "when", "orient", "<=>", "=>", "prec", "assoc",
                        "binds"})
COND_STOPS = frozenset({"in", "notin", "==", "!=", "before", "and", "or", ")", ",", ";", "|",
                        "if", "where", "∈", "∉", "≠", "}"})


class Reader:
    """Recursive-descent reader over a token list."""

    def __init__(self, text, file="<input>"):
        self.text = text
        self.file = file
        self.toks = lex(text, file)
        self.i = 0

    # -- token helpers

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, n=1):
        return self.toks[min(self.i + n, len(self.toks) - 1)]

    def advance(self):
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return SpecSyntaxError(msg, tok.span)

    def expect(self, *texts):
        if not self.tok.is_(*texts):
            want = " or ".join(repr(t) for t in texts)
            got = self.tok.text or "end of input"
            raise self.error(f"expected {want}, found {got!r}")
        return self.advance()

    def accept(self, *texts):
        if self.tok.is_(*texts):
            return self.advance()
        return None

    def last_span(self):
        return self.toks[self.i - 1].span

    def is_stop(self, stops):
        t = self.tok
        if t.kind == "eof":
            return True
        return t.kind in ("ident", "op", "punct", "sym") and t.text in stops

    # -- templates and terms

    def template(self, stops=frozenset()) -> RTemplate:
        start = self.tok.span
        items = self.seq(stops)
        if not items:
            raise self.error("expected a term")
        return RTemplate(tuple(items), start.join(self.last_span()))

    def seq(self, stops, depth_close=None):
        items = []
        while not self.is_stop(stops):
            t = self.tok
            if depth_close is not None and t.is_(depth_close):
                break
            if t.kind == "script" or (t.kind == "special" and t.text in _SCRIPT_POS):
                self.advance()
                if not items:
                    raise self.error("a script needs something to attach to", t)
                body = self.braced()
                prev = items.pop()
                base = prev.items if type(prev) is RGroup else (prev,)
                items.append(RScript(base, _SCRIPT_POS[t.text], tuple(body),
                                     type(prev) is RGroup))
                continue
            if t.is_("[") or (t.kind == "str" and _unquote(t.text) == "["):
                if not items:
                    raise self.error("'[' must follow a term to fill or substitute", t)
                self.advance()
                items.append(self.bracket(items.pop()))
                continue
            items.append(self.atom())
        for it in items:
            if type(it) is RGroup:
                raise self.error("group{...} must be followed by a script")
        return items

    def _is_rbracket(self):
        t = self.tok
        return t.is_("]") or (t.kind == "str" and _unquote(t.text) == "]")

    def bracket(self, target):
        first = []
        if not self._is_rbracket():
            first = self.seq(frozenset({":="}) | {"]"}, depth_close=None)
        if self.accept(":="):
            repl = self.seq(frozenset({"]"}))
            if not first or not repl:
                raise self.error("substitution needs a name and a replacement")
            self._close_bracket()
            return RSubst(target, tuple(first), tuple(repl))
        self._close_bracket()
        if not first:
            raise self.error("empty fill")
        return RFill(target, (tuple(first),))

    def _close_bracket(self):
        if not self._is_rbracket():
            raise self.error("expected ']'")
        self.advance()

    def braced(self):
        """Items up to the matching '}' (the opening brace is already consumed)."""
        items = []
        depth = 0
        while True:
            t = self.tok
            if t.kind == "eof":
                raise self.error("unclosed '{'")
            if t.is_("}") and depth == 0:
                self.advance()
                return items
            if t.is_("{"):
                depth += 1
                self.advance()
                items.append(RSym("{"))
                continue
            if t.is_("}"):
                depth -= 1
                self.advance()
                items.append(RSym("}"))
                continue
            chunk = self.seq_one()
            items.extend(chunk)

    def seq_one(self):
        """One item (plus trailing scripts or brackets) inside braces."""
        items = [self.atom()]
        while True:
            t = self.tok
            if t.kind == "script" or (t.kind == "special" and t.text in _SCRIPT_POS):
                self.advance()
                body = self.braced()
                prev = items.pop()
                base = prev.items if type(prev) is RGroup else (prev,)
                items.append(RScript(base, _SCRIPT_POS[t.text], tuple(body),
                                     type(prev) is RGroup))
            elif t.is_("[") or (t.kind == "str" and _unquote(t.text) == "["):
                self.advance()
                items.append(self.bracket(items.pop()))
            else:
                return items

    def atom(self):
        t = self.advance()
        k = t.kind
        if k == "ident":
            if t.text == "ε":
                return REps()
            return RIdent(t.text, t.span)
        if k == "str":
            s = _unquote(t.text)
            if s in ("[]", "□"):
                return RHole()
            if s in ("[", "]") or not s:
                raise self.error(f"{t.text} is not a symbol", t)
            return RSym(GLYPH_ALIASES.get(s, s))
        if k == "hole":
            return RHole()
        if k == "nat":
            return RNat(int(t.text.lstrip("#")))
        if k == "escape":
            return REps() if t.text == "\\eps" else RSym("λ")
        if k == "special":
            kind = t.text[:-1]
            body = tuple(self.braced())
            if not body:
                raise self.error(f"{kind}{{}} needs contents", t)
            if kind == "obj":
                return RObj(body)
            if kind == "group":
                return RGroup(body)
            return RDeco(kind, body)
        if t.is_("("):
            inner = self.seq(frozenset({")"}))
            self.expect(")")
            if not inner:
                raise self.error("empty parentheses", t)
            return RParen(tuple(inner))
        if t.is_(")", "]"):
            raise self.error(f"unbalanced {t.text!r}", t)
        if k == "eof":
            raise self.error("unexpected end of input", t)
        return RSym(GLYPH_ALIASES.get(t.text, t.text))

    # -- conditions

    def condition(self, stops=frozenset()):
        parts = [self.conj(stops)]
        while self.accept("or"):
            parts.append(self.conj(stops))
        return parts[0] if len(parts) == 1 else COr(tuple(parts))

    def conj(self, stops):
        parts = [self.neg(stops)]
        while self.accept("and"):
            parts.append(self.neg(stops))
        return parts[0] if len(parts) == 1 else CAnd(tuple(parts))

    def neg(self, stops):
        if self.accept("not"):
            return CNot(self.neg(stops))
        return self.cond_atom(stops)

    def cond_atom(self, stops):
        t = self.tok
        if t.is_("true") and self._ends_atom(self.peek()):
            self.advance()
            return CBool(True)
        if t.is_("false") and self._ends_atom(self.peek()):
            self.advance()
            return CBool(False)
        if t.is_("("):
            save = self.i
            try:
                self.advance()
                c = self.condition(frozenset({")"}))
                self.expect(")")
                if self._ends_atom(self.tok):
                    return c
            except SpecSyntaxError:
                pass
            self.i = save
        if t.kind == "ident" and self.peek().is_("("):
            save = self.i
            try:
                name = self.advance().text
                self.advance()
                a = self.template(COND_STOPS | {","})
                self.expect(",")
                b = self.template(COND_STOPS | {","})
                self.expect(")")
                if self._ends_atom(self.tok):
                    return CCall(name, (a, b))
            except SpecSyntaxError:
                pass
            self.i = save
        left = self.template(COND_STOPS | stops)
        op = self.tok
        if op.is_("in", "∈"):
            self.advance()
            return CIn(left, self.set_ref())
        if op.is_("notin", "∉"):
            self.advance()
            return CNot(CIn(left, self.set_ref()))
        if op.is_("=="):
            self.advance()
            return CEq(left, self.template(COND_STOPS | stops))
        if op.is_("!=", "≠"):
            self.advance()
            return CNot(CEq(left, self.template(COND_STOPS | stops)))
        if op.is_("before"):
            self.advance()
            return CBefore(left, self.template(COND_STOPS | stops))
        raise self.error("expected in, notin, ==, != or before")

    def _ends_atom(self, tok):
        return tok.kind == "eof" or tok.is_("and", "or", ")", ";", "|", "if", "where")

    def set_ref(self):
        parts = [self.set_primary()]
        while self.accept("+", "∪"):
            parts.append(self.set_primary())
        return parts[0] if len(parts) == 1 else SUnion(tuple(parts))

    def set_primary(self):
        t = self.tok
        if t.is_("{"):
            self.advance()
            terms = []
            if not self.tok.is_("}"):
                terms.append(self.template(COND_STOPS | {","}))
                while self.accept(","):
                    terms.append(self.template(COND_STOPS | {","}))
            self.expect("}")
            return SLit(tuple(terms))
        if t.kind == "ident":
            self.advance()
            if self.accept("("):
                arg = self.template(frozenset({")"}))
                self.expect(")")
                return SApp(t.text, arg)
            return t.text
        raise self.error("expected a set name or set expression")


# ------------------------------------------------------------------ statements

@dataclass
class Stmt:
    span: SourceSpan


@dataclass
class NamesStmt(Stmt):
    bases: list


@dataclass
class ConstructorStmt(Stmt):
    pattern: RTemplate
    prec: int | None = None
    assoc: str | None = None


@dataclass
class BinderStmt(Stmt):
    pattern: RTemplate
    binder: int
    scope: list


@dataclass
class ModuloStmt(Stmt):
    what: str


@dataclass
class EquivStmt(Stmt):
    lhs: RTemplate
    rhs: RTemplate
    orient: tuple | None = None
    cond: object = None


@dataclass
class RawAlt:
    template: RTemplate | None      # None for the ellipsis
    cond: object = None
    span: SourceSpan | None = None


@dataclass
class SetStmt(Stmt):
    name: str
    metavars: list
    alts: list
    global_cond: object = None
    linked: bool = False


@dataclass
class RelStmt(Stmt):
    name: str
    carrier: str
    lhs: RTemplate
    rhs: RTemplate
    cond: object = None


@dataclass
class FunStmt(Stmt):
    name: str
    param: RTemplate
    body: object


@dataclass
class SpecDocument:
    statements: list
    file: str = "<input>"
    text: str = ""


class SpecReader(Reader):
    def document(self):
        stmts = []
        while self.tok.kind != "eof":
            stmts.append(self.statement())
        return SpecDocument(stmts, self.file, self.text)

    def statement(self):
        t = self.tok
        if t.kind != "ident":
            raise self.error(f"expected a declaration, found {t.text!r}")
        kw = t.text
        handler = getattr(self, f"st_{kw}", None)
        if handler is None:
            raise self.error(f"unknown declaration {kw!r}")
        self.advance()
        stmt = handler(t.span)
        end = self.expect(";")
        stmt.span = t.span.join(end.span)
        return stmt

    def ident(self, what="identifier"):
        t = self.tok
        if t.kind != "ident":
            raise self.error(f"expected {what}")
        return self.advance().text

    def st_names(self, span):
        bases = [self.ident("a name base")]
        while self.accept(","):
            bases.append(self.ident("a name base"))
        return NamesStmt(span, bases)

    def st_constructor(self, span):
        pat = self.template(STMT_STOPS)
        prec = assoc = None
        while True:
            if self.accept("prec"):
                t = self.tok
                if t.kind != "nat":
                    raise self.error("expected a precedence number")
                prec = int(self.advance().text.lstrip("#"))
            elif self.accept("assoc"):
                assoc = self.expect("left", "right", "none").text
            else:
                break
        return ConstructorStmt(span, pat, prec, assoc)

    def st_binder(self, span):
        pat = self.template(STMT_STOPS)
        self.expect("binds")
        b = self._nat()
        self.expect("in")
        self.expect("{")
        scope = [self._nat()]
        while self.accept(","):
            scope.append(self._nat())
        self.expect("}")
        return BinderStmt(span, pat, b, scope)

    def _nat(self):
        t = self.tok
        if t.kind != "nat":
            raise self.error("expected a number")
        return int(self.advance().text.lstrip("#"))

    def st_modulo(self, span):
        what = self.expect("alpha").text
        return ModuloStmt(span, what)

    def st_equiv(self, span):
        lhs = self.template(STMT_STOPS)
        self.expect("<=>")
        rhs = self.template(STMT_STOPS)
        orient = cond = None
        if self.accept("orient"):
            ol = self.template(STMT_STOPS)
            self.expect("=>")
            orient = (ol, self.template(STMT_STOPS))
        if self.accept("when", "if"):
            cond = self.condition()
        return EquivStmt(span, lhs, rhs, orient, cond)

    def st_set(self, span):
        name = self.ident("a set name")
        mvs = []
        if self.accept("("):
            mvs.append(self.ident("a metavariable"))
            while self.accept(","):
                mvs.append(self.ident("a metavariable"))
            self.expect(")")
        linked = bool(self.accept("linked"))
        self.expect("::=")
        alts = [self.alternative()]
        while self.accept("|"):
            alts.append(self.alternative())
        gcond = None
        if self.accept("if"):
            gcond = self.condition()
        return SetStmt(span, name, mvs, alts, gcond, linked)

    def alternative(self):
        t = self.tok
        if t.is_("...", "⋯"):
            self.advance()
            return RawAlt(None, None, t.span)
        tpl = self.template(STMT_STOPS)
        cond = None
        if self.accept("where"):
            cond = self.condition()
        return RawAlt(tpl, cond, t.span.join(self.last_span()))

    def st_rel(self, span):
        name = self.ident("a relation name")
        self.expect("on")
        carrier = self.ident("a set name")
        self.expect(":")
        lhs = self.template(STMT_STOPS)
        self.expect("=>")
        rhs = self.template(STMT_STOPS)
        cond = None
        if self.accept("where", "if"):
            cond = self.condition()
        return RelStmt(span, name, carrier, lhs, rhs, cond)

    def st_fun(self, span):
        name = self.ident("a function name")
        self.expect("(")
        param = self.template(frozenset({")"}))
        self.expect(")")
        self.expect("=")
        return FunStmt(span, name, param, self.set_ref())


def parse_spec(text, file="<input>") -> SpecDocument:
    return SpecReader(text, file).document()


# ------------------------------------------------------------------ compilation

_INDEXED = re.compile(r"^(.*?[^\d_])_?(\d+)$")
_FAMILY = re.compile(rf"^(.+?)_({_LETTER}+)$")
_DECORATED = re.compile(r"^(.+?)(?:_?(\d+))?('*)$")


def constructor_glyphs(u) -> frozenset:
    key = len(u.constructors)
    cache = getattr(u, "_glyph_cache", None)
    if cache is not None and cache[0] == key:
        return cache[1]
    out = set()

    def walk(arr):
        for item in arr:
            t = type(item)
            if t is Sym:
                out.add(item.glyph)
            elif t is Deco:
                walk(item.body)
            elif t is Scripted:
                walk(item.base)
                for _, s in item.scripts:
                    walk(s)

    for pat in u.constructors:
        walk(pat)
    res = frozenset(out)
    u._glyph_cache = (key, res)
    return res


class Compiler:
    """Turns raw syntax into objects (term mode) or patterns (template mode)."""

    def __init__(self, u, metavars=None, strict=False, template=False, auto_groups=True):
        self.u = u
        self.mvs = metavars if metavars is not None else {}
        self.strict = strict
        self.template_mode = template
        self.auto_groups = auto_groups
        self._family_count = 0

    # -- entry points

    def term(self, raw) -> object:
        items = raw.items if isinstance(raw, RTemplate) else raw
        return build_object(self.u, self.tree(items))

    def pattern(self, raw):
        items = raw.items if isinstance(raw, RTemplate) else raw
        return self.tree_pattern(self.tree(items))

    def tree(self, raws):
        items = self.items(raws)
        return parse_items(self.u, items, strict=self.strict)

    def tree_pattern(self, tree):
        if type(tree) is Leaf:
            item = tree.item
            return PConst(item.obj) if type(item) is Ref else item.payload
        return PNode(tree.pattern, tuple(self.tree_pattern(k) for k in tree.kids))

    # -- items

    def operand(self, p):
        if self.template_mode:
            return Ref(p.obj) if type(p) is PConst else Operand(p)
        return Ref(p)

    def group(self, raws):
        tree = self.tree(raws)
        if self.template_mode:
            return self.operand(self.tree_pattern(tree))
        if type(tree) is Leaf:
            return tree.item
        return Ref(build_object(self.u, tree))

    def items(self, raws):
        return tuple(self.item(r) for r in raws)

    def item(self, r):
        t = type(r)
        if t is RIdent:
            return self.ident(r)
        if t is RSym:
            return Sym(r.glyph)
        if t is RHole:
            return HOLE_REF
        if t is RNat:
            return Nat(r.value)
        if t is REps:
            return Ref(self.u.epsilon)
        if t is RParen:
            return self.group(r.items)
        if t is RObj:
            inner = self.items(r.items)
            if self.template_mode:
                ops = []
                _operands(inner, ops)
                return self.operand(PNode(shape(inner), tuple(self._op_pattern(o) for o in ops)))
            return Ref(self.u.make(inner))
        if t is RDeco:
            return Deco(r.kind, self.items(r.items))
        if t is RScript:
            base, scripts = script_chain(r)
            return _scripted(self.items(base), [(p, self.items(b)) for p, b in scripts])
        if t is RFill:
            target = self.group((r.target,))
            args = [self.group(a) for a in r.args]
            if self.template_mode:
                return self.operand(PFill(self._op_pattern(target),
                                          tuple(self._op_pattern(a) for a in args)))
            return Ref(fill(self.u, self._obj(target), [self._obj(a) for a in args]))
        if t is RSubst:
            target = self.group((r.target,))
            name = self.group(r.name)
            repl = self.group(r.repl)
            if self.template_mode:
                return self.operand(PSubst(self._op_pattern(target), self._op_pattern(name),
                                           self._op_pattern(repl)))
            return Ref(substitute(self.u, self._obj(target), self._obj(name), self._obj(repl)))
        if t is RGroup:
            raise SMTError("group{...} must be followed by a script")
        raise SMTError(f"unexpected syntax {r!r}")

    def _op_pattern(self, item):
        if type(item) is Ref:
            return PConst(item.obj)
        if type(item) is Operand:
            return item.payload
        raise SMTError("expected a term operand")

    def _obj(self, item):
        if type(item) is Ref:
            return item.obj
        raise SMTError("expected a term operand")

    def ident(self, r):
        text = r.text
        if not self.template_mode:
            m = _INDEXED.match(text)
            if m:
                return Ref(self.u.indexed(m.group(1), int(m.group(2))))
            if _FAMILY.match(text):
                raise SpecSyntaxError(f"name family {text} can only appear in templates", r.span)
            if text in constructor_glyphs(self.u):
                return Sym(text)
            return Ref(self.u.atom(text))
        # template mode
        if text in self.mvs:
            return Operand(PVar(text, text, self.mvs[text]))
        fam = _FAMILY.match(text)
        if fam and fam.group(1) not in self.mvs:
            base = fam.group(1)
            if base not in self.u.groups:
                if not self.auto_groups:
                    raise SpecSyntaxError(f"{base} is not a name group", r.span)
                declare_name_group(self.u, base)
            self._family_count += 1
            return Operand(PFamily(f"{text}#{self._family_count}", base))
        dec = _DECORATED.match(text)
        base = dec.group(1)
        decorated = bool(dec.group(2) or dec.group(3))
        if decorated and base in self.mvs:
            return Operand(PVar(text, base, self.mvs[base]))
        if dec.group(2) and base in self.u.groups:
            return Ref(self.u.name(base, int(dec.group(2))))
        if text in constructor_glyphs(self.u):
            return Sym(text)
        return Operand(PVar(text, base if decorated else text, None))


def _operands(items, out):
    for item in items:
        t = type(item)
        if t is Ref or t is Operand:
            out.append(item)
        elif t is Deco:
            _operands(item.body, out)
        elif t is Scripted:
            _operands(item.base, out)
            for _, s in item.scripts:
                _operands(s, out)


def read_term(text, u, strict=False, file="<term>"):
    """Read one term in the linear syntax and coerce it to an object."""
    r = Reader(text, file)
    tpl = r.template()
    if r.tok.kind != "eof":
        raise r.error(f"unexpected {r.tok.text!r}")
    return Compiler(u, strict=strict).term(tpl)


def read_arrangement(text, u, file="<term>"):
    """Read items without splice parsing: the raw arrangement as written."""
    r = Reader(text, file)
    tpl = r.template()
    if r.tok.kind != "eof":
        raise r.error(f"unexpected {r.tok.text!r}")
    return Compiler(u).items(tpl.items)


# ------------------------------------------------------------------ printing

def _bare_symbol(g, glyphs) -> bool:
    """True when ``g`` written unquoted reads back as the symbol ``g``."""
    try:
        toks = lex(g)
    except Exception:
        return False
    if len(toks) != 2:
        return False
    t = toks[0]
    if t.kind in ("sym", "op"):
        return t.text not in ("(", ")", "[", "]", "{", "}", ",", ";", "|") and \
            GLYPH_ALIASES.get(t.text, t.text) == g
    if t.kind == "punct":
        return t.text in (",", ";", "|", "{", "}")
    if t.kind == "ident":
        return (g in glyphs and g != "ε" and not _INDEXED.match(g)
                and not _FAMILY.match(g))
    return False


def print_term(obj, u) -> str:
    """Shortest rendering we can find that reads back to the same object."""
    obj = u.recoerce(obj)
    for style in ("minimal", "full", "raw"):
        text = _Printer(u, style).obj(obj)
        try:
            if read_term(text, u, strict=True) is obj:
                return text
        except SMTError:
            pass
    return text


class _Printer:
    def __init__(self, u, style):
        self.u = u
        self.style = style
        self.glyphs = constructor_glyphs(u)

    def sym(self, g):
        if _bare_symbol(g, self.glyphs):
            return g
        return json.dumps(g, ensure_ascii=False)

    def obj(self, o, wrap=False):
        if o.is_hole:
            return "[]"
        parts = name_parts(o)
        if parts is not None:
            base, i = parts
            if re.match(rf"^{_IDENT}$", base) and not re.search(r"\d$", base) \
                    and base not in self.glyphs and not _FAMILY.match(base):
                return f"{base}{i}"
        if not o.arr:
            return "ε"
        subs = subobjects(o.arr)
        if not subs:
            if len(o.arr) == 1 and type(o.arr[0]) is Sym:
                g = o.arr[0].glyph
                if (re.match(rf"^{_IDENT}$", g) and g not in self.glyphs and g != "ε"
                        and not _INDEXED.match(g) and not _FAMILY.match(g)):
                    return g
                if self.style != "raw":
                    return self.sym(g)
            return "obj{ " + self.arr(o.arr) + " }"
        ctor, _ = constructor_of(o.arr)
        decl = self.u.constructors.get(ctor)
        if decl is None or self.style == "raw":
            return "obj{ " + self.arr(o.arr, paren_all=True) + " }"
        n = len(subs)
        texts = []
        for idx, s in enumerate(subs):
            text = self.obj(s)
            if subobjects(s.arr or ()) and not s.is_hole:
                sub_ctor, _ = constructor_of(s.arr)
                sub_decl = self.u.constructors.get(sub_ctor)
                need = self.style == "full" or sub_decl is None
                if not need and not text.startswith("obj{"):
                    left = idx == 0 and decl.left_open
                    right = idx == n - 1 and decl.right_open
                    need = not boundary_allowed(decl, sub_decl, left, right)
                if need and not text.startswith("obj{"):
                    text = f"({text})"
            texts.append(text)
        it = iter(texts)
        out = self.arr(ctor, slot=lambda: next(it))
        return out

    def arr(self, arr, slot=None, paren_all=False):
        out = []
        for item in arr:
            t = type(item)
            if t is Sym:
                out.append(self.sym(item.glyph))
            elif t is Nat:
                out.append(f"#{item.value}")
            elif t is Ref:
                if slot is not None:
                    out.append(slot())
                else:
                    text = self.obj(item.obj)
                    if paren_all and item.obj.arr and subobjects(item.obj.arr) \
                            and not text.startswith("obj{"):
                        text = f"({text})"
                    out.append(text)
            elif t is Deco:
                out.append(f"{item.kind}{{ {self.arr(item.body, slot, paren_all)} }}")
            elif t is Scripted:
                base = self.arr(item.base, slot, paren_all)
                if len(item.base) != 1 or type(item.base[0]) is Scripted:
                    base = f"group{{ {base} }}"
                for pos, s in item.scripts:
                    sep = "" if pos in (Position.SUP, Position.SUB) else " "
                    base += f"{sep}{pos.value}{{ {self.arr(s, slot, paren_all)} }}"
                out.append(base)
        return " ".join(out)


# ------------------------------------------------------------------ elaboration

def _rename_repeats(raw, mv, counter):
    """Give each undecorated occurrence of ``mv`` in a raw template its own decoration."""
    def walk(x):
        t = type(x)
        if t is RIdent and x.text == mv:
            counter[0] += 1
            return RIdent(f"{mv}{counter[0]}", x.span)
        if t in (RParen, RObj, RGroup):
            return t(tuple(walk(i) for i in x.items))
        if t is RDeco:
            return RDeco(x.kind, tuple(walk(i) for i in x.items))
        if t is RScript:
            return RScript(tuple(walk(i) for i in x.base), x.pos,
                           tuple(walk(i) for i in x.items), x.grouped)
        if t is RFill:
            return RFill(walk(x.target), tuple(tuple(walk(i) for i in a) for a in x.args))
        if t is RSubst:
            return RSubst(walk(x.target), tuple(walk(i) for i in x.name),
                          tuple(walk(i) for i in x.repl))
        if t is RTemplate:
            return RTemplate(tuple(walk(i) for i in x.items), x.span)
        return x
    return walk(raw)


def _idents(x, out):
    t = type(x)
    if t is RIdent:
        out.append(x.text)
    elif t in (RParen, RObj, RGroup, RDeco, RTemplate):
        for i in x.items:
            _idents(i, out)
    elif t is RScript:
        for i in x.base + x.items:
            _idents(i, out)
    elif t is RFill:
        _idents(x.target, out)
        for a in x.args:
            for i in a:
                _idents(i, out)
    elif t is RSubst:
        _idents(x.target, out)
        for i in x.name + x.repl:
            _idents(i, out)
    elif t in (CAnd, COr):
        for q in x.parts:
            _idents(q, out)
    elif t is CNot:
        _idents(x.part, out)
    elif t is CIn:
        _idents(x.term, out)
        if isinstance(x.where, str):
            out.append(x.where)
        else:
            _idents(x.where, out)
    elif t in (CEq, CBefore):
        _idents(x.left, out)
        _idents(x.right, out)
    elif t is CCall:
        for a in x.args:
            _idents(a, out)
    elif t is SLit:
        for q in x.terms:
            _idents(q, out)
    elif t is SApp:
        _idents(x.arg, out)
    elif t is SUnion:
        for q in x.parts:
            _idents(q, out)
    return out


def _mentions(raw, mv):
    for text in _idents(raw, []):
        m = _DECORATED.match(text)
        if text == mv or m.group(1) == mv:
            return True
    return False


def decoration_rewrite(stmt: SetStmt) -> list:
    """Alternatives after giving repeated undecorated metavariables distinct decorations."""
    alts = list(stmt.alts)
    if stmt.linked:
        return alts
    for mv in stmt.metavars:
        texts = [t for a in alts if a.template is not None
                 for t in _idents(a.template, [])]
        decorated = [t for t in texts if t != mv and _DECORATED.match(t).group(1) == mv]
        if decorated:
            continue
        for i, a in enumerate(alts):
            if a.template is None:
                continue
            if sum(1 for t in _idents(a.template, []) if t == mv) < 2:
                continue
            if (a.cond is not None and _mentions(a.cond, mv)) or (
                    stmt.global_cond is not None and _mentions(stmt.global_cond, mv)):
                continue
            alts[i] = RawAlt(_rename_repeats(a.template, mv, [0]), a.cond, a.span)
    return alts


class Elaborator:
    def __init__(self, doc: SpecDocument, universe=None, fresh=3):
        self.doc = doc
        self.g = Grammar(universe if universe is not None else Universe(), fresh=fresh)
        self.u = self.g.u

    def run(self) -> Grammar:
        mvs = {}
        set_names = []
        for st in self.doc.statements:
            if isinstance(st, SetStmt):
                for mv in st.metavars:
                    mvs[mv] = st.name
                if st.name not in set_names:
                    set_names.append(st.name)
        rel_names = {st.name for st in self.doc.statements if isinstance(st, RelStmt)}
        fun_names = {st.name for st in self.doc.statements if isinstance(st, FunStmt)}
        self.mvs = mvs
        self.set_names = set_names
        for st in self.doc.statements:
            if isinstance(st, SetStmt):
                clash = (st.name in rel_names or st.name in fun_names or st.name in self.u.groups)
                if clash:
                    raise DuplicateSetName(f"{st.span}: {st.name} is already used for "
                                           f"something other than a set")
        for st in self.doc.statements:
            try:
                getattr(self, "do_" + type(st).__name__)(st)
            except SpecSyntaxError:
                raise
            except SMTError as exc:
                if not getattr(exc, "span", None):
                    exc.span = st.span
                raise
        for st in self.doc.statements:
            if isinstance(st, SetStmt) and st.name in self.u.groups:
                raise DuplicateSetName(f"{st.span}: {st.name} is a name group")
        self.g.source = self.doc
        return self.g

    def compiler(self):
        return Compiler(self.u, self.mvs, template=True)

    def pattern_items(self, raw: RTemplate):
        def conv(x):
            t = type(x)
            if t in (RIdent, RSym):
                return Sym(x.text if t is RIdent else x.glyph)
            if t is RHole:
                return HOLE_REF
            if t is RNat:
                return Nat(x.value)
            if t is RDeco:
                return Deco(x.kind, tuple(conv(i) for i in x.items))
            if t is RScript:
                base, scripts = script_chain(x)
                return _scripted(tuple(conv(i) for i in base),
                                 [(p, tuple(conv(i) for i in b)) for p, b in scripts])
            raise SpecSyntaxError("constructor patterns contain only symbols, naturals and holes",
                                  raw.span)
        return tuple(conv(i) for i in raw.items)

    def do_NamesStmt(self, st):
        for b in st.bases:
            declare_name_group(self.u, b)

    def do_ConstructorStmt(self, st):
        declare_constructor(self.u, self.pattern_items(st.pattern), st.prec, st.assoc,
                            explicit=True)

    def do_BinderStmt(self, st):
        declare_binder(self.u, self.pattern_items(st.pattern), st.binder, st.scope)

    def do_ModuloStmt(self, st):
        register_equivalence(self.u, ALPHA)

    def do_EquivStmt(self, st):
        c = self.compiler()
        lhs, rhs = c.pattern(st.lhs), c.pattern(st.rhs)
        if st.orient:
            ol, orr = c.pattern(st.orient[0]), c.pattern(st.orient[1])
        else:
            ol, orr = lhs, rhs
        cond = self.condition(st.cond, c) if st.cond is not None else None
        text = self.doc.text[st.span.start:st.span.end] if self.doc.text else ""
        register_equivalence(self.u, Schema(lhs, rhs, ol, orr, cond, text))

    def do_SetStmt(self, st):
        c = self.compiler()
        alts = []
        for a in decoration_rewrite(st):
            if a.template is None:
                alts.append(ELLIPSIS)
                continue
            tpl = c.pattern(a.template)
            cond = self.condition(a.cond, c) if a.cond is not None else None
            text = self.doc.text[a.span.start:a.span.end] if self.doc.text else ""
            alts.append(make_alternative(tpl, cond, text, a.span))
        gcond = self.condition(st.global_cond, c) if st.global_cond is not None else None
        # a trailing ellipsis only announces later rules
        while len(alts) > 1 and alts[-1] == ELLIPSIS:
            alts.pop()
        self.g.declare_rule(st.name, alts, tuple(st.metavars), gcond, st.span)

    def do_RelStmt(self, st):
        c = self.compiler()
        lhs, rhs = c.pattern(st.lhs), c.pattern(st.rhs)
        cond = self.condition(st.cond, c) if st.cond is not None else None
        text = self.doc.text[st.span.start:st.span.end] if self.doc.text else ""
        self.g.declare_relation(st.name, self.set_name(st.carrier), lhs, rhs, cond, text)

    def do_FunStmt(self, st):
        c = self.compiler()
        self.g.declare_function(st.name, c.pattern(st.param), self.set_expr(st.body, c))

    def set_name(self, name):
        if name in self.set_names:
            return name
        if name in self.mvs:
            return self.mvs[name]
        m = _DECORATED.match(name)
        if m and m.group(1) in self.mvs:
            return self.mvs[m.group(1)]
        return name

    def condition(self, c, comp):
        t = type(c)
        if t is CBool:
            return c
        if t in (CAnd, COr):
            return t(tuple(self.condition(q, comp) for q in c.parts))
        if t is CNot:
            return CNot(self.condition(c.part, comp))
        if t is CIn:
            if isinstance(c.where, str):
                where = self.set_name(c.where)
            else:
                where = self.set_expr(c.where, comp)
            return CIn(comp.pattern(c.term), where)
        if t in (CEq, CBefore):
            return t(comp.pattern(c.left), comp.pattern(c.right))
        if t is CCall:
            return CCall(c.name, tuple(comp.pattern(a) for a in c.args))
        raise SMTError(f"unexpected condition {c!r}")

    def set_expr(self, s, comp):
        t = type(s)
        if isinstance(s, str):
            raise SpecSyntaxError(f"{s} is a set name, not a set expression")
        if t is SLit:
            return SLit(tuple(comp.pattern(q) for q in s.terms))
        if t is SApp:
            return SApp(s.fn, comp.pattern(s.arg))
        if t is SUnion:
            return SUnion(tuple(self.set_expr(q, comp) for q in s.parts))
        raise SMTError(f"unexpected set expression {s!r}")


def elaborate(doc: SpecDocument, universe=None, fresh=3) -> Grammar:
    return Elaborator(doc, universe, fresh).run()


def load_spec(text, file="<input>", universe=None, fresh=3) -> Grammar:
    return elaborate(parse_spec(text, file), universe, fresh)


def diagnostic(exc, file="<input>") -> dict:
    """JSON-lines diagnostic record for an engine or syntax error."""
    span = getattr(exc, "span", None)
    msg = exc.args[0] if exc.args else str(exc)
    return {
        "file": span.file if span is not None else file,
        "line": span.line if span is not None else 0,
        "col": span.col if span is not None else 0,
        "code": getattr(exc, "code", type(exc).__name__),
        "message": str(msg),
    }


__all__ = ["lex", "parse_spec", "read_term", "read_arrangement", "print_term", "load_spec",
           "elaborate", "diagnostic", "SpecDocument", "SourceSpan", "Compiler"]
