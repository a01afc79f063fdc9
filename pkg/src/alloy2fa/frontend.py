"""Parser, desugarer and symbol table for the accepted Alloy subset.

The surface syntax is a small cut of Alloy 4: signature declarations
with extension, multiplicities and fields, facts, predicates, asserts
(optionally parametric), and formulas built from membership, equality,
the boolean connectives, quantifiers and the counting forms `some` and
`lone`. Transitive closure `^e` is rejected up front; only the
reflexive-transitive `*e` is in the fragment.

`parse` produces a resolved AlloyModel whose formulas use the node
types from terms. `desugar` inlines predicate calls, closes parametric
asserts and rewrites every convenience form down to the core
(membership, counting some, negation, conjunction, ranged all), which
is what the translation pipeline consumes.
"""

import dataclasses
import string
from dataclasses import dataclass, field
from typing import Optional

from .terms import (
    AConv, ADiff, ADomRes, AIden, AInter, AJoin, ANone, AProd, ARanRes,
    ARel, ASig, AStar, AUnion, AUniv, AVar, AlloyExpr, AlloyForm,
    ArityError, FAll, FAnd, FEq, FImp, FIn, FLone, FNot, FOr, FPredCall,
    FSome, FSomeQ, a_children, arity_of, form_children, is_core,
)


class ParseError(Exception):
    """Lexical, syntactic or name-resolution failure, with position."""


class DesugarError(Exception):
    """A construct the reduction to the core cannot handle."""


# ---------------------------------------------------------------------------
# lexer

KEYWORDS = {
    "abstract", "sig", "extends", "fact", "assert", "pred",
    "all", "some", "lone", "one", "set", "in",
    "iden", "none", "univ", "and", "or", "not",
}

TWO_CHAR = ("->", "=>", "&&", "||", "<:", ":>")
ONE_CHAR = "{}()[],:|!~*^.&+-="

_ID_START = set(string.ascii_letters)
_ID_CONT = set(string.ascii_letters + string.digits + "_'")


@dataclass(frozen=True)
class Tok:
    kind: str  # "id", "kw", "op", "eof"
    text: str
    line: int
    col: int


def lex(text: str):
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c in " \t\r":
            i, col = i + 1, col + 1
            continue
        if text.startswith("//", i) or text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise ParseError(
                    "lexical error: unterminated comment at line %d, "
                    "column %d" % (line, col))
            skipped = text[i:end + 2]
            line += skipped.count("\n")
            col = (len(skipped) - skipped.rfind("\n")
                   if "\n" in skipped else col + len(skipped))
            i = end + 2
            continue
        if c in _ID_START:
            j = i
            while j < n and text[j] in _ID_CONT:
                j += 1
            word = text[i:j]
            toks.append(Tok("kw" if word in KEYWORDS else "id",
                            word, line, col))
            col += j - i
            i = j
            continue
        two = text[i:i + 2]
        if two in TWO_CHAR:
            toks.append(Tok("op", two, line, col))
            i, col = i + 2, col + 2
            continue
        if c in ONE_CHAR:
            toks.append(Tok("op", c, line, col))
            i, col = i + 1, col + 1
            continue
        raise ParseError("lexical error: unexpected character %r at "
                         "line %d, column %d" % (c, line, col))
    toks.append(Tok("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# model declarations

MULTS = ("some", "one", "lone", "set")


@dataclass(frozen=True)
class SigDecl:
    name: str
    abstract: bool = False
    parent: Optional[str] = None
    mult: Optional[str] = None
    pos: Optional[tuple] = field(default=None, compare=False)


@dataclass(frozen=True)
class FieldDecl:
    owner: str
    name: str
    cols: tuple  # declared column signature names, owner excluded
    col_mults: tuple  # per declared column, None means unconstrained
    pos: Optional[tuple] = field(default=None, compare=False)

    @property
    def arity(self) -> int:
        return 1 + len(self.cols)


@dataclass(frozen=True)
class PredDecl:
    name: str
    params: tuple  # (name, range expression) pairs
    body: AlloyForm
    pos: Optional[tuple] = field(default=None, compare=False)


@dataclass(frozen=True)
class Assertion:
    name: str
    params: tuple  # as in PredDecl; closed over by desugar
    form: AlloyForm
    pos: Optional[tuple] = field(default=None, compare=False)


@dataclass(frozen=True)
class AlloyModel:
    sigs: tuple
    fields: tuple
    facts: tuple
    preds: tuple
    asserts: tuple

    def sig_names(self):
        return [s.name for s in self.sigs]

    def pred(self, name: str) -> Optional[PredDecl]:
        for p in self.preds:
            if p.name == name:
                return p
        return None

    def rel_arity(self):
        return {f.name: f.arity for f in self.fields}


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0
        self.scopes = []  # lexically bound variable names

    # -- token plumbing

    def peek(self, ahead=0) -> Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("op", "kw") and t.text == text

    def eat(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.fail("expected %r" % text)
        t = self.peek()
        self.i += 1
        return t

    def ident(self, what="identifier") -> Tok:
        t = self.peek()
        if t.kind != "id":
            self.fail("expected %s" % what)
        self.i += 1
        return t

    def fail(self, msg: str):
        t = self.peek()
        got = t.text if t.kind != "eof" else "end of input"
        raise ParseError("syntax error: %s, got %r at line %d, column %d"
                         % (msg, got, t.line, t.col))

    def _pos(self, t: Tok) -> tuple:
        return (t.line, t.col)

    # -- paragraphs

    def model(self) -> AlloyModel:
        sigs, fields, facts, preds, asserts = [], [], [], [], []
        while self.peek().kind != "eof":
            t = self.peek()
            if t.text == "fact":
                facts.append(self.fact())
            elif t.text == "assert":
                asserts.append(self.assertion(len(asserts)))
            elif t.text == "pred":
                preds.append(self.pred())
            elif t.text in ("sig", "abstract") or t.text in MULTS:
                s, f = self.sig()
                sigs.extend(s)
                fields.extend(f)
            else:
                self.fail("expected a paragraph (sig, fact, pred, assert)")
        model = AlloyModel(tuple(sigs), tuple(fields), tuple(facts),
                           tuple(preds), tuple(asserts))
        return _resolve(model)

    def sig(self):
        t = self.peek()
        mult = t.text if t.kind == "kw" and t.text in MULTS else None
        if mult:
            self.i += 1
        abstract = self.eat("abstract")
        self.expect("sig")
        names = [self.ident("signature name")]
        while self.eat(","):
            names.append(self.ident("signature name"))
        parent = None
        if self.eat("extends"):
            parent = self.ident("parent signature name").text
        self.expect("{")
        fields = []
        first = True
        while not self.at("}"):
            if not first:
                self.expect(",")
                if self.at("}"):  # tolerate a trailing comma
                    break
            first = False
            fields.extend(self.field_decl(names))
        self.expect("}")
        sigs = [SigDecl(n.text, abstract, parent, mult, self._pos(n))
                for n in names]
        return sigs, fields

    def field_decl(self, owners):
        names = [self.ident("field name")]
        while self.eat(","):
            names.append(self.ident("field name"))
        self.expect(":")
        cols, mults = [], []
        while True:
            m = None
            if self.peek().kind == "kw" and self.peek().text in MULTS:
                m = self.peek().text
                self.i += 1
            col = self.ident("column signature name")
            cols.append(col.text)
            mults.append(m)
            if not self.eat("->"):
                break
        out = []
        for owner in owners:
            for n in names:
                out.append(FieldDecl(owner.text, n.text, tuple(cols),
                                     tuple(mults), self._pos(n)))
        return out

    def fact(self) -> AlloyForm:
        self.expect("fact")
        if self.peek().kind == "id":  # optional label, not used further
            self.i += 1
        return self.block()

    def assertion(self, index: int) -> Assertion:
        t = self.expect("assert")
        name = "assert%d" % index
        if self.peek().kind == "id":
            name = self.ident().text
        params = ()
        if self.at("["):
            params = self.param_list()
        self.scopes.append({p for p, _ in params})
        form = self.block()
        self.scopes.pop()
        return Assertion(name, params, form, self._pos(t))

    def pred(self) -> PredDecl:
        self.expect("pred")
        name = self.ident("predicate name")
        params = self.param_list() if self.at("[") else ()
        self.scopes.append({p for p, _ in params})
        body = self.block()
        self.scopes.pop()
        return PredDecl(name.text, params, body, self._pos(name))

    def param_list(self) -> tuple:
        self.expect("[")
        params = []
        while not self.at("]"):
            if params:
                self.expect(",")
            names = [self.ident("parameter name")]
            while self.eat(","):
                names.append(self.ident("parameter name"))
            self.expect(":")
            rng = self.expr()
            params.extend((n.text, rng) for n in names)
        self.expect("]")
        return tuple(params)

    def block(self) -> AlloyForm:
        """Braced formula list; several formulas conjoin implicitly."""
        self.expect("{")
        forms = []
        while not self.at("}"):
            forms.append(self.form())
        self.expect("}")
        if not forms:
            self.fail("empty block")
        out = forms[-1]
        for f in reversed(forms[:-1]):
            out = FAnd(f, out)
        return out

    # -- formulas, loosest binding first: ||, =>, &&, !

    def form(self) -> AlloyForm:
        f = self.imp_form()
        while self.at("||") or self.at("or"):
            self.i += 1
            f = FOr(f, self.imp_form())
        return f

    def imp_form(self) -> AlloyForm:
        f = self.and_form()
        if self.eat("=>"):
            return FImp(f, self.imp_form())
        return f

    def and_form(self) -> AlloyForm:
        f = self.unary_form()
        while self.at("&&") or self.at("and"):
            self.i += 1
            f = FAnd(f, self.unary_form())
        return f

    def unary_form(self) -> AlloyForm:
        if self.at("!") or self.at("not"):
            self.i += 1
            return FNot(self.unary_form())
        if self.at("all"):
            return self.quantified("all")
        if self.at("some") and self._quantifier_ahead():
            return self.quantified("some")
        if self.at("some") or self.at("lone"):
            kw = self.peek().text
            self.i += 1
            e = self.expr()
            return FSome(e) if kw == "some" else FLone(e)
        if (self.peek().kind == "id" and self.peek(1).kind == "op"
                and self.peek(1).text == "["):
            return self.pred_call()
        return self.comparison()

    def _quantifier_ahead(self) -> bool:
        # distinguish `some x : T | F` from the counting form `some Exp`
        j = self.i + 1
        if self.toks[j].kind != "id":
            return False
        while (self.toks[j].kind == "id"
               and self.toks[j + 1].kind == "op"
               and self.toks[j + 1].text == ","):
            j += 2
        return (self.toks[j].kind == "id"
                and self.toks[j + 1].kind == "op"
                and self.toks[j + 1].text == ":")

    def quantified(self, kw: str) -> AlloyForm:
        self.expect(kw)
        groups = []
        while True:
            names = [self.ident("variable name")]
            while self.eat(","):
                names.append(self.ident("variable name"))
            self.expect(":")
            rng = self.expr()
            groups.append((names, rng))
            if not self.eat(","):
                break
        self.expect("|")
        bound = [n.text for names, _ in groups for n in names]
        self.scopes.append(set(bound))
        body = self.form()
        self.scopes.pop()
        ctor = FAll if kw == "all" else FSomeQ
        for names, rng in reversed(groups):
            for n in reversed(names):
                body = ctor(n.text, rng, body)
        return body

    def pred_call(self) -> AlloyForm:
        name = self.ident("predicate name")
        self.expect("[")
        args = []
        while not self.at("]"):
            if args:
                self.expect(",")
            args.append(self.expr())
        self.expect("]")
        return FPredCall(name.text, tuple(args), pos=self._pos(name))

    def comparison(self) -> AlloyForm:
        if self.at("("):
            mark = self.i
            try:
                l = self.expr()
            except ParseError:
                self.i = mark
                self.expect("(")
                f = self.form()
                self.expect(")")
                return f
            if not (self.at("in") or self.at("=")):
                self.i = mark
                self.expect("(")
                f = self.form()
                self.expect(")")
                return f
        else:
            l = self.expr()
        if self.eat("in"):
            return FIn(l, self.expr())
        if self.eat("="):
            return FEq(l, self.expr())
        self.fail("expected 'in' or '=' after an expression")

    # -- expressions, loosest binding first: + -, &, ->, <: :>, .

    def expr(self) -> AlloyExpr:
        e = self.inter_expr()
        while self.at("+") or self.at("-"):
            op = self.peek().text
            self.i += 1
            r = self.inter_expr()
            e = AUnion(e, r) if op == "+" else ADiff(e, r)
        return e

    def inter_expr(self) -> AlloyExpr:
        e = self.prod_expr()
        while self.eat("&"):
            e = AInter(e, self.prod_expr())
        return e

    def prod_expr(self) -> AlloyExpr:
        e = self.res_expr()
        while self.eat("->"):
            e = AProd(e, self.res_expr())
        return e

    def res_expr(self) -> AlloyExpr:
        e = self.dot_expr()
        while self.at("<:") or self.at(":>"):
            op = self.peek().text
            self.i += 1
            r = self.dot_expr()
            e = ADomRes(e, r) if op == "<:" else ARanRes(e, r)
        return e

    def dot_expr(self) -> AlloyExpr:
        e = self.unary_expr()
        while self.eat("."):
            e = AJoin(e, self.unary_expr())
        return e

    def unary_expr(self) -> AlloyExpr:
        t = self.peek()
        if self.eat("~"):
            return AConv(self.unary_expr(), pos=self._pos(t))
        if self.eat("*"):
            return AStar(self.unary_expr(), pos=self._pos(t))
        if self.at("^"):
            self.fail("transitive closure '^' is outside the fragment; "
                      "use reflexive-transitive '*'")
        return self.prim_expr()

    def prim_expr(self) -> AlloyExpr:
        t = self.peek()
        if self.eat("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.eat("iden"):
            return AIden(pos=self._pos(t))
        if self.eat("none"):
            return ANone(pos=self._pos(t))
        if self.eat("univ"):
            return AUniv(pos=self._pos(t))
        if t.kind == "id":
            self.i += 1
            if any(t.text in s for s in self.scopes):
                return AVar(t.text, pos=self._pos(t))
            return ARel(t.text, pos=self._pos(t))
        self.fail("expected an expression")


def parse(text: str) -> AlloyModel:
    """Parse and name-resolve a model; raises ParseError with position."""
    return _Parser(lex(text)).model()


# ---------------------------------------------------------------------------
# name resolution

def _resolve(model: AlloyModel) -> AlloyModel:
    """Rewrite identifiers naming a signature into sig nodes and reject
    identifiers that name nothing; returns the rebuilt model."""
    signames = set(model.sig_names())
    if len(signames) < len(model.sigs):
        dup = [s for s in model.sigs
               if model.sig_names().count(s.name) > 1][0]
        raise ParseError("duplicate signature %r%s"
                         % (dup.name, _at_pos(dup.pos)))
    fieldnames = {f.name for f in model.fields}
    for s in model.sigs:
        if s.parent is not None and s.parent not in signames:
            raise ParseError("unknown parent signature %r%s"
                             % (s.parent, _at_pos(s.pos)))
    for f in model.fields:
        for c in f.cols:
            if c not in signames:
                raise ParseError("unknown column signature %r in field "
                                 "%r%s" % (c, f.name, _at_pos(f.pos)))
    _check_forest(model)

    def fix_expr(e):
        if isinstance(e, ARel):
            if e.name in signames:
                return ASig(e.name, pos=e.pos)
            if e.name not in fieldnames:
                raise ParseError("unknown identifier %r%s"
                                 % (e.name, _at_pos(e.pos)))
            return e
        reps = {fl.name: fixed for fl in dataclasses.fields(e)
                if isinstance(v := getattr(e, fl.name), AlloyExpr)
                and (fixed := fix_expr(v)) is not v}
        return dataclasses.replace(e, **reps) if reps else e

    def fix_form(f):
        reps = {}
        for fl in dataclasses.fields(f):
            v = getattr(f, fl.name)
            if isinstance(v, AlloyForm):
                w = fix_form(v)
            elif isinstance(v, AlloyExpr):
                w = fix_expr(v)
            elif isinstance(v, tuple) and v and isinstance(v[0], AlloyExpr):
                w = tuple(fix_expr(x) for x in v)
            else:
                continue
            if w != v:
                reps[fl.name] = w
        return dataclasses.replace(f, **reps) if reps else f

    return dataclasses.replace(
        model,
        facts=tuple(fix_form(f) for f in model.facts),
        preds=tuple(
            dataclasses.replace(p, params=tuple(
                (n, fix_expr(r)) for n, r in p.params),
                body=fix_form(p.body)) for p in model.preds),
        asserts=tuple(
            dataclasses.replace(a, params=tuple(
                (n, fix_expr(r)) for n, r in a.params),
                form=fix_form(a.form)) for a in model.asserts))


def _check_forest(model: AlloyModel):
    parent = {s.name: s.parent for s in model.sigs}
    for start in parent:
        seen, cur = {start}, parent[start]
        while cur is not None:
            if cur in seen:
                raise ParseError(
                    "signature hierarchy contains a cycle through %r"
                    % start)
            seen.add(cur)
            cur = parent[cur]


def _at_pos(pos) -> str:
    return "" if pos is None else " at line %d, column %d" % pos


# ---------------------------------------------------------------------------
# pretty printer

def pretty(model: AlloyModel) -> str:
    """Concrete syntax that reparses to an equal model."""
    out = []
    by_owner = {}
    for f in model.fields:
        by_owner.setdefault(f.owner, []).append(f)
    for s in model.sigs:
        head = ""
        if s.mult:
            head += s.mult + " "
        if s.abstract:
            head += "abstract "
        head += "sig " + s.name
        if s.parent:
            head += " extends " + s.parent
        fields = by_owner.get(s.name, [])
        if not fields:
            out.append(head + " {}")
            continue
        lines = []
        for f in fields:
            cols = " -> ".join(
                (m + " " if m else "") + c
                for c, m in zip(f.cols, f.col_mults))
            lines.append("  %s : %s" % (f.name, cols))
        out.append(head + " {\n" + ",\n".join(lines) + "\n}")
    for f in model.facts:
        out.append("fact { %s }" % pp_form(f))
    for p in model.preds:
        out.append("pred %s%s { %s }"
                   % (p.name, _pp_params(p.params), pp_form(p.body)))
    for a in model.asserts:
        out.append("assert %s%s { %s }"
                   % (a.name, _pp_params(a.params), pp_form(a.form)))
    return "\n".join(out) + "\n"


def _pp_params(params) -> str:
    if not params:
        return ""
    return "[" + ", ".join("%s : %s" % (n, pp_expr(r))
                           for n, r in params) + "]"


def pp_form(f: AlloyForm) -> str:
    if isinstance(f, FIn):
        return "%s in %s" % (pp_expr(f.l), pp_expr(f.r))
    if isinstance(f, FEq):
        return "%s = %s" % (pp_expr(f.l), pp_expr(f.r))
    if isinstance(f, FSome):
        return "some %s" % pp_expr(f.e)
    if isinstance(f, FLone):
        return "lone %s" % pp_expr(f.e)
    if isinstance(f, FNot):
        return "!(%s)" % pp_form(f.f)
    if isinstance(f, FAnd):
        return "(%s) && (%s)" % (pp_form(f.l), pp_form(f.r))
    if isinstance(f, FOr):
        return "(%s) || (%s)" % (pp_form(f.l), pp_form(f.r))
    if isinstance(f, FImp):
        return "(%s) => (%s)" % (pp_form(f.l), pp_form(f.r))
    if isinstance(f, (FAll, FSomeQ)):
        kw = "all" if isinstance(f, FAll) else "some"
        return "%s %s : %s | %s" % (kw, f.var, pp_expr(f.bound),
                                    pp_form(f.body))
    if isinstance(f, FPredCall):
        return "%s[%s]" % (f.name, ", ".join(pp_expr(a) for a in f.args))
    raise TypeError("not a formula: %r" % (f,))


_EXPR_OPS = {AJoin: ".", AUnion: "+", AInter: "&", ADiff: "-",
             AProd: "->", ADomRes: "<:", ARanRes: ":>"}


def pp_expr(e: AlloyExpr) -> str:
    if isinstance(e, (ASig, ARel, AVar)):
        return e.name
    if isinstance(e, AIden):
        return "iden"
    if isinstance(e, ANone):
        return "none"
    if isinstance(e, AUniv):
        return "univ"
    if isinstance(e, AConv):
        return "~%s" % _pp_tight(e.e)
    if isinstance(e, AStar):
        return "*%s" % _pp_tight(e.e)
    op = _EXPR_OPS[type(e)]
    return "(%s %s %s)" % (pp_expr(e.l), op, pp_expr(e.r))


def _pp_tight(e: AlloyExpr) -> str:
    t = pp_expr(e)
    return t if t.startswith("(") or t.isalnum() or "'" in t else "(" + t + ")"


# ---------------------------------------------------------------------------
# desugaring

def free_vars(x) -> set:
    if isinstance(x, AVar):
        return {x.name}
    out = set()
    if isinstance(x, AlloyExpr):
        for c in a_children(x):
            out |= free_vars(c)
        return out
    for fl in dataclasses.fields(x):
        v = getattr(x, fl.name)
        if isinstance(v, (AlloyExpr, AlloyForm)):
            out |= free_vars(v)
        elif isinstance(v, tuple) and v and isinstance(v[0], AlloyExpr):
            for a in v:
                out |= free_vars(a)
    if isinstance(x, (FAll, FSomeQ)):
        out.discard(x.var)
        out |= free_vars(x.bound)
    return out


def _subst_expr(e: AlloyExpr, env: dict) -> AlloyExpr:
    if isinstance(e, AVar):
        return env.get(e.name, e)
    reps = {fl.name: s for fl in dataclasses.fields(e)
            if isinstance(v := getattr(e, fl.name), AlloyExpr)
            and (s := _subst_expr(v, env)) is not v}
    return dataclasses.replace(e, **reps) if reps else e


def subst(f: AlloyForm, env: dict, fresh=None) -> AlloyForm:
    """Capture-avoiding substitution of expressions for free variables."""
    if fresh is None:
        fresh = _FreshNames(free_vars(f) | {n for v in env.values()
                                            for n in free_vars(v)})
    if isinstance(f, (FAll, FSomeQ)):
        env = {k: v for k, v in env.items() if k != f.var}
        bound = _subst_expr(f.bound, env)
        var, body = f.var, f.body
        if any(var in free_vars(v) for v in env.values()):
            var = fresh.like(f.var)
            body = subst(body, {f.var: AVar(var)}, fresh)
        return dataclasses.replace(f, var=var, bound=bound,
                                   body=subst(body, env, fresh))
    reps = {}
    for fl in dataclasses.fields(f):
        v = getattr(f, fl.name)
        if isinstance(v, AlloyForm):
            w = subst(v, env, fresh)
        elif isinstance(v, AlloyExpr):
            w = _subst_expr(v, env)
        elif isinstance(v, tuple) and v and isinstance(v[0], AlloyExpr):
            w = tuple(_subst_expr(a, env) for a in v)
        else:
            continue
        if w != v:
            reps[fl.name] = w
    return dataclasses.replace(f, **reps) if reps else f


class _FreshNames:
    def __init__(self, used):
        self.used = set(used)

    def like(self, base: str) -> str:
        cand = base + "'"
        while cand in self.used:
            cand += "'"
        self.used.add(cand)
        return cand

    def numbered(self, base: str) -> str:
        k = 1
        while "%s%d" % (base, k) in self.used:
            k += 1
        name = "%s%d" % (base, k)
        self.used.add(name)
        return name


def _inline_calls(f: AlloyForm, model: AlloyModel, stack: tuple) -> AlloyForm:
    if isinstance(f, FPredCall):
        p = model.pred(f.name)
        if p is None:
            raise DesugarError("call to undeclared predicate %r%s"
                               % (f.name, _at_pos(f.pos)))
        if f.name in stack:
            raise DesugarError("recursive predicate %r is not supported"
                               % f.name)
        if len(f.args) != len(p.params):
            raise DesugarError(
                "predicate %r takes %d parameters, got %d%s"
                % (f.name, len(p.params), len(f.args), _at_pos(f.pos)))
        body = _inline_calls(p.body, model, stack + (f.name,))
        return subst(body, {n: a for (n, _), a in zip(p.params, f.args)})
    reps = {fl.name: w for fl in dataclasses.fields(f)
            if isinstance(v := getattr(f, fl.name), AlloyForm)
            and (w := _inline_calls(v, model, stack)) is not v}
    return dataclasses.replace(f, **reps) if reps else f


def _to_core(f: AlloyForm, arities: dict) -> AlloyForm:
    """Rewrite the sugared connectives away, innermost first."""
    reps = {fl.name: w for fl in dataclasses.fields(f)
            if isinstance(v := getattr(f, fl.name), AlloyForm)
            and (w := _to_core(v, arities)) is not v}
    if reps:
        f = dataclasses.replace(f, **reps)
    if isinstance(f, FEq):
        return FAnd(FIn(f.l, f.r), FIn(f.r, f.l))
    if isinstance(f, FImp):
        return FNot(FAnd(f.l, FNot(f.r)))
    if isinstance(f, FOr):
        return FNot(FAnd(FNot(f.l), FNot(f.r)))
    if isinstance(f, FSomeQ):
        return FNot(FAll(f.var, f.bound, FNot(f.body)))
    if isinstance(f, FLone):
        return _to_core(_expand_lone(f, arities), arities)
    if isinstance(f, FPredCall):
        raise DesugarError("predicate call %r survived inlining" % f.name)
    return f


def _expand_lone(f: FLone, arities: dict) -> AlloyForm:
    """At most one tuple: any two member tuples agree componentwise."""
    n = arity_of(f.e, arities)
    fresh = _FreshNames(free_vars(f.e))
    xs = [fresh.numbered("lx") for _ in range(n)]
    ys = [fresh.numbered("ly") for _ in range(n)]

    def tup(names):
        e = AVar(names[0])
        for v in names[1:]:
            e = AProd(e, AVar(v))
        return e

    eqs = FEq(AVar(xs[-1]), AVar(ys[-1]))
    for x, y in zip(reversed(xs[:-1]), reversed(ys[:-1])):
        eqs = FAnd(FEq(AVar(x), AVar(y)), eqs)
    out = FImp(FAnd(FIn(tup(xs), f.e), FIn(tup(ys), f.e)), eqs)
    for v in reversed(xs + ys):
        out = FAll(v, AUniv(), out)
    return out


def desugar(model: AlloyModel) -> AlloyModel:
    """Inline predicates, close asserts, reduce every formula to the core."""
    arities = model.rel_arity()

    def close(a: Assertion) -> AlloyForm:
        form = _inline_calls(a.form, model, ())
        for name, rng in reversed(a.params):
            form = FAll(name, rng, form)
        return form

    facts = tuple(_to_core(_inline_calls(f, model, ()), arities)
                  for f in model.facts)
    asserts = tuple(dataclasses.replace(a, params=(),
                                        form=_to_core(close(a), arities))
                    for a in model.asserts)
    out = AlloyModel(model.sigs, model.fields, facts, model.preds, asserts)
    for f in out.facts:
        assert is_core(f)
    for a in out.asserts:
        assert is_core(a.form)
    return out


def check_arities(model: AlloyModel) -> AlloyModel:
    """Annotate every expression with its arity; quantifier ranges must
    be unary. Raises ArityError with source positions on conflicts."""
    arities = model.rel_arity()

    def walk(f: AlloyForm):
        if isinstance(f, (FIn, FEq)):
            la, ra = arity_of(f.l, arities), arity_of(f.r, arities)
            if la != ra:
                raise ArityError(
                    "arity mismatch %d vs %d%s"
                    % (la, ra, _at_pos(getattr(f.l, "pos", None))))
        elif isinstance(f, (FSome, FLone)):
            arity_of(f.e, arities)
        elif isinstance(f, (FAll, FSomeQ)):
            if arity_of(f.bound, arities) != 1:
                raise ArityError(
                    "quantifier range must be a set%s"
                    % _at_pos(getattr(f.bound, "pos", None)))
        elif isinstance(f, FPredCall):
            raise ArityError("cannot type an uninlined predicate call %r%s"
                             % (f.name, _at_pos(f.pos)))
        for c in form_children(f):
            walk(c)

    for f in model.facts:
        walk(f)
    for a in model.asserts:
        walk(a.form)
    return model


# ---------------------------------------------------------------------------
# symbol table

@dataclass(frozen=True)
class SymbolTable:
    rel_arity: dict  # field name -> 1 + column count
    rel_cols: dict  # field name -> column signature names, owner first
    rel_mults: dict  # field name -> per-column multiplicity or None
    sig_parent: dict
    sig_children: dict  # name -> tuple of direct extensions
    sig_abstract: dict
    sig_mult: dict

    def tops(self):
        return [s for s, p in self.sig_parent.items() if p is None]

    def arity(self, name: str) -> int:
        return self.rel_arity[name]


def symbol_table(model: AlloyModel) -> SymbolTable:
    children = {s.name: [] for s in model.sigs}
    for s in model.sigs:
        if s.parent is not None:
            children[s.parent].append(s.name)
    return SymbolTable(
        rel_arity=model.rel_arity(),
        rel_cols={f.name: (f.owner,) + f.cols for f in model.fields},
        rel_mults={f.name: (None,) + f.col_mults for f in model.fields},
        sig_parent={s.name: s.parent for s in model.sigs},
        sig_children={k: tuple(v) for k, v in children.items()},
        sig_abstract={s.name: s.abstract for s in model.sigs},
        sig_mult={s.name: s.mult for s in model.sigs},
    )
