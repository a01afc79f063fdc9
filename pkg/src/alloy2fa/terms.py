"""The three term languages.

Core Alloy expressions and formulas come out of the frontend, relational
logic (RL) is the intermediate quantified form, and FA terms are the
variable-free fork-algebra output.  Everything is an immutable dataclass;
rewriting always builds fresh terms.

Conventions that the whole pipeline relies on:

* An application ``u R v`` reads left to right: u is the output side,
  v the input side.  An n-ary relation is stored binarized as pairs
  (column 1, (column 2, (..., column n))) with the tail nested to the
  right in forward column order.
* Fork pairs on the output side: (a,b) (R nabla S) z  iff  a R z and b S z.
  The projections pi1/pi2 run component-to-pair: a pi1 (a,b) and b pi2 (a,b).
  Composing a selector chain after a relation therefore *picks* components:
  m (pi1 . pi2) (a,(b,c))  iff  m = b.
* Quantified variables are de Bruijn levels: 1 is the variable of the
  outermost quantifier on the path, counting every bound variable of
  every quantifier node (a node of width w binds w consecutive levels).
  The special variables introduced around a closed formula are not
  levels; they are the marker items "x" and "y" ("cx"/"cy" inside
  closure lifting).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional, Union


class ArityError(Exception):
    """An expression violates the arity rules."""


# ---------------------------------------------------------------------------
# fork-algebra terms


class FAExpr:
    """Base class for variable-free relation terms."""


@dataclass(frozen=True)
class Rel(FAExpr):
    """Named relation constant; declared arity is bookkeeping, not identity."""

    name: str
    arity: int = field(default=2, compare=False)


@dataclass(frozen=True)
class Phi(FAExpr):
    """Coreflexive constant of a signature (sub-identity on its atoms)."""

    sig: str


@dataclass(frozen=True)
class Top(FAExpr):
    """Universal relation over the carrier."""


@dataclass(frozen=True)
class Bot(FAExpr):
    """Empty relation."""


@dataclass(frozen=True)
class Id(FAExpr):
    """Identity relation."""


@dataclass(frozen=True)
class Pi1(FAExpr):
    """First projection: relates a to the pair (a, b)."""


@dataclass(frozen=True)
class Pi2(FAExpr):
    """Second projection: relates b to the pair (a, b)."""


@dataclass(frozen=True)
class Join(FAExpr):
    l: FAExpr
    r: FAExpr


@dataclass(frozen=True)
class Meet(FAExpr):
    l: FAExpr
    r: FAExpr


@dataclass(frozen=True)
class Compl(FAExpr):
    e: FAExpr


@dataclass(frozen=True)
class Conv(FAExpr):
    e: FAExpr


@dataclass(frozen=True)
class Comp(FAExpr):
    """u (L . R) v  iff  exists m: u L m and m R v."""

    l: FAExpr
    r: FAExpr


@dataclass(frozen=True)
class Fork(FAExpr):
    """(a,b) (L nabla R) z  iff  a L z and b R z."""

    l: FAExpr
    r: FAExpr


@dataclass(frozen=True)
class Prod(FAExpr):
    """(a,b) (L x R) (c,d)  iff  a L c and b R d."""

    l: FAExpr
    r: FAExpr


@dataclass(frozen=True)
class Ldiv(FAExpr):
    """u (L \\ R) v  iff  for all w: w L u implies w R v."""

    l: FAExpr
    r: FAExpr


@dataclass(frozen=True)
class Rdiv(FAExpr):
    """u (L / R) v  iff  for all w: u L w implies v R w."""

    l: FAExpr
    r: FAExpr


@dataclass(frozen=True)
class Star(FAExpr):
    """Reflexive-transitive closure."""

    e: FAExpr


@dataclass(frozen=True)
class NComp(FAExpr):
    """Composition through the last column of an n-ary relation."""

    l: FAExpr
    r: FAExpr
    n: int


@dataclass(frozen=True)
class Rot(FAExpr):
    """Right rotation of an n-ary relation (last column to the front)."""

    e: FAExpr
    n: int


TOP = Top()
BOT = Bot()
ID = Id()
PI1 = Pi1()
PI2 = Pi2()

_FA_LEAVES = (Rel, Phi, Top, Bot, Id, Pi1, Pi2)


def fa_children(e: FAExpr) -> list:
    return [v for f in dataclasses.fields(e)
            if isinstance(v := getattr(e, f.name), FAExpr)]


def projX(n: int, i: int) -> FAExpr:
    """Selector taking a right-nested n-tuple input to its i-th component.

    Unfolds eagerly; unit factors collapse so that e.g. the (2,2) case is
    plain pi2 and the (3,2) case is pi1 . pi2.
    """
    if not 1 <= i <= n:
        raise ArityError("projX index %d out of range 1..%d" % (i, n))
    if n == 1:
        return ID
    if i == 1:
        return PI1
    rest = projX(n - 1, i - 1)
    return PI2 if rest == ID else Comp(rest, PI2)


def rotate(e: FAExpr, n: int) -> FAExpr:
    """Right rotation; on binary relations this is just the converse."""
    if n < 2:
        raise ArityError("rotate needs arity >= 2, got %d" % n)
    if n == 2:
        return e.e if isinstance(e, Conv) else Conv(e)
    return Rot(e, n)


def ncomp(l: FAExpr, r: FAExpr, n: int) -> FAExpr:
    """Compose r onto the last column of the n-ary l."""
    if n < 2:
        raise ArityError("ncomp needs arity >= 2, got %d" % n)
    if r == ID:
        return l
    if n == 2:
        return Comp(l, r)
    return NComp(l, r, n)


def cut(n: int) -> FAExpr:
    """Relates every n-tuple output to the (n-1)-tuple input it extends.

    Composing an application's relation with cut(n) discards the last
    (innermost-quantified) tuple component.
    """
    if n < 2:
        raise ArityError("cut needs tuple width >= 2, got %d" % n)
    if n == 2:
        return Fork(ID, TOP)
    return Prod(ID, cut(n - 1))


def unfold(e: FAExpr) -> FAExpr:
    """Expand rotation and n-ary composition into the base vocabulary."""
    if isinstance(e, NComp):
        inner = unfold(e.r)
        for _ in range(e.n - 2):
            inner = Prod(ID, inner)
        return Comp(unfold(e.l), inner)
    if isinstance(e, Rot):
        m = e.n - 1
        chain = projX(m, m - 1) if m >= 2 else ID
        for i in range(m - 2, 0, -1):
            chain = Fork(projX(m, i), chain)
        chain = Fork(unfold(e.e), chain)
        return Comp(projX(m, m), Conv(chain))
    reps = {f.name: u for f in dataclasses.fields(e)
            if isinstance(v := getattr(e, f.name), FAExpr)
            and (u := unfold(v)) is not v}
    return dataclasses.replace(e, **reps) if reps else e


def fa_key(e: FAExpr) -> str:
    """Total order on terms, used to canonicalize union/meet operand order."""
    if isinstance(e, Rel):
        return "rel:" + e.name
    if isinstance(e, Phi):
        return "phi:" + e.sig
    if isinstance(e, _FA_LEAVES):
        return type(e).__name__.lower()
    parts = ",".join(fa_key(c) for c in fa_children(e))
    if isinstance(e, (NComp, Rot)):
        parts += ",%d" % e.n
    return "%s(%s)" % (type(e).__name__.lower(), parts)


def _spine(e: FAExpr, kind: type) -> list:
    if isinstance(e, kind):
        return _spine(e.l, kind) + _spine(e.r, kind)
    return [e]


def canonicalize(x):
    """Sort union/meet spines by fa_key and renest to the right.

    Works on terms and on facts; the result is the representative used for
    structural comparisons.
    """
    if isinstance(x, FAFact):
        return dataclasses.replace(x, lhs=canonicalize(x.lhs),
                                   rhs=canonicalize(x.rhs))
    if isinstance(x, (Join, Meet)):
        parts = sorted((canonicalize(p) for p in _spine(x, type(x))),
                       key=fa_key)
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = type(x)(p, out)
        return out
    reps = {f.name: c for f in dataclasses.fields(x)
            if isinstance(v := getattr(x, f.name), FAExpr)
            and (c := canonicalize(v)) is not v}
    return dataclasses.replace(x, **reps) if reps else x


def fa_op_count(e: FAExpr) -> int:
    """Number of operator nodes (constants and named relations are free)."""
    if isinstance(e, _FA_LEAVES):
        return 0
    return 1 + sum(fa_op_count(c) for c in fa_children(e))


def fa_rels(e: FAExpr) -> set:
    """All relation and coreflexive constants occurring in a term."""
    if isinstance(e, (Rel, Phi)):
        return {e}
    out = set()
    for c in fa_children(e):
        out |= fa_rels(c)
    return out


_INFIX = {Join: " + ", Meet: " & ", Comp: " . ", Fork: " nabla ",
          Prod: " x ", Ldiv: " \\ ", Rdiv: " / "}


def fa_text(e: FAExpr) -> str:
    """Compact one-line rendering, fully parenthesized at compound nodes."""
    if isinstance(e, Rel):
        return e.name
    if isinstance(e, Phi):
        return "Phi_" + e.sig
    if isinstance(e, Top):
        return "TOP"
    if isinstance(e, Bot):
        return "BOT"
    if isinstance(e, Id):
        return "id"
    if isinstance(e, Pi1):
        return "pi1"
    if isinstance(e, Pi2):
        return "pi2"
    if isinstance(e, Compl):
        return "-%s" % _atom_text(e.e)
    if isinstance(e, Conv):
        return "%s~" % _atom_text(e.e)
    if isinstance(e, Star):
        return "%s*" % _atom_text(e.e)
    if isinstance(e, NComp):
        return "(%s .%d %s)" % (fa_text(e.l), e.n, fa_text(e.r))
    if isinstance(e, Rot):
        return "rot%d(%s)" % (e.n, fa_text(e.e))
    return "(%s%s%s)" % (fa_text(e.l), _INFIX[type(e)], fa_text(e.r))


def _atom_text(e: FAExpr) -> str:
    t = fa_text(e)
    return t if isinstance(e, _FA_LEAVES) or t.startswith("(") else "(" + t + ")"


# ---------------------------------------------------------------------------
# facts


class FAFact:
    """Base class for the two emitted fact shapes."""


@dataclass(frozen=True)
class FactEq(FAFact):
    lhs: FAExpr
    rhs: FAExpr
    label: str = field(default="", compare=False)
    width: int = field(default=0, compare=False)  # oracle tuple width hint


@dataclass(frozen=True)
class FactLe(FAFact):
    lhs: FAExpr
    rhs: FAExpr
    label: str = field(default="", compare=False)
    width: int = field(default=0, compare=False)


def fact_text(f: FAFact) -> str:
    op = " = " if isinstance(f, FactEq) else " in "
    return fa_text(f.lhs) + op + fa_text(f.rhs)


def fact_map(f: FAFact, g: Callable[[FAExpr], FAExpr]) -> FAFact:
    return dataclasses.replace(f, lhs=g(f.lhs), rhs=g(f.rhs))


# ---------------------------------------------------------------------------
# core Alloy expressions


class AlloyExpr:
    """Base class for core Alloy expressions."""


Pos = Optional[tuple]


@dataclass(frozen=True)
class ASig(AlloyExpr):
    name: str
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ARel(AlloyExpr):
    name: str
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AVar(AlloyExpr):
    name: str
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AIden(AlloyExpr):
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AUniv(AlloyExpr):
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ANone(AlloyExpr):
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AConv(AlloyExpr):
    e: AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AStar(AlloyExpr):
    e: AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AJoin(AlloyExpr):
    l: AlloyExpr
    r: AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AProd(AlloyExpr):
    l: AlloyExpr
    r: AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AUnion(AlloyExpr):
    l: AlloyExpr
    r: AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AInter(AlloyExpr):
    l: AlloyExpr
    r: AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ADiff(AlloyExpr):
    l: AlloyExpr
    r: AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ADomRes(AlloyExpr):
    """Domain restriction s <: e (s unary)."""

    l: AlloyExpr
    r: AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ARanRes(AlloyExpr):
    """Range restriction e :> s (s unary)."""

    l: AlloyExpr
    r: AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)
    arity: int = field(default=0, compare=False, repr=False)


def a_children(e: AlloyExpr) -> list:
    return [v for f in dataclasses.fields(e)
            if isinstance(v := getattr(e, f.name), AlloyExpr)]


def arity_of(e: AlloyExpr, rel_arity) -> int:
    """Arity of an expression, validating every operator along the way.

    rel_arity maps relation names to declared arities; variables and
    signature names count as unary. The computed arity is also stamped
    onto the node (the field is comparison-neutral metadata) so later
    passes can read it back without re-deriving.
    """
    a = _arity_of(e, rel_arity)
    return a


def _arity_of(e, rel_arity):
    if isinstance(e, (ASig, AVar, AUniv, ANone)):
        a = 1
    elif isinstance(e, AIden):
        a = 2
    elif isinstance(e, ARel):
        try:
            a = rel_arity[e.name]
        except KeyError:
            raise ArityError("unknown relation %r%s" % (e.name, _at(e)))
    elif isinstance(e, (AConv, AStar)):
        sub = _arity_of(e.e, rel_arity)
        if sub != 2:
            op = "~" if isinstance(e, AConv) else "*"
            raise ArityError("%s needs a binary operand, got arity %d%s"
                             % (op, sub, _at(e)))
        a = 2
    elif isinstance(e, AJoin):
        la, ra = _arity_of(e.l, rel_arity), _arity_of(e.r, rel_arity)
        if la + ra < 3:
            raise ArityError("join of two unary expressions%s" % _at(e))
        a = la + ra - 2
    elif isinstance(e, AProd):
        a = _arity_of(e.l, rel_arity) + _arity_of(e.r, rel_arity)
    elif isinstance(e, (AUnion, AInter, ADiff)):
        la, ra = _arity_of(e.l, rel_arity), _arity_of(e.r, rel_arity)
        if la != ra:
            raise ArityError("arity mismatch %d vs %d%s" % (la, ra, _at(e)))
        a = la
    elif isinstance(e, ADomRes):
        la = _arity_of(e.l, rel_arity)
        if la != 1:
            raise ArityError("<: needs a unary left operand%s" % _at(e))
        a = _arity_of(e.r, rel_arity)
    elif isinstance(e, ARanRes):
        ra = _arity_of(e.r, rel_arity)
        if ra != 1:
            raise ArityError(":> needs a unary right operand%s" % _at(e))
        a = _arity_of(e.l, rel_arity)
    else:
        raise ArityError("cannot compute arity of %r" % (e,))
    object.__setattr__(e, "arity", a)
    return a


def _at(e) -> str:
    p = getattr(e, "pos", None)
    return " at line %d, column %d" % (p[0], p[1]) if p else ""


# ---------------------------------------------------------------------------
# core Alloy formulas


class AlloyForm:
    """Base class for core Alloy formulas."""


@dataclass(frozen=True)
class FIn(AlloyForm):
    l: AlloyExpr
    r: AlloyExpr


@dataclass(frozen=True)
class FEq(AlloyForm):
    l: AlloyExpr
    r: AlloyExpr


@dataclass(frozen=True)
class FSome(AlloyForm):
    e: AlloyExpr


@dataclass(frozen=True)
class FLone(AlloyForm):
    e: AlloyExpr


@dataclass(frozen=True)
class FNot(AlloyForm):
    f: AlloyForm


@dataclass(frozen=True)
class FAnd(AlloyForm):
    l: AlloyForm
    r: AlloyForm


@dataclass(frozen=True)
class FOr(AlloyForm):
    l: AlloyForm
    r: AlloyForm


@dataclass(frozen=True)
class FImp(AlloyForm):
    l: AlloyForm
    r: AlloyForm


@dataclass(frozen=True)
class FAll(AlloyForm):
    var: str
    bound: AlloyExpr
    body: AlloyForm


@dataclass(frozen=True)
class FSomeQ(AlloyForm):
    var: str
    bound: AlloyExpr
    body: AlloyForm


@dataclass(frozen=True)
class FPredCall(AlloyForm):
    name: str
    args: tuple  # of AlloyExpr
    pos: Pos = field(default=None, compare=False, repr=False)


CORE_FORMS = (FIn, FSome, FNot, FAnd, FAll)


def form_children(f: AlloyForm) -> list:
    out = []
    for fl in dataclasses.fields(f):
        v = getattr(f, fl.name)
        if isinstance(v, AlloyForm):
            out.append(v)
    return out


def is_core(f: AlloyForm) -> bool:
    """Scanner for the shape the expansion step accepts."""
    if not isinstance(f, CORE_FORMS):
        return False
    return all(is_core(c) for c in form_children(f))


# ---------------------------------------------------------------------------
# relational-logic formulas

MARK_X = "x"
MARK_Y = "y"
MARK_CX = "cx"
MARK_CY = "cy"

Item = Union[int, str]


class RLFormula:
    """Base class for relational-logic formulas."""


@dataclass(frozen=True)
class RTrue(RLFormula):
    pass


@dataclass(frozen=True)
class RFalse(RLFormula):
    pass


@dataclass(frozen=True)
class RNot(RLFormula):
    f: RLFormula


@dataclass(frozen=True)
class RAnd(RLFormula):
    l: RLFormula
    r: RLFormula


@dataclass(frozen=True)
class ROr(RLFormula):
    l: RLFormula
    r: RLFormula


@dataclass(frozen=True)
class RImp(RLFormula):
    l: RLFormula
    r: RLFormula


@dataclass(frozen=True)
class RAll(RLFormula):
    """Universal quantifier binding `width` consecutive levels.

    A special node binds the marker pair x/y instead of levels and is the
    wrapper the variable-elimination phase works under.
    """

    width: int
    rng: Optional[RLFormula]
    body: RLFormula
    special: bool = False


@dataclass(frozen=True)
class REx(RLFormula):
    width: int
    rng: Optional[RLFormula]
    body: RLFormula


@dataclass(frozen=True)
class RApp(RLFormula):
    """Tuple application: lhs R rhs, sides are non-empty item tuples."""

    lhs: tuple
    rel: FAExpr
    rhs: tuple

    def __post_init__(self):
        if not self.lhs or not self.rhs:
            raise ValueError("application sides must be non-empty tuples")


RTRUE = RTrue()
RFALSE = RFalse()


def rl_map_apps(fn: Callable[[RApp], RLFormula], f: RLFormula) -> RLFormula:
    """Rebuild a formula with every application replaced by fn(app)."""
    if isinstance(f, RApp):
        return fn(f)
    if isinstance(f, (RTrue, RFalse)):
        return f
    if isinstance(f, RNot):
        return RNot(rl_map_apps(fn, f.f))
    if isinstance(f, (RAnd, ROr, RImp)):
        return type(f)(rl_map_apps(fn, f.l), rl_map_apps(fn, f.r))
    if isinstance(f, RAll):
        rng = None if f.rng is None else rl_map_apps(fn, f.rng)
        return RAll(f.width, rng, rl_map_apps(fn, f.body), f.special)
    if isinstance(f, REx):
        rng = None if f.rng is None else rl_map_apps(fn, f.rng)
        return REx(f.width, rng, rl_map_apps(fn, f.body))
    raise TypeError("not an RL formula: %r" % (f,))


def _unbind_item(it: Item, lvl: int, repl: Item) -> Item:
    if isinstance(it, int):
        if it == lvl:
            return repl
        if it > lvl:
            return it - 1
    return it


def unbind(f: RLFormula, lvl: int, repl: Item) -> RLFormula:
    """Substitute repl for level lvl and renumber the deeper levels down.

    Used by the rules that discharge one bound variable; repl must itself
    be an item in scope above lvl.
    """
    def on_app(a: RApp) -> RLFormula:
        return RApp(tuple(_unbind_item(i, lvl, repl) for i in a.lhs), a.rel,
                    tuple(_unbind_item(i, lvl, repl) for i in a.rhs))
    return rl_map_apps(on_app, f)


def uses_item(f: RLFormula, it: Item) -> bool:
    found = [False]

    def on_app(a: RApp) -> RLFormula:
        if it in a.lhs or it in a.rhs:
            found[0] = True
        return a
    rl_map_apps(on_app, f)
    return found[0]


def rl_text(f: RLFormula) -> str:
    """One-line angle-bracket rendering of an RL formula."""
    if isinstance(f, RTrue):
        return "true"
    if isinstance(f, RFalse):
        return "false"
    if isinstance(f, RNot):
        return "!%s" % _rl_atom(f.f)
    if isinstance(f, RAnd):
        return "%s && %s" % (_rl_atom(f.l), _rl_atom(f.r))
    if isinstance(f, ROr):
        return "%s || %s" % (_rl_atom(f.l), _rl_atom(f.r))
    if isinstance(f, RImp):
        return "%s => %s" % (_rl_atom(f.l), _rl_atom(f.r))
    if isinstance(f, RAll):
        head = "Axy" if f.special else "A%d" % f.width
        rng = "" if f.rng is None else " " + rl_text(f.rng)
        return "<%s :%s: %s>" % (head, rng, rl_text(f.body))
    if isinstance(f, REx):
        rng = "" if f.rng is None else " " + rl_text(f.rng)
        return "<E%d :%s: %s>" % (f.width, rng, rl_text(f.body))
    if isinstance(f, RApp):
        rel = fa_text(f.rel)
        if not isinstance(f.rel, _FA_LEAVES) and not rel.startswith("("):
            rel = "(%s)" % rel
        return "%s %s %s" % (_side_text(f.lhs), rel, _side_text(f.rhs))
    raise TypeError("not an RL formula: %r" % (f,))


def _side_text(side: tuple) -> str:
    if len(side) == 1:
        return str(side[0])
    return "(%s)" % ",".join(str(i) for i in side)


def _rl_atom(f: RLFormula) -> str:
    t = rl_text(f)
    if isinstance(f, (RTrue, RFalse, RApp, RAll, REx, RNot)):
        return t
    return "(" + t + ")"
