"""Variable elimination: quantified relational formulas to point-free facts.

The driver normalizes a closed formula to existential shape, wraps it
under the marker pair, then rewrites with a prioritized rule bank until a
single `x REL y` application survives; that application is read off as an
(in)equation between variable-free terms.  Levels never need renaming
along the way: every rule either discharges the innermost level of the
enclosing block or leaves binders untouched.

Closure operands take a separate route.  Their membership formula is
expanded with a private marker pair, bound join witnesses are discharged
by composition instead of framing, and the free variables are lifted into
leading tuple components so the whole operand becomes an endorelation
that can be starred.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from .expand import expand_form, expand_membership
from .strategy import Choice, Many, Once, Rule, RunState
from .terms import (
    BOT,
    ID,
    MARK_CX,
    MARK_CY,
    MARK_X,
    MARK_Y,
    TOP,
    AlloyExpr,
    AlloyForm,
    AVar,
    Comp,
    Compl,
    Conv,
    FactEq,
    FactLe,
    FAFact,
    Fork,
    Id,
    Join,
    Meet,
    RAll,
    RAnd,
    RApp,
    REx,
    RFalse,
    RImp,
    RLFormula,
    RNot,
    ROr,
    RTrue,
    Star,
    a_children,
    cut,
    ncomp,
    projX,
    rl_text,
    rotate,
)


class TranslateError(Exception):
    """The rewrite loop reached a fixpoint that is not a fact."""

    def __init__(self, msg: str, trace=None):
        super().__init__(msg)
        self.trace = list(trace or [])


@dataclass(frozen=True)
class PipelineState:
    """Snapshot of one elimination stage, for introspection and tests."""

    formula: RLFormula
    depth: int
    special: bool


def nesting(f: RLFormula) -> int:
    """Largest number of levels simultaneously in scope anywhere in f."""
    if isinstance(f, (RAll, REx)):
        w = 0 if getattr(f, "special", False) else f.width
        inner = nesting(f.body)
        if f.rng is not None:
            inner = max(inner, nesting(f.rng))
        return w + inner
    if isinstance(f, RNot):
        return nesting(f.f)
    if isinstance(f, (RAnd, ROr, RImp)):
        return max(nesting(f.l), nesting(f.r))
    return 0


# ---------------------------------------------------------------------------
# normalization: implications and universal quantifiers out


def _r_imp(t, ctx):
    if isinstance(t, RImp):
        return ROr(RNot(t.l), t.r)
    return None


def _r_all_ranged(t, ctx):
    if isinstance(t, RAll) and not t.special and t.rng is not None:
        return RAll(t.width, None, RImp(t.rng, t.body))
    return None


def _r_all_plain(t, ctx):
    if isinstance(t, RAll) and not t.special and t.rng is None:
        return RNot(REx(t.width, None, RNot(t.body)))
    return None


def _r_ex_ranged(t, ctx):
    if isinstance(t, REx) and t.rng is not None:
        return REx(t.width, None, RAnd(t.rng, t.body))
    return None


_NORMALIZE_RULES = [
    Rule("implication-to-or", _r_imp),
    Rule("forall-range-to-implication", _r_all_ranged),
    Rule("forall-to-not-exists", _r_all_plain),
    Rule("exists-range-to-and", _r_ex_ranged),
]


def normalize(f: RLFormula, budget: int = 10000) -> RLFormula:
    """Remove implications, non-marker universals and quantifier ranges."""
    out, _ = Many(Once(_NORMALIZE_RULES))(f, budget)
    return out


def insert_vars(f: RLFormula) -> RLFormula:
    """Wrap a closed formula under the marker pair the frames will use."""
    return RAll(2, None, f, special=True)


# ---------------------------------------------------------------------------
# framing: every application gets the frame sides x REL (1,..,n)


def _selector(n: int, items: tuple):
    """Term steering the level tuple (1,..,n) onto the given items."""
    if len(items) == 1:
        return projX(n, items[0])
    return Fork(projX(n, items[0]), _selector(n, items[1:]))


def _frame_app(rel, n: int) -> RApp:
    if n == 0:
        return RApp((MARK_X,), rel, (MARK_Y,))
    return RApp((MARK_X,), rel, tuple(range(1, n + 1)))


def _r_uniform(t, ctx):
    if not isinstance(t, RApp):
        return None
    items = t.lhs + t.rhs
    if not all(isinstance(i, int) for i in items):
        return None
    n = ctx.ex_depth
    if n < max(items):  # open formula: the level is nobody's to frame
        return None
    body = Meet(_selector(n, t.lhs), Comp(t.rel, _selector(n, t.rhs)))
    return RApp((MARK_X,), Comp(TOP, body), tuple(range(1, n + 1)))


def _r_true(t, ctx):
    if isinstance(t, RTrue):
        return _frame_app(TOP, ctx.ex_depth)
    return None


def _r_false(t, ctx):
    if isinstance(t, RFalse):
        return _frame_app(BOT, ctx.ex_depth)
    return None


_FRAME_RULES = [
    Rule("frame-application", _r_uniform),
    Rule("frame-true", _r_true),
    Rule("frame-false", _r_false),
]


def uniform(f: RLFormula, budget: int = 10000) -> RLFormula:
    return _apply_once(_FRAME_RULES, f, "uniform", budget)


# ---------------------------------------------------------------------------
# combining: connectives between co-located applications become operators


def _r_and(t, ctx):
    if (isinstance(t, RAnd) and isinstance(t.l, RApp)
            and isinstance(t.r, RApp) and t.l.lhs == t.r.lhs
            and t.l.rhs == t.r.rhs):
        return RApp(t.l.lhs, Meet(t.l.rel, t.r.rel), t.l.rhs)
    return None


def _r_or(t, ctx):
    if (isinstance(t, ROr) and isinstance(t.l, RApp)
            and isinstance(t.r, RApp) and t.l.lhs == t.r.lhs
            and t.l.rhs == t.r.rhs):
        return RApp(t.l.lhs, Join(t.l.rel, t.r.rel), t.l.rhs)
    return None


def _r_not(t, ctx):
    if isinstance(t, RNot) and isinstance(t.f, RApp):
        a = t.f
        return RApp(a.lhs, Compl(a.rel), a.rhs)
    return None


_COMBINE_RULES = [
    Rule("combine-and", _r_and),
    Rule("combine-or", _r_or),
    Rule("complement-not", _r_not),
]


def aggregate(f: RLFormula, budget: int = 10000) -> RLFormula:
    return _apply_once(_COMBINE_RULES, f, "aggregate", budget)


# ---------------------------------------------------------------------------
# discharging: the innermost existential level is cut off the frame tuple


def _r_discharge(t, ctx):
    if not (isinstance(t, REx) and t.rng is None
            and isinstance(t.body, RApp)):
        return None
    app = t.body
    n = ctx.ex_depth + t.width
    if app.lhs != (MARK_X,) or app.rhs != tuple(range(1, n + 1)):
        return None
    if n == 1:
        return RApp((MARK_X,), Comp(app.rel, TOP), (MARK_Y,))
    inner = RApp((MARK_X,), Comp(app.rel, cut(n)), tuple(range(1, n)))
    return inner if t.width == 1 else REx(t.width - 1, None, inner)


_DISCHARGE_RULES = [Rule("discharge-innermost-exists", _r_discharge)]


def drop_exists(f: RLFormula, budget: int = 10000) -> RLFormula:
    return _apply_once(_DISCHARGE_RULES, f, "drop_exists", budget)


def _apply_once(rules, f, opname, budget):
    state = RunState(budget=budget)
    out = Once(rules).run(f, state)
    if out is None:
        raise TranslateError("%s found no redex in %s" % (opname, rl_text(f)))
    return out


# ---------------------------------------------------------------------------
# reading the fact off the shortened formula


def fact_of(f: RLFormula) -> Optional[FAFact]:
    """Variable-free fact a fully shortened formula denotes, if any.

    Covers the marker wrapper around `x R y`, the plain two-level
    universal (totality), the one-level diagonal (reflexivity) and the
    ranged two-level universal (inclusion).
    """
    if not isinstance(f, RAll) or not isinstance(f.body, RApp):
        return None
    b = f.body
    if f.special:
        if f.rng is None and b.lhs == (MARK_X,) and b.rhs == (MARK_Y,):
            return FactEq(b.rel, TOP)
        return None
    if f.rng is None and f.width == 2 and len(b.lhs) == 1 \
            and len(b.rhs) == 1 and set(b.lhs + b.rhs) == {1, 2}:
        return FactEq(b.rel, TOP)
    if f.rng is None and f.width == 1 and b.lhs == (1,) and b.rhs == (1,):
        return FactLe(ID, b.rel)
    if (f.width == 2 and isinstance(f.rng, RApp) and f.rng.lhs == (1,)
            and f.rng.rhs == (2,) and b.lhs == (1,) and b.rhs == (2,)):
        return FactLe(f.rng.rel, b.rel)
    return None


# ---------------------------------------------------------------------------
# the driver

_STEP = Choice(
    Once(_COMBINE_RULES),
    Once(_DISCHARGE_RULES),
    Once(_FRAME_RULES),
)


def translate(f: RLFormula, budget: int = 10000, label: str = "") -> FAFact:
    """Eliminate all variables from a closed formula; returns the fact."""
    fact, _, _ = translate_with_trace(f, budget=budget, label=label)
    return fact


def translate_with_trace(f: RLFormula, budget: int = 10000, label: str = ""):
    """Like translate, also returning the rewrite trace and state snapshots."""
    state = RunState(budget=budget)
    g0 = Many(Once(_NORMALIZE_RULES)).run(f, state)
    width = max(1, nesting(g0))
    g = insert_vars(g0)
    mark = len(state.trace)
    out = Many(_STEP).run(g, state)
    states = [_pstate(f), _pstate(g0), _pstate(g)]
    states += [_pstate(s.after) for s in state.trace[mark:]]
    fact = fact_of(out)
    if fact is None:
        raise TranslateError(
            "variable elimination got stuck at: %s" % rl_text(out),
            state.trace)
    fact = dataclasses.replace(fact, label=label, width=width)
    return fact, state.trace, states


def _pstate(t) -> PipelineState:
    special = isinstance(t, RAll) and t.special
    return PipelineState(t, nesting(t), special)


def translate_form(f: AlloyForm, rel_arity, budget: int = 10000,
                   label: str = "") -> FAFact:
    """Expand a core formula (closures included) and eliminate variables."""
    rl = expand_form(f, rel_arity, closure=star_lifter(rel_arity))
    return translate(rl, budget=budget, label=label)


# ---------------------------------------------------------------------------
# closure operands: lift free variables, discharge witnesses by composition


def free_var_levels(e: AlloyExpr, env) -> tuple:
    """Levels of the quantified variables an expression mentions, ascending."""
    names = set()

    def walk(x):
        if isinstance(x, AVar):
            names.add(x.name)
        for c in a_children(x):
            walk(c)

    walk(e)
    return tuple(sorted(env[n] for n in names))


def _flat(app: RApp) -> tuple:
    return app.lhs + app.rhs


def _rot_app(app: RApp, k: int) -> RApp:
    """Cycle the application's items right by k, rotating the relation."""
    items = _flat(app)
    m = len(items)
    k %= m
    if k == 0:
        return app
    rel = app.rel
    for _ in range(k):
        rel = rotate(rel, m)
    items = items[-k:] + items[:-k]
    return RApp(items[:1], rel, items[1:])


def _witness_rules(watermark: int):
    """Rules eliminating expansion witnesses inside a closure operand.

    Witness levels are numbered above every level that was in scope when
    the operand was expanded, so any level beyond the watermark belongs
    to the innermost live binder and the largest one is its. Levels at
    or below the watermark are the operand's free parameters and must
    survive.
    """

    def bound_level(*apps):
        ints = [i for a in apps for i in _flat(a) if isinstance(i, int)]
        lvl = max(ints, default=0)
        return lvl if lvl > watermark else None

    def compose(t, ctx):
        # xs (P) w  &&  w (Q) ys  under the binder of w turns into P.Q;
        # wider applications join through their last column.
        if not (isinstance(t, REx) and t.width == 1 and t.rng is None
                and isinstance(t.body, RAnd) and isinstance(t.body.l, RApp)
                and isinstance(t.body.r, RApp)):
            return None
        p, q = t.body.l, t.body.r
        lvl = bound_level(p, q)
        if lvl is None:
            return None
        if _flat(p).count(lvl) != 1 or _flat(q).count(lvl) != 1:
            return None
        items = _flat(p)
        p = _rot_app(p, (len(items) - 1 - items.index(lvl)) % len(items))
        items = _flat(q)
        q = _rot_app(q, (len(items) - items.index(lvl)) % len(items))
        if len(p.rhs) == 1:
            return RApp(p.lhs, Comp(p.rel, q.rel), q.rhs)
        return RApp(p.lhs, ncomp(p.rel, q.rel, len(p.rhs) + 1),
                    p.rhs[:-1] + q.rhs)

    def absorb(t, ctx):
        # a (X) a  &&  a (R) ys  collapses to  a ((X & id).R) ys; the
        # meet with id pins the composition's middle element to a.
        if not isinstance(t, RAnd):
            return None
        for d, q in ((t.l, t.r), (t.r, t.l)):
            if not (isinstance(d, RApp) and isinstance(q, RApp)
                    and len(d.lhs) == 1 and d.lhs == d.rhs):
                continue
            item = d.lhs[0]
            items = _flat(q)
            if item not in items:
                continue
            q2 = _rot_app(q, (len(items) - items.index(item)) % len(items))
            return RApp(q2.lhs, Comp(Meet(d.rel, ID), q2.rel), q2.rhs)
        return None

    def project(t, ctx):
        # A witness used by a single application is dropped by cutting
        # its column:  ex w: xs (R) (ys,w)  turns into  xs (R.cut) ys.
        if not (isinstance(t, REx) and t.width == 1 and t.rng is None
                and isinstance(t.body, RApp)):
            return None
        p = t.body
        lvl = bound_level(p)
        if lvl is None:
            return None
        items = _flat(p)
        if items.count(lvl) != 1 or len(items) < 3:
            return None
        p = _rot_app(p, (len(items) - 1 - items.index(lvl)) % len(items))
        return RApp(p.lhs, Comp(p.rel, cut(len(p.rhs))), p.rhs[:-1])

    return [Rule("compose-shared-level", compose),
            Rule("absorb-diagonal-membership", absorb),
            Rule("project-away-witness", project)]


def _lift_rules(a_levels: tuple):
    """Frame rules for a closure operand with the given free levels.

    Applications are rewritten between the extended tuples (a_1..a_k,cx)
    and (a_1..a_k,cy).  An application whose items all live on one frame
    is embedded as a coreflexive test composed with the full relation, so
    it constrains that frame only.
    """
    k = len(a_levels)
    w = k + 1
    lframe = a_levels + (MARK_CX,)
    rframe = a_levels + (MARK_CY,)
    pos = {lvl: i + 1 for i, lvl in enumerate(a_levels)}

    def sel(item, mark):
        if item == mark:
            return projX(w, w)
        return projX(w, pos[item])

    def sel_side(side, mark):
        if len(side) == 1:
            return sel(side[0], mark)
        return Fork(sel(side[0], mark), sel_side(side[1:], mark))

    def sandwich(left, rel, right):
        e = rel
        if not isinstance(right, Id):
            e = right if isinstance(e, Id) else Comp(e, right)
        if not isinstance(left, Id):
            e = Conv(left) if isinstance(e, Id) else Comp(Conv(left), e)
        return e

    def lift(t, ctx):
        if not isinstance(t, RApp):
            return None
        if t.lhs == lframe and t.rhs == rframe:
            return None
        items = _flat(t)
        ok = all((i in pos) if isinstance(i, int)
                 else i in (MARK_CX, MARK_CY) for i in items)
        if not ok:
            return None
        nx = items.count(MARK_CX)
        ny = items.count(MARK_CY)
        if nx and ny:
            if nx > 1 or ny > 1:
                return None
            t2 = _rot_app(t, (len(items) - items.index(MARK_CX)) % len(items))
            core = sandwich(sel(t2.lhs[0], MARK_CX), t2.rel,
                            sel_side(t2.rhs, MARK_CY))
            return RApp(lframe, core, rframe)
        if ny == 0:
            core = sandwich(sel(t.lhs[0], MARK_CX), t.rel,
                            sel_side(t.rhs, MARK_CX))
            return RApp(lframe, Comp(Meet(core, ID), TOP), rframe)
        core = sandwich(sel(t.lhs[0], MARK_CY), t.rel,
                        sel_side(t.rhs, MARK_CY))
        return RApp(lframe, Comp(TOP, Meet(core, ID)), rframe)

    return [Rule("lift-application-to-frames", lift)]


def translate_closure(e: AlloyExpr, env, rel_arity, nl: int = 0,
                      budget: int = 10000):
    """Lift a closure operand into an endorelation and star it.

    Free variables of the operand become leading tuple components of the
    lifted relation; a chain step must preserve them, which the meet with
    the component-equality terms enforces.  Returns the starred term and
    the levels the frame tuples carry.
    """
    a_levels = free_var_levels(e, env)
    watermark = max((nl,) + a_levels)
    body = expand_membership((MARK_CX, MARK_CY), e, rel_arity,
                             closure=star_lifter(rel_arity),
                             nl=watermark, env=env)
    state = RunState(budget=budget)
    loop = Many(Choice(Once(_COMBINE_RULES), Once(_witness_rules(watermark)),
                       Once(_lift_rules(a_levels))))
    out = loop.run(body, state)
    lframe, rframe = a_levels + (MARK_CX,), a_levels + (MARK_CY,)
    if not (isinstance(out, RApp) and out.lhs == lframe
            and out.rhs == rframe):
        raise TranslateError(
            "closure lifting got stuck at: %s" % rl_text(out), state.trace)
    k = len(a_levels)
    lifted = out.rel
    if k:
        keep = None
        for i in range(k, 0, -1):
            part = Comp(Conv(projX(k + 1, i)), projX(k + 1, i))
            keep = part if keep is None else Meet(part, keep)
        lifted = Meet(lifted, keep)
    return Star(lifted), a_levels


def star_lifter(rel_arity):
    """Closure callback for expand_form over the given arity table."""

    def lift(xs, e, nl, env):
        starred, a_levels = translate_closure(e, env, rel_arity, nl=nl)
        return RApp(a_levels + (xs[0],), starred, a_levels + (xs[1],))

    return lift
