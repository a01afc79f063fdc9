"""Shortcut translation: simplify first, build frames only as a last resort.

The mechanical pipeline always terminates but its output mirrors the
quantifier structure of the input.  The rules here shrink the formula
before (and while) that machinery runs: logical identities on the
propositional skeleton, definition-shaped quantifier removal that turns
bound levels into composition, residuals and column cuts, and algebraic
identities on the relational terms themselves.  When the simplified
formula already is a closed inclusion or equation, the fact is read off
directly and no frames are built at all; such facts quantify over plain
elements and stay as small as the inputs that produced them.

Logical and definition rules are sound pointwise over any carrier, so
every rewrite step preserves truth on every finite model, not just on
the full pair closure.  That property is what the trace tests sample.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

from .expand import expand_form
from .pipeline import (
    TranslateError,
    _COMBINE_RULES,
    _DISCHARGE_RULES,
    _FRAME_RULES,
    _NORMALIZE_RULES,
    _flat,
    _r_ex_ranged,
    _rot_app,
    fact_of,
    insert_vars,
    nesting,
    star_lifter,
)
from .strategy import Choice, Many, Once, Rule, RunState
from .terms import (
    BOT,
    ID,
    MARK_CX,
    MARK_CY,
    MARK_X,
    MARK_Y,
    TOP,
    AlloyForm,
    Bot,
    Comp,
    Compl,
    Conv,
    FactEq,
    FactLe,
    FAFact,
    FAExpr,
    Fork,
    Id,
    Join,
    Ldiv,
    Meet,
    NComp,
    Phi,
    Pi1,
    Pi2,
    Prod,
    Rdiv,
    RAll,
    RAnd,
    RApp,
    REx,
    RFalse,
    RImp,
    RLFormula,
    RNot,
    ROr,
    Rot,
    RTrue,
    Star,
    Top,
    cut,
    ncomp,
    rl_text,
    unbind,
)

_MARKERS = (MARK_X, MARK_Y, MARK_CX, MARK_CY)


def _is_level(it) -> bool:
    return isinstance(it, int)


def _is_point(it) -> bool:
    """Item denoting a single element the rules may keep: level or atom."""
    return isinstance(it, int) or (isinstance(it, str) and it not in _MARKERS)


def _plain(*apps) -> bool:
    """True when no application touches a frame marker.

    The definition rules work the pre-frame phase; once an application
    carries a marker side it belongs to the mechanical combine and
    discharge rules, and merging it here would only feed the framer
    junk it frames again.
    """
    def deep(items):
        for it in items:
            if isinstance(it, tuple):
                if not deep(it):
                    return False
            elif isinstance(it, str) and it in _MARKERS:
                return False
        return True

    return all(deep(_flat(a)) for a in apps)


# ---------------------------------------------------------------------------
# flattened spines: pair rules modulo associativity and commutativity


def _leaves(kind, t) -> list:
    out, todo = [], [t]
    while todo:
        cur = todo.pop()
        if isinstance(cur, kind):
            todo.append(cur.r)
            todo.append(cur.l)
        else:
            out.append(cur)
    return out


def _rebuild(kind, leaves: list):
    cur = leaves[0]
    for nxt in leaves[1:]:
        cur = kind(cur, nxt)
    return cur


def _pair_rule(name: str, kind, fn) -> Rule:
    """Try a binary identity on every leaf pair of a flattened spine."""

    def go(t, ctx):
        if not isinstance(t, kind):
            return None
        leaves = _leaves(kind, t)
        for i in range(len(leaves)):
            for j in range(i + 1, len(leaves)):
                for a, b in ((leaves[i], leaves[j]), (leaves[j], leaves[i])):
                    res = fn(a, b)
                    if res is None:
                        continue
                    rest = [x for k, x in enumerate(leaves) if k not in (i, j)]
                    return _rebuild(kind, [res] + rest)
        return None

    return Rule(name, go)


# ---------------------------------------------------------------------------
# logical rules


def _and_pair(a, b):
    if isinstance(b, RTrue):
        return a
    if isinstance(b, RFalse):
        return RFalse()
    if a == b:
        return a
    return None


def _or_pair(a, b):
    if isinstance(b, RFalse):
        return a
    if isinstance(b, RTrue):
        return RTrue()
    if a == b:
        return a
    return None


def _or_to_imp(a, b):
    if isinstance(a, RNot):
        return RImp(a.f, b)
    return None


def _r_not_not(t, ctx):
    if isinstance(t, RNot) and isinstance(t.f, RNot):
        return t.f.f
    return None


def _r_not_literal(t, ctx):
    if isinstance(t, RNot) and isinstance(t.f, RTrue):
        return RFalse()
    if isinstance(t, RNot) and isinstance(t.f, RFalse):
        return RTrue()
    return None


def _r_push_not_and(t, ctx):
    if isinstance(t, RNot) and isinstance(t.f, RAnd):
        return ROr(RNot(t.f.l), RNot(t.f.r))
    return None


def _r_push_not_or(t, ctx):
    if isinstance(t, RNot) and isinstance(t.f, ROr):
        return RAnd(RNot(t.f.l), RNot(t.f.r))
    return None


def _r_imp_literal(t, ctx):
    if isinstance(t, RImp) and isinstance(t.l, RFalse):
        return RTrue()
    if isinstance(t, RImp) and isinstance(t.l, RTrue):
        return t.r
    return None


def _r_imp_curry(t, ctx):
    if isinstance(t, RImp) and isinstance(t.r, RImp):
        return RImp(RAnd(t.l, t.r.l), t.r.r)
    return None


def _conj(a: Optional[RLFormula], b: Optional[RLFormula]):
    if a is None:
        return b
    if b is None:
        return a
    return RAnd(a, b)


def _r_all_absorb_imp(t, ctx):
    # forall u : rng : (a => b)  keeps a as part of the range
    if isinstance(t, RAll) and not t.special and isinstance(t.body, RImp):
        return RAll(t.width, _conj(t.rng, t.body.l), t.body.r)
    return None


def _r_all_fuse(t, ctx):
    if (isinstance(t, RAll) and not t.special and isinstance(t.body, RAll)
            and not t.body.special):
        return RAll(t.width + t.body.width, _conj(t.rng, t.body.rng),
                    t.body.body)
    return None


def _r_ex_fuse(t, ctx):
    if (isinstance(t, REx) and t.rng is None and isinstance(t.body, REx)
            and t.body.rng is None):
        return REx(t.width + t.body.width, None, t.body.body)
    return None


def _occurs(f, lvl: int) -> bool:
    if f is None or not isinstance(f, RLFormula):
        return False
    if isinstance(f, RApp):
        return lvl in _flat(f)

    def walk(x):
        for fl in dataclasses.fields(x):
            v = getattr(x, fl.name)
            if isinstance(v, RLFormula) and _occurs(v, lvl):
                return True
        return False

    return walk(f)


def _r_binder_trim(t, ctx):
    """Drop or narrow a binder whose trailing levels are never used."""
    if not isinstance(t, (RAll, REx)) or getattr(t, "special", False):
        return None
    lo = ctx.binder_depth
    used = [l for l in range(lo + 1, lo + t.width + 1)
            if _occurs(t.rng, l) or _occurs(t.body, l)]
    if not used:
        if isinstance(t, RAll):
            return t.body if t.rng is None else RImp(t.rng, t.body)
        return t.body if t.rng is None else RAnd(t.rng, t.body)
    w = max(used) - lo
    if w == t.width:
        return None
    return dataclasses.replace(t, width=w)


LOGIC_RULES = [
    _pair_rule("conjunction-pair", RAnd, _and_pair),
    _pair_rule("disjunction-pair", ROr, _or_pair),
    Rule("double-negation", _r_not_not),
    Rule("negated-literal", _r_not_literal),
    Rule("negation-over-and", _r_push_not_and),
    Rule("negation-over-or", _r_push_not_or),
    Rule("implication-literal", _r_imp_literal),
    Rule("implication-curry", _r_imp_curry),
    _pair_rule("negation-to-implication", ROr, _or_to_imp),
    Rule("forall-absorb-implication", _r_all_absorb_imp),
    Rule("exists-range-to-and", _r_ex_ranged),
    Rule("forall-fuse", _r_all_fuse),
    Rule("exists-fuse", _r_ex_fuse),
    Rule("binder-trim", _r_binder_trim),
]

# Reintroducing implications inside the mechanical loop would fight the
# normalization rules that remove them, so the loop runs without the two
# implication builders.
_LOOP_LOGIC = [r for r in LOGIC_RULES
               if r.name not in ("negation-to-implication",
                                 "forall-absorb-implication")]


# ---------------------------------------------------------------------------
# definition rules: quantified patterns become relational operators


def _last_level(t, ctx) -> int:
    return ctx.binder_depth + t.width


def _count(f, lvl: int) -> int:
    if f is None or not isinstance(f, RLFormula):
        return 0
    if isinstance(f, RApp):
        return _flat(f).count(lvl)
    n = 0
    for fl in dataclasses.fields(f):
        v = getattr(f, fl.name)
        if isinstance(v, RLFormula):
            n += _count(v, lvl)
    return n


def _shrink(t: REx, leaves: list):
    body = _rebuild(RAnd, leaves) if leaves else RTrue()
    return body if t.width == 1 else REx(t.width - 1, None, body)


def _first(app: RApp, lvl: int):
    """Binary application oriented so lvl reads first; (rel, other item)."""
    if len(app.lhs) != 1 or len(app.rhs) != 1:
        return None
    if app.lhs == (lvl,):
        return app.rel, app.rhs[0]
    if app.rhs == (lvl,):
        return Conv(app.rel), app.lhs[0]
    return None


def _r_substitute(t, ctx):
    """An identity conjunct pins a bound level to another item."""
    if not isinstance(t, (RAll, REx)) or getattr(t, "special", False):
        return None
    host = t.rng if isinstance(t, RAll) else t.body
    if host is None or (isinstance(t, REx) and t.rng is not None):
        return None
    lo = ctx.binder_depth
    leaves = _leaves(RAnd, host)
    for i, leaf in enumerate(leaves):
        if not (isinstance(leaf, RApp) and isinstance(leaf.rel, Id)
                and len(leaf.lhs) == 1 and len(leaf.rhs) == 1):
            continue
        for lvl, repl in ((leaf.lhs[0], leaf.rhs[0]),
                          (leaf.rhs[0], leaf.lhs[0])):
            if not (_is_level(lvl) and lo < lvl <= lo + t.width):
                continue
            if not _is_point(repl) or repl == lvl:
                continue
            rest = [unbind(x, lvl, repl)
                    for k, x in enumerate(leaves) if k != i]
            if isinstance(t, REx):
                return _shrink(t, rest) if lvl == lo + t.width else \
                    REx(t.width, None, _rebuild(RAnd, rest or [RTrue()]))
            rng = _rebuild(RAnd, rest) if rest else None
            return RAll(t.width, rng, unbind(t.body, lvl, repl))
    return None


def _r_absorb_diag(t, ctx):
    """a (X) a beside a (R) ys pins the composition through a."""
    if not isinstance(t, RAnd):
        return None
    leaves = _leaves(RAnd, t)
    for i, d in enumerate(leaves):
        if not (isinstance(d, RApp) and len(d.lhs) == 1 and d.lhs == d.rhs
                and _plain(d)):
            continue
        for j, q in enumerate(leaves):
            if j == i or not isinstance(q, RApp) or not _plain(q):
                continue
            items = _flat(q)
            if d.lhs[0] not in items:
                continue
            q2 = _rot_app(q, (len(items) - items.index(d.lhs[0])) % len(items))
            merged = RApp(q2.lhs, Comp(Meet(d.rel, ID), q2.rel), q2.rhs)
            rest = [x for k, x in enumerate(leaves) if k not in (i, j)]
            return _rebuild(RAnd, [merged] + rest)
    return None


def _r_compose(t, ctx):
    """Two applications sharing the innermost level compose it away."""
    if not (isinstance(t, REx) and t.rng is None):
        return None
    lvl = _last_level(t, ctx)
    leaves = _leaves(RAnd, t.body)
    if _count(t.body, lvl) != 2:
        return None
    apps = [(i, x) for i, x in enumerate(leaves)
            if isinstance(x, RApp) and _flat(x).count(lvl) == 1
            and _plain(x)]
    if len(apps) != 2:
        return None
    (i, p), (j, q) = apps
    items = _flat(p)
    p = _rot_app(p, (len(items) - 1 - items.index(lvl)) % len(items))
    items = _flat(q)
    q = _rot_app(q, (len(items) - items.index(lvl)) % len(items))
    if len(p.rhs) == 1:
        merged = RApp(p.lhs, Comp(p.rel, q.rel), q.rhs)
    elif len(q.rhs) == 1:
        merged = RApp(p.lhs, ncomp(p.rel, q.rel, len(p.rhs) + 1),
                      p.rhs[:-1] + q.rhs)
    else:
        return None
    rest = [x for k, x in enumerate(leaves) if k not in (i, j)]
    return _shrink(t, [merged] + rest)


def _r_project(t, ctx):
    """A level used once in a wide application is cut from its column."""
    if not (isinstance(t, REx) and t.rng is None):
        return None
    lvl = _last_level(t, ctx)
    if _count(t.body, lvl) != 1:
        return None
    leaves = _leaves(RAnd, t.body)
    for i, p in enumerate(leaves):
        if not isinstance(p, RApp) or not _plain(p):
            continue
        items = _flat(p)
        if lvl not in items or len(items) < 3:
            continue
        p = _rot_app(p, (len(items) - 1 - items.index(lvl)) % len(items))
        merged = RApp(p.lhs, Comp(p.rel, cut(len(p.rhs))), p.rhs[:-1])
        rest = [x for k, x in enumerate(leaves) if k != i]
        return _shrink(t, [merged] + rest)
    return None


def _r_close_membership(t, ctx):
    """A level seen once in a binary application marks a domain element."""
    if not (isinstance(t, REx) and t.rng is None):
        return None
    lvl = _last_level(t, ctx)
    if _count(t.body, lvl) != 1:
        return None
    leaves = _leaves(RAnd, t.body)
    for i, p in enumerate(leaves):
        if not isinstance(p, RApp):
            continue
        got = _first(p, lvl)
        if got is None or not _is_point(got[1]):
            continue
        rel, u = got
        # lvl (rel) u, so u has lvl in rel's converse image: u (T.rel) u
        merged = RApp((u,), Comp(TOP, rel), (u,))
        rest = [x for k, x in enumerate(leaves) if k != i]
        return _shrink(t, [merged] + rest)
    return None


def _r_residual(t, ctx):
    """A universal level linking two applications becomes a residual."""
    if not (isinstance(t, RAll) and not t.special and t.rng is not None
            and isinstance(t.body, RApp)):
        return None
    lvl = _last_level(t, ctx)
    if _count(t.body, lvl) != 1 or _count(t.rng, lvl) != 1:
        return None
    got_b = _first(t.body, lvl)
    if got_b is None:
        return None
    leaves = _leaves(RAnd, t.rng)
    for i, p in enumerate(leaves):
        if not isinstance(p, RApp):
            continue
        got_p = _first(p, lvl)
        if got_p is None:
            continue
        merged = RApp((got_p[1],), Ldiv(got_p[0], got_b[0]), (got_b[1],))
        rest = [x for k, x in enumerate(leaves) if k != i]
        if t.width > 1:
            return RAll(t.width - 1,
                        _rebuild(RAnd, rest) if rest else None, merged)
        return merged if not rest else RImp(_rebuild(RAnd, rest), merged)
    return None


DEFINITION_RULES = [
    Rule("substitute-identity", _r_substitute),
    Rule("absorb-diagonal", _r_absorb_diag),
    Rule("compose-innermost", _r_compose),
    Rule("project-innermost", _r_project),
    Rule("close-membership", _r_close_membership),
    Rule("residual-innermost", _r_residual),
]


# ---------------------------------------------------------------------------
# algebraic rules on relational terms


def _meet_pair(a, b):
    if isinstance(b, Top):
        return a
    if isinstance(b, Bot):
        return BOT
    if a == b:
        return a
    if isinstance(b, Id) and isinstance(a, Phi):
        return a
    if (isinstance(a, Comp) and isinstance(a.l, Conv)
            and isinstance(a.l.e, Pi1) and isinstance(b, Comp)
            and isinstance(b.l, Conv) and isinstance(b.l.e, Pi2)):
        return Fork(a.r, b.r)
    return None


def _join_pair(a, b):
    if isinstance(b, Bot):
        return a
    if isinstance(b, Top):
        return TOP
    if a == b:
        return a
    return None


def _r_conv_collapse(t, ctx):
    if isinstance(t, Conv) and isinstance(t.e, Conv):
        return t.e.e
    if isinstance(t, Conv) and isinstance(t.e, (Id, Top, Bot)):
        return t.e
    return None


def _r_conv_distribute(t, ctx):
    if not isinstance(t, Conv):
        return None
    e = t.e
    if isinstance(e, Comp):
        return Comp(Conv(e.r), Conv(e.l))
    if isinstance(e, Meet):
        return Meet(Conv(e.l), Conv(e.r))
    if isinstance(e, Join):
        return Join(Conv(e.l), Conv(e.r))
    return None


def _r_compl_collapse(t, ctx):
    if not isinstance(t, Compl):
        return None
    e = t.e
    if isinstance(e, Compl):
        return e.e
    if isinstance(e, Conv) and isinstance(e.e, Compl):
        return Conv(e.e.e)
    if isinstance(e, Top):
        return BOT
    if isinstance(e, Bot):
        return TOP
    return None


def _r_compl_distribute(t, ctx):
    if not isinstance(t, Compl):
        return None
    e = t.e
    if isinstance(e, Meet):
        return Join(Compl(e.l), Compl(e.r))
    if isinstance(e, Join):
        return Meet(Compl(e.l), Compl(e.r))
    if isinstance(e, Comp):
        return Ldiv(Conv(e.l), Compl(e.r))
    if isinstance(e, Ldiv):
        return Comp(Conv(e.l), Compl(e.r))
    return None


def _r_comp_unit(t, ctx):
    if not isinstance(t, Comp):
        return None
    if isinstance(t.r, Id):
        return t.l
    if isinstance(t.l, Id):
        return t.r
    if isinstance(t.l, Bot) or isinstance(t.r, Bot):
        return BOT
    return None


def _r_ncomp_unit(t, ctx):
    if isinstance(t, NComp) and isinstance(t.r, Id):
        return t.l
    return None


def _r_rot_cycle(t, ctx):
    if not isinstance(t, Rot):
        return None
    cur, k = t, 0
    while isinstance(cur, Rot) and cur.n == t.n and k < t.n:
        cur, k = cur.e, k + 1
    return cur if k == t.n else None


def _r_residual_units(t, ctx):
    if not isinstance(t, Ldiv):
        return None
    if isinstance(t.l, Bot) or isinstance(t.r, Top):
        return TOP
    if isinstance(t.l, Id):
        return t.r
    return None


def _r_fork_meet(t, ctx):
    # (R nabla S)~ . (A nabla B)  =  R~.A & S~.B
    if (isinstance(t, Comp) and isinstance(t.l, Conv)
            and isinstance(t.l.e, Fork) and isinstance(t.r, Fork)):
        f, g = t.l.e, t.r
        return Meet(Comp(Conv(f.l), g.l), Comp(Conv(f.r), g.r))
    return None


def _r_fork_comp(t, ctx):
    # (id nabla T) . R  duplicates R over both components
    if (isinstance(t, Comp) and isinstance(t.l, Fork)
            and isinstance(t.l.l, Id) and isinstance(t.l.r, Top)):
        return Fork(t.r, Comp(TOP, t.r))
    return None


def _r_prod_intro(t, ctx):
    if (isinstance(t, Fork) and isinstance(t.l, Comp)
            and isinstance(t.l.r, Pi1) and isinstance(t.r, Comp)
            and isinstance(t.r.r, Pi2)):
        return Prod(t.l.l, t.r.l)
    return None


ALGEBRA_RULES = [
    _pair_rule("meet-pair", Meet, _meet_pair),
    _pair_rule("join-pair", Join, _join_pair),
    Rule("converse-collapse", _r_conv_collapse),
    Rule("converse-distribute", _r_conv_distribute),
    Rule("complement-collapse", _r_compl_collapse),
    Rule("complement-distribute", _r_compl_distribute),
    Rule("composition-unit", _r_comp_unit),
    Rule("wide-composition-unit", _r_ncomp_unit),
    Rule("rotation-cycle", _r_rot_cycle),
    Rule("residual-units", _r_residual_units),
    Rule("fork-converse-meet", _r_fork_meet),
    Rule("fork-absorbs-composition", _r_fork_comp),
    Rule("product-intro", _r_prod_intro),
]


def _r_fact_norm(t, ctx):
    if not isinstance(t, FactLe):
        return None
    if isinstance(t.lhs, Compl) and isinstance(t.rhs, Compl):
        return FactLe(t.rhs.e, t.lhs.e)
    if isinstance(t.lhs, Top) and isinstance(t.rhs, Conv):
        return FactLe(TOP, t.rhs.e)
    if isinstance(t.lhs, Conv) and isinstance(t.rhs, Bot):
        return FactLe(t.lhs.e, BOT)
    if isinstance(t.rhs, Ldiv):
        return FactLe(Comp(t.rhs.l, t.lhs), t.rhs.r)
    return None


FACT_RULES = [Rule("inequation-normalize", _r_fact_norm)]


# ---------------------------------------------------------------------------
# the drivers

_SIMPLIFY = Many(Choice(
    Once(LOGIC_RULES),
    Once(DEFINITION_RULES),
    Once(ALGEBRA_RULES),
    Once(FACT_RULES),
))

_LOOP = Many(Choice(
    Once(_LOOP_LOGIC),
    Once(DEFINITION_RULES),
    Once(ALGEBRA_RULES),
    Once(_COMBINE_RULES),
    Once(_DISCHARGE_RULES),
    Once(_FRAME_RULES),
    Once(_NORMALIZE_RULES),
))


def simplify(t, budget: int = 10000):
    """Rewrite a formula, term or fact to a fixpoint of all rule banks."""
    out, _ = simplify_with_trace(t, budget)
    return out


def simplify_with_trace(t, budget: int = 10000):
    state = RunState(budget=budget)
    out = _SIMPLIFY.run(t, state)
    return out, state.trace


def _oriented(app: RApp) -> Optional[FAExpr]:
    if _flat(app) == (1, 2):
        return app.rel
    if _flat(app) == (2, 1):
        return Conv(app.rel)
    return None


def drop_vars(f: RLFormula) -> Optional[FAFact]:
    """Fact a closed prefix-form formula denotes, read off without frames.

    The patterns quantify over plain elements only, so the facts they
    produce are sound at every carrier width and carry no width stamp.
    """
    if isinstance(f, RTrue):
        return FactEq(TOP, TOP)
    if isinstance(f, RFalse):
        return FactEq(TOP, BOT)
    if not isinstance(f, RAll) or f.special or not isinstance(f.body, RApp):
        return None
    body = _oriented(f.body) if f.width == 2 else None
    if f.width == 2 and f.rng is None and body is not None:
        return FactEq(body, TOP)
    if f.width == 2 and isinstance(f.rng, RApp) and body is not None:
        rng = _oriented(f.rng)
        if rng is not None:
            return FactLe(rng, body)
    if f.width == 1 and _flat(f.body) == (1, 1):
        if f.rng is None:
            return FactLe(ID, f.body.rel)
        if isinstance(f.rng, RApp) and _flat(f.rng) == (1, 1):
            return FactLe(Meet(f.rng.rel, ID), f.body.rel)
    return None


def translate_h(f: RLFormula, budget: int = 10000, label: str = "") -> FAFact:
    """Variable elimination with the shortcut rules; same facts semantics
    as the plain pipeline, usually far smaller terms."""
    fact, _ = translate_h_with_trace(f, budget=budget, label=label)
    return fact


def translate_h_with_trace(f: RLFormula, budget: int = 10000,
                           label: str = ""):
    state = RunState(budget=budget)
    g = _SIMPLIFY.run(f, state)
    width = 0
    fact = drop_vars(g)
    if fact is None:
        g = Many(Once(_NORMALIZE_RULES)).run(g, state)
        width = max(1, nesting(g))
        out = _LOOP.run(insert_vars(g), state)
        fact = fact_of(out)
        if fact is None:
            raise TranslateError(
                "shortcut elimination got stuck at: %s" % rl_text(out),
                state.trace)
    fact = dataclasses.replace(fact, width=width)
    done = Many(Choice(Once(ALGEBRA_RULES), Once(FACT_RULES))).run(fact, state)
    done = dataclasses.replace(done, label=label, width=width)
    return done, state.trace


def translate_form_h(f: AlloyForm, rel_arity, budget: int = 10000,
                     label: str = "") -> FAFact:
    """Expand a core formula and eliminate variables the shortcut way."""
    rl = expand_form(f, rel_arity, closure=star_lifter(rel_arity))
    return translate_h(rl, budget=budget, label=label)


def rel_op_count(x) -> int:
    """Number of relational operators in a term or fact (leaves are free)."""
    if isinstance(x, FAFact):
        return rel_op_count(x.lhs) + rel_op_count(x.rhs)
    if not isinstance(x, FAExpr):
        return 0
    n = 1 if isinstance(x, (Comp, Conv, Compl, Meet, Join, Ldiv, Rdiv,
                            Fork, Prod, Star, NComp, Rot)) else 0
    for fl in dataclasses.fields(x):
        v = getattr(x, fl.name)
        if isinstance(v, FAExpr):
            n += rel_op_count(v)
    return n
