"""Finite-model semantics for the three term languages, plus the checker.

A translation is certified by comparing the truth of its source formula
against the truth of the produced fact over every finite model up to a
size bound (or over a seeded sample when the extent count explodes).

Relational terms are evaluated as boolean matrices over a finite carrier.
Two carrier shapes cover the different jobs:

* ``tuple_space(atoms, width)``: the atoms plus every right-nested tuple
  of atoms up to the given width. Translation checks live here, because
  an n-ary relation relates column 1 to the nested tuple of columns 2..n
  and a fact needs tuples exactly as wide as the widest one built for it.
* ``pair_space(atoms, depth)``: the full pair closure up to a nesting
  depth, pairing anything already present. The algebra's axioms quantify
  over arbitrary pairings, so the axiom checks use this shape with
  relation extents drawn over the shallow elements.

``top`` and ``id`` always mean all pairs / the diagonal over the carrier
in play. ``fact_holds`` additionally offers an atom-framed comparison
(rows and columns restricted to atoms) for totality-style facts whose
left side is the bare identity or the universal relation; the
multiplicity tests explain why that frame is the meaningful one there.

Atoms must be strings; every tuple element is a nested pair of them.
"""

from __future__ import annotations

import dataclasses
import itertools
import random
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .terms import (
    MARK_X, MARK_Y,
    ADiff, ADomRes, AIden, AInter, AJoin, ANone, AProd, ARanRes, ARel,
    ASig, AStar, AUnion, AUniv, AVar, AConv, AlloyExpr, AlloyForm,
    Bot, Comp, Compl, Conv, FAExpr, FAFact, FactEq,
    FAll, FAnd, FEq, FImp, FIn, FLone, FNot, FOr, FPredCall, FSome, FSomeQ,
    Fork, Id, Join, Ldiv, Meet, Phi, Pi1, Pi2, Prod, Rdiv, Rel, Star, Top,
    RAll, RAnd, RApp, REx, RFalse, RImp, RLFormula, RNot, ROr, RTrue,
    rl_map_apps, unfold,
)


class SizingError(Exception):
    """An extent tuple does not fit the carrier's tuple widths."""


# ---------------------------------------------------------------------------
# carriers


def nest(vals):
    """Right-nested tuple of a non-empty value sequence."""
    out = vals[-1]
    for v in reversed(vals[:-1]):
        out = (v, out)
    return out


class Space:
    """A finite carrier indexed for matrix evaluation.

    Pair elements are pre-scanned into index arrays so fork, product and
    the projections are single fancy-indexing operations. The cache holds
    matrices of constant terms (no relation or signature symbols), which
    are shared by every model over this carrier.
    """

    def __init__(self, elements, atom_count, width=None):
        self.elements = list(elements)
        self.n = len(self.elements)
        self.atom_count = atom_count
        self.width = width
        self.index = {e: i for i, e in enumerate(self.elements)}
        pe, pl, pr = [], [], []
        for i, e in enumerate(self.elements):
            if isinstance(e, tuple):
                li = self.index.get(e[0])
                ri = self.index.get(e[1])
                if li is not None and ri is not None:
                    pe.append(i)
                    pl.append(li)
                    pr.append(ri)
        self._pairs = np.asarray(pe, dtype=np.intp)
        self._left = np.asarray(pl, dtype=np.intp)
        self._right = np.asarray(pr, dtype=np.intp)
        self.cache = {}

    @property
    def atoms(self):
        return self.elements[:self.atom_count]

    def __repr__(self):
        return "Space(%d elements, %d atoms)" % (self.n, self.atom_count)


def tuple_space(atoms, width):
    """Atoms plus right-nested atom tuples of widths 2..width."""
    atoms = list(atoms)
    els = list(atoms)
    layer = list(atoms)
    for _ in range(max(width, 1) - 1):
        layer = [(a, t) for a in atoms for t in layer]
        els.extend(layer)
    return Space(els, len(atoms), width=max(width, 1))


def pair_space(atoms, depth=2):
    """Atoms plus the pair closure up to the given nesting depth."""
    els = list(atoms)
    seen = set(els)
    for _ in range(depth):
        base = list(els)
        for a in base:
            for b in base:
                if (a, b) not in seen:
                    seen.add((a, b))
                    els.append((a, b))
    return Space(els, len(atoms))


def witness_rows(space):
    """Boolean mask of rows whose mutual pairs the carrier still holds.

    A law that conjures a pair (u, v) out of two existential witnesses is
    exact on a truncated pair closure only when u and v stay below the
    top layer. Relations with row support inside this mask cannot push a
    witness past the boundary. Membership test: (e, e) exists iff e is
    one level short of the cap, and then so is every mixed pair.
    """
    ok = np.zeros(space.n, dtype=bool)
    for i, e in enumerate(space.elements):
        if (e, e) in space.index:
            ok[i] = True
    return ok


_SPACES = {}


def get_tuple_space(atoms, width):
    key = (tuple(atoms), max(int(width), 1))
    sp = _SPACES.get(key)
    if sp is None:
        sp = _SPACES[key] = tuple_space(key[0], key[1])
    return sp


# ---------------------------------------------------------------------------
# models and vocabularies


@dataclass(frozen=True)
class SigInfo:
    name: str
    parent: Optional[str] = None
    abstract: bool = False


@dataclass
class Vocab:
    """Signature hierarchy and typed relation columns, for model building."""

    sigs: dict  # name -> SigInfo
    rels: dict  # name -> tuple of column signature names, owner first

    def subtree(self, name):
        out = {name}
        for s in self.sigs.values():
            if s.parent == name:
                out |= self.subtree(s.name)
        return out

    def placements(self):
        """Where a single atom may live: any non-abstract signature."""
        opts = [s.name for s in self.sigs.values() if not s.abstract]
        return opts or [None]

    def arity(self):
        return {name: len(cols) for name, cols in self.rels.items()}


@dataclass
class FiniteModel:
    atoms: tuple
    sigs: dict  # name -> frozenset of atoms
    rels: dict  # name -> frozenset of flat column tuples


def describe_model(m: FiniteModel) -> str:
    parts = ["|U|=%d" % len(m.atoms)]
    for name in sorted(m.sigs):
        parts.append("%s={%s}" % (name, ",".join(sorted(m.sigs[name]))))
    for name in sorted(m.rels):
        ts = sorted(m.rels[name])
        parts.append("%s={%s}" % (name, ",".join("(%s)" % ",".join(t)
                                                 for t in ts)))
    return " ".join(parts)


def _extents(vocab, atoms, placement):
    subs = {s: vocab.subtree(s) for s in vocab.sigs}
    return {s: frozenset(a for a, p in zip(atoms, placement) if p in subs[s])
            for s in vocab.sigs}


def _possible(vocab, sig_ext, rel):
    cols = vocab.rels[rel]
    return list(itertools.product(*(sorted(sig_ext[c]) for c in cols)))


def model_count(vocab, n_atoms, rel_names):
    """Exact number of models iter_models would yield."""
    atoms = tuple("a%d" % i for i in range(n_atoms))
    total = 0
    for placement in itertools.product(vocab.placements(), repeat=n_atoms):
        sig_ext = _extents(vocab, atoms, placement)
        combos = 1
        for r in rel_names:
            combos <<= len(_possible(vocab, sig_ext, r))
        total += combos
    return total

def iter_models(vocab, n_atoms, rel_names):
    """Every model: all placements of atoms into signatures, crossed with
    all extents of the named relations (others stay empty)."""
    atoms = tuple("a%d" % i for i in range(n_atoms))
    for placement in itertools.product(vocab.placements(), repeat=n_atoms):
        sig_ext = _extents(vocab, atoms, placement)
        poss = [_possible(vocab, sig_ext, r) for r in rel_names]
        for masks in itertools.product(*(range(1 << len(p)) for p in poss)):
            rels = {}
            for r, p, mask in zip(rel_names, poss, masks):
                rels[r] = frozenset(t for b, t in enumerate(p)
                                    if mask >> b & 1)
            yield FiniteModel(atoms, sig_ext, rels)


def sample_model(vocab, n_atoms, rel_names, rng):
    atoms = tuple("a%d" % i for i in range(n_atoms))
    opts = vocab.placements()
    placement = [rng.choice(opts) for _ in atoms]
    sig_ext = _extents(vocab, atoms, placement)
    rels = {}
    for r in rel_names:
        rels[r] = frozenset(t for t in _possible(vocab, sig_ext, r)
                            if rng.random() < 0.5)
    return FiniteModel(atoms, sig_ext, rels)


def interp_from_model(model: FiniteModel, space: Space) -> dict:
    """Extent matrices keyed by ("rel", name) and ("sig", name).

    Signatures become coreflexives; an n-ary extent tuple becomes one
    entry relating its first column to the nest of the rest. Unary
    relation extents are coreflexives as well.
    """
    interp = {}
    n = space.n
    for name, ext in model.sigs.items():
        m = np.zeros((n, n), dtype=bool)
        for a in ext:
            i = space.index[a]
            m[i, i] = True
        interp[("sig", name)] = m
    for name, ext in model.rels.items():
        m = np.zeros((n, n), dtype=bool)
        for t in ext:
            if len(t) == 1:
                i = space.index[t[0]]
                m[i, i] = True
                continue
            col = space.index.get(nest(t[1:]))
            if col is None:
                raise SizingError(
                    "tuple %r needs carrier width %d, have %r"
                    % (t, len(t) - 1, space.width))
            m[space.index[t[0]], col] = True
        interp[("rel", name)] = m
    return interp


# ---------------------------------------------------------------------------
# matrix semantics of variable-free terms


def _mm(a, b):
    return (a.astype(np.float32) @ b.astype(np.float32)) > 0.0


def eval_fa(e: FAExpr, space: Space, interp: dict, cache=None):
    """Boolean matrix of a variable-free term over the carrier.

    Unknown relation and signature names denote the empty relation.
    Subterms free of relation symbols are cached on the space itself and
    shared across models; the optional cache dict (keyed by node
    identity, so reuse the same term objects) shares the symbol-bearing
    parts between calls for one model.
    """
    m, _ = _eval2(unfold(e), space, interp,
                  {} if cache is None else cache)
    return m


def _eval(e, space, interp, cache):
    return _eval2(e, space, interp, cache)[0]


def _eval2(e, space, interp, cache):
    hit = cache.get(id(e))
    if hit is not None:
        return hit
    shared = space.cache.get(e)
    if shared is not None:
        out = (shared, True)
        cache[id(e)] = out
        return out
    n = space.n
    const = True
    if isinstance(e, Rel):
        m = interp.get(("rel", e.name))
        m = np.zeros((n, n), dtype=bool) if m is None else m
        const = False
    elif isinstance(e, Phi):
        m = interp.get(("sig", e.sig))
        m = np.zeros((n, n), dtype=bool) if m is None else m
        const = False
    elif isinstance(e, Top):
        m = np.ones((n, n), dtype=bool)
    elif isinstance(e, Bot):
        m = np.zeros((n, n), dtype=bool)
    elif isinstance(e, Id):
        m = np.eye(n, dtype=bool)
    elif isinstance(e, Pi1):
        m = np.zeros((n, n), dtype=bool)
        m[space._left, space._pairs] = True
    elif isinstance(e, Pi2):
        m = np.zeros((n, n), dtype=bool)
        m[space._right, space._pairs] = True
    elif isinstance(e, (Join, Meet, Comp, Ldiv, Rdiv)):
        l, cl = _eval2(e.l, space, interp, cache)
        r, cr = _eval2(e.r, space, interp, cache)
        const = cl and cr
        if isinstance(e, Join):
            m = l | r
        elif isinstance(e, Meet):
            m = l & r
        elif isinstance(e, Comp):
            m = _mm(l, r)
        elif isinstance(e, Ldiv):
            # u (L\R) v  iff  for all w: w L u implies w R v
            m = ~_mm(l.T, ~r)
        else:
            # u (L/R) v  iff  for all w: u L w implies v R w
            m = ~_mm(l, (~r).T)
    elif isinstance(e, Conv):
        sub, const = _eval2(e.e, space, interp, cache)
        m = sub.T
    elif isinstance(e, Compl):
        sub, const = _eval2(e.e, space, interp, cache)
        m = ~sub
    elif isinstance(e, Fork):
        l, cl = _eval2(e.l, space, interp, cache)
        r, cr = _eval2(e.r, space, interp, cache)
        const = cl and cr
        m = np.zeros((n, n), dtype=bool)
        m[space._pairs] = l[space._left] & r[space._right]
    elif isinstance(e, Prod):
        l, cl = _eval2(e.l, space, interp, cache)
        r, cr = _eval2(e.r, space, interp, cache)
        const = cl and cr
        m = np.zeros((n, n), dtype=bool)
        if len(space._pairs):
            m[np.ix_(space._pairs, space._pairs)] = (
                l[np.ix_(space._left, space._left)]
                & r[np.ix_(space._right, space._right)])
    elif isinstance(e, Star):
        sub, const = _eval2(e.e, space, interp, cache)
        m = np.eye(n, dtype=bool) | sub
        while True:
            nxt = _mm(m, m) | m
            if np.array_equal(nxt, m):
                break
            m = nxt
    else:
        raise TypeError("cannot evaluate %r" % (e,))
    if const:
        space.cache[e] = m
    out = (m, const)
    cache[id(e)] = out
    return out


# ---------------------------------------------------------------------------
# Alloy semantics (sets of flat tuples)


def eval_alloy(f: AlloyForm, model: FiniteModel, env=None) -> bool:
    env = env or {}
    if isinstance(f, FIn):
        return eval_aexpr(f.l, model, env) <= eval_aexpr(f.r, model, env)
    if isinstance(f, FEq):
        return eval_aexpr(f.l, model, env) == eval_aexpr(f.r, model, env)
    if isinstance(f, FSome):
        return bool(eval_aexpr(f.e, model, env))
    if isinstance(f, FLone):
        return len(eval_aexpr(f.e, model, env)) <= 1
    if isinstance(f, FNot):
        return not eval_alloy(f.f, model, env)
    if isinstance(f, FAnd):
        return eval_alloy(f.l, model, env) and eval_alloy(f.r, model, env)
    if isinstance(f, FOr):
        return eval_alloy(f.l, model, env) or eval_alloy(f.r, model, env)
    if isinstance(f, FImp):
        return (not eval_alloy(f.l, model, env)) or eval_alloy(f.r, model, env)
    if isinstance(f, (FAll, FSomeQ)):
        tuples = sorted(eval_aexpr(f.bound, model, env))
        results = (eval_alloy(f.body, model, {**env, f.var: t})
                   for t in tuples)
        return all(results) if isinstance(f, FAll) else any(results)
    if isinstance(f, FPredCall):
        raise TypeError("predicate call %r must be desugared first" % f.name)
    raise TypeError("not a core formula: %r" % (f,))


def eval_aexpr(e: AlloyExpr, model: FiniteModel, env) -> set:
    if isinstance(e, ASig):
        return {(a,) for a in model.sigs.get(e.name, ())}
    if isinstance(e, ARel):
        return set(model.rels.get(e.name, ()))
    if isinstance(e, AVar):
        return {env[e.name]}
    if isinstance(e, AIden):
        return {(a, a) for a in model.atoms}
    if isinstance(e, AUniv):
        return {(a,) for a in model.atoms}
    if isinstance(e, ANone):
        return set()
    if isinstance(e, AConv):
        return {(b, a) for (a, b) in eval_aexpr(e.e, model, env)}
    if isinstance(e, AStar):
        cur = {(a, a) for a in model.atoms} | eval_aexpr(e.e, model, env)
        while True:
            nxt = cur | {(a, d) for (a, b) in cur for (c, d) in cur if b == c}
            if nxt == cur:
                return cur
            cur = nxt
    if isinstance(e, AJoin):
        ls = eval_aexpr(e.l, model, env)
        rs = eval_aexpr(e.r, model, env)
        return {x[:-1] + y[1:] for x in ls for y in rs if x[-1] == y[0]}
    if isinstance(e, AProd):
        ls = eval_aexpr(e.l, model, env)
        rs = eval_aexpr(e.r, model, env)
        return {x + y for x in ls for y in rs}
    if isinstance(e, AUnion):
        return eval_aexpr(e.l, model, env) | eval_aexpr(e.r, model, env)
    if isinstance(e, AInter):
        return eval_aexpr(e.l, model, env) & eval_aexpr(e.r, model, env)
    if isinstance(e, ADiff):
        return eval_aexpr(e.l, model, env) - eval_aexpr(e.r, model, env)
    if isinstance(e, ADomRes):
        dom = eval_aexpr(e.l, model, env)
        return {t for t in eval_aexpr(e.r, model, env) if (t[0],) in dom}
    if isinstance(e, ARanRes):
        ran = eval_aexpr(e.r, model, env)
        return {t for t in eval_aexpr(e.l, model, env) if (t[-1],) in ran}
    raise TypeError("not a core expression: %r" % (e,))


# ---------------------------------------------------------------------------
# relational-logic semantics


def eval_rl(f: RLFormula, space: Space, interp: dict, env=None,
            cache=None) -> bool:
    """Truth of an RL formula; quantifiers range over the whole carrier.

    That is the untyped reading the translation preserves: formulas
    produced from Alloy carry signature ranges that confine each level
    to atoms, and on a truncated finite carrier only ranged quantifiers
    are guaranteed to survive translation unchanged (an unranged one
    can tell a cut-down carrier from the full pair closure).

    env maps de Bruijn levels and free markers to carrier elements.
    Ordinary binders bind consecutive levels below the ones already in
    env; the special wrapper binds the marker pair and no levels.
    """
    if cache is None:
        cache = {}
    env = dict(env or {})
    base = max((k for k in env if isinstance(k, int)), default=0)
    return _rl(f, space, interp, env, base + 1, cache)


def _rl(f, space, interp, env, nl, cache):
    if isinstance(f, RTrue):
        return True
    if isinstance(f, RFalse):
        return False
    if isinstance(f, RNot):
        return not _rl(f.f, space, interp, env, nl, cache)
    if isinstance(f, RAnd):
        return (_rl(f.l, space, interp, env, nl, cache)
                and _rl(f.r, space, interp, env, nl, cache))
    if isinstance(f, ROr):
        return (_rl(f.l, space, interp, env, nl, cache)
                or _rl(f.r, space, interp, env, nl, cache))
    if isinstance(f, RImp):
        return ((not _rl(f.l, space, interp, env, nl, cache))
                or _rl(f.r, space, interp, env, nl, cache))
    if isinstance(f, (RAll, REx)):
        forall = isinstance(f, RAll)
        if getattr(f, "special", False):
            slots = (MARK_X, MARK_Y)
            combos = itertools.product(space.elements, repeat=2)
            inner_nl = nl
        else:
            slots = tuple(range(nl, nl + f.width))
            combos = itertools.product(space.elements, repeat=f.width)
            inner_nl = nl + f.width
        for combo in combos:
            env2 = dict(env)
            env2.update(zip(slots, combo))
            if f.rng is not None:
                if not _rl(f.rng, space, interp, env2, inner_nl, cache):
                    continue
            got = _rl(f.body, space, interp, env2, inner_nl, cache)
            if forall and not got:
                return False
            if not forall and got:
                return True
        return forall
    if isinstance(f, RApp):
        lv = _side_index(f.lhs, env, space)
        rv = _side_index(f.rhs, env, space)
        if lv is None or rv is None:
            return False
        m = _eval(unfold(f.rel), space, interp, cache)
        return bool(m[lv, rv])
    raise TypeError("not an RL formula: %r" % (f,))


def _side_index(items, env, space):
    try:
        vals = [env[i] for i in items]
    except KeyError as k:
        raise KeyError("item %r is not bound" % (k.args[0],)) from None
    return space.index.get(nest(vals))


# ---------------------------------------------------------------------------
# facts


def infer_width(x) -> int:
    """Smallest carrier width that can represent a term or fact.

    Derived from relation arities, fork/product nesting and selector
    chains; the pipeline stamps the exact width on the facts it builds,
    so this is the safety net for hand-written terms.
    """
    if isinstance(x, FAFact):
        return max(infer_width(x.lhs), infer_width(x.rhs))
    return _width(unfold(x))


def _width(e):
    w = 1
    if isinstance(e, Rel):
        w = max(w, e.arity - 1)
    if isinstance(e, (Fork, Prod)):
        k, cur = 0, e
        while isinstance(cur, (Fork, Prod)):
            k += 1
            cur = cur.r
        w = max(w, k + 1)
    chain = _pi_chain(e)
    if chain:
        w = max(w, chain + 1)
    for fl in dataclasses.fields(e):
        v = getattr(e, fl.name)
        if isinstance(v, FAExpr):
            w = max(w, _width(v))
    return w


def _pi_chain(e):
    if isinstance(e, (Pi1, Pi2)):
        return 1
    if isinstance(e, Comp):
        l, r = _pi_chain(e.l), _pi_chain(e.r)
        if l and r:
            return l + r
    return 0


def fact_holds(fact: FAFact, model: FiniteModel, width=None,
               frame="carrier") -> bool:
    """Truth of a fact over the tuple carrier of the fact's width.

    frame="atoms" restricts the final comparison (not the inner
    operators) to atom rows and columns; use it for totality-style facts
    whose pointwise reading quantifies over atoms.
    """
    w = max(width or 1, getattr(fact, "width", 0) or 1, infer_width(fact))
    space = get_tuple_space(model.atoms, w)
    interp = interp_from_model(model, space)
    return _fact_truth(fact, space, interp, {}, frame)


def _fact_truth(fact, space, interp, cache, frame):
    a = _eval(unfold(fact.lhs), space, interp, cache)
    b = _eval(unfold(fact.rhs), space, interp, cache)
    if frame == "atoms":
        k = space.atom_count
        a, b = a[:k, :k], b[:k, :k]
    if isinstance(fact, FactEq):
        return bool(np.array_equal(a, b))
    return bool((~a | b).all())


# ---------------------------------------------------------------------------
# the checker


@dataclass
class Verdict:
    status: str  # "PASS", "FAIL" or "SAMPLED" (a pass by sampling)
    checked: int
    counterexample: Optional[FiniteModel] = None
    detail: str = ""

    def __bool__(self):
        return self.status != "FAIL"


def _alloy_rel_names(x, out):
    if isinstance(x, ARel):
        out.add(x.name)
    if isinstance(x, (AlloyExpr, AlloyForm)):
        for f in dataclasses.fields(x):
            v = getattr(x, f.name)
            if isinstance(v, (AlloyExpr, AlloyForm)):
                _alloy_rel_names(v, out)
            elif isinstance(v, tuple):
                for item in v:
                    _alloy_rel_names(item, out)


def _fa_rel_names(e, out):
    if isinstance(e, Rel):
        out.add(e.name)
    for f in dataclasses.fields(e):
        v = getattr(e, f.name)
        if isinstance(v, FAExpr):
            _fa_rel_names(v, out)


def _rl_rel_names(f, out):
    if isinstance(f, RApp):
        _fa_rel_names(f.rel, out)
        return
    for fl in dataclasses.fields(f):
        v = getattr(f, fl.name)
        if isinstance(v, RLFormula):
            _rl_rel_names(v, out)


def mentioned_rels(x) -> set:
    out = set()
    if isinstance(x, (AlloyExpr, AlloyForm)):
        _alloy_rel_names(x, out)
    elif isinstance(x, RLFormula):
        _rl_rel_names(x, out)
    elif isinstance(x, FAFact):
        _fa_rel_names(x.lhs, out)
        _fa_rel_names(x.rhs, out)
    elif isinstance(x, FAExpr):
        _fa_rel_names(x, out)
    return out


def _source_truth(source, model, space, interp, cache):
    if isinstance(source, AlloyForm):
        return eval_alloy(source, model)
    if isinstance(source, RLFormula):
        return _rl(source, space, interp, {}, 1, cache)
    if isinstance(source, FAFact):
        return _fact_truth(source, space, interp, cache, "carrier")
    raise TypeError("cannot evaluate source %r" % (source,))


def check_equiv(source, fact: FAFact, vocab: Vocab, bound=3,
                include_empty=False, max_exhaustive=1 << 14, samples=4096,
                seed=0, width=None) -> Verdict:
    """Does the fact have the same truth as the source on every model?

    Models are built from the vocabulary: all placements of up to
    ``bound`` atoms into signatures, crossed with all extents of the
    relations the source or fact mentions. While that count fits
    max_exhaustive the check is exhaustive, beyond it a seeded sample of
    ``samples`` models is drawn and a passing verdict says SAMPLED.

    The source may be a core Alloy formula, an RL formula (quantifiers
    ranging over the same bounded carrier the fact uses) or another fact.
    """
    names = mentioned_rels(source) | mentioned_rels(fact)
    rel_names = sorted(n for n in names if n in vocab.rels)
    w = max(width or 1, getattr(fact, "width", 0) or 1, infer_width(fact))
    for r in rel_names:
        w = max(w, len(vocab.rels[r]) - 1)
    sizes = list(range(0 if include_empty else 1, bound + 1))

    # pre-unfold so the per-model identity caches see stable node objects
    fact = dataclasses.replace(fact, lhs=unfold(fact.lhs),
                               rhs=unfold(fact.rhs))
    if isinstance(source, RLFormula):
        source = rl_map_apps(
            lambda a: RApp(a.lhs, unfold(a.rel), a.rhs), source)
    elif isinstance(source, FAFact):
        source = dataclasses.replace(source, lhs=unfold(source.lhs),
                                     rhs=unfold(source.rhs))

    def against(model, checked):
        space = get_tuple_space(model.atoms, w)
        interp = interp_from_model(model, space)
        cache = {}
        s = _source_truth(source, model, space, interp, cache)
        f = _fact_truth(fact, space, interp, cache, "carrier")
        if s != f:
            return Verdict("FAIL", checked,
                           counterexample=model,
                           detail="source %s, fact %s on %s"
                                  % (s, f, describe_model(model)))
        return None

    total = sum(model_count(vocab, n, rel_names) for n in sizes)
    checked = 0
    if total <= max_exhaustive:
        for n in sizes:
            for model in iter_models(vocab, n, rel_names):
                checked += 1
                bad = against(model, checked)
                if bad is not None:
                    return bad
        return Verdict("PASS", checked)
    rng = random.Random(seed)
    for _ in range(samples):
        n = rng.choice(sizes)
        model = sample_model(vocab, n, rel_names, rng)
        checked += 1
        bad = against(model, checked)
        if bad is not None:
            return bad
    return Verdict("SAMPLED", checked)


# ---------------------------------------------------------------------------
# random formula generation


def gen_vocab() -> Vocab:
    """The fixed vocabulary the random-formula generator draws from."""
    return Vocab(
        sigs={"A": SigInfo("A"), "B": SigInfo("B")},
        rels={"r": ("A", "B"), "s": ("B", "A"), "t": ("A", "B", "A")},
    )


def gen_formula(seed: int) -> AlloyForm:
    """Deterministic random closed core formula over gen_vocab().

    Shapes are kept inside the translator's comfort zone on purpose:
    at most two quantifiers, both ranged over a signature, memberships
    of arity up to 3, and at most one join per membership side. Closures
    stay out of forcing positions: they appear freely on the right side
    of a membership but reach the left side (or a counting operand) only
    inside the negated arm of a set difference, whose left arm pins the
    rows to atom tuples. The level budget keeps the expanded quantifier
    depth small enough for exhaustive carriers.
    """
    rng = random.Random(seed)
    return _gen_form(rng, depth=3, quants=2, levels=4, env=[])


def _gen_form(rng, depth, quants, levels, env):
    kinds = ["in", "in", "in", "some", "some"]
    if depth > 0:
        kinds += ["not", "not", "and", "and"]
        if quants > 0 and levels >= 2:
            kinds += ["all", "all", "all"]
    kind = rng.choice(kinds)
    if kind == "all":
        var = "v%d" % len(env)
        sig = rng.choice(("A", "B"))
        body = _gen_form(rng, depth - 1, quants - 1, levels - 1, env + [var])
        return FAll(var, ASig(sig), body)
    if kind == "not":
        return FNot(_gen_form(rng, depth - 1, quants, levels, env))
    if kind == "and":
        return FAnd(_gen_form(rng, depth - 1, quants, levels, env),
                    _gen_form(rng, depth - 1, quants, levels, env))
    if kind == "some":
        a = rng.choice([x for x in (1, 2) if x <= levels])
        return FSome(_gen_expr(rng, a, 2, env, star_ok=False,
                               joins=min(1, levels - a)))
    a = rng.choice([x for x in (1, 2, 3) if x <= levels])
    joins = min(1, levels - a)
    lhs = _gen_expr(rng, a, 2, env, star_ok=False, joins=joins)
    rhs = _gen_expr(rng, a, 2, env, star_ok=True, joins=joins)
    return FIn(lhs, rhs)


def _gen_leaf(rng, arity, env):
    if arity == 1:
        opts = [ASig("A"), ASig("B")] + [AVar(v) for v in env]
        return rng.choice(opts)
    if arity == 2:
        return ARel(rng.choice(("r", "s")))
    return ARel("t")


def _gen_expr(rng, arity, depth, env, star_ok, joins):
    if depth <= 0:
        return _gen_leaf(rng, arity, env)
    ops = ["leaf", "leaf", "union", "inter", "diff"]
    if arity == 2:
        ops += ["conv", "prod"]
        if star_ok:
            ops.append("star")
    if arity == 3:
        ops += ["prod", "prod"]
    if joins > 0 and arity <= 3:
        ops += ["join"]
    ops += ["domres", "ranres"]
    op = rng.choice(ops)
    sub = lambda a, st=star_ok, j=joins: _gen_expr(rng, a, depth - 1, env,
                                                   star_ok=st, joins=j)
    if op == "leaf":
        return _gen_leaf(rng, arity, env)
    if op == "union":
        return AUnion(sub(arity), sub(arity))
    if op == "inter":
        return AInter(sub(arity), sub(arity))
    if op == "diff":
        # only the left arm must stay closure-free: the right is negated
        return ADiff(sub(arity), sub(arity, st=True))
    if op == "conv":
        return AConv(sub(2))
    if op == "star":
        return AStar(_gen_leaf(rng, 2, env))
    if op == "prod":
        k = rng.choice(range(1, arity))
        return AProd(sub(k), sub(arity - k))
    if op == "join":
        la = rng.choice([k for k in (1, 2, 3) if 1 <= arity + 2 - k <= 3])
        return AJoin(sub(la, j=joins - 1), sub(arity + 2 - la, j=joins - 1))
    if op == "domres":
        return ADomRes(sub(1), sub(arity))
    return ARanRes(sub(arity), sub(1))
