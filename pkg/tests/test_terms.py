"""Frozen shapes and renderings for the term layer."""

import pytest

from alloy2fa.terms import (
    AConv, AIden, AJoin, ANone, AProd, ARel, ASig, AStar, AUnion, AUniv,
    AVar, ADiff, ADomRes, ARanRes, AInter,
    ArityError, Comp, Compl, Conv, FAll, FAnd, FEq, FIn, FNot, FOr,
    FPredCall, FSome, FactEq, FactLe, Fork, Join, Ldiv, Meet, NComp,
    Phi, Prod, Rdiv, Rel, Rot, Star,
    BOT, ID, PI1, PI2, TOP,
    RAll, RAnd, RApp, REx, RImp, RNot, ROr, RTrue, RFalse,
    arity_of, a_children, canonicalize, cut, fa_op_count, fa_rels,
    fa_text, fact_map, fact_text, form_children, is_core, ncomp,
    projX, rl_text, rl_map_apps, rotate, unbind, unfold, uses_item,
)


class TestSelectors:
    def test_unit_and_base_cases(self):
        assert projX(1, 1) == ID
        assert projX(2, 1) == PI1
        assert projX(2, 2) == PI2

    def test_middle_selector_composes(self):
        assert projX(3, 2) == Comp(PI1, PI2)
        assert projX(3, 3) == Comp(PI2, PI2)
        assert projX(4, 3) == Comp(Comp(PI1, PI2), PI2)

    def test_bounds_are_checked(self):
        with pytest.raises(ArityError):
            projX(2, 3)
        with pytest.raises(ArityError):
            projX(3, 0)


class TestRotate:
    def test_binary_is_converse_with_collapse(self):
        r = Rel("r")
        assert rotate(r, 2) == Conv(r)
        assert rotate(Conv(r), 2) == r

    def test_wider_arities_defer(self):
        t = Rel("t", 3)
        assert rotate(t, 3) == Rot(t, 3)
        assert fa_text(rotate(t, 3)) == "rot3(t)"

    def test_rejects_unary(self):
        with pytest.raises(ArityError):
            rotate(Rel("r"), 1)


class TestNComp:
    def test_identity_absorbs(self):
        t = Rel("t", 3)
        assert ncomp(t, ID, 3) is t

    def test_binary_is_plain_composition(self):
        assert ncomp(Rel("r"), Rel("s"), 2) == Comp(Rel("r"), Rel("s"))

    def test_wider_defer_and_render(self):
        e = ncomp(Rel("t", 3), Rel("s"), 3)
        assert e == NComp(Rel("t", 3), Rel("s"), 3)
        assert fa_text(e) == "(t .3 s)"

    def test_rejects_unary(self):
        with pytest.raises(ArityError):
            ncomp(Rel("r"), Rel("s"), 1)


class TestCut:
    def test_base_is_a_fork(self):
        assert cut(2) == Fork(ID, TOP)

    def test_wider_prefix_with_identity(self):
        assert cut(3) == Prod(ID, Fork(ID, TOP))
        assert fa_text(cut(3)) == "(id x (id nabla TOP))"

    def test_rejects_width_one(self):
        with pytest.raises(ArityError):
            cut(1)


class TestUnfold:
    def test_rotation_of_a_ternary(self):
        got = unfold(rotate(Rel("t", 3), 3))
        assert fa_text(got) == "(pi2 . (t nabla pi1)~)"

    def test_rotation_of_a_quaternary(self):
        got = unfold(rotate(Rel("q", 4), 4))
        assert fa_text(got) == \
            "((pi2 . pi2) . (q nabla (pi1 nabla (pi1 . pi2)))~)"

    def test_nary_composition(self):
        got = unfold(ncomp(Rel("t", 3), Rel("s"), 3))
        assert fa_text(got) == "(t . (id x s))"
        got4 = unfold(ncomp(Rel("q", 4), Rel("s"), 4))
        assert fa_text(got4) == "(q . (id x (id x s)))"

    def test_recurses_into_subterms(self):
        inner = Meet(rotate(Rel("t", 3), 3), TOP)
        assert fa_text(unfold(inner)) == "((pi2 . (t nabla pi1)~) & TOP)"

    def test_identity_on_base_vocabulary(self):
        e = Meet(Comp(Rel("r"), Conv(Rel("s"))), Star(Rel("r")))
        assert unfold(e) is e


class TestCanonicalize:
    def test_sorts_and_renests_right(self):
        e = Join(Join(Rel("c"), Rel("a")), Rel("b"))
        assert fa_text(canonicalize(e)) == "(a + (b + c))"

    def test_meet_spines_too(self):
        e = Meet(Meet(Rel("b"), Phi("A")), Rel("a"))
        assert fa_text(canonicalize(e)) == "(Phi_A & (a & b))"

    def test_duplicates_survive(self):
        e = Join(Rel("a"), Rel("a"))
        assert canonicalize(e) == e

    def test_recurses_under_other_operators(self):
        e = Conv(Join(Rel("b"), Rel("a")))
        assert fa_text(canonicalize(e)) == "(a + b)~"

    def test_facts_canonicalize_both_sides(self):
        f = FactLe(Join(Rel("b"), Rel("a")), Meet(Rel("d"), Rel("c")))
        assert fact_text(canonicalize(f)) == "(a + b) in (c & d)"


class TestRendering:
    def test_leaves(self):
        assert fa_text(TOP) == "TOP" and fa_text(BOT) == "BOT"
        assert fa_text(ID) == "id"
        assert fa_text(Phi("Course")) == "Phi_Course"

    def test_tight_unary_operators(self):
        assert fa_text(Compl(Rel("r"))) == "-r"
        assert fa_text(Conv(Comp(Rel("r"), Rel("s")))) == "(r . s)~"
        assert fa_text(Star(Rel("r"))) == "r*"
        assert fa_text(Compl(Conv(Rel("r")))) == "-(r~)"

    def test_infix_forms(self):
        e = Ldiv(Rel("r"), Rdiv(Rel("s"), Rel("t", 3)))
        assert fa_text(e) == "(r \\ (s / t))"
        assert fa_text(Fork(PI1, Prod(ID, TOP))) == "(pi1 nabla (id x TOP))"

    def test_fact_text(self):
        assert fact_text(FactLe(ID, Comp(Rel("r"), Conv(Rel("s"))))) == \
            "id in (r . s~)"
        assert fact_text(FactEq(Phi("A"), Meet(Phi("A"), ID))) == \
            "Phi_A = (Phi_A & id)"

    def test_rl_text(self):
        f = RAll(2, None,
                 RImp(RApp((1,), Phi("A"), (1,)),
                      REx(1, None, RApp((1, 2), Rel("t", 3), (3,)))))
        assert rl_text(f) == "<A2 :: 1 Phi_A 1 => <E1 :: (1,2) t 3>>"
        g = RAll(2, None, RApp(("x",), Star(Rel("r")), ("y",)), special=True)
        assert rl_text(g) == "<Axy :: x (r*) y>"
        assert rl_text(RNot(RAnd(RTrue(), RFalse()))) == "!(true && false)"

    def test_compound_relation_sides_get_parens(self):
        f = RApp((1,), Comp(Rel("r"), Rel("s")), (2,))
        assert rl_text(f) == "1 (r . s) 2"


class TestFactBookkeeping:
    def test_labels_and_widths_do_not_affect_equality(self):
        assert FactLe(ID, TOP, label="typing", width=3) == FactLe(ID, TOP)
        assert FactEq(ID, TOP) != FactLe(ID, TOP)

    def test_fact_map_rebuilds_both_sides(self):
        f = FactLe(Rel("r"), Rel("s"), label="keep")
        g = fact_map(f, Conv)
        assert g == FactLe(Conv(Rel("r")), Conv(Rel("s")))
        assert g.label == "keep"

    def test_op_count_ignores_leaves(self):
        assert fa_op_count(Comp(Rel("r"), Conv(Rel("s")))) == 2
        assert fa_op_count(TOP) == 0

    def test_rel_scan(self):
        e = Meet(Comp(Rel("r"), Phi("A")), Star(Rel("r")))
        assert fa_rels(e) == {Rel("r"), Phi("A")}


class TestArities:
    ARITIES = {"r": 2, "t": 3}

    def test_leaves_and_operators(self):
        assert arity_of(ASig("A"), self.ARITIES) == 1
        assert arity_of(AIden(), self.ARITIES) == 2
        assert arity_of(AUniv(), self.ARITIES) == 1
        assert arity_of(ANone(), self.ARITIES) == 1
        assert arity_of(ARel("t"), self.ARITIES) == 3
        assert arity_of(AProd(ARel("r"), ASig("A")), self.ARITIES) == 3
        assert arity_of(AJoin(AVar("u"), ARel("t")), self.ARITIES) == 2
        assert arity_of(AConv(ARel("r")), self.ARITIES) == 2
        assert arity_of(AStar(ARel("r")), self.ARITIES) == 2

    def test_result_is_stamped_on_the_node(self):
        e = AJoin(ARel("r"), ARel("r"))
        arity_of(e, self.ARITIES)
        assert e.arity == 2

    def test_errors(self):
        with pytest.raises(ArityError, match="unknown relation"):
            arity_of(ARel("nope"), self.ARITIES)
        with pytest.raises(ArityError, match="arity mismatch"):
            arity_of(AUnion(ASig("A"), ARel("r")), self.ARITIES)
        with pytest.raises(ArityError):
            arity_of(AJoin(ASig("A"), ASig("B")), self.ARITIES)
        with pytest.raises(ArityError):
            arity_of(AConv(ARel("t")), self.ARITIES)
        with pytest.raises(ArityError):
            arity_of(AStar(ARel("t")), self.ARITIES)
        with pytest.raises(ArityError):
            arity_of(ADomRes(ARel("r"), ARel("r")), self.ARITIES)
        with pytest.raises(ArityError):
            arity_of(ARanRes(ARel("r"), ARel("r")), self.ARITIES)

    def test_restrictions(self):
        assert arity_of(ADomRes(ASig("A"), ARel("t")), self.ARITIES) == 3
        assert arity_of(ARanRes(ARel("t"), ASig("A")), self.ARITIES) == 3
        assert arity_of(ADiff(ARel("r"), AInter(ARel("r"), ARel("r"))),
                        self.ARITIES) == 2


class TestFormShapes:
    def test_core_scanner(self):
        good = FAll("x", ASig("A"),
                    FAnd(FNot(FSome(AVar("x"))),
                         FIn(AVar("x"), ASig("A"))))
        assert is_core(good)
        assert not is_core(FOr(FSome(ASig("A")), FSome(ASig("A"))))
        assert not is_core(FAnd(FSome(ASig("A")), FEq(ASig("A"), ASig("A"))))
        assert not is_core(FPredCall("inv", ()))

    def test_children_walkers(self):
        f = FAnd(FSome(ASig("A")), FNot(FSome(ASig("B"))))
        assert form_children(f) == [f.l, f.r]
        e = AUnion(ASig("A"), ADiff(ASig("B"), ASig("C")))
        assert a_children(e) == [e.l, e.r]


class TestRLHelpers:
    def test_map_apps_rebuilds(self):
        f = RAll(1, RApp((1,), Phi("A"), (1,)),
                 RNot(RApp((1,), Rel("r"), (2,))))

        def swap(a):
            return RApp(a.rhs, a.rel, a.lhs)

        g = rl_map_apps(swap, f)
        assert rl_text(g) == "<A1 : 1 Phi_A 1: !2 r 1>"

    def test_unbind_substitutes_and_renumbers(self):
        f = RAnd(RApp((2,), Rel("r"), (3,)), RApp((1,), Rel("s"), (2,)))
        g = unbind(f, 2, "cx")
        assert rl_text(g) == "cx r 2 && 1 s cx"

    def test_uses_item(self):
        f = REx(1, None, RApp((1, "cx"), Rel("t", 3), (2,)))
        assert uses_item(f, "cx")
        assert uses_item(f, 2)
        assert not uses_item(f, "cy")
        assert not uses_item(f, 3)
