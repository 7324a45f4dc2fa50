import pytest
from hypothesis import given, settings, strategies as st

import gen
from qcl.errors import MainTypeError, MalformedInput
from qcl.main_core import (
    BIT, App, BOp, Bang, Case, Force, Lam, LetPair, Lift, Lolli, MInl, MInr, MPair, MStar,
    MSucc, MSum, MTensor, MUnit, MVar, MZero, Meas, Nat, PureT, free_vars, nat_literal, ov_basis,
    ov_type, show_type, substitute, typecheck_main,
)
from qcl.pure_core import KET0, QBIT, QNat, Sum, Tensor, Unit, Var, ket, qnat_literal
from qcl.syntax import parse_main_term
from qcl.unify import Unifier


def decl_type(program, file, name):
    return show_type(typecheck_main([], program(file).lookup(name).value))


def test_corpus_types(program):
    assert decl_type(program, "bell.qcl", "Bell_S") == "B(qbit (x) qbit)"
    assert decl_type(program, "tele.qcl", "tele") == "qbit -o qbit"
    assert decl_type(program, "tele.qcl", "Bell_M") == "qbit -o qbit -o bit (x) bit"
    assert decl_type(program, "toffoli.qcl", "undo") == "B(qbit (x) qbit (x) qbit) -o B(qbit (x) qbit)"


def test_ov_type():
    assert ov_type(QBIT) == BIT
    assert ov_type(Tensor(QNat(), Unit())) == MTensor(Nat(), MUnit())
    assert ov_type(Sum(Unit(), Tensor(QBIT, QBIT))) == MSum(MUnit(), MTensor(BIT, BIT))


def test_ov_basis():
    assert ov_basis(ket("10")) == MPair(MInr(MStar()), MInl(MStar()))
    assert ov_basis(qnat_literal(2)) == nat_literal(2)
    with pytest.raises(MalformedInput):
        ov_basis(Var("x"))


def test_meas_types_through_ov():
    assert typecheck_main([], Meas(PureT(ket("01")))) == MTensor(BIT, BIT)
    assert typecheck_main([], Meas(PureT(qnat_literal(3)))) == Nat()


@pytest.mark.parametrize(
    "ctx, term, code",
    [
        ([], MVar("y"), "unbound-variable"),
        ([("x", BOp(QBIT))], MPair(MVar("x"), MVar("x")), "linearity"),
        ([("x", BOp(QBIT))], MStar(), "linearity"),
        ([("x", BOp(QBIT))], Lift(MVar("x")), "lift-linear"),
        ([], Force(MStar()), "modality-mismatch"),
        ([], Meas(MStar()), "modality-mismatch"),
        ([], MSucc(MStar()), "type-mismatch"),
        ([("x", BIT), ("x", BIT)], MStar(), "duplicate-variable"),
        (
            [("b", BIT), ("q", BOp(QBIT))],
            Case(MVar("b"), "l", MVar("q"), "r", PureT(KET0)),
            "linearity",
        ),
    ],
)
def test_error_codes(ctx, term, code):
    with pytest.raises(MainTypeError) as e:
        typecheck_main(ctx, term)
    assert e.value.code == code


def test_unit_and_bang_variables_may_be_discarded():
    assert typecheck_main([("u", MUnit())], MStar()) == MUnit()
    assert typecheck_main([("f", Bang(Nat()))], MPair(Force(MVar("f")), Force(MVar("f")))) == MTensor(Nat(), Nat())


def test_lambda_and_application():
    ident = Lam("x", MVar("x"))
    assert typecheck_main([], App(ident, MZero())) == Nat()
    t = typecheck_main([], Lift(Lam("x", MPair(MVar("x"), MStar()), ann=BIT)))
    assert t == Bang(Lolli(BIT, MTensor(BIT, MUnit())))


def test_parsed_terms_typecheck():
    assert show_type(typecheck_main([], parse_main_term("meas(pure(ket0))"))) == "bit"
    m = parse_main_term(r"\p. let a (x) b = p in b (x) a")
    assert isinstance(typecheck_main([], m), Lolli)


def test_free_vars_and_capture_avoidance():
    m = Lam("y", MPair(MVar("x"), MVar("y")))
    assert set(free_vars(m)) == {"x"}
    out = substitute(m, {"x": MVar("y")})
    assert set(free_vars(out)) == {"y"}
    assert isinstance(out, Lam) and out.name != "y"


# ---------------------------------------------------------------- substitution lemma


@st.composite
def first_order_values(draw):
    """A closed first-order value with its type."""
    q = draw(gen.types(max_dim=16))
    b = draw(gen.basis_values(q))
    return ov_basis(b), ov_type(q)


@st.composite
def contexts_using(draw, a):
    """A term using the variable ``x : a`` exactly once."""
    m = MVar("x")
    for _ in range(draw(st.integers(0, 4))):
        kind = draw(st.sampled_from(["inl", "inr", "pairl", "pairr", "swap", "case", "app"]))
        if kind == "inl":
            m = MInl(m)
        elif kind == "inr":
            m = MInr(m)
        elif kind == "pairl":
            m = MPair(m, MZero())
        elif kind == "pairr":
            m = MPair(MStar(), m)
        elif kind == "swap":
            m = LetPair("p", "q", MPair(m, MZero()), MPair(MVar("q"), MVar("p")))
        elif kind == "case":
            m = Case(MInl(m), "l", MVar("l"), "r", MVar("r"))
        else:
            m = App(Lam("z", MPair(MVar("z"), MStar())), m)
    return m


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_substitution_preserves_types(data):
    v, a = data.draw(first_order_values())
    m = data.draw(contexts_using(a))
    before = typecheck_main([("x", a)], m)
    after = typecheck_main([], substitute(m, {"x": v}))
    # a value may be more general than the variable it replaces, never less
    un = Unifier()
    assert un.unify(after, before)
    assert show_type(un.zonk(after)) == show_type(un.zonk(before))
