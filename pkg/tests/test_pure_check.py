import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

import gen
from qcl.unify import Unifier
from qcl.errors import FormationError
from qcl.pure_check import check_onb, check_onb_ext, orthogonal, typecheck_term, typecheck_unitary
from qcl.pure_core import (
    KET0, KET1, QBIT, Adjoint, Apply, Clauses, Compose, Ctrl, InjL, InjR, LinComb, Pair, QNat,
    Star, Succ, Sum, Tensor, UTensor, Unit, Var, Zero, ket, match_basis, qnat_literal,
)

S2 = 1 / math.sqrt(2)
PLUS = LinComb(((S2, KET0), (S2, KET1)))
MINUS = LinComb(((S2, KET0), (-S2, KET1)))
BELL = LinComb(((S2, ket("00")), (S2, ket("11"))))


def test_orthogonal_examples():
    assert orthogonal(InjL(Var("x")), InjR(Var("y")))
    assert not orthogonal(Var("x"), Var("y"))
    assert orthogonal(PLUS, MINUS)


def test_orthogonal_is_symmetric_on_samples():
    terms = [KET0, KET1, PLUS, MINUS, Var("x"), InjL(Var("x")), Zero(), Succ(Var("n"))]
    for a, b in itertools.product(terms, repeat=2):
        assert orthogonal(a, b) == orthogonal(b, a)


def test_orthogonality_is_syntactic():
    # semantically orthogonal, but no rule relates a unitary application to a basis value
    assert not orthogonal(Apply(gen.X, KET0), KET0)


def test_onb_examples():
    assert check_onb(QBIT, {KET0, KET1})
    assert check_onb(QNat(), {Zero(), Succ(Zero()), Succ(Succ(Var("x")))})
    assert not check_onb(QBIT, {KET0})


def test_onb_ext_examples():
    assert check_onb_ext(QBIT, {PLUS, MINUS})
    had_qnat_bodies = {
        LinComb(((S2, Zero()), (S2, Succ(Zero())))),
        LinComb(((S2, Zero()), (-S2, Succ(Zero())))),
        qnat_literal(2, Var("x")),
    }
    assert check_onb_ext(QNat(), had_qnat_bodies)
    assert not check_onb_ext(QBIT, {KET0, PLUS})


def test_onb_tensor_both_majors():
    # {|0> (x) x, |1> (x) |0>, |1> (x) |1>} needs the left-major split
    assert check_onb(Tensor(QBIT, QBIT), {Pair(KET0, Var("x")), ket("10"), ket("11")})
    assert check_onb(Tensor(QBIT, QBIT), {Pair(Var("x"), KET0), ket("01"), ket("11")})
    assert not check_onb(Tensor(QBIT, QBIT), {Pair(KET0, Var("x")), ket("10")})


def test_typecheck_term_examples():
    assert typecheck_term([], BELL) == Tensor(QBIT, QBIT)
    assert typecheck_term([("x", QNat())], Var("x")) == QNat()
    with pytest.raises(FormationError) as e:
        typecheck_term([], LinComb(((S2, KET0), (S2, KET0))))
    assert e.value.code == "non-orthogonal"


@pytest.mark.parametrize(
    "ctx,term,code",
    [
        ([], LinComb(((0.5, KET0), (0.5, KET1))), "non-normalized"),
        ([], Var("x"), "unbound-variable"),
        ([("x", QBIT)], Pair(Var("x"), Var("x")), "linearity"),
        ([("x", QBIT)], KET0, "linearity"),
        ([], Apply(gen.CNOT, KET0), "type-mismatch"),
        ([("x", QBIT), ("x", QBIT)], Var("x"), "duplicate-variable"),
    ],
)
def test_typecheck_term_errors(ctx, term, code):
    with pytest.raises(FormationError) as e:
        typecheck_term(ctx, term)
    assert e.value.code == code


def test_typecheck_unitary_examples():
    assert typecheck_unitary(gen.HAD).domain == QBIT
    ut = typecheck_unitary(gen.CNOT)
    assert (ut.domain, ut.codomain) == (Tensor(QBIT, QBIT), Tensor(QBIT, QBIT))
    three = Tensor(QBIT, Tensor(QBIT, QBIT))
    ut = typecheck_unitary(Ctrl(gen.CNOT))
    assert (ut.domain, ut.codomain) == (three, three)
    ut = typecheck_unitary(Compose(Adjoint(gen.CNOT), UTensor(gen.X, gen.Z)))
    assert (ut.domain, ut.codomain) == (Tensor(QBIT, QBIT), Tensor(QBIT, QBIT))


@pytest.mark.parametrize(
    "u,code",
    [
        (Clauses(((KET0, KET0),)), "non-onb-patterns"),
        (Clauses(((KET0, KET0), (KET0, KET1))), "non-onb-patterns"),
        (Clauses(((KET0, KET0), (KET1, KET0))), "non-onb-bodies"),
        (Clauses(((KET0, PLUS), (KET1, KET0))), "non-onb-bodies"),
        (Clauses(((InjL(Var("x")), InjL(Var("y"))), (InjR(Var("y")), InjR(Var("y"))))),
         "clause-context-mismatch"),
        (Clauses(((KET0, Apply(gen.X, KET0)), (KET1, KET1))), "malformed-body"),
        (Compose(gen.HAD, gen.CNOT), "composition-mismatch"),
        (Ctrl(Clauses(((InjL(Var("x")), Pair(Var("x"), Star())), (InjR(Star()), InjR(Star()))))),
         "type-mismatch"),
    ],
)
def test_typecheck_unitary_errors(u, code):
    with pytest.raises(FormationError) as e:
        typecheck_unitary(u)
    assert e.value.code == code


SMALL = [QBIT, Tensor(QBIT, QBIT), Sum(QBIT, Unit()), QNat()]


def small_basis_values(q, depth=3):
    """Closed basis values of ``q``; qnat up to ``depth``."""
    if isinstance(q, QNat):
        return [qnat_literal(n) for n in range(depth + 1)]
    return gen.closed_basis(q)


@pytest.mark.parametrize("q", SMALL, ids=str)
def test_orthogonality_trichotomy(q):
    vals = small_basis_values(q)
    for b1, b2, b3 in itertools.product(vals, repeat=3):
        if orthogonal(b1, b2) and not orthogonal(b2, b3):
            assert orthogonal(b1, b3)


ONB_SETS = [
    (QBIT, [KET0, KET1]),
    (QBIT, [Var("x")]),
    (QNat(), [Zero(), Succ(Var("n"))]),
    (QNat(), [Zero(), Succ(Zero()), Succ(Succ(Var("x")))]),
    (Tensor(QBIT, QBIT), [Pair(KET0, Var("x")), ket("10"), ket("11")]),
    (Tensor(QBIT, QNat()), [Pair(KET0, Var("n")), Pair(KET1, Zero()), Pair(KET1, Succ(Var("m")))]),
    (Sum(QBIT, Unit()), [InjL(Var("b")), InjR(Star())]),
]


@pytest.mark.parametrize("q,s", ONB_SETS, ids=lambda v: str(v)[:30])
def test_onb_pairwise_orthogonal_and_exhaustive(q, s):
    assert check_onb(q, s)
    for a, b in itertools.combinations(s, 2):
        assert orthogonal(a, b)
    # every closed value of depth <= 4 matches exactly one pattern, once
    for v in small_basis_values(q, depth=4):
        hits = [p for p in s if match_basis(p, v) is not None]
        assert len(hits) == 1, (v, hits)


@pytest.mark.parametrize("q", SMALL, ids=str)
def test_non_orthogonal_iff_matchable(q):
    pats = [p for _, s in ONB_SETS if _ == q for p in s] + small_basis_values(q)
    for p in pats:
        for v in small_basis_values(q):
            assert (not orthogonal(p, v)) == (match_basis(p, v) is not None)


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_random_clause_unitaries_check(data):
    q = data.draw(gen.finite_types)
    u = data.draw(gen.unitaries(q))
    ut = typecheck_unitary(u)
    un = Unifier()
    assert un.unify(ut.domain, q) and un.unify(ut.codomain, q)
