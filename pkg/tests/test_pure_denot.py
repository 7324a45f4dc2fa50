import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import gen
from qcl.errors import MalformedInput, TruncationError, TruncationWarning
from qcl.pure_check import check_onb, orthogonal
from qcl.pure_core import (
    KET0, KET1, QBIT, Apply, Clauses, Ctrl, InjL, InjR, LinComb, Pair, QNat, Star, Succ, Sum,
    Tensor, Unit, Var, Zero, qnat_literal,
)
from qcl.pure_denot import (
    TruncationConfig, basis_index, basis_values, interp_term, interp_type, interp_unitary,
    is_isometry, is_unitary, permutation_matrix, synth_monoidal_unitary,
)

S2 = 1 / math.sqrt(2)
CFG = TruncationConfig(qnat_dim=gen.D)
H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
CNOT_M = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
SHIFT = Clauses(((InjL(Var("x")), Succ(Var("x"))), (InjR(Star()), Zero())))


def test_interp_type_examples():
    assert interp_type(Unit()) == 1
    assert interp_type(QBIT) == 2
    assert interp_type(Tensor(QBIT, Sum(Unit(), QBIT))) == 6
    assert interp_type(QNat(), TruncationConfig(qnat_dim=5)) == 5


def test_basis_order_matches_indices():
    q = Tensor(Sum(Unit(), QBIT), QNat())
    cfg = TruncationConfig(qnat_dim=3)
    for i, b in enumerate(basis_values(q, cfg)):
        assert basis_index(q, b, cfg) == i


def test_bell_column():
    bell = Apply(gen.CNOT, Pair(Apply(gen.HAD, KET0), KET0))
    np.testing.assert_allclose(interp_term([], bell)[:, 0], [S2, 0, 0, S2], atol=1e-12)


def test_variable_is_identity():
    np.testing.assert_allclose(interp_term([("x", QBIT)], Var("x")), np.eye(2))


def test_qnat_literal_column():
    col = interp_term([], qnat_literal(2), TruncationConfig(qnat_dim=4))[:, 0]
    np.testing.assert_allclose(col, [0, 0, 1, 0])


def test_gate_matrices():
    np.testing.assert_allclose(interp_unitary(gen.HAD), H, atol=1e-12)
    np.testing.assert_allclose(interp_unitary(gen.CNOT), CNOT_M, atol=1e-12)
    tof = interp_unitary(Ctrl(gen.CNOT))
    expected = np.eye(8)
    expected[6:, 6:] = [[0, 1], [1, 0]]
    np.testing.assert_allclose(tof, expected, atol=1e-12)


def test_had_qnat_is_blockwise():
    m = interp_unitary(gen.HAD_QNAT, TruncationConfig(qnat_dim=5))
    expected = np.eye(5, dtype=complex)
    expected[:2, :2] = H
    np.testing.assert_allclose(m, expected, atol=1e-12)


def test_permutation_matrix_swaps_factors():
    p = permutation_matrix([2, 3], [1, 0])
    a, b = np.arange(2) + 1.0, np.arange(3) + 5.0
    np.testing.assert_allclose(p @ np.kron(a, b), np.kron(b, a))


def test_synth_examples():
    u = synth_monoidal_unitary([QBIT, QBIT], target=(1, 0))
    np.testing.assert_allclose(
        interp_unitary(u, domain=Tensor(QBIT, QBIT)), permutation_matrix([2, 2], [1, 0])
    )
    three = [QBIT, Sum(Unit(), Unit()), Tensor(QBIT, QBIT)]
    u = synth_monoidal_unitary(three, target=((2, 0), 1))
    src = Tensor(three[0], Tensor(three[1], three[2]))
    m = interp_unitary(u, domain=src)
    np.testing.assert_allclose(m, permutation_matrix([2, 2, 4], [2, 0, 1]), atol=1e-12)
    # dropping a unit block
    u = synth_monoidal_unitary([Unit(), QBIT], target=1)
    np.testing.assert_allclose(interp_unitary(u, domain=Tensor(Unit(), QBIT)), np.eye(2))


def test_synth_rejects_bad_shapes():
    with pytest.raises(MalformedInput):
        synth_monoidal_unitary([QBIT, QBIT], target=(0, 0))
    with pytest.raises(MalformedInput):
        synth_monoidal_unitary([QBIT, QBIT], target=0)


def test_truncation_overflow_on_terms():
    with pytest.raises(TruncationError) as e:
        interp_term([], qnat_literal(5), TruncationConfig(qnat_dim=4))
    assert e.value.code == "truncation-overflow"


def test_truncation_warning_on_unitaries():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        m = interp_unitary(SHIFT, TruncationConfig(qnat_dim=4))
    assert any(issubclass(w.category, TruncationWarning) for w in caught)
    assert m.shape == (4, 5)
    assert not is_isometry(m)
    # the columns that stay inside the space still shift
    np.testing.assert_allclose(m[:, 4], [1, 0, 0, 0])
    np.testing.assert_allclose(m[:, 0], [0, 1, 0, 0])


def test_strict_truncation_raises():
    with pytest.raises(TruncationError):
        interp_unitary(SHIFT, TruncationConfig(qnat_dim=4, strict=True))


def test_dimension_cap():
    big = Tensor(Tensor(QNat(), QNat()), QNat())
    with pytest.raises(MalformedInput) as e:
        interp_term([], Pair(Pair(Zero(), Zero()), Zero()), TruncationConfig(qnat_dim=8, max_dim=100))
    assert e.value.code == "dimension-cap"
    assert interp_type(big, CFG) == 512


# ---------------------------------------------------------------- properties


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_unitaries_denote_unitary_matrices(data):
    q = data.draw(gen.types())
    m = interp_unitary(data.draw(gen.unitaries(q)), CFG, domain=q)
    assert is_unitary(m)


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_open_terms_denote_isometries(data):
    q = data.draw(gen.types(max_dim=16))
    ctx, t, ty = data.draw(gen.open_terms(q))
    assert is_isometry(interp_term(ctx, t, CFG, expected=ty))


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_application_is_composition(data):
    q = data.draw(gen.types())
    u = data.draw(gen.unitaries(q))
    t = data.draw(gen.closed_terms(q))
    lhs = interp_term([], Apply(u, t), CFG, expected=q)
    rhs = interp_unitary(u, CFG, domain=q) @ interp_term([], t, CFG, expected=q)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@st.composite
def orthogonal_pairs(draw):
    """Two open terms over the same context that the syntactic rules call orthogonal."""
    q = draw(gen.types(max_dim=8))
    ctx, t, ty = draw(gen.open_terms(q, depth=1))
    kind = draw(st.sampled_from(["inj", "pair", "apply"]))
    if kind == "inj":
        return ctx, InjL(t), InjR(t), Sum(ty, ty)
    if kind == "pair":
        other = draw(gen.finite_types)
        b1, b2 = draw(st.lists(st.sampled_from(gen.full_basis(other)), min_size=2, max_size=2, unique=True))
        return ctx, Pair(t, b1), Pair(t, b2), Tensor(ty, other)
    u = draw(gen.unitaries(Sum(ty, ty), 1))
    return ctx, Apply(u, InjL(t)), Apply(u, InjR(t)), Sum(ty, ty)


@settings(max_examples=150, deadline=None)
@given(orthogonal_pairs())
def test_orthogonal_terms_have_orthogonal_images(case):
    ctx, t1, t2, ty = case
    assert orthogonal(t1, t2)
    m1 = interp_term(ctx, t1, CFG, expected=ty)
    m2 = interp_term(ctx, t2, CFG, expected=ty)
    assert np.abs(m1.conj().T @ m2).max() <= 1e-9


@st.composite
def onb_patterns(draw, q, names):
    """An orthonormal basis of ``q`` made of patterns, each variable used once."""
    if isinstance(q, (Sum, Tensor)) and draw(st.booleans()):
        if isinstance(q, Sum):
            return [InjL(p) for p in draw(onb_patterns(q.left, names))] + [
                InjR(p) for p in draw(onb_patterns(q.right, names))
            ]
        lefts = draw(onb_patterns(q.left, names))
        out = []
        for lp in lefts:
            # each left pattern gets its own right basis
            for rp in draw(onb_patterns(q.right, names)):
                out.append(Pair(lp, rp))
        return out
    if isinstance(q, Unit) and draw(st.booleans()):
        return [Star()]
    if q == QBIT and draw(st.booleans()):
        return [KET0, KET1]
    names.append(f"v{len(names)}")
    return [Var(names[-1])]


def pattern_ctx(p, q):
    if isinstance(p, Var):
        return [(p.name, q)]
    if isinstance(p, (InjL, InjR)):
        return pattern_ctx(p.term, q.left if isinstance(p, InjL) else q.right)
    if isinstance(p, Pair):
        return pattern_ctx(p.left, q.left) + pattern_ctx(p.right, q.right)
    if isinstance(p, LinComb):
        return pattern_ctx(p.entries[0][1], q)
    return []


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_pattern_bases_resolve_the_identity(data):
    q = data.draw(gen.types(max_dim=24))
    pats = data.draw(onb_patterns(q, []))
    assert check_onb(q, set(pats))
    total = np.zeros((interp_type(q, CFG),) * 2, dtype=complex)
    for p in pats:
        m = interp_term(pattern_ctx(p, q), p, CFG, expected=q)
        total += m @ m.conj().T
    np.testing.assert_allclose(total, np.eye(total.shape[0]), atol=1e-9)
