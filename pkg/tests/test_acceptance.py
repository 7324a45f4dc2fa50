"""Acceptance criteria 1-11, one or more tests per criterion.

The terminal summary prints one PASS/FAIL line per criterion; running this
file directly does the same.
"""
import math
import sys
import time
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

import gen
from conftest import CORPUS, load_program
from qcl.config_eval import initial_config, run, wf_config
from qcl.errors import TruncationWarning
from qcl.main_core import App, MVar, PureT, typecheck_main
from qcl.mixed_denot import b_functor, check_adequacy, check_soundness
from qcl.pure_core import KET0, KET1, LinComb, ket
from qcl.pure_denot import (
    TruncationConfig, basis_index, basis_values, interp_term, interp_type, interp_unitary,
    is_unitary,
)
from qcl.pure_eval import equal_terms, normalize
from qcl.syntax import parse_pure_term

CFG8 = TruncationConfig(qnat_dim=8)
HYP = dict(deadline=None, derandomize=True, suppress_health_check=list(HealthCheck))


def corpus_runs():
    return [(name, i, d.value) for name in CORPUS for i, d in enumerate(load_program(name).runs())]


def leaf_vector(c, wires):
    """State of a leaf restricted to ``wires`` (must carry all of the amplitude's support)."""
    dims = [interp_type(q) for q in c.wires]
    full = np.zeros(dims, dtype=complex)
    for key, a in c.amps:
        full[tuple(basis_index(q, b) for q, b in zip(c.wires, key))] = a
    return full


def block_density(c, name):
    """Reduced density matrix of the block linked to ``name``."""
    shape = dict(c.linking)[name]
    leaves = []

    def flat(s):
        if isinstance(s, int):
            leaves.append(s)
        else:
            flat(s[0])
            flat(s[1])

    flat(shape)
    full = leaf_vector(c, c.wires)
    rest = [i for i in range(full.ndim) if i not in leaves]
    psi = np.transpose(full, leaves + rest).reshape(math.prod(full.shape[i] for i in leaves), -1)
    return psi @ psi.conj().T


# ---------------------------------------------------------------- 1


def test_criterion_01_bell_normalization(program):
    # Bell pair coefficients quoted in the Bell-state example
    start = time.perf_counter()
    prog = program("bell.qcl")
    nv = normalize(parse_pure_term("CNOT((Had ket0) (x) ket0)", prog))
    elapsed = time.perf_counter() - start
    got = nv.as_dict()
    assert set(got) == {ket("00"), ket("11")}
    for b in (ket("00"), ket("11")):
        assert abs(got[b] - 1 / math.sqrt(2)) <= 1e-9
    assert elapsed < 1


# ---------------------------------------------------------------- 2


def test_criterion_02_measurement_distribution(program):
    start = time.perf_counter()
    (decl,) = program("meas_third.qcl").runs()
    dist = run(initial_config(decl.value))
    elapsed = time.perf_counter() - start
    assert len(dist) == 2
    by_bit = {}
    for p, c in dist.branches:
        x, bit = c.term.left, c.term.right
        by_bit[type(bit).__name__] = (p, c, x.name)
    # probabilities and residual states from the measurement example
    p0, c0, x0 = by_bit["MInl"]
    p1, c1, x1 = by_bit["MInr"]
    assert abs(p0 - 2 / 3) <= 1e-9 and abs(p1 - 1 / 3) <= 1e-9
    s = 1 / math.sqrt(2)
    rho0 = block_density(c0, x0)
    want0 = np.array([s, s, 0, 0])
    assert np.abs(rho0 - np.outer(want0, want0)).max() <= 1e-9
    rho1 = block_density(c1, x1)
    want1 = np.array([0, 1, 0, 0])
    assert np.abs(rho1 - np.outer(want1, want1)).max() <= 1e-9
    assert elapsed < 1


# ---------------------------------------------------------------- 3


def test_criterion_03_walk_one_step(program):
    start = time.perf_counter()
    (decl,) = program("walk1.qcl").runs()
    dist = run(initial_config(decl.value))
    elapsed = time.perf_counter() - start
    # leaves x1 (x) succ zero and x1 (x) nine, half each, coin |0> and |1>
    from qcl.main_core import nat_literal

    leaves = {c.term.right: (p, c) for p, c in dist.branches}
    assert set(leaves) == {nat_literal(1), nat_literal(9)}
    for pos, coin in ((1, [1, 0]), (9, [0, 1])):
        p, c = leaves[nat_literal(pos)]
        assert abs(p - 0.5) <= 1e-9
        assert isinstance(c.term.left, MVar)
        rho = block_density(c, c.term.left.name)
        assert np.abs(rho - np.outer(coin, coin)).max() <= 1e-9
    assert elapsed < 1


# ---------------------------------------------------------------- 4

H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
XM = np.array([[0, 1], [1, 0]])
ZM = np.diag([1, -1])


def teleport_oracle(psi):
    """Branches ``(probability, corrected output state)`` of the textbook protocol.

    Qubit order is (input, Alice's half, Bob's half).
    """
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    state = np.kron(psi, bell)
    cnot01 = np.kron(np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]), np.eye(2))
    state = np.kron(H, np.eye(4)) @ (cnot01 @ state)
    state = state.reshape(2, 2, 2)
    out = []
    for m1 in (0, 1):
        for m2 in (0, 1):
            bob = state[m1, m2, :]
            p = float(np.vdot(bob, bob).real)
            bob = bob / math.sqrt(p)
            fix = np.linalg.matrix_power(ZM, m1) @ np.linalg.matrix_power(XM, m2)
            out.append((p, fix @ bob))
    return out


def test_criterion_04_teleportation(program):
    start = time.perf_counter()
    tele = program("tele.qcl").named("def")["tele"]
    rng = np.random.default_rng(20240611)
    for _ in range(20):
        psi = gen.unit_vector(2, rng)
        target = np.outer(psi, psi.conj())
        oracle = teleport_oracle(psi)
        oracle_rho = sum(p * np.outer(v, v.conj()) for p, v in oracle)
        term = App(tele, PureT(LinComb(((psi[0], KET0), (psi[1], KET1)))))
        dist = run(initial_config(term), merge=False)
        assert sorted(round(p, 9) for p, _ in dist.branches) == sorted(round(p, 9) for p, _ in oracle)
        rho = np.zeros((2, 2), dtype=complex)
        for p, c in dist.branches:
            assert isinstance(c.term, MVar)
            rho += p * block_density(c, c.term.name)
        assert np.abs(rho - oracle_rho).max() <= 1e-6
        assert np.abs(rho - target).max() <= 1e-6
    assert time.perf_counter() - start < 10


# ---------------------------------------------------------------- 5


def test_criterion_05_term_isometries():
    count = [0]

    @settings(max_examples=500, **HYP)
    @given(st.data())
    def check(data):
        q = data.draw(gen.types())
        if data.draw(st.booleans()):
            t = data.draw(gen.closed_terms(q))
            m = interp_term([], t, CFG8, expected=q)
            assert m.shape == (gen.dim(q), 1)
        else:
            ctx, t, ty = data.draw(gen.open_terms(q))
            m = interp_term(ctx, t, CFG8, expected=ty)
            assert m.shape == (gen.dim(ty), gen.dim(q))
        assert max(m.shape) <= 64
        assert np.abs(m.conj().T @ m - np.eye(m.shape[1])).max() <= 1e-8
        count[0] += 1

    start = time.perf_counter()
    check()
    assert count[0] >= 500
    assert time.perf_counter() - start < 60


def test_criterion_05_unitaries():
    count = [0]

    @settings(max_examples=200, **HYP)
    @given(st.data())
    def check(data):
        q = data.draw(gen.types())
        u = data.draw(gen.unitaries(q))
        with warnings.catch_warnings():
            warnings.simplefilter("error", TruncationWarning)
            m = interp_unitary(u, CFG8, domain=q)
        assert is_unitary(m, 1e-8)
        count[0] += 1

    start = time.perf_counter()
    check()
    assert count[0] >= 200
    assert time.perf_counter() - start < 60


# ---------------------------------------------------------------- 6


def expanded(t, q):
    """``t`` rewritten as an explicit combination, computed from its matrix."""
    vec = interp_term([], t, CFG8, expected=q)[:, 0]
    basis = basis_values(q, CFG8)
    entries = tuple((complex(a), b) for a, b in zip(vec, basis) if abs(a) > 1e-12)
    return LinComb(entries)


@st.composite
def term_pairs(draw):
    q = draw(gen.types(max_dim=16))
    t1 = draw(gen.closed_terms(q))
    kind = draw(st.sampled_from(["roundtrip", "expanded", "phase", "other", "other"]))
    if kind == "roundtrip":
        from qcl.pure_core import Adjoint, Apply, Compose

        u = draw(gen.unitaries(q, 1))
        t2 = Apply(Compose(Adjoint(u), u), t1)
    elif kind == "expanded":
        t2 = expanded(t1, q)
    elif kind == "phase":
        theta = draw(st.floats(0.01, 2 * math.pi - 0.01))
        t2 = LinComb(((complex(math.cos(theta), math.sin(theta)), t1),))
    else:
        t2 = draw(gen.closed_terms(q))
    return q, t1, t2


def test_criterion_06_completeness():
    seen = {True: 0, False: 0}

    @settings(max_examples=200, **HYP)
    @given(term_pairs())
    def check(pair):
        q, t1, t2 = pair
        m1 = interp_term([], t1, CFG8, expected=q)
        m2 = interp_term([], t2, CFG8, expected=q)
        close = bool(np.linalg.norm(m1 - m2) <= 1e-8)
        assert equal_terms(t1, t2) == close
        seen[close] += 1

    start = time.perf_counter()
    check()
    assert seen[True] >= 20 and seen[False] >= 20, seen
    assert time.perf_counter() - start < 60


# ---------------------------------------------------------------- 7


@pytest.mark.parametrize("name,index,term", corpus_runs(), ids=lambda v: str(v)[:20])
def test_criterion_07_progress_and_conservation(name, index, term):
    visited = [0]

    def on_step(cur, branches):
        assert branches, "non-value configuration is stuck"
        assert abs(sum(p for p, _ in branches) - 1) <= 1e-9
        visited[0] += 1

    dist = run(initial_config(term), merge=False, on_step=on_step)
    assert visited[0] == dist.steps > 0
    assert abs(dist.total() - 1) <= 1e-9
    assert all(c.is_value() for _, c in dist.branches)


# ---------------------------------------------------------------- 8


@pytest.mark.parametrize("name,index,term", corpus_runs(), ids=lambda v: str(v)[:20])
def test_criterion_08_subject_reduction(name, index, term):
    c = initial_config(term)
    ty = typecheck_main([], term)
    violations = []

    def on_step(cur, branches):
        for _, nxt in branches:
            if not wf_config(nxt, expected=ty):
                violations.append(nxt)

    run(c, debug=True, merge=False, on_step=on_step)
    assert violations == []


# ---------------------------------------------------------------- 9


@pytest.mark.parametrize("name,index,term", corpus_runs(), ids=lambda v: str(v)[:20])
def test_criterion_09_termination(name, index, term):
    dist = run(initial_config(term), max_steps=10**6)
    assert dist.steps < 10**6


# ---------------------------------------------------------------- 10


def test_criterion_10_strict_monoidality():
    rng = np.random.default_rng(7)
    shapes = [(m, n) for m in range(1, 9) for n in range(1, m + 1)]
    done = 0
    while done < 100:
        (m1, n1), (m2, n2) = (shapes[i] for i in rng.integers(len(shapes), size=2))
        if m1 * m2 > 8:
            continue
        f, g = gen.random_isometry(m1, n1, rng), gen.random_isometry(m2, n2, rng)
        lhs = b_functor(np.kron(f, g))
        rhs = b_functor(f).tensor(b_functor(g))
        assert lhs.source == rhs.source and lhs.target == rhs.target
        assert np.abs(lhs.matrix - rhs.matrix).max() <= 1e-9
        done += 1


# ---------------------------------------------------------------- 11

FIRST_ORDER = [r for r in corpus_runs()]


def test_criterion_11_soundness_and_adequacy():
    start = time.perf_counter()
    required = {"bell.qcl", "meas_third.qcl", "walk1.qcl", "walk2.qcl", "walk3.qcl", "bell_m.qcl"}
    checked = set()
    for name, index, term in FIRST_ORDER:
        c = initial_config(term)
        ok, worst = check_soundness(c)
        assert ok, (name, index, worst)
        report = check_adequacy(c)
        assert report.ok, (name, index, report.deviation)
        checked.add(name)
    assert required <= checked
    assert time.perf_counter() - start < 120


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
