"""Orthogonality, orthonormal-basis predicates and formation checking."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import settings
from .errors import FormationError, MalformedInput
from .pure_core import (
    QBIT, Adjoint, Apply, Clauses, Compose, Ctrl, DirectSum, InjL, InjR,
    LinComb, Meta, Pair, QNat, Star, Succ, Sum, Tensor, UTensor, Unit, Var,
    Zero, free_vars, is_basis, is_expression, pattern_vars,
)
from .unify import Unifier, instantiate


@dataclass(frozen=True)
class UnitaryType:
    domain: object
    codomain: object


# ---------------------------------------------------------------- orthogonality


def orthogonal(t1, t2):
    return _orth(t1, t2)


@lru_cache(maxsize=1 << 16)
def _orth(a, b):
    if isinstance(a, LinComb) and isinstance(b, LinComb) and _orth_sums(a, b):
        return True
    return _orth_dir(a, b) or _orth_dir(b, a)


def _orth_dir(a, b):
    if isinstance(a, InjL) and isinstance(b, InjR):
        return True
    if isinstance(a, Zero) and isinstance(b, Succ):
        return True
    if type(a) is type(b) and isinstance(a, (InjL, InjR, Succ)):
        return _orth(a.term, b.term)
    if isinstance(a, Pair) and isinstance(b, Pair):
        return _orth(a.left, b.left) or _orth(a.right, b.right)
    if isinstance(a, Apply) and isinstance(b, Apply) and a.unitary == b.unitary:
        return _orth(a.term, b.term)
    if isinstance(b, LinComb):
        padded = False
        for alpha, t in b.entries:
            if _orth(a, t):
                continue
            if not padded and t == a and abs(alpha) <= settings.eps():
                padded = True
                continue
            return False
        return True
    return False


def _orth_sums(a, b):
    # align both entry lists on one index family, sharing syntactically equal terms
    family = [t for _, t in a.entries]
    left = {i: alpha for i, (alpha, _) in enumerate(a.entries)}
    right = {}
    for beta, t in b.entries:
        for i, s in enumerate(family):
            if s == t and i in left and i not in right:
                right[i] = beta
                break
        else:
            family.append(t)
            right[len(family) - 1] = beta
    inner = sum(left[i].conjugate() * right[i] for i in left.keys() & right.keys())
    if abs(inner) > settings.eps():
        return False
    return all(
        _orth(family[i], family[j])
        for i in range(len(family))
        for j in range(i + 1, len(family))
    )


# ---------------------------------------------------------------- ONB


def check_onb(q, s):
    return _onb(q, frozenset(s), False)


def check_onb_ext(q, s):
    return _onb(q, frozenset(s), True)


@lru_cache(maxsize=1 << 14)
def _onb(q, s, ext):
    if not s:
        return False
    if len(s) == 1:
        (t,) = s
        if isinstance(t, Var):
            return True
        if isinstance(q, Unit) and isinstance(t, Star):
            return True
    if isinstance(q, Sum) and all(isinstance(t, (InjL, InjR)) for t in s):
        lefts = frozenset(t.term for t in s if isinstance(t, InjL))
        rights = frozenset(t.term for t in s if isinstance(t, InjR))
        if _onb(q.left, lefts, ext) and _onb(q.right, rights, ext):
            return True
    if isinstance(q, QNat) and Zero() in s:
        rest = s - {Zero()}
        if all(isinstance(t, Succ) for t in rest):
            if _onb(q, frozenset(t.term for t in rest), ext):
                return True
    if isinstance(q, Tensor) and all(isinstance(t, Pair) for t in s):
        if _onb_tensor(q, s, ext, major=1) or _onb_tensor(q, s, ext, major=0):
            return True
    if ext:
        return _onb_unitary_mix(q, s)
    return False


def _onb_tensor(q, s, ext, major):
    # major=1 groups by the right component, major=0 by the left one
    def key(t):
        return t.right if major else t.left

    def other(t):
        return t.left if major else t.right

    keys = frozenset(key(t) for t in s)
    key_type, other_type = (q.right, q.left) if major else (q.left, q.right)
    if not _onb(key_type, keys, ext):
        return False
    return all(
        _onb(other_type, frozenset(other(t) for t in s if key(t) == k), ext)
        for k in keys
    )


def _onb_unitary_mix(q, s):
    rows = []
    base = []
    for t in s:
        entries = t.entries if isinstance(t, LinComb) else ((1 + 0j, t),)
        row = {}
        for alpha, b in entries:
            if b not in base:
                base.append(b)
            row[b] = row.get(b, 0) + alpha
        rows.append(row)
    if len(base) != len(rows) or frozenset(base) == s:
        return False
    a = np.array([[row.get(b, 0) for b in base] for row in rows], dtype=complex)
    err = np.abs(a.conj().T @ a - np.eye(len(base))).max()
    if err > settings.eps():
        return False
    return _onb(q, frozenset(base), True)


# ---------------------------------------------------------------- formation


def typecheck_term(ctx, t, unifier=None):
    """Type of ``t`` under the ordered context ``ctx`` (list of (name, type))."""
    names = [n for n, _ in ctx]
    if len(names) != len(set(names)):
        raise FormationError("context declares a variable twice", "duplicate-variable")
    u = unifier or Unifier()
    env = dict(ctx)
    q, used = _infer(t, env, u)
    unused = [n for n in names if n not in used]
    if unused:
        raise FormationError(f"variable {unused[0]} is never used", "linearity")
    return u.zonk(q)


def _infer(t, env, u):
    if isinstance(t, Star):
        return Unit(), set()
    if isinstance(t, Zero):
        return QNat(), set()
    if isinstance(t, Var):
        if t.name not in env:
            raise FormationError(f"unbound variable {t.name}", "unbound-variable")
        return env[t.name], {t.name}
    if isinstance(t, (InjL, InjR)):
        q, used = _infer(t.term, env, u)
        other = u.fresh()
        return (Sum(q, other) if isinstance(t, InjL) else Sum(other, q)), used
    if isinstance(t, Succ):
        q, used = _infer(t.term, env, u)
        if not u.unify(q, QNat()):
            raise FormationError("successor of a non-qnat term", "type-mismatch")
        return QNat(), used
    if isinstance(t, Pair):
        q1, used1 = _infer(t.left, env, u)
        q2, used2 = _infer(t.right, env, u)
        dup = used1 & used2
        if dup:
            raise FormationError(
                f"variable {sorted(dup)[0]} used on both sides of a tensor", "linearity"
            )
        return Tensor(q1, q2), used1 | used2
    if isinstance(t, LinComb):
        return _infer_lincomb(t, env, u)
    if isinstance(t, Apply):
        ut = _instance(t.unitary)
        q, used = _infer(t.term, env, u)
        if not u.unify(ut.domain, q):
            raise FormationError(
                "unitary applied to an argument of the wrong type", "type-mismatch"
            )
        return ut.codomain, used
    raise MalformedInput(f"not a pure term: {t!r}")


def _infer_lincomb(t, env, u):
    if not t.entries:
        raise FormationError("empty linear combination", "non-normalized")
    q = u.fresh()
    used = None
    for _, s in t.entries:
        qs, us = _infer(s, env, u)
        if not u.unify(q, qs):
            raise FormationError("summands have different types", "type-mismatch")
        if used is not None and us != used:
            raise FormationError(
                "summands of a combination must use the same variables", "linearity"
            )
        used = us
    norm = sum(abs(a) ** 2 for a, _ in t.entries)
    if abs(norm - 1) > settings.eps():
        raise FormationError(
            f"combination has squared norm {norm:.12g}, expected 1", "non-normalized"
        )
    terms = [s for _, s in t.entries]
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            if not orthogonal(terms[i], terms[j]):
                raise FormationError(
                    "summands of a combination are not orthogonal", "non-orthogonal"
                )
    return q, used


def typecheck_unitary(u):
    dom, cod = _scheme(u)
    return UnitaryType(dom, cod)


def _instance(u):
    dom, cod = _scheme(u)
    mapping = {}
    return UnitaryType(instantiate(dom, mapping), instantiate(cod, mapping))


@lru_cache(maxsize=4096)
def _scheme(u):
    un = Unifier()
    dom, cod = _check_unitary(u, un)
    return un.zonk(dom), un.zonk(cod)


def _check_unitary(u, un):
    if isinstance(u, Clauses):
        return _check_clauses(u, un)
    if isinstance(u, (UTensor, DirectSum)):
        a = _instance(u.left)
        b = _instance(u.right)
        make = Tensor if isinstance(u, UTensor) else Sum
        return make(a.domain, b.domain), make(a.codomain, b.codomain)
    if isinstance(u, Compose):
        first = _instance(u.first)
        second = _instance(u.second)
        if not un.unify(first.codomain, second.domain):
            raise FormationError(
                "composed unitaries do not agree on the middle type",
                "composition-mismatch",
            )
        return first.domain, second.codomain
    if isinstance(u, Adjoint):
        inner = _instance(u.unitary)
        return inner.codomain, inner.domain
    if isinstance(u, Ctrl):
        inner = _instance(u.unitary)
        if not un.unify(inner.domain, inner.codomain):
            raise FormationError("ctrl needs a unitary from a type to itself", "type-mismatch")
        return Tensor(QBIT, inner.domain), Tensor(QBIT, inner.domain)
    raise MalformedInput(f"not a unitary: {u!r}")


def _check_clauses(u, un):
    if not u.clauses:
        raise FormationError("unitary without clauses", "non-onb-patterns")
    dom, cod = un.fresh(), un.fresh()
    for pat, body in u.clauses:
        if not is_basis(pat):
            raise FormationError("clause pattern is not a basis value", "malformed-pattern")
        names = pattern_vars(pat)
        if len(names) != len(set(names)):
            raise FormationError("clause pattern binds a variable twice", "linearity")
        if not is_expression(body):
            raise FormationError("clause body applies a unitary", "malformed-body")
        if set(free_vars(body)) != set(names):
            raise FormationError(
                "clause body and pattern use different variables",
                "clause-context-mismatch",
            )
        env = {n: un.fresh() for n in names}
        qp, _ = _infer(pat, env, un)
        qb, used = _infer(body, env, un)
        if used != set(names):
            raise FormationError(
                "clause body does not use every pattern variable",
                "clause-context-mismatch",
            )
        if not un.unify(dom, qp):
            raise FormationError("clause patterns have different types", "type-mismatch")
        if not un.unify(cod, qb):
            raise FormationError("clause bodies have different types", "type-mismatch")
    dom, cod = un.zonk(dom), un.zonk(cod)
    pats = [p for p, _ in u.clauses]
    bodies = [b for _, b in u.clauses]
    if len(set(pats)) != len(pats) or not check_onb(dom, pats):
        raise FormationError(
            "clause patterns do not form an orthonormal basis", "non-onb-patterns"
        )
    if len(set(bodies)) != len(bodies) or not check_onb_ext(cod, bodies):
        raise FormationError(
            "clause bodies do not form an orthonormal basis", "non-onb-bodies"
        )
    return dom, cod


def infer_apply_domain(u, codomain=None):
    """Fresh instance of a unitary's type, optionally pinned at its codomain."""
    inst = _instance(u)
    if codomain is not None:
        un = Unifier()
        if not un.unify(inst.codomain, codomain):
            raise FormationError("unitary codomain mismatch", "type-mismatch")
        return UnitaryType(un.zonk(inst.domain), un.zonk(inst.codomain))
    return inst


__all__ = [
    "UnitaryType", "orthogonal", "check_onb", "check_onb_ext",
    "typecheck_term", "typecheck_unitary", "Meta",
]
