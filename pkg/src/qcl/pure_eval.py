"""Normalizer for the pure fragment.

Vectors are handled internally as dicts from basis values to amplitudes and
converted to ``NormalValue`` at the boundary.  Open basis values (containing
variables) are allowed inside the expansion, which is what clause bodies need.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

from . import settings
from .errors import FormationError, InternalError, MalformedInput
from .pure_check import typecheck_term
from .pure_core import (
    Adjoint, Apply, Clauses, Compose, Ctrl, DirectSum, InjL, InjR, LinComb,
    Pair, Star, Succ, UTensor, Var, Zero, basis_key, free_vars, match_basis,
    substitute, KET0, KET1,
)
from .unify import Unifier


@dataclass(frozen=True)
class NormalValue:
    entries: Tuple[Tuple[complex, object], ...]

    def to_term(self):
        return LinComb(self.entries)

    def as_dict(self):
        return {b: a for a, b in self.entries}

    def norm2(self):
        return sum(abs(a) ** 2 for a, _ in self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


def to_normal(vec, tol=None):
    tol = settings.eps() if tol is None else tol
    items = [(a, b) for b, a in vec.items() if abs(a) > tol]
    items.sort(key=lambda e: basis_key(e[1]))
    return NormalValue(tuple((complex(a), b) for a, b in items))


def _add(acc, b, a):
    acc[b] = acc.get(b, 0) + a


def _map(vec, f):
    return {f(b): a for b, a in vec.items()}


def _vec(t, allow_apply):
    if isinstance(t, (Star, Zero, Var)):
        return {t: 1 + 0j}
    if isinstance(t, InjL):
        return _map(_vec(t.term, allow_apply), InjL)
    if isinstance(t, InjR):
        return _map(_vec(t.term, allow_apply), InjR)
    if isinstance(t, Succ):
        return _map(_vec(t.term, allow_apply), Succ)
    if isinstance(t, Pair):
        left = _vec(t.left, allow_apply)
        right = _vec(t.right, allow_apply)
        out = {}
        for b1, a1 in left.items():
            for b2, a2 in right.items():
                _add(out, Pair(b1, b2), a1 * a2)
        return out
    if isinstance(t, LinComb):
        out = {}
        for alpha, s in t.entries:
            for b, a in _vec(s, allow_apply).items():
                _add(out, b, alpha * a)
        return out
    if isinstance(t, Apply):
        if not allow_apply:
            raise FormationError("expression contains a unitary application", "not-expression")
        return _apply_vec(t.unitary, _vec(t.term, True), adjoint=False)
    raise MalformedInput(f"not a pure term: {t!r}")


def expand_to_basis(e):
    """Normal form of an application-free closed expression."""
    if free_vars(e):
        raise FormationError("expand_to_basis expects a closed expression", "unbound-variable")
    typecheck_term([], e)
    return to_normal(_vec(e, allow_apply=False))


def expand_open(e):
    """Expansion of a possibly open expression, keeping variables as basis atoms."""
    return to_normal(_vec(e, allow_apply=False), tol=0.0)


@lru_cache(maxsize=4096)
def _clause_table(u):
    return tuple((pat, tuple(expand_open(body).entries)) for pat, body in u.clauses)


def _apply_basis(u, b):
    if isinstance(u, Clauses):
        for pat, body in _clause_table(u):
            sigma = match_basis(pat, b)
            if sigma is not None:
                return {substitute(sigma, c): a for a, c in body}
        raise InternalError(f"no clause matches {b!r}; the ONB check should forbid this")
    if isinstance(u, UTensor):
        if not isinstance(b, Pair):
            raise InternalError("tensor unitary applied to a non-pair")
        left = _apply_basis(u.left, b.left)
        right = _apply_basis(u.right, b.right)
        return {Pair(x, y): a1 * a2 for x, a1 in left.items() for y, a2 in right.items()}
    if isinstance(u, DirectSum):
        if isinstance(b, InjL):
            return _map(_apply_basis(u.left, b.term), InjL)
        if isinstance(b, InjR):
            return _map(_apply_basis(u.right, b.term), InjR)
        raise InternalError("direct-sum unitary applied to a non-injection")
    if isinstance(u, Compose):
        return _apply_vec(u.second, _apply_basis(u.first, b), adjoint=False)
    if isinstance(u, Adjoint):
        return _adjoint_basis(u.unitary, b)
    if isinstance(u, Ctrl):
        if not isinstance(b, Pair):
            raise InternalError("ctrl applied to a non-pair")
        if b.left == KET0:
            return {b: 1 + 0j}
        if b.left == KET1:
            return _map(_apply_basis(u.unitary, b.right), lambda y: Pair(KET1, y))
        raise InternalError("ctrl control is not a qubit basis value")
    raise MalformedInput(f"not a unitary: {u!r}")


def _adjoint_basis(u, b):
    if isinstance(u, Clauses):
        # u* = sum over clauses and valuations of |s(pattern)><s(body)|
        out = {}
        for pat, body in _clause_table(u):
            for beta, c in body:
                sigma = match_basis(c, b)
                if sigma is not None:
                    _add(out, substitute(sigma, pat), beta.conjugate())
        if not out:
            raise InternalError(f"{b!r} lies outside the span of the clause bodies")
        return out
    if isinstance(u, UTensor):
        left = _adjoint_basis(u.left, b.left)
        right = _adjoint_basis(u.right, b.right)
        return {Pair(x, y): a1 * a2 for x, a1 in left.items() for y, a2 in right.items()}
    if isinstance(u, DirectSum):
        if isinstance(b, InjL):
            return _map(_adjoint_basis(u.left, b.term), InjL)
        if isinstance(b, InjR):
            return _map(_adjoint_basis(u.right, b.term), InjR)
        raise InternalError("direct-sum unitary applied to a non-injection")
    if isinstance(u, Compose):
        return _apply_vec(u.first, _adjoint_basis(u.second, b), adjoint=True)
    if isinstance(u, Adjoint):
        return _apply_basis(u.unitary, b)
    if isinstance(u, Ctrl):
        if b.left == KET0:
            return {b: 1 + 0j}
        if b.left == KET1:
            return _map(_adjoint_basis(u.unitary, b.right), lambda y: Pair(KET1, y))
        raise InternalError("ctrl control is not a qubit basis value")
    raise MalformedInput(f"not a unitary: {u!r}")


def _apply_vec(u, vec, adjoint):
    step = _adjoint_basis if adjoint else _apply_basis
    out = {}
    for b, a in vec.items():
        if a == 0:
            continue
        for c, x in step(u, b).items():
            _add(out, c, a * x)
    return out


def _as_vec(v):
    if isinstance(v, NormalValue):
        return v.as_dict()
    if isinstance(v, LinComb):
        return {b: a for a, b in v.entries}
    return _vec(v, allow_apply=True)


def apply_unitary(u, v):
    return to_normal(_apply_vec(u, _as_vec(v), adjoint=False))


def apply_adjoint(u, v):
    return to_normal(_apply_vec(u, _as_vec(v), adjoint=True))


def normalize(t, check=True):
    """Value normal form of a closed term, evaluating applications innermost first."""
    if check:
        if free_vars(t):
            raise FormationError("normalize expects a closed term", "unbound-variable")
        typecheck_term([], t)
    return to_normal(_vec(t, allow_apply=True))


def equal_terms(t1, t2):
    un = Unifier()
    q1 = typecheck_term([], t1, un)
    q2 = typecheck_term([], t2, un)
    if not un.unify(q1, q2):
        raise FormationError("terms have different types", "type-mismatch")
    return values_close(normalize(t1, check=False), normalize(t2, check=False))


def values_close(v1, v2, tol=None):
    tol = settings.eps() if tol is None else tol
    d1, d2 = v1.as_dict(), v2.as_dict()
    return all(abs(d1.get(b, 0) - d2.get(b, 0)) <= tol for b in d1.keys() | d2.keys())
