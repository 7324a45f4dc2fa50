"""Syntax of the quantum-control fragment: types, terms, unitaries.

Also the structural helpers everything else leans on: the total order on
basis values, pattern matching and substitution.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .errors import MalformedInput, QclError

# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class Unit:
    pass


@dataclass(frozen=True)
class Sum:
    left: object
    right: object


@dataclass(frozen=True)
class Tensor:
    left: object
    right: object


@dataclass(frozen=True)
class QNat:
    pass


@dataclass(frozen=True)
class Meta:
    """Unification variable, shared by the pure and the main type languages."""

    id: int


_meta_ids = itertools.count()


def fresh_meta():
    return Meta(next(_meta_ids))


QBIT = Sum(Unit(), Unit())


def tensor_of(types):
    """Right-nested tensor of a list of types; the unit type when empty."""
    types = list(types)
    if not types:
        return Unit()
    out = types[-1]
    for q in reversed(types[:-1]):
        out = Tensor(q, out)
    return out


def has_meta(q):
    if isinstance(q, Meta):
        return True
    if isinstance(q, (Sum, Tensor)):
        return has_meta(q.left) or has_meta(q.right)
    return False


def default_metas(q):
    """Replace leftover unification variables by the unit type."""
    if isinstance(q, Meta):
        return Unit()
    if isinstance(q, Sum):
        return Sum(default_metas(q.left), default_metas(q.right))
    if isinstance(q, Tensor):
        return Tensor(default_metas(q.left), default_metas(q.right))
    return q


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class InjL:
    term: object


@dataclass(frozen=True)
class InjR:
    term: object


@dataclass(frozen=True)
class Pair:
    left: object
    right: object


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class Succ:
    term: object


@dataclass(frozen=True)
class Apply:
    unitary: object
    term: object


@dataclass(frozen=True)
class LinComb:
    """Finite linear combination; entries are ``(complex, term)`` pairs in order."""

    entries: Tuple[Tuple[complex, object], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple((complex(a), t) for a, t in self.entries)
        )


# ---------------------------------------------------------------- unitaries


@dataclass(frozen=True)
class Clauses:
    clauses: Tuple[Tuple[object, object], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))


@dataclass(frozen=True)
class UTensor:
    left: object
    right: object


@dataclass(frozen=True)
class DirectSum:
    left: object
    right: object


@dataclass(frozen=True)
class Compose:
    """``second . first``: apply ``first``, then ``second``."""

    second: object
    first: object


@dataclass(frozen=True)
class Adjoint:
    unitary: object


@dataclass(frozen=True)
class Ctrl:
    unitary: object


# ---------------------------------------------------------------- sugar

KET0 = InjL(Star())
KET1 = InjR(Star())


def qnat_literal(n, base=None):
    t = Zero() if base is None else base
    for _ in range(n):
        t = Succ(t)
    return t


def ket(bits):
    """``ket("01")`` is ``|0> (x) |1>``, right-nested."""
    parts = [KET0 if b == "0" else KET1 for b in bits]
    if not parts:
        raise MalformedInput("empty ket")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Pair(p, out)
    return out


def lincomb(*pairs):
    return LinComb(tuple(pairs))


def qif(then_u, else_u):
    """Quantum if on a leading qubit: ``|1>`` runs ``then_u``, ``|0>`` runs ``else_u``."""
    if not isinstance(then_u, Clauses) or not isinstance(else_u, Clauses):
        raise MalformedInput("qif branches must be clause unitaries", "qif-branch")
    clauses = [(Pair(KET0, b), Pair(KET0, e)) for b, e in else_u.clauses]
    clauses += [(Pair(KET1, b), Pair(KET1, e)) for b, e in then_u.clauses]
    return Clauses(tuple(clauses))


# ---------------------------------------------------------------- predicates


def is_basis(t):
    if isinstance(t, (Star, Var, Zero)):
        return True
    if isinstance(t, (InjL, InjR, Succ)):
        return is_basis(t.term)
    if isinstance(t, Pair):
        return is_basis(t.left) and is_basis(t.right)
    return False


def is_expression(t):
    if isinstance(t, Apply):
        return False
    if isinstance(t, (InjL, InjR, Succ)):
        return is_expression(t.term)
    if isinstance(t, Pair):
        return is_expression(t.left) and is_expression(t.right)
    if isinstance(t, LinComb):
        return all(is_expression(s) for _, s in t.entries)
    return True


def is_value(t):
    if not isinstance(t, LinComb) or not t.entries:
        return False
    bs = [b for _, b in t.entries]
    if not all(is_basis(b) for b in bs):
        return False
    if any(a == 0 for a, _ in t.entries):
        return False
    return all(basis_key(x) < basis_key(y) for x, y in zip(bs, bs[1:]))


def free_vars(t):
    """Free variables in order of first occurrence."""
    out = []

    def go(s):
        if isinstance(s, Var):
            if s.name not in out:
                out.append(s.name)
        elif isinstance(s, (InjL, InjR, Succ)):
            go(s.term)
        elif isinstance(s, Pair):
            go(s.left)
            go(s.right)
        elif isinstance(s, Apply):
            go(s.term)
        elif isinstance(s, LinComb):
            for _, e in s.entries:
                go(e)

    go(t)
    return out


def is_closed(t):
    return not free_vars(t)


# ---------------------------------------------------------------- order


def basis_key(b):
    """Sort key realising the fixed total order on basis values."""
    if isinstance(b, Var):
        return (0, b.name)
    if isinstance(b, Star):
        return (1,)
    if isinstance(b, InjL):
        return (2, 0, basis_key(b.term))
    if isinstance(b, InjR):
        return (2, 1, basis_key(b.term))
    if isinstance(b, Zero):
        return (3,)
    if isinstance(b, Succ):
        return (4, basis_key(b.term))
    if isinstance(b, Pair):
        return (5, basis_key(b.left), basis_key(b.right))
    raise MalformedInput(f"not a basis value: {b!r}")


def basis_order(b1, b2):
    """-1, 0 or 1 as ``b1`` is below, equal to or above ``b2``."""
    if not is_basis(b1) or not is_basis(b2):
        raise MalformedInput("basis_order expects basis values")
    k1, k2 = basis_key(b1), basis_key(b2)
    return (k1 > k2) - (k1 < k2)


# ---------------------------------------------------------------- matching


def pattern_vars(p):
    names = []

    def go(s):
        if isinstance(s, Var):
            names.append(s.name)
        elif isinstance(s, (InjL, InjR, Succ)):
            go(s.term)
        elif isinstance(s, Pair):
            go(s.left)
            go(s.right)

    go(p)
    return names


def match_basis(pattern, subject) -> Optional[Dict[str, object]]:
    """Smallest valuation sending ``pattern`` to ``subject``, or None."""
    names = pattern_vars(pattern)
    if len(names) != len(set(names)):
        raise MalformedInput("pattern binds a variable twice", "malformed-pattern")
    if not is_basis(pattern):
        raise MalformedInput("pattern is not a basis value", "malformed-pattern")
    if not is_basis(subject) or free_vars(subject):
        raise MalformedInput("subject must be a closed basis value")
    sigma = {}
    return sigma if _match(pattern, subject, sigma) else None


def _match(p, s, sigma):
    if isinstance(p, Var):
        sigma[p.name] = s
        return True
    if type(p) is not type(s):
        return False
    if isinstance(p, (Star, Zero)):
        return True
    if isinstance(p, (InjL, InjR, Succ)):
        return _match(p.term, s.term, sigma)
    if isinstance(p, Pair):
        # supports are disjoint because pattern variables are distinct
        return _match(p.left, s.left, sigma) and _match(p.right, s.right, sigma)
    return False


def substitute(sigma, t):
    if isinstance(t, Var):
        if t.name not in sigma:
            raise QclError(f"unbound variable {t.name}", "unbound-variable")
        return sigma[t.name]
    if isinstance(t, (Star, Zero)):
        return t
    if isinstance(t, InjL):
        return InjL(substitute(sigma, t.term))
    if isinstance(t, InjR):
        return InjR(substitute(sigma, t.term))
    if isinstance(t, Succ):
        return Succ(substitute(sigma, t.term))
    if isinstance(t, Pair):
        return Pair(substitute(sigma, t.left), substitute(sigma, t.right))
    if isinstance(t, Apply):
        return Apply(t.unitary, substitute(sigma, t.term))
    if isinstance(t, LinComb):
        return LinComb(tuple((a, substitute(sigma, s)) for a, s in t.entries))
    raise MalformedInput(f"not a pure term: {t!r}")


def tensor_leaves(q):
    """Non-tensor factors of a type, left to right."""
    if isinstance(q, Tensor):
        return tensor_leaves(q.left) + tensor_leaves(q.right)
    return [q]


def split_leaves(b, q):
    """Split a closed basis value of type ``q`` along the tensor structure of ``q``."""
    if isinstance(q, Tensor):
        if not isinstance(b, Pair):
            raise MalformedInput("basis value does not fit its tensor type")
        return split_leaves(b.left, q.left) + split_leaves(b.right, q.right)
    return [b]
