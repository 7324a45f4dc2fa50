"""Classically controlled linear calculus: syntax, typing and substitution.

Types and the checker share ``Meta`` unification variables with the pure
layer, so ``B(Q)`` may carry a partially known pure type during inference.
A variable is non-linear exactly when its (resolved) type is ``!A``; variables
of type ``I`` may also be left unused.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .errors import FormationError, MainTypeError, MalformedInput
from .pure_check import _instance, typecheck_term
from .pure_core import (
    InjL, InjR, Meta, QNat, Star, Succ, Sum, Tensor, Unit, Zero,
    default_metas, has_meta, is_basis, free_vars as pure_free_vars,
)
from .unify import Unifier

# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class MUnit:
    pass


@dataclass(frozen=True)
class MSum:
    left: object
    right: object


@dataclass(frozen=True)
class MTensor:
    left: object
    right: object


@dataclass(frozen=True)
class Bang:
    body: object


@dataclass(frozen=True)
class Lolli:
    arg: object
    res: object


@dataclass(frozen=True)
class Nat:
    pass


@dataclass(frozen=True)
class BOp:
    """``B(Q)``: a quantum resource whose pure type is ``Q``."""

    pure: object


BIT = MSum(MUnit(), MUnit())


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class MStar:
    pass


@dataclass(frozen=True)
class MVar:
    name: str


@dataclass(frozen=True)
class MInl:
    term: object


@dataclass(frozen=True)
class MInr:
    term: object


@dataclass(frozen=True)
class Case:
    scrut: object
    lname: str
    lbody: object
    rname: str
    rbody: object


@dataclass(frozen=True)
class MPair:
    left: object
    right: object


@dataclass(frozen=True)
class LetPair:
    x: str
    y: str
    bound: object
    body: object


@dataclass(frozen=True)
class Lift:
    term: object


@dataclass(frozen=True)
class Force:
    term: object


@dataclass(frozen=True)
class Lam:
    name: str
    body: object
    ann: Optional[object] = None


@dataclass(frozen=True)
class App:
    fn: object
    arg: object


@dataclass(frozen=True)
class MZero:
    pass


@dataclass(frozen=True)
class MSucc:
    term: object


@dataclass(frozen=True)
class Match:
    scrut: object
    zbody: object
    name: str
    sbody: object


@dataclass(frozen=True)
class PureT:
    term: object


@dataclass(frozen=True)
class Meas:
    term: object


@dataclass(frozen=True)
class UnApply:
    unitary: object
    term: object


@dataclass(frozen=True)
class LetBang:
    """``let B(z) = M in N``: merge ``B(Q1) (x) B(Q2)`` into ``B(Q1 (x) Q2)``."""

    name: str
    bound: object
    body: object


@dataclass(frozen=True)
class LetPairBang:
    """``let B(x (x) y) = M in N``: split ``B(Q1 (x) Q2)``."""

    x: str
    y: str
    bound: object
    body: object


def nat_literal(n):
    t = MZero()
    for _ in range(n):
        t = MSucc(t)
    return t


# ---------------------------------------------------------------- ov


def ov_type(q):
    if isinstance(q, Unit):
        return MUnit()
    if isinstance(q, QNat):
        return Nat()
    if isinstance(q, Sum):
        return MSum(ov_type(q.left), ov_type(q.right))
    if isinstance(q, Tensor):
        return MTensor(ov_type(q.left), ov_type(q.right))
    raise MalformedInput(f"cannot translate pure type {q!r}")


def ov_basis(b):
    if not is_basis(b) or pure_free_vars(b):
        raise MalformedInput("ov_basis expects a closed basis value")
    return _ov(b)


def _ov(b):
    if isinstance(b, Star):
        return MStar()
    if isinstance(b, Zero):
        return MZero()
    if isinstance(b, Succ):
        return MSucc(_ov(b.term))
    if isinstance(b, InjL):
        return MInl(_ov(b.term))
    if isinstance(b, InjR):
        return MInr(_ov(b.term))
    return MPair(_ov(b.left), _ov(b.right))


# ---------------------------------------------------------------- predicates


def is_value(m):
    if isinstance(m, (MStar, MVar, MZero, Lift, Lam)):
        return True
    if isinstance(m, (MInl, MInr, MSucc)):
        return is_value(m.term)
    if isinstance(m, MPair):
        return is_value(m.left) and is_value(m.right)
    return False


def is_first_order(a):
    if isinstance(a, (MUnit, Nat, BOp)):
        return True
    if isinstance(a, (MSum, MTensor)):
        return is_first_order(a.left) and is_first_order(a.right)
    return False


def _binders(m):
    """(child, names bound in that child) pairs."""
    if isinstance(m, Case):
        return [(m.scrut, ()), (m.lbody, (m.lname,)), (m.rbody, (m.rname,))]
    if isinstance(m, (LetPair, LetPairBang)):
        return [(m.bound, ()), (m.body, (m.x, m.y))]
    if isinstance(m, LetBang):
        return [(m.bound, ()), (m.body, (m.name,))]
    if isinstance(m, Lam):
        return [(m.body, (m.name,))]
    if isinstance(m, Match):
        return [(m.scrut, ()), (m.zbody, ()), (m.sbody, (m.name,))]
    if isinstance(m, (MInl, MInr, MSucc, Lift, Force, Meas, UnApply)):
        return [(m.term, ())]
    if isinstance(m, MPair):
        return [(m.left, ()), (m.right, ())]
    if isinstance(m, App):
        return [(m.fn, ()), (m.arg, ())]
    return []


def free_vars(m):
    """Free variables in order of first occurrence."""
    out = []

    def go(t, bound):
        if isinstance(t, MVar):
            if t.name not in bound and t.name not in out:
                out.append(t.name)
            return
        for child, names in _binders(t):
            go(child, bound | set(names))

    go(m, frozenset())
    return out


# ---------------------------------------------------------------- substitution

_rename_ids = itertools.count()


def _fresh_like(name, avoid):
    base = name.split("'")[0]
    while True:
        cand = f"{base}'{next(_rename_ids)}"
        if cand not in avoid:
            return cand


def substitute(m, sigma):
    """Capture-avoiding simultaneous substitution ``m[sigma]``."""
    if not sigma:
        return m
    fv = set()
    for v in sigma.values():
        fv |= set(free_vars(v))
    return _subst(m, dict(sigma), fv)


def _bind(names, body_list, sigma, fv):
    """Drop shadowed names from sigma and rename binders that would capture."""
    sigma = {k: v for k, v in sigma.items() if k not in names}
    new_names = []
    renames = {}
    for n in names:
        if n in fv and sigma:
            fresh = _fresh_like(n, fv | set(sigma))
            renames[n] = MVar(fresh)
            new_names.append(fresh)
        else:
            new_names.append(n)
    sigma = {**sigma, **renames}
    return new_names, [_subst(b, sigma, fv | set(new_names)) for b in body_list]


def _subst(m, sigma, fv):
    if not sigma:
        return m
    if isinstance(m, MVar):
        return sigma.get(m.name, m)
    if isinstance(m, (MStar, MZero, PureT)):
        return m
    if isinstance(m, (MInl, MInr, MSucc, Lift, Force, Meas)):
        return type(m)(_subst(m.term, sigma, fv))
    if isinstance(m, UnApply):
        return UnApply(m.unitary, _subst(m.term, sigma, fv))
    if isinstance(m, MPair):
        return MPair(_subst(m.left, sigma, fv), _subst(m.right, sigma, fv))
    if isinstance(m, App):
        return App(_subst(m.fn, sigma, fv), _subst(m.arg, sigma, fv))
    if isinstance(m, Case):
        (ln,), (lb,) = _bind([m.lname], [m.lbody], sigma, fv)
        (rn,), (rb,) = _bind([m.rname], [m.rbody], sigma, fv)
        return Case(_subst(m.scrut, sigma, fv), ln, lb, rn, rb)
    if isinstance(m, (LetPair, LetPairBang)):
        (x, y), (body,) = _bind([m.x, m.y], [m.body], sigma, fv)
        return type(m)(x, y, _subst(m.bound, sigma, fv), body)
    if isinstance(m, LetBang):
        (z,), (body,) = _bind([m.name], [m.body], sigma, fv)
        return LetBang(z, _subst(m.bound, sigma, fv), body)
    if isinstance(m, Lam):
        (x,), (body,) = _bind([m.name], [m.body], sigma, fv)
        return Lam(x, body, m.ann)
    if isinstance(m, Match):
        (x,), (sb,) = _bind([m.name], [m.sbody], sigma, fv)
        return Match(_subst(m.scrut, sigma, fv), _subst(m.zbody, sigma, fv), x, sb)
    raise MalformedInput(f"not a main term: {m!r}")


def rename_canonical(m, names=None):
    """Rename bound variables to ``_0, _1, ...`` in traversal order; free ones via ``names``."""
    counter = itertools.count()
    names = dict(names or {})

    def go(t, env):
        if isinstance(t, MVar):
            return MVar(env.get(t.name, t.name))
        if isinstance(t, (MStar, MZero, PureT)):
            return t
        if isinstance(t, (MInl, MInr, MSucc, Lift, Force, Meas)):
            return type(t)(go(t.term, env))
        if isinstance(t, UnApply):
            return UnApply(t.unitary, go(t.term, env))
        if isinstance(t, MPair):
            return MPair(go(t.left, env), go(t.right, env))
        if isinstance(t, App):
            return App(go(t.fn, env), go(t.arg, env))

        def fresh(env, *xs):
            env = dict(env)
            out = []
            for x in xs:
                env[x] = f"_{next(counter)}"
                out.append(env[x])
            return env, out

        if isinstance(t, Case):
            scrut = go(t.scrut, env)
            e1, (ln,) = fresh(env, t.lname)
            lb = go(t.lbody, e1)
            e2, (rn,) = fresh(env, t.rname)
            return Case(scrut, ln, lb, rn, go(t.rbody, e2))
        if isinstance(t, (LetPair, LetPairBang)):
            bound = go(t.bound, env)
            e1, (x, y) = fresh(env, t.x, t.y)
            return type(t)(x, y, bound, go(t.body, e1))
        if isinstance(t, LetBang):
            bound = go(t.bound, env)
            e1, (z,) = fresh(env, t.name)
            return LetBang(z, bound, go(t.body, e1))
        if isinstance(t, Lam):
            e1, (x,) = fresh(env, t.name)
            return Lam(x, go(t.body, e1), t.ann)
        if isinstance(t, Match):
            scrut, zb = go(t.scrut, env), go(t.zbody, env)
            e1, (x,) = fresh(env, t.name)
            return Match(scrut, zb, x, go(t.sbody, e1))
        raise MalformedInput(f"not a main term: {t!r}")

    return go(m, names)


# ---------------------------------------------------------------- typing


class _Checker:
    def __init__(self, unifier):
        self.un = unifier
        self.linear = []  # (name, type, count)
        self.branches = []  # (name, type, count_left, count_right)
        self.ov = []  # (pure type, main meta) awaiting resolution

    def fail(self, msg, code):
        raise MainTypeError(msg, code)

    def unify(self, a, b, msg, code="type-mismatch"):
        if not self.un.unify(a, b):
            self.fail(
                f"{msg}: {show_type(self.un.zonk(a))} vs {show_type(self.un.zonk(b))}", code
            )

    def bind(self, names, types, env, body):
        inner = dict(env)
        for n, t in zip(names, types):
            inner[n] = t
        ty, used = self.infer(body, inner)
        for n, t in zip(names, types):
            self.linear.append((n, t, used.pop(n, 0)))
        return ty, used

    def infer(self, m, env):
        un = self.un
        if isinstance(m, MStar):
            return MUnit(), Counter()
        if isinstance(m, MZero):
            return Nat(), Counter()
        if isinstance(m, MVar):
            if m.name not in env:
                self.fail(f"unbound variable {m.name}", "unbound-variable")
            return env[m.name], Counter({m.name: 1})
        if isinstance(m, (MInl, MInr)):
            a, used = self.infer(m.term, env)
            other = un.fresh()
            return (MSum(a, other) if isinstance(m, MInl) else MSum(other, a)), used
        if isinstance(m, MSucc):
            a, used = self.infer(m.term, env)
            self.unify(a, Nat(), "succ expects Nat")
            return Nat(), used
        if isinstance(m, MPair):
            a, u1 = self.infer(m.left, env)
            b, u2 = self.infer(m.right, env)
            return MTensor(a, b), u1 + u2
        if isinstance(m, Case):
            s, u0 = self.infer(m.scrut, env)
            a, b = un.fresh(), un.fresh()
            self.unify(s, MSum(a, b), "case expects a sum")
            c1, u1 = self.bind([m.lname], [a], env, m.lbody)
            c2, u2 = self.bind([m.rname], [b], env, m.rbody)
            self.unify(c1, c2, "case branches disagree")
            return c1, u0 + self.join(u1, u2, env)
        if isinstance(m, LetPair):
            s, u0 = self.infer(m.bound, env)
            a, b = un.fresh(), un.fresh()
            self.unify(s, MTensor(a, b), "let-pair expects a tensor")
            c, u1 = self.bind([m.x, m.y], [a, b], env, m.body)
            return c, u0 + u1
        if isinstance(m, Lift):
            a, used = self.infer(m.term, env)
            for n in used:
                if not un.unify(env[n], Bang(un.fresh())):
                    self.fail(f"lift captures the linear variable {n}", "lift-linear")
            return Bang(a), used
        if isinstance(m, Force):
            a, used = self.infer(m.term, env)
            b = un.fresh()
            self.unify(a, Bang(b), "force expects a !-type", "modality-mismatch")
            return b, used
        if isinstance(m, Lam):
            a = m.ann if m.ann is not None else un.fresh()
            b, used = self.bind([m.name], [a], env, m.body)
            return Lolli(a, b), used
        if isinstance(m, App):
            f, u1 = self.infer(m.fn, env)
            a, u2 = self.infer(m.arg, env)
            b = un.fresh()
            self.unify(f, Lolli(a, b), "application of a non-function or wrong argument")
            return b, u1 + u2
        if isinstance(m, Match):
            s, u0 = self.infer(m.scrut, env)
            self.unify(s, Nat(), "match expects Nat")
            c1, u1 = self.infer(m.zbody, env)
            c2, u2 = self.bind([m.name], [Nat()], env, m.sbody)
            self.unify(c1, c2, "match branches disagree")
            return c1, u0 + self.join(u1, u2, env)
        if isinstance(m, PureT):
            try:
                q = typecheck_term([], m.term)
            except FormationError as e:
                raise MainTypeError(f"in pure term: {e.message}", e.code) from e
            return BOp(default_metas(q)), Counter()
        if isinstance(m, Meas):
            a, used = self.infer(m.term, env)
            q = un.fresh()
            self.unify(a, BOp(q), "meas expects a B-type", "modality-mismatch")
            out = un.fresh()
            self.ov.append((q, out))
            self.solve_ov()
            return out, used
        if isinstance(m, UnApply):
            try:
                inst = _instance(m.unitary)
            except FormationError as e:
                raise MainTypeError(f"in unitary: {e.message}", e.code) from e
            a, used = self.infer(m.term, env)
            self.unify(a, BOp(inst.domain), "unitary applied to the wrong B-type")
            return BOp(inst.codomain), used
        if isinstance(m, LetBang):
            s, u0 = self.infer(m.bound, env)
            q1, q2 = un.fresh(), un.fresh()
            self.unify(s, MTensor(BOp(q1), BOp(q2)), "let B(z) expects B(Q1) (x) B(Q2)")
            c, u1 = self.bind([m.name], [BOp(Tensor(q1, q2))], env, m.body)
            return c, u0 + u1
        if isinstance(m, LetPairBang):
            s, u0 = self.infer(m.bound, env)
            q1, q2 = un.fresh(), un.fresh()
            self.unify(s, BOp(Tensor(q1, q2)), "let B(x (x) y) expects B(Q1 (x) Q2)")
            c, u1 = self.bind([m.x, m.y], [BOp(q1), BOp(q2)], env, m.body)
            return c, u0 + u1
        raise MalformedInput(f"not a main term: {m!r}")

    def join(self, u1, u2, env):
        out = Counter()
        for n in set(u1) | set(u2):
            if u1[n] != u2[n]:
                self.branches.append((n, env[n], u1[n], u2[n]))
            out[n] = max(u1[n], u2[n])
        return out

    def solve_ov(self, final=False):
        pending = []
        for q, out in self.ov:
            qz = self.un.zonk(q)
            if has_meta(qz):
                if final:
                    self.fail(
                        "cannot determine the type being measured; add an annotation",
                        "ambiguous-measurement",
                    )
                pending.append((q, out))
            else:
                self.unify(out, ov_type(qz), "measurement result")
        self.ov = pending

    def finish(self):
        self.solve_ov(final=True)
        for name, ty, count in self.linear:
            self.check_usage(name, ty, count)
        for name, ty, c1, c2 in self.branches:
            t = self.un.zonk(ty)
            if isinstance(t, Meta):
                self.unify(t, MUnit(), f"variable {name}")
                continue
            if isinstance(t, Bang) or isinstance(t, MUnit):
                continue
            self.fail(f"linear variable {name} used differently in two branches", "linearity")

    def check_usage(self, name, ty, count):
        t = self.un.zonk(ty)
        if isinstance(t, Meta) and count == 0:
            # an unused binder nothing else constrains is a discarded unit
            self.unify(t, MUnit(), f"unused variable {name}")
            return
        if isinstance(t, Bang):
            return
        if count == 1 or (count == 0 and isinstance(t, MUnit)):
            return
        if count == 0:
            self.fail(f"linear variable {name} is never used", "linearity")
        self.fail(f"linear variable {name} is used {count} times", "linearity")


def typecheck_main(ctx, m, unifier=None):
    """Type of ``m`` under the ordered context ``ctx`` (list of (name, type))."""
    names = [n for n, _ in ctx]
    if len(names) != len(set(names)):
        raise MainTypeError("context declares a variable twice", "duplicate-variable")
    un = unifier or Unifier()
    chk = _Checker(un)
    ty, used = chk.infer(m, dict(ctx))
    for n, t in ctx:
        chk.linear.append((n, t, used.get(n, 0)))
    chk.finish()
    return un.zonk(ty)


# ---------------------------------------------------------------- printing


def show_type(a):
    from .pure_core import QBIT

    def pure(q, prec=0):
        if q == QBIT:
            return "qbit"
        if isinstance(q, Unit):
            return "I"
        if isinstance(q, QNat):
            return "qnat"
        if isinstance(q, Meta):
            return f"?{q.id}"
        if isinstance(q, Tensor):
            s = f"{pure(q.left, 2)} (x) {pure(q.right, 1)}"
            return s if prec <= 1 else f"({s})"
        s = f"{pure(q.left, 1)} (+) {pure(q.right, 0)}"
        return s if prec == 0 else f"({s})"

    def go(t, prec):
        if isinstance(t, MUnit):
            return "I"
        if isinstance(t, Nat):
            return "Nat"
        if isinstance(t, Meta):
            return f"?{t.id}"
        if t == BIT:
            return "bit"
        if isinstance(t, BOp):
            return "qbit" if t.pure == QBIT else f"B({pure(t.pure)})"
        if isinstance(t, Bang):
            return "!" + go(t.body, 3)
        if isinstance(t, Lolli):
            s = f"{go(t.arg, 1)} -o {go(t.res, 0)}"
            return s if prec <= 0 else f"({s})"
        if isinstance(t, MTensor):
            s = f"{go(t.left, 3)} (x) {go(t.right, 2)}"
            return s if prec <= 2 else f"({s})"
        if isinstance(t, MSum):
            s = f"{go(t.left, 2)} + {go(t.right, 1)}"
            return s if prec <= 1 else f"({s})"
        return repr(t)

    return go(a, 0)
