"""Matrix semantics of the pure fragment, with qnat truncated to a finite dimension.

Basis layout: a direct sum lists the left basis before the right one, a
tensor is row-major with the left factor major, and qnat is |0>..|D-1>.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import settings
from .errors import FormationError, MalformedInput, TruncationError, TruncationWarning
from .pure_check import _infer, _instance, typecheck_term, typecheck_unitary
from .pure_core import (
    Adjoint, Apply, Clauses, Compose, Ctrl, DirectSum, InjL, InjR,
    LinComb, Pair, QNat, Star, Succ, Sum, Tensor, UTensor, Unit, Var, Zero,
    default_metas, free_vars, pattern_vars, qnat_literal, substitute,
)
from .unify import Unifier


@dataclass(frozen=True)
class TruncationConfig:
    qnat_dim: int = settings.DEFAULT_QNAT_DIM
    strict: bool = False
    max_dim: int = settings.MAX_DIM

    def __post_init__(self):
        if self.qnat_dim < 1:
            raise ValueError("qnat_dim must be at least 1")


def _cfg(cfg):
    return cfg if cfg is not None else TruncationConfig()


def interp_type(q, cfg=None):
    cfg = _cfg(cfg)
    if isinstance(q, Unit):
        return 1
    if isinstance(q, QNat):
        return cfg.qnat_dim
    if isinstance(q, Sum):
        return interp_type(q.left, cfg) + interp_type(q.right, cfg)
    if isinstance(q, Tensor):
        return interp_type(q.left, cfg) * interp_type(q.right, cfg)
    raise MalformedInput(f"cannot interpret type {q!r}")


def _check_dim(n, cfg):
    if n > cfg.max_dim:
        raise MalformedInput(
            f"dimension {n} exceeds the cap of {cfg.max_dim}", "dimension-cap"
        )


def basis_values(q, cfg=None):
    """Closed basis values of ``q`` in matrix index order."""
    cfg = _cfg(cfg)
    if isinstance(q, Unit):
        return [Star()]
    if isinstance(q, QNat):
        return [qnat_literal(n) for n in range(cfg.qnat_dim)]
    if isinstance(q, Sum):
        return [InjL(b) for b in basis_values(q.left, cfg)] + [
            InjR(b) for b in basis_values(q.right, cfg)
        ]
    if isinstance(q, Tensor):
        return [
            Pair(a, b)
            for a in basis_values(q.left, cfg)
            for b in basis_values(q.right, cfg)
        ]
    raise MalformedInput(f"cannot enumerate type {q!r}")


def basis_index(q, b, cfg=None):
    cfg = _cfg(cfg)
    if isinstance(q, Unit):
        if isinstance(b, Star):
            return 0
    elif isinstance(q, QNat):
        n = 0
        while isinstance(b, Succ):
            b, n = b.term, n + 1
        if isinstance(b, Zero):
            if n >= cfg.qnat_dim:
                raise TruncationError(
                    f"qnat value {n} does not fit truncation {cfg.qnat_dim}"
                )
            return n
    elif isinstance(q, Sum):
        if isinstance(b, InjL):
            return basis_index(q.left, b.term, cfg)
        if isinstance(b, InjR):
            return interp_type(q.left, cfg) + basis_index(q.right, b.term, cfg)
    elif isinstance(q, Tensor):
        if isinstance(b, Pair):
            return basis_index(q.left, b.left, cfg) * interp_type(
                q.right, cfg
            ) + basis_index(q.right, b.right, cfg)
    raise MalformedInput(f"{b!r} is not a closed basis value of {q!r}")


def permutation_matrix(dims, order):
    """Matrix sending the tensor of ``dims`` to the tensor of ``dims`` taken in ``order``."""
    n = int(np.prod(dims)) if dims else 1
    if len(dims) <= 1:
        return np.eye(n)
    eye = np.eye(n).reshape(list(dims) + [n])
    return eye.transpose(list(order) + [len(dims)]).reshape(n, n)


# ---------------------------------------------------------------- terms


def interp_term(ctx, t, cfg=None, expected=None):
    """Matrix from the context space to the type space (a column when closed).

    ``expected`` pins down types the term leaves open, such as the right side of ``inl *``.
    """
    cfg = _cfg(cfg)
    un = Unifier()
    q = typecheck_term(ctx, t, un)
    if expected is not None and not un.unify(q, expected):
        raise FormationError("term does not have the expected type", "type-mismatch")
    q = default_metas(un.zonk(q))
    env = {n: default_metas(un.zonk(qq)) for n, qq in ctx}
    order = [n for n, _ in ctx]
    _check_dim(interp_type(q, cfg), cfg)
    return _den(env, order, t, q, cfg)


def _ctx_dims(env, order, cfg):
    return [interp_type(env[v], cfg) for v in order]


def _den(env, order, t, q, cfg):
    if isinstance(t, Var):
        return np.eye(interp_type(q, cfg), dtype=complex)
    if isinstance(t, Star):
        return np.ones((1, 1), dtype=complex)
    if isinstance(t, Zero):
        col = np.zeros((cfg.qnat_dim, 1), dtype=complex)
        col[0, 0] = 1
        return col
    if isinstance(t, (InjL, InjR)):
        inner_q = q.left if isinstance(t, InjL) else q.right
        m = _den(env, order, t.term, inner_q, cfg)
        pad = np.zeros(
            (interp_type(q.right if isinstance(t, InjL) else q.left, cfg), m.shape[1]),
            dtype=complex,
        )
        return np.vstack([m, pad] if isinstance(t, InjL) else [pad, m])
    if isinstance(t, Succ):
        m = _den(env, order, t.term, QNat(), cfg)
        if np.abs(m[-1, :]).max() > settings.eps():
            raise TruncationError(
                f"successor leaves the truncated space of dimension {cfg.qnat_dim}"
            )
        return np.vstack([np.zeros((1, m.shape[1]), dtype=complex), m[:-1, :]])
    if isinstance(t, Pair):
        fv1, fv2 = set(free_vars(t.left)), set(free_vars(t.right))
        o1 = [v for v in order if v in fv1]
        o2 = [v for v in order if v in fv2]
        m1 = _den(env, o1, t.left, q.left, cfg)
        m2 = _den(env, o2, t.right, q.right, cfg)
        perm = permutation_matrix(
            _ctx_dims(env, order, cfg), [order.index(v) for v in o1 + o2]
        )
        return np.kron(m1, m2) @ perm
    if isinstance(t, LinComb):
        return sum(a * _den(env, order, s, q, cfg) for a, s in t.entries)
    if isinstance(t, Apply):
        un = Unifier()
        inst = _instance(t.unitary)
        qs, _ = _infer(t.term, {v: env[v] for v in order}, un)
        un.unify(inst.domain, qs)
        un.unify(inst.codomain, q)
        dom = default_metas(un.zonk(qs))
        mu, _ = _unitary_at(t.unitary, dom, cfg)
        return mu @ _den(env, order, t.term, dom, cfg)
    raise MalformedInput(f"not a pure term: {t!r}")


# ---------------------------------------------------------------- unitaries


def interp_unitary(u, cfg=None, domain=None):
    cfg = _cfg(cfg)
    ut = typecheck_unitary(u)
    if domain is None:
        dom = default_metas(ut.domain)
    else:
        un = Unifier()
        if not un.unify(ut.domain, domain):
            raise FormationError("unitary does not accept that domain", "type-mismatch")
        dom = default_metas(un.zonk(ut.domain))
    _check_dim(interp_type(dom, cfg), cfg)
    return _unitary_at(u, dom, cfg)[0]


def unitary_codomain(u, dom):
    inst = _instance(u)
    un = Unifier()
    if not un.unify(inst.domain, dom):
        raise FormationError("unitary does not accept that domain", "type-mismatch")
    return default_metas(un.zonk(inst.codomain))


def _warn(msg, cfg):
    if cfg.strict:
        raise TruncationError(msg, "truncation-warning")
    warnings.warn(msg, TruncationWarning, stacklevel=3)


def _unitary_at(u, dom, cfg):
    if isinstance(u, Clauses):
        return _clauses_at(u, dom, cfg)
    if isinstance(u, UTensor):
        m1, c1 = _unitary_at(u.left, dom.left, cfg)
        m2, c2 = _unitary_at(u.right, dom.right, cfg)
        return np.kron(m1, m2), Tensor(c1, c2)
    if isinstance(u, DirectSum):
        m1, c1 = _unitary_at(u.left, dom.left, cfg)
        m2, c2 = _unitary_at(u.right, dom.right, cfg)
        return _block_diag(m1, m2), Sum(c1, c2)
    if isinstance(u, Compose):
        m1, c1 = _unitary_at(u.first, dom, cfg)
        m2, c2 = _unitary_at(u.second, c1, cfg)
        return m2 @ m1, c2
    if isinstance(u, Adjoint):
        inst = _instance(u.unitary)
        un = Unifier()
        un.unify(inst.codomain, dom)
        src = default_metas(un.zonk(inst.domain))
        m, _ = _unitary_at(u.unitary, src, cfg)
        return m.conj().T, src
    if isinstance(u, Ctrl):
        m, _ = _unitary_at(u.unitary, dom.right, cfg)
        return _block_diag(np.eye(m.shape[0], dtype=complex), m), dom
    raise MalformedInput(f"not a unitary: {u!r}")


def _block_diag(a, b):
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=complex)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def _clauses_at(u, dom, cfg):
    un = Unifier()
    cod = un.fresh()
    typed = []
    for pat, body in u.clauses:
        env = {n: un.fresh() for n in pattern_vars(pat)}
        qp, _ = _infer(pat, env, un)
        qb, _ = _infer(body, env, un)
        un.unify(qp, dom)
        un.unify(qb, cod)
        typed.append((pat, body, env))
    cod = default_metas(un.zonk(cod))
    n_in, n_out = interp_type(dom, cfg), interp_type(cod, cfg)
    _check_dim(n_out, cfg)
    mat = np.zeros((n_out, n_in), dtype=complex)
    for pat, body, env in typed:
        names = list(env)
        choices = [basis_values(default_metas(un.zonk(env[n])), cfg) for n in names]
        for combo in itertools.product(*choices):
            sigma = dict(zip(names, combo))
            try:
                col = basis_index(dom, substitute(sigma, pat), cfg)
            except TruncationError:
                continue
            try:
                vec = _den({}, [], substitute(sigma, body), cod, cfg)
            except TruncationError:
                _warn("clause body leaves the truncated space; matrix is not unitary", cfg)
                continue
            mat[:, col] += vec[:, 0]
    return mat, cod


# ---------------------------------------------------------------- predicates


def is_isometry(m, tol=None):
    tol = settings.eps() if tol is None else tol
    return np.abs(m.conj().T @ m - np.eye(m.shape[1])).max() <= tol


def is_unitary(m, tol=None):
    return m.shape[0] == m.shape[1] and is_isometry(m, tol) and is_isometry(m.conj().T, tol)


# ---------------------------------------------------------------- monoidal isos


def _right_nested(indices):
    if not indices:
        return None
    if len(indices) == 1:
        return indices[0]
    return (indices[0], _right_nested(indices[1:]))


def shape_leaves(shape):
    if shape is None:
        return []
    if isinstance(shape, int):
        return [shape]
    return shape_leaves(shape[0]) + shape_leaves(shape[1])


def shape_type(shape, blocks):
    if shape is None:
        return Unit()
    if isinstance(shape, int):
        return blocks[shape]
    return Tensor(shape_type(shape[0], blocks), shape_type(shape[1], blocks))


def synth_monoidal_unitary(blocks, target=None, source=None):
    """Single-clause unitary rearranging tensor factors.

    ``source`` and ``target`` are shapes: an int indexes ``blocks``, a pair of
    shapes is a tensor and None is the unit.  The source defaults to the
    right-nested tensor of all blocks, the target to the identity.  Blocks of
    unit type may be left out of the target; their pattern position becomes ``*``.
    """
    blocks = list(blocks)
    if source is None:
        source = _right_nested(list(range(len(blocks))))
    if target is None:
        target = source
    src, tgt = shape_leaves(source), shape_leaves(target)
    if sorted(src) != list(range(len(blocks))):
        raise MalformedInput("source shape must mention every block once", "block-mismatch")
    if len(tgt) != len(set(tgt)) or not set(tgt) <= set(src):
        raise MalformedInput("target shape is not a rearrangement of the source", "block-mismatch")
    for i in set(src) - set(tgt):
        if not isinstance(blocks[i], Unit):
            raise MalformedInput("only unit blocks may be dropped", "block-mismatch")

    def build(shape, keep):
        if shape is None:
            return Star()
        if isinstance(shape, int):
            return Var(f"x{shape}") if shape in keep else Star()
        return Pair(build(shape[0], keep), build(shape[1], keep))

    return Clauses(((build(source, set(tgt)), build(target, set(tgt))),))
