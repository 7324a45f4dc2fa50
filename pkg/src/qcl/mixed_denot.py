"""Superoperator semantics of the first-order fragment.

Orientation is Heisenberg throughout: a ``Superoperator`` from algebra A to
algebra B stores the matrix taking vectorized B-observables to A-observables,
so ``f.then(g)`` multiplies ``f.matrix @ g.matrix``.

An algebra element is a list of square blocks; its vector is the row-major
flattening of each block, concatenated.  The tensor of two algebras lists
block pairs with the left factor major and embeds each pair by ``kron``, which
makes the tensor strictly associative at the level of vectors.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import settings
from .config_eval import run
from .errors import MainTypeError, MalformedInput, OutOfFragment, TruncationError
from .main_core import (
    App, BOp, Bang, Case, Force, Lam, LetBang, LetPair, LetPairBang, Lift, Lolli,
    MInl, MInr, MPair, MStar, MSucc, MSum, MTensor, MUnit, MVar, MZero, Match,
    Meas, Nat, PureT, UnApply, free_vars, ov_type, substitute, typecheck_main,
)
from .pure_core import Meta, default_metas
from .unify import Unifier
from .pure_denot import TruncationConfig, basis_index, interp_term, interp_type, interp_unitary

# ---------------------------------------------------------------- algebras


@dataclass(frozen=True)
class MultiMatrixAlgebra:
    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if any(b < 1 for b in self.blocks):
            raise ValueError("block dimensions must be positive")

    @property
    def vec_dim(self):
        return sum(b * b for b in self.blocks)

    def offsets(self):
        out, acc = [], 0
        for b in self.blocks:
            out.append(acc)
            acc += b * b
        return out

    def unit(self):
        return self.vectorize([np.eye(b) for b in self.blocks])

    def vectorize(self, mats):
        if not mats:
            return np.zeros(0, dtype=complex)
        return np.concatenate([np.asarray(m, dtype=complex).reshape(-1) for m in mats])

    def unvectorize(self, vec):
        out = []
        for off, b in zip(self.offsets(), self.blocks):
            out.append(np.asarray(vec[off: off + b * b]).reshape(b, b))
        return out

    def tensor(self, other):
        return MultiMatrixAlgebra(tuple(a * b for a in self.blocks for b in other.blocks))

    def direct_sum(self, other):
        return MultiMatrixAlgebra(self.blocks + other.blocks)


SCALARS = MultiMatrixAlgebra((1,))


def _tensor_index(a, b):
    """``idx[p, q]``: position in vec(a (x) b) of the product of basis elements p of a and q of b."""
    idx = np.zeros((a.vec_dim, b.vec_dim), dtype=np.int64)
    offs_t = a.tensor(b).offsets()
    k = 0
    for i, (oa, da) in enumerate(zip(a.offsets(), a.blocks)):
        for j, (ob, db) in enumerate(zip(b.offsets(), b.blocks)):
            ot = offs_t[k]
            k += 1
            r1, c1, r2, c2 = np.meshgrid(
                np.arange(da), np.arange(da), np.arange(db), np.arange(db), indexing="ij"
            )
            pa = oa + r1 * da + c1
            pb = ob + r2 * db + c2
            idx[pa, pb] = ot + (r1 * db + r2) * (da * db) + (c1 * db + c2)
    return idx


# ---------------------------------------------------------------- superoperators


@dataclass(frozen=True, eq=False)
class Superoperator:
    source: MultiMatrixAlgebra
    target: MultiMatrixAlgebra
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.source.vec_dim, self.target.vec_dim):
            raise MalformedInput(
                f"superoperator matrix has shape {m.shape}, expected "
                f"{(self.source.vec_dim, self.target.vec_dim)}"
            )
        object.__setattr__(self, "matrix", m)

    def then(self, g):
        if self.target != g.source:
            raise MalformedInput("composed superoperators do not agree on the middle algebra")
        return Superoperator(self.source, g.target, self.matrix @ g.matrix)

    def tensor(self, g):
        src = self.source.tensor(g.source)
        tgt = self.target.tensor(g.target)
        m = np.zeros((src.vec_dim, tgt.vec_dim), dtype=complex)
        si = _tensor_index(self.source, g.source).reshape(-1)
        ti = _tensor_index(self.target, g.target).reshape(-1)
        m[np.ix_(si, ti)] = np.kron(self.matrix, g.matrix)
        return Superoperator(src, tgt, m)

    def apply(self, observable):
        """Pull a target observable (list of blocks) back to the source."""
        vec = self.target.vectorize(observable)
        return self.source.unvectorize(self.matrix @ vec)

    def is_unital(self, tol=None):
        tol = settings.eps() if tol is None else tol
        diff = self.matrix @ self.target.unit() - self.source.unit()
        return diff.size == 0 or np.abs(diff).max() <= tol

    def is_subunital(self, tol=None):
        tol = settings.eps() if tol is None else tol
        gap = self.source.unvectorize(self.source.unit() - self.matrix @ self.target.unit())
        return all(np.linalg.eigvalsh((g + g.conj().T) / 2).min() >= -tol for g in gap)

    def choi_blocks(self):
        out = []
        for oa, a in zip(self.source.offsets(), self.source.blocks):
            for ob, b in zip(self.target.offsets(), self.target.blocks):
                sub = self.matrix[oa: oa + a * a, ob: ob + b * b].reshape(a, a, b, b)
                out.append(sub.transpose(2, 0, 3, 1).reshape(b * a, b * a))
        return out

    def is_cp(self, tol=None):
        tol = settings.eps() if tol is None else tol
        for c in self.choi_blocks():
            h = (c + c.conj().T) / 2
            if np.abs(c - h).max() > tol or np.linalg.eigvalsh(h).min() < -tol:
                return False
        return True

    def distance(self, other):
        return float(np.abs(self.matrix - other.matrix).max()) if self.matrix.size else 0.0


def identity(alg):
    return Superoperator(alg, alg, np.eye(alg.vec_dim, dtype=complex))


def discard(alg):
    return Superoperator(alg, SCALARS, alg.unit().reshape(-1, 1))


def injection(left, right, which):
    """Heisenberg map of the injection of ``left`` (which=0) or ``right`` into ``left + right``."""
    src = left if which == 0 else right
    m = np.zeros((src.vec_dim, left.vec_dim + right.vec_dim), dtype=complex)
    off = 0 if which == 0 else left.vec_dim
    m[:, off: off + src.vec_dim] = np.eye(src.vec_dim)
    return Superoperator(src, left.direct_sum(right), m)


def copair(f, g):
    if f.target != g.target:
        raise MalformedInput("copairing maps with different targets")
    return Superoperator(f.source.direct_sum(g.source), f.target, np.vstack([f.matrix, g.matrix]))


def b_functor(f, tol=None):
    """``B(f)`` for an isometry ``f``: the observable ``phi`` pulls back to ``f^dag phi f``."""
    f = np.asarray(f, dtype=complex)
    tol = 1e-8 if tol is None else tol
    if np.abs(f.conj().T @ f - np.eye(f.shape[1])).max() > tol:
        raise MalformedInput("b_functor expects an isometry", "not-isometry")
    n2, n1 = f.shape
    return Superoperator(
        MultiMatrixAlgebra((n1,)), MultiMatrixAlgebra((n2,)), np.kron(f.conj().T, f.T)
    )


def permutation(algs, order):
    """Symmetry iso from the tensor of ``algs`` to the tensor of ``algs`` reordered by ``order``."""
    if not algs:
        return identity(SCALARS)
    src = reduce(MultiMatrixAlgebra.tensor, algs)
    tgt = reduce(MultiMatrixAlgebra.tensor, [algs[i] for i in order])
    # position of every tuple of per-factor basis elements, in both layouts
    src_pos = _multi_index(algs)
    tgt_pos = _multi_index([algs[i] for i in order])
    # tgt_pos is indexed in target factor order; reorder its axes back to source order
    inverse = np.argsort(order)
    tgt_in_src_axes = tgt_pos.transpose(inverse)
    m = np.zeros((src.vec_dim, tgt.vec_dim), dtype=complex)
    m[src_pos.reshape(-1), tgt_in_src_axes.reshape(-1)] = 1
    return Superoperator(src, tgt, m)


def _multi_index(algs):
    idx = np.arange(algs[0].vec_dim)
    acc = algs[0]
    for a in algs[1:]:
        t = _tensor_index(acc, a)
        idx = t[idx.reshape(-1)].reshape(idx.shape + (a.vec_dim,))
        acc = acc.tensor(a)
    return idx


# ---------------------------------------------------------------- types


def _cfg(cfg):
    return cfg if cfg is not None else TruncationConfig()


def interp_main_type(a, cfg=None):
    cfg = _cfg(cfg)
    if isinstance(a, MUnit):
        return SCALARS
    if isinstance(a, Nat):
        return MultiMatrixAlgebra((1,) * cfg.qnat_dim)
    if isinstance(a, MSum):
        return interp_main_type(a.left, cfg).direct_sum(interp_main_type(a.right, cfg))
    if isinstance(a, MTensor):
        return interp_main_type(a.left, cfg).tensor(interp_main_type(a.right, cfg))
    if isinstance(a, BOp):
        return MultiMatrixAlgebra((interp_type(default_metas(a.pure), cfg),))
    if isinstance(a, Bang):
        raise OutOfFragment("the type !A has no first-order denotation", "unsupported-construct")
    if isinstance(a, Lolli):
        raise OutOfFragment("the type A -o B has no first-order denotation", "unsupported-construct")
    raise MalformedInput(f"not a main type: {a!r}")


def meas_map(q, cfg=None):
    """Measurement ``B(Q) -> ov(Q)``: the indicator of basis value x pulls back to ``|x><x|``."""
    cfg = _cfg(cfg)
    n = interp_type(q, cfg)
    src = MultiMatrixAlgebra((n,))
    tgt = interp_main_type(ov_type(q), cfg)
    m = np.zeros((n * n, n), dtype=complex)
    for x in range(n):
        m[x * n + x, x] = 1
    return Superoperator(src, tgt, m)


def succ_map(cfg=None):
    d = _cfg(cfg).qnat_dim
    alg = MultiMatrixAlgebra((1,) * d)
    m = np.zeros((d, d), dtype=complex)
    for n in range(d - 1):
        m[n, n + 1] = 1
    return Superoperator(alg, alg, m)


def zero_map(cfg=None):
    d = _cfg(cfg).qnat_dim
    m = np.zeros((1, d), dtype=complex)
    m[0, 0] = 1
    return Superoperator(SCALARS, MultiMatrixAlgebra((1,) * d), m)


# ---------------------------------------------------------------- judgements


def _default(a):
    if isinstance(a, Meta):
        return MUnit()
    if isinstance(a, (MSum, MTensor)):
        return type(a)(_default(a.left), _default(a.right))
    if isinstance(a, BOp):
        return BOp(default_metas(a.pure))
    if isinstance(a, (Bang,)):
        return Bang(_default(a.body))
    if isinstance(a, Lolli):
        return Lolli(_default(a.arg), _default(a.res))
    return a


class _Interp:
    def __init__(self, cfg):
        self.cfg = cfg

    def alg(self, a):
        return interp_main_type(a, self.cfg)

    def ctx_alg(self, ctx):
        algs = [self.alg(t) for _, t in ctx]
        return reduce(MultiMatrixAlgebra.tensor, algs) if algs else SCALARS

    def type_of(self, ctx, m):
        fv = set(free_vars(m))
        return _default(typecheck_main([(n, t) for n, t in ctx if n in fv], m))

    def reorder(self, ctx, names):
        """Iso from ctx to the context listing ``names`` first, then the rest."""
        order = [i for i, (n, _) in enumerate(ctx) if n in names]
        order += [i for i, (n, _) in enumerate(ctx) if n not in names]
        new = [ctx[i] for i in order]
        return permutation([self.alg(t) for _, t in ctx], order), new

    def den(self, ctx, m, ty):
        fv = set(free_vars(m))
        if any(n not in fv for n, _ in ctx):
            parts = [identity(self.alg(t)) if n in fv else discard(self.alg(t)) for n, t in ctx]
            drop = reduce(Superoperator.tensor, parts)
            kept = [(n, t) for n, t in ctx if n in fv]
            return drop.then(self.den(kept, m, ty))
        return self.den_exact(ctx, m, ty)

    def split(self, ctx, first):
        """Reorder ctx so the free variables of ``first`` come first; returns (iso, ctx1, ctx2)."""
        fv = set(free_vars(first))
        iso, new = self.reorder(ctx, fv)
        k = sum(1 for n, _ in ctx if n in fv)
        return iso, new[:k], new[k:]

    def then_with_rest(self, ctx, bound, bound_ty, rest_map):
        """``(den(ctx1, bound) (x) id_ctx2)`` followed by ``rest_map``."""
        iso, c1, c2 = self.split(ctx, bound)
        head = self.den(c1, bound, bound_ty).tensor(identity(self.ctx_alg(c2)))
        return iso.then(head).then(rest_map(c2))

    def den_lets(self, ctx, lets, body, ty):
        if not lets:
            return self.den(ctx, body, ty)
        (name, arg), rest = lets[0], lets[1:]
        st = self.type_of(ctx, arg)
        return self.then_with_rest(
            ctx, arg, st, lambda c2: self.den_lets([(name, st)] + c2, rest, body, ty)
        )

    def den_exact(self, ctx, m, ty):
        cfg = self.cfg
        if isinstance(m, MStar):
            return identity(SCALARS)
        if isinstance(m, MVar):
            return identity(self.alg(ty))
        if isinstance(m, MZero):
            return zero_map(cfg)
        if isinstance(m, MSucc):
            return self.den(ctx, m.term, Nat()).then(succ_map(cfg))
        if isinstance(m, (MInl, MInr)):
            inner = ty.left if isinstance(m, MInl) else ty.right
            inj = injection(self.alg(ty.left), self.alg(ty.right), 0 if isinstance(m, MInl) else 1)
            return self.den(ctx, m.term, inner).then(inj)
        if isinstance(m, MPair):
            iso, c1, c2 = self.split(ctx, m.left)
            return iso.then(self.den(c1, m.left, ty.left).tensor(self.den(c2, m.right, ty.right)))
        if isinstance(m, Case):
            st = self.type_of(ctx, m.scrut)
            return self.then_with_rest(
                ctx, m.scrut, st,
                lambda c2: copair(
                    self.den([(m.lname, st.left)] + c2, m.lbody, ty),
                    self.den([(m.rname, st.right)] + c2, m.rbody, ty),
                ),
            )
        if isinstance(m, Match):
            d = cfg.qnat_dim

            def branches(c2):
                z = self.den(c2, m.zbody, ty)
                s = self.den([(m.name, Nat())] + c2, m.sbody, ty)
                rows = (d - 1) * self.ctx_alg(c2).vec_dim
                src = MultiMatrixAlgebra((1,) * d).tensor(self.ctx_alg(c2))
                return Superoperator(src, z.target, np.vstack([z.matrix, s.matrix[:rows]]))

            return self.then_with_rest(ctx, m.scrut, Nat(), branches)
        if isinstance(m, LetPair):
            st = self.type_of(ctx, m.bound)
            return self.then_with_rest(
                ctx, m.bound, st,
                lambda c2: self.den([(m.x, st.left), (m.y, st.right)] + c2, m.body, ty),
            )
        if isinstance(m, LetBang):
            st = self.type_of(ctx, m.bound)
            merged = BOp(_pure_tensor(st.left.pure, st.right.pure))
            return self.then_with_rest(
                ctx, m.bound, st, lambda c2: self.den([(m.name, merged)] + c2, m.body, ty)
            )
        if isinstance(m, LetPairBang):
            st = self.type_of(ctx, m.bound)
            q = st.pure
            return self.then_with_rest(
                ctx, m.bound, st,
                lambda c2: self.den([(m.x, BOp(q.left)), (m.y, BOp(q.right))] + c2, m.body, ty),
            )
        if isinstance(m, PureT):
            vec = interp_term([], m.term, cfg)
            return b_functor(vec)
        if isinstance(m, Meas):
            st = self.type_of(ctx, m.term)
            return self.den(ctx, m.term, st).then(meas_map(st.pure, cfg))
        if isinstance(m, UnApply):
            st = self.type_of(ctx, m.term)
            mat = interp_unitary(m.unitary, cfg, domain=st.pure)
            return self.den(ctx, m.term, st).then(b_functor(mat))
        if isinstance(m, App):
            lets, body = _spine(m)
            return self.den_lets(ctx, lets, body, ty)
        if isinstance(m, Lam):
            raise OutOfFragment("lambda abstraction has no first-order denotation", "unsupported-construct")
        if isinstance(m, Lift):
            raise OutOfFragment("lift has no first-order denotation", "unsupported-construct")
        if isinstance(m, Force):
            raise OutOfFragment("force has no first-order denotation", "unsupported-construct")
        raise MalformedInput(f"not a main term: {m!r}")


def _pure_tensor(a, b):
    from .pure_core import Tensor

    return Tensor(a, b)


_let_ids = itertools.count()


def _spine(m):
    """A direct beta-redex spine as ``([(name, arg), ...], body)`` with fresh binder names."""
    args = []
    head = m
    while isinstance(head, App):
        args.append(head.arg)
        head = head.fn
    args.reverse()
    lets = []
    for arg in args:
        if not isinstance(head, Lam):
            raise OutOfFragment(
                "application of a non-lambda head has no first-order denotation",
                "unsupported-construct",
            )
        fresh = f"{head.name}%{next(_let_ids)}"
        lets.append((fresh, arg))
        head = substitute(head.body, {head.name: MVar(fresh)})
    return lets, head


def interp_main_judgement(ctx, m, cfg=None, expected=None):
    """Superoperator from the tensor of the context's algebras to the algebra of ``m``'s type.

    ``expected`` fixes parts of the type the term leaves open, e.g. the other side of ``inl *``.
    """
    cfg = _cfg(cfg)
    for n, t in ctx:
        interp_main_type(t, cfg)
    un = Unifier()
    ty = typecheck_main(ctx, m, un)
    if expected is not None and not un.unify(ty, expected):
        raise MainTypeError("term does not have the expected type", "type-mismatch")
    ty = _default(un.zonk(ty))
    interp_main_type(ty, cfg)
    return _Interp(cfg).den(list(ctx), m, ty)


# ---------------------------------------------------------------- configurations


def state_vector(c, order, cfg=None):
    """Dense state of a configuration with its wires taken in ``order``."""
    cfg = _cfg(cfg)
    dims = [interp_type(c.wires[i], cfg) for i in order]
    vec = np.zeros(int(np.prod(dims)) if dims else 1, dtype=complex)
    for key, a in c.amps:
        pos = 0
        for i, d in zip(order, dims):
            pos = pos * d + basis_index(c.wires[i], key[i], cfg)
        vec[pos] += a
    return vec


def config_type(c):
    """Result type of a configuration, with undetermined parts defaulted to unit."""
    from .pure_denot import shape_type

    ctx = [(n, BOp(shape_type(s, c.wires))) for n, s in c.linking]
    return _default(typecheck_main(ctx, c.term))


def interp_config(c, cfg=None, check_unital=True, expected=None):
    """Superoperator from the scalars to the algebra of the configuration's result type."""
    cfg = _cfg(cfg)
    from .pure_denot import shape_leaves, shape_type

    order = []
    for _, s in c.linking:
        order += shape_leaves(s)
    aux = c.auxiliary()
    vec = state_vector(c, order + aux, cfg)
    state = b_functor(vec.reshape(-1, 1))
    ctx = [(n, BOp(shape_type(s, c.wires))) for n, s in c.linking]
    body = interp_main_judgement(ctx, c.term, cfg, expected)
    if aux:
        aux_dim = int(np.prod([interp_type(c.wires[i], cfg) for i in aux]))
        body = body.tensor(identity(MultiMatrixAlgebra((aux_dim,))))
    out = state.then(body)
    if check_unital and not out.is_unital(1e-8):
        raise TruncationError(
            "probability mass leaves the truncated Nat range; raise the truncation"
        )
    return out


@dataclass(frozen=True)
class AdequacyReport:
    ok: bool
    deviation: float
    leaves: int


def check_adequacy(c, cfg=None, tol=1e-6):
    cfg = _cfg(cfg)
    ty = config_type(c)
    lhs = interp_config(c, cfg, expected=ty)
    dist = run(c)
    acc = np.zeros_like(lhs.matrix)
    for p, leaf in dist:
        acc = acc + p * interp_config(leaf, cfg, expected=ty).matrix
    dev = float(np.abs(lhs.matrix - acc).max())
    return AdequacyReport(dev <= tol, dev, len(dist))


def check_soundness(c, cfg=None, tol=1e-6, max_configs=10_000):
    """One-step soundness on every configuration reachable from ``c``: returns the worst deviation."""
    from .config_eval import reduce_sv

    cfg = _cfg(cfg)
    worst = 0.0
    frontier = [c]
    seen = 0
    while frontier:
        cur = frontier.pop()
        if cur.is_value():
            continue
        seen += 1
        if seen > max_configs:
            break
        ty = config_type(cur)
        lhs = interp_config(cur, cfg, expected=ty).matrix
        branches = reduce_sv(cur)
        acc = sum(p * interp_config(nxt, cfg, expected=ty).matrix for p, nxt in branches)
        worst = max(worst, float(np.abs(lhs - acc).max()))
        frontier.extend(nxt for _, nxt in branches)
    return worst <= tol, worst
