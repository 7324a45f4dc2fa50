"""Quantum configurations and their probabilistic small-step reduction.

A configuration keeps its quantum state already normalized, as a sparse
vector over wires.  Each wire carries one non-tensor pure type; a linking
entry maps a variable of the main term to a *shape* over wire indices (an int
for a single wire, a pair of shapes for a tensor).  The linking unitary is
never stored: ``linking_unitary`` synthesizes it on demand.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

from . import settings
from .errors import InternalError, MainTypeError, MalformedInput, QclError, StepLimitExceeded
from .main_core import (
    App, BOp, Case, Force, Lam, LetBang, LetPair, LetPairBang, Lift, MInl, MInr,
    MPair, MStar, MSucc, MVar, MZero, Match, Meas, PureT, UnApply, free_vars,
    is_value, ov_basis, rename_canonical, substitute, typecheck_main,
)
from .pure_check import typecheck_term, typecheck_unitary
from .pure_core import (
    LinComb, Pair, Star, Tensor, basis_key, default_metas, split_leaves,
    tensor_leaves, tensor_of,
)
from .pure_denot import shape_leaves, shape_type, synth_monoidal_unitary, unitary_codomain
from .pure_eval import _apply_basis, normalize
from .unify import Unifier

FRESH_PREFIX = "q#"


@dataclass(frozen=True)
class Configuration:
    wires: tuple = ()
    amps: tuple = (((), 1 + 0j),)
    linking: tuple = ()
    term: object = MStar()
    fresh: int = 0

    # -------------------------------------------------------------- views

    def state_type(self):
        return tensor_of(self.wires)

    def state_term(self):
        """The quantum state as a pure value over the right-nested tensor of wires."""
        return LinComb(tuple((a, _join(k)) for k, a in self.amps))

    def shape_of(self, name):
        for n, s in self.linking:
            if n == name:
                return s
        raise KeyError(name)

    def auxiliary(self):
        covered = set()
        for _, s in self.linking:
            covered |= set(shape_leaves(s))
        return [i for i in range(len(self.wires)) if i not in covered]

    def is_semi_value(self):
        return True  # the state is normalized on construction

    def is_value(self):
        return is_value(self.term)


def _join(key):
    if not key:
        return Star()
    out = key[-1]
    for b in reversed(key[:-1]):
        out = Pair(b, out)
    return out


def _sorted_amps(vec):
    tol = settings.eps()
    items = [(k, complex(a)) for k, a in vec.items() if abs(a) > tol]
    items.sort(key=lambda e: tuple(basis_key(b) for b in e[0]))
    return tuple(items)


def _shape_for(q, offset):
    if isinstance(q, Tensor):
        left, offset = _shape_for(q.left, offset)
        right, offset = _shape_for(q.right, offset)
        return (left, right), offset
    return offset, offset + 1


def _assemble(shape, key):
    if isinstance(shape, int):
        return key[shape]
    return Pair(_assemble(shape[0], key), _assemble(shape[1], key))


def _map_shape(shape, f):
    if isinstance(shape, int):
        return f(shape)
    return (_map_shape(shape[0], f), _map_shape(shape[1], f))


@dataclass(frozen=True)
class Distribution:
    branches: tuple
    steps: int = 0
    path_probability: Optional[float] = None

    def total(self):
        return sum(p for p, _ in self.branches)

    def __iter__(self):
        return iter(self.branches)

    def __len__(self):
        return len(self.branches)


# ---------------------------------------------------------------- construction


def initial_config(term):
    return Configuration(term=term)


def make_config(state, blocks, term, fresh=0):
    """Configuration from a closed pure state and ``(name, shape)`` blocks over its leaves."""
    q = default_metas(typecheck_term([], state))
    nv = normalize(state, check=False)
    wires = tuple(tensor_leaves(q))
    vec = {tuple(split_leaves(b, q)): a for a, b in nv}
    return Configuration(wires, _sorted_amps(vec), tuple(blocks), term, fresh)


# ---------------------------------------------------------------- well-formedness


@dataclass(frozen=True)
class WfResult:
    ok: bool
    condition: Optional[str] = None
    message: str = ""
    type: object = None

    def __bool__(self):
        return self.ok


def linking_unitary(c):
    target = [s for _, s in c.linking] + c.auxiliary()
    tgt = None
    for s in reversed(target):
        tgt = s if tgt is None else (s, tgt)
    return synth_monoidal_unitary(list(c.wires), target=tgt)


def wf_config(c, expected=None, aux=None):
    """Check the four conditions of a well-formed configuration with auxiliary data."""
    q = c.state_type()
    try:
        got = typecheck_term([], c.state_term())
    except QclError as e:
        return WfResult(False, "state", f"state is not well formed: {e}")
    un = Unifier()
    if not un.unify(got, q):
        return WfResult(False, "state", "state type does not match its wires")

    seen = []
    for _, s in c.linking:
        seen += shape_leaves(s)
    if len(seen) != len(set(seen)) or not set(seen) <= set(range(len(c.wires))):
        return WfResult(False, "linking", "linking blocks overlap or point outside the state")
    names = [n for n, _ in c.linking]
    if len(names) != len(set(names)):
        return WfResult(False, "linking", "a linking variable is repeated")
    block_types = [shape_type(s, c.wires) for _, s in c.linking]
    aux_types = [c.wires[i] for i in c.auxiliary()]
    try:
        ut = typecheck_unitary(linking_unitary(c))
    except QclError as e:
        return WfResult(False, "linking", f"linking unitary is ill formed: {e}")
    un = Unifier()
    if not (un.unify(ut.domain, q) and un.unify(ut.codomain, tensor_of(block_types + aux_types))):
        return WfResult(False, "linking", "linking unitary has the wrong type")

    try:
        ty = typecheck_main([(n, BOp(t)) for n, t in zip(names, block_types)], c.term)
    except QclError as e:
        return WfResult(False, "term", f"term does not type check: {e}")
    if expected is not None and not Unifier().unify(ty, expected):
        return WfResult(False, "term", "term has an unexpected type", ty)

    if aux is not None and list(aux) != aux_types:
        return WfResult(False, "auxiliary", "auxiliary types do not match", ty)
    return WfResult(True, type=ty)


# ---------------------------------------------------------------- quantum actions


@lru_cache(maxsize=1 << 16)
def _apply_cached(u, b):
    return tuple(_apply_basis(u, b).items())


def _fresh_name(c):
    return f"{FRESH_PREFIX}{c.fresh}", replace(c, fresh=c.fresh + 1)


def _prepare(c, t):
    try:
        q = default_metas(typecheck_term([], t))
    except QclError as e:
        raise InternalError(f"pure term in a well-typed program fails to check: {e}")
    nv = normalize(t, check=False)
    leaves = tensor_leaves(q)
    shape, _ = _shape_for(q, len(c.wires))
    vec = {}
    for key, a in c.amps:
        for alpha, b in nv:
            vec[key + tuple(split_leaves(b, q))] = a * alpha
    name, c = _fresh_name(c)
    c = replace(
        c,
        wires=c.wires + tuple(leaves),
        amps=_sorted_amps(vec),
        linking=c.linking + ((name, shape),),
    )
    return c, MVar(name)


def _drop_wires(c, removed, linking):
    keep = [i for i in range(len(c.wires)) if i not in removed]
    index = {old: new for new, old in enumerate(keep)}
    linking = tuple((n, _map_shape(s, index.__getitem__)) for n, s in linking)
    return keep, index, linking


def _apply_unitary(c, u, name):
    shape = c.shape_of(name)
    dom = shape_type(shape, c.wires)
    cod = unitary_codomain(u, dom)
    idx = shape_leaves(shape)
    if cod == dom:
        vec = {}
        for key, a in c.amps:
            for b, x in _apply_cached(u, _assemble(shape, key)):
                new = list(key)
                for i, leaf in zip(idx, split_leaves(b, cod)):
                    new[i] = leaf
                new = tuple(new)
                vec[new] = vec.get(new, 0) + a * x
        return replace(c, amps=_sorted_amps(vec))
    keep, index, _ = _drop_wires(c, set(idx), ())
    new_shape, _ = _shape_for(cod, len(keep))
    vec = {}
    for key, a in c.amps:
        rest = tuple(key[i] for i in keep)
        for b, x in _apply_cached(u, _assemble(shape, key)):
            new = rest + tuple(split_leaves(b, cod))
            vec[new] = vec.get(new, 0) + a * x
    linking = tuple(
        (n, new_shape if n == name else _map_shape(s, index.__getitem__))
        for n, s in c.linking
    )
    wires = tuple(c.wires[i] for i in keep) + tuple(tensor_leaves(cod))
    return replace(c, wires=wires, amps=_sorted_amps(vec), linking=linking)


def _measure(c, name):
    shape = c.shape_of(name)
    idx = shape_leaves(shape)
    groups = {}
    for key, a in c.amps:
        groups.setdefault(_assemble(shape, key), []).append((key, a))
    others = tuple((n, s) for n, s in c.linking if n != name)
    keep, _, linking = _drop_wires(c, set(idx), others)
    wires = tuple(c.wires[i] for i in keep)
    tol2 = settings.eps() ** 2
    out = []
    for b in sorted(groups, key=basis_key):
        p = sum(abs(a) ** 2 for _, a in groups[b])
        if p <= tol2:
            continue
        scale = p ** -0.5
        vec = {}
        for key, a in groups[b]:
            rest = tuple(key[i] for i in keep)
            vec[rest] = vec.get(rest, 0) + a * scale
        out.append((p, replace(c, wires=wires, amps=_sorted_amps(vec), linking=linking), ov_basis(b)))
    return out


def _gather(c, x, y):
    sx, sy = c.shape_of(x), c.shape_of(y)
    name, c = _fresh_name(c)
    linking = []
    for n, s in c.linking:
        if n == x:
            linking.append((name, (sx, sy)))
        elif n != y:
            linking.append((n, s))
    return replace(c, linking=tuple(linking)), name


def _divide(c, z):
    s = c.shape_of(z)
    if isinstance(s, int):
        raise InternalError(f"block {z} of a single wire cannot be divided")
    n1, c = _fresh_name(c)
    n2, c = _fresh_name(c)
    linking = []
    for n, t in c.linking:
        if n == z:
            linking += [(n1, s[0]), (n2, s[1])]
        else:
            linking.append((n, t))
    return replace(c, linking=tuple(linking)), n1, n2


# ---------------------------------------------------------------- reduction


def _redex(c, m):
    """Branches ``[(p, config, term)]`` for a redex at the root, or None."""
    if isinstance(m, Case) and is_value(m.scrut):
        if isinstance(m.scrut, MInl):
            return [(1.0, c, substitute(m.lbody, {m.lname: m.scrut.term}))]
        if isinstance(m.scrut, MInr):
            return [(1.0, c, substitute(m.rbody, {m.rname: m.scrut.term}))]
    if isinstance(m, LetPair) and isinstance(m.bound, MPair) and is_value(m.bound):
        return [(1.0, c, substitute(m.body, {m.x: m.bound.left, m.y: m.bound.right}))]
    if isinstance(m, Force) and isinstance(m.term, Lift):
        return [(1.0, c, m.term.term)]
    if isinstance(m, App) and isinstance(m.fn, Lam) and is_value(m.arg):
        return [(1.0, c, substitute(m.fn.body, {m.fn.name: m.arg}))]
    if isinstance(m, Match) and is_value(m.scrut):
        if isinstance(m.scrut, MZero):
            return [(1.0, c, m.zbody)]
        if isinstance(m.scrut, MSucc):
            return [(1.0, c, substitute(m.sbody, {m.name: m.scrut.term}))]
    if isinstance(m, PureT):
        c2, v = _prepare(c, m.term)
        return [(1.0, c2, v)]
    if isinstance(m, Meas) and isinstance(m.term, MVar):
        return _measure(c, m.term.name)
    if isinstance(m, UnApply) and isinstance(m.term, MVar):
        return [(1.0, _apply_unitary(c, m.unitary, m.term.name), m.term)]
    if (
        isinstance(m, LetBang)
        and isinstance(m.bound, MPair)
        and isinstance(m.bound.left, MVar)
        and isinstance(m.bound.right, MVar)
    ):
        c2, z = _gather(c, m.bound.left.name, m.bound.right.name)
        return [(1.0, c2, substitute(m.body, {m.name: MVar(z)}))]
    if isinstance(m, LetPairBang) and isinstance(m.bound, MVar):
        c2, x, y = _divide(c, m.bound.name)
        return [(1.0, c2, substitute(m.body, {m.x: MVar(x), m.y: MVar(y)}))]
    return None


def _contexts(m):
    """Evaluation positions of ``m``: (child, rebuild) for the first non-value child."""
    if isinstance(m, MPair):
        if not is_value(m.left):
            return m.left, lambda e: MPair(e, m.right)
        return m.right, lambda e: MPair(m.left, e)
    if isinstance(m, App):
        if not is_value(m.fn):
            return m.fn, lambda e: App(e, m.arg)
        return m.arg, lambda e: App(m.fn, e)
    if isinstance(m, (MInl, MInr, MSucc, Force, Meas)):
        return m.term, type(m)
    if isinstance(m, UnApply):
        return m.term, lambda e: UnApply(m.unitary, e)
    if isinstance(m, Case):
        return m.scrut, lambda e: Case(e, m.lname, m.lbody, m.rname, m.rbody)
    if isinstance(m, Match):
        return m.scrut, lambda e: Match(e, m.zbody, m.name, m.sbody)
    if isinstance(m, (LetPair, LetPairBang)):
        return m.bound, lambda e: type(m)(m.x, m.y, e, m.body)
    if isinstance(m, LetBang):
        return m.bound, lambda e: LetBang(m.name, e, m.body)
    return None


def _step_term(c, m):
    out = _redex(c, m)
    if out is not None:
        return out
    ctx = _contexts(m)
    if ctx is None or is_value(ctx[0]):
        return None
    child, rebuild = ctx
    inner = _step_term(c, child)
    if inner is None:
        return None
    return [(p, c2, rebuild(t)) for p, c2, t in inner]


def step(c):
    """One reduction step; an empty tuple for value configurations."""
    if c.is_value():
        return ()
    out = _step_term(c, c.term)
    if out is None:
        raise InternalError("stuck configuration", dump=c)
    return tuple((p, replace(c2, term=t)) for p, c2, t in out)


def reduce_sv(c):
    # states are kept normalized, so the rewrite around a step is the identity
    return step(c)


def check_subject_reduction(c, c2, expected=None):
    before = wf_config(c, expected)
    if not before:
        return False
    after = wf_config(c2)
    return bool(after) and Unifier().unify(before.type, after.type)


# ---------------------------------------------------------------- running


def canonical(c):
    """Configuration with names and wire order normalized, for merging leaves."""
    order = [n for n in free_vars(c.term) if n in dict(c.linking)]
    order += [n for n, _ in c.linking if n not in order]
    names = {n: f"{FRESH_PREFIX}{i}" for i, n in enumerate(order)}
    linking = dict(c.linking)
    perm = []
    for n in order:
        perm += shape_leaves(linking[n])
    perm += c.auxiliary()
    index = {old: new for new, old in enumerate(perm)}
    new_linking = tuple((names[n], _map_shape(linking[n], index.__getitem__)) for n in order)
    amps = {tuple(k[i] for i in perm): a for k, a in c.amps}
    return Configuration(
        wires=tuple(c.wires[i] for i in perm),
        amps=_sorted_amps(amps),
        linking=new_linking,
        term=rename_canonical(c.term, names),
        fresh=len(order),
    )


def _same_leaf(c1, c2):
    if (c1.wires, c1.linking, c1.term) != (c2.wires, c2.linking, c2.term):
        return False
    d1, d2 = dict(c1.amps), dict(c2.amps)
    tol = settings.eps()
    return all(abs(d1.get(k, 0) - d2.get(k, 0)) <= tol for k in d1.keys() | d2.keys())


def _check_branches(c, branches):
    total = sum(p for p, _ in branches)
    if abs(total - 1) > settings.eps():
        raise InternalError(f"branch probabilities sum to {total}", dump=c)


def run(
    c,
    mode="exhaustive",
    seed=None,
    max_steps=10**6,
    debug=False,
    merge=True,
    on_step=None,
):
    """Evaluate to a distribution over value configurations."""
    if mode == "sample":
        return _sample(c, seed, max_steps, debug, on_step)
    if mode != "exhaustive":
        raise MalformedInput(f"unknown run mode {mode!r}")
    expected = None
    if debug:
        res = wf_config(c)
        if not res:
            raise MainTypeError(f"configuration is not well formed: {res.message}", "ill-formed")
        expected = res.type
    leaves = []
    frontier = deque([(1.0, c)])
    steps = 0
    while frontier:
        p, cur = frontier.popleft()
        if cur.is_value():
            leaves.append((p, cur))
            continue
        steps += 1
        if steps > max_steps:
            raise StepLimitExceeded(f"no value after {max_steps} steps")
        branches = reduce_sv(cur)
        _check_branches(cur, branches)
        if on_step is not None:
            on_step(cur, branches)
        for q, nxt in branches:
            if debug and not check_subject_reduction(cur, nxt, expected):
                raise InternalError(
                    f"subject reduction violated: {wf_config(nxt).message}", dump=(cur, nxt)
                )
            frontier.append((p * q, nxt))
    if merge:
        leaves = _merge(leaves)
    return Distribution(tuple(leaves), steps)


def _merge(leaves):
    merged = []
    for p, leaf in leaves:
        can = canonical(leaf)
        for i, (q, other) in enumerate(merged):
            if _same_leaf(can, other):
                merged[i] = (p + q, other)
                break
        else:
            merged.append((p, can))
    return merged


def _sample(c, seed, max_steps, debug, on_step):
    rng = random.Random(seed)
    prob = 1.0
    steps = 0
    expected = wf_config(c).type if debug else None
    while not c.is_value():
        steps += 1
        if steps > max_steps:
            raise StepLimitExceeded(f"no value after {max_steps} steps")
        branches = reduce_sv(c)
        _check_branches(c, branches)
        if on_step is not None:
            on_step(c, branches)
        r = rng.random() * sum(p for p, _ in branches)
        acc = 0.0
        for p, nxt in branches:
            acc += p
            if r < acc:
                break
        if debug and not check_subject_reduction(c, nxt, expected):
            raise InternalError("subject reduction violated", dump=(c, nxt))
        prob *= p
        c = nxt
    return Distribution(((1.0, c),), steps, path_probability=prob)
