"""First-order unification over type trees built from frozen dataclasses."""
from dataclasses import fields, is_dataclass, replace

from .pure_core import Meta, fresh_meta


class Unifier:
    def __init__(self):
        self.sub = {}

    def fresh(self):
        return fresh_meta()

    def resolve(self, t):
        while isinstance(t, Meta) and t in self.sub:
            t = self.sub[t]
        return t

    def occurs(self, m, t):
        t = self.resolve(t)
        if t == m:
            return True
        if is_dataclass(t):
            return any(self.occurs(m, getattr(t, f.name)) for f in fields(t))
        return False

    def unify(self, a, b):
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            return True
        if isinstance(a, Meta):
            if self.occurs(a, b):
                return False
            self.sub[a] = b
            return True
        if isinstance(b, Meta):
            return self.unify(b, a)
        if type(a) is not type(b) or not is_dataclass(a):
            return False
        return all(
            self.unify(getattr(a, f.name), getattr(b, f.name)) for f in fields(a)
        )

    def zonk(self, t):
        t = self.resolve(t)
        if isinstance(t, Meta) or not is_dataclass(t):
            return t
        changes = {f.name: self.zonk(getattr(t, f.name)) for f in fields(t)}
        return replace(t, **changes) if changes else t


def instantiate(t, mapping=None):
    """Copy a type, renaming every unification variable to a fresh one."""
    mapping = {} if mapping is None else mapping
    if isinstance(t, Meta):
        if t not in mapping:
            mapping[t] = fresh_meta()
        return mapping[t]
    if not is_dataclass(t):
        return t
    changes = {f.name: instantiate(getattr(t, f.name), mapping) for f in fields(t)}
    return replace(t, **changes) if changes else t
