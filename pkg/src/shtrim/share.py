"""The set-sharing abstract domain.

An abstraction is either ``BOTTOM`` (unreachable) or a :class:`Sharing`
pair of a variable domain and a set of sharing groups.  Variables are the
dense clause-local indices from :mod:`shtrim.syntax`; both the domain and
each sharing group are stored as integer bitmasks, so a group is just an
``int`` and an abstraction's groups are a ``frozenset[int]``.

A variable of the domain that occurs in no group is ground.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from operator import or_
from typing import Iterable, Mapping

from .syntax import Term, Var, unify_solved_form, var_mask, vars_of


class _Bottom:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "BOTTOM"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


def bottom() -> _Bottom:
    return BOTTOM


def is_bottom(a) -> bool:
    return a is BOTTOM


def popcount(m: int) -> int:
    return m.bit_count()


def bits(m: int) -> list[int]:
    out = []
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return out


def subsets(m: int) -> Iterable[int]:
    """All nonempty submasks of ``m``."""
    sub = m
    while sub:
        yield sub
        sub = (sub - 1) & m


def as_mask(vs) -> int:
    if isinstance(vs, int):
        return vs
    m = 0
    for v in vs:
        m |= 1 << (v.index if isinstance(v, Var) else v)
    return m


@dataclass(frozen=True)
class Sharing:
    domain: int
    groups: frozenset

    def __post_init__(self):
        assert 0 not in self.groups and not reduce(or_, self.groups, 0) & ~self.domain, "group outside domain"
        assert len(self.groups) <= (1 << popcount(self.domain)) - 1

    def __len__(self) -> int:
        return len(self.groups)

    def __repr__(self) -> str:
        return f"Sharing({to_text(self)})"


def make(domain, groups: Iterable) -> Sharing:
    return Sharing(as_mask(domain), frozenset(as_mask(g) for g in groups))


def empty() -> Sharing:
    return Sharing(0, frozenset())


def ground_vars(a: Sharing) -> int:
    covered = 0
    for g in a.groups:
        covered |= g
    return a.domain & ~covered


# ---------------------------------------------------------------------------
# Lattice


def leq(a, b) -> bool:
    if a is BOTTOM:
        return True
    if b is BOTTOM:
        return False
    assert a.domain == b.domain, "domain mismatch"
    return a.groups <= b.groups


def lub(a, b):
    if a is BOTTOM:
        return b
    if b is BOTTOM:
        return a
    assert a.domain == b.domain, "domain mismatch"
    if a.groups >= b.groups:
        return a
    return Sharing(a.domain, a.groups | b.groups)


# ---------------------------------------------------------------------------
# Domain changes


def project(vs, a):
    if a is BOTTOM:
        return a
    vs = as_mask(vs) & a.domain
    if vs == a.domain:
        return a
    return Sharing(vs, frozenset(g & vs for g in a.groups) - {0})


def augment(vs, a):
    if a is BOTTOM:
        return a
    vs = as_mask(vs)
    if vs & a.domain:
        raise ValueError("augment: new variables overlap the domain")
    if not vs:
        return a
    return Sharing(a.domain | vs, a.groups | {1 << i for i in bits(vs)})


def topmost(vs, proj=None, precise: bool = False) -> Sharing:
    """Most general sharing over ``vs``: every nonempty subset.

    With ``precise`` set, variables already ground in ``proj`` are left out
    of the groups (they stay ground).
    """
    vs = as_mask(vs)
    live = vs
    if precise and proj is not None and proj is not BOTTOM:
        live &= ~ground_vars(proj)
    return Sharing(vs, frozenset(subsets(live)))


# ---------------------------------------------------------------------------
# Closure, unification, extend


def star_closure(groups: Iterable[int]) -> frozenset:
    """Close a family of groups under pairwise union.

    Groups are added smallest first; a group that is already a union of
    earlier ones contributes nothing new, so it is skipped.
    """
    out: set[int] = set()
    for s in sorted(set(groups), key=popcount):
        if s in out:
            continue
        out |= {s | r for r in out}
        out.add(s)
    return frozenset(out)


def _amgu_groups(xm: int, tm: int, groups: frozenset) -> frozenset:
    rel_x, rel_t, keep = [], [], []
    for g in groups:
        hit = False
        if g & xm:
            rel_x.append(g)
            hit = True
        if g & tm:
            rel_t.append(g)
            hit = True
        if not hit:
            keep.append(g)
    if not rel_x or not rel_t:
        return frozenset(keep)
    sx = star_closure(rel_x)
    st = star_closure(rel_t)
    return frozenset(keep).union(a | b for a in sx for b in st)


def amgu(x: Var, t: Term, a):
    """Abstract unification of the binding ``x = t``."""
    if a is BOTTOM:
        return a
    xm = 1 << x.index
    tm = var_mask(t)
    assert not (xm | tm) & ~a.domain, "amgu: binding outside the domain"
    return Sharing(a.domain, _amgu_groups(xm, tm, a.groups))


def abstract_unify_literal(t1: Term, t2: Term, a):
    if a is BOTTOM:
        return a
    sf = unify_solved_form(t1, t2)
    if sf is None:
        return BOTTOM
    for x, t in sf:
        a = amgu(x, t, a)
    return a


def call_to_entry(proj, goal: Term, head: Term):
    if proj is BOTTOM:
        return proj
    hm = var_mask(head)
    a = abstract_unify_literal(goal, head, augment(hm, proj))
    return project(hm, a)


def exit_to_prime(beta_exit, head: Term, goal: Term, proj=None):
    """Carry the clause exit over the head back to the goal's variables.

    The goal variables enter as independent free variables, or, when the
    calling ``proj`` is given, with the sharing they had at the call.  The
    latter keeps correlations between goal variables that the head does not
    mention.
    """
    if beta_exit is BOTTOM or proj is BOTTOM:
        return BOTTOM
    gm = var_mask(goal)
    if proj is None:
        start = augment(gm & ~beta_exit.domain, beta_exit)
    else:
        assert proj.domain == gm and not gm & beta_exit.domain
        start = Sharing(beta_exit.domain | gm, beta_exit.groups | proj.groups)
    return project(gm, abstract_unify_literal(head, goal, start))


def extend(call, goal_vars, prime):
    """Fold the success ``prime`` over ``goal_vars`` back into ``call``."""
    if call is BOTTOM or prime is BOTTOM:
        return BOTTOM
    gv = as_mask(goal_vars)
    assert prime.domain == gv & call.domain and not gv & ~call.domain, "extend: domain mismatch"
    keep, rel = [], []
    for g in call.groups:
        (rel if g & gv else keep).append(g)
    pg = prime.groups
    out = set(keep)
    out.update(s for s in star_closure(rel) if s & gv in pg)
    return Sharing(call.domain, frozenset(out))


def ground(vs, a):
    """Make every variable of ``vs`` ground."""
    if a is BOTTOM:
        return a
    vs = as_mask(vs)
    return Sharing(a.domain, frozenset(g for g in a.groups if not g & vs))


# ---------------------------------------------------------------------------
# Independent oracle


def amgu_reference(x: Var, t: Term, a):
    """Same contract as :func:`amgu`, computed the slow and obvious way.

    Works on Python sets of variable indices rather than bitmasks, and
    saturates unions pairwise until nothing changes.
    """
    if a is BOTTOM:
        return a
    sets = {frozenset(bits(g)) for g in a.groups}
    xs = {x.index}
    ts = {v.index for v in vars_of(t)}

    def rel(vs):
        return {s for s in sets if s & vs}

    def saturate(family):
        fam = set(family)
        frontier = fam
        while frontier:
            frontier = {p | q for p in frontier for q in fam} - fam
            fam |= frontier
        return fam

    rx, rt = rel(xs), rel(ts)
    result = (sets - rx - rt) | {p | q for p in saturate(rx) for q in saturate(rt)}
    return Sharing(a.domain, frozenset(as_mask(s) for s in result))


# ---------------------------------------------------------------------------
# Renaming


def remap_mask(m: int, mapping: Mapping[int, int]) -> int:
    out = 0
    for i in bits(m):
        out |= 1 << mapping[i]
    return out


def remap(a, mapping: Mapping[int, int]):
    if a is BOTTOM:
        return a
    return Sharing(remap_mask(a.domain, mapping), frozenset(remap_mask(g, mapping) for g in a.groups))


def shift(a, n: int):
    if a is BOTTOM or n == 0:
        return a
    if n > 0:
        return Sharing(a.domain << n, frozenset(g << n for g in a.groups))
    n = -n
    assert not a.domain & ((1 << n) - 1)
    return Sharing(a.domain >> n, frozenset(g >> n for g in a.groups))


# ---------------------------------------------------------------------------
# Text form: [[X],[X,Y]] / bottom


def group_to_text(g: int, names: Mapping[int, str]) -> str:
    return "[" + ",".join(names.get(i, f"_{i}") for i in bits(g)) + "]"


def sorted_groups(groups: Iterable[int]) -> list[int]:
    return sorted(groups, key=lambda g: (bits(g), g))


def to_text(a, names: Mapping[int, str] | None = None) -> str:
    if a is BOTTOM:
        return "bottom"
    names = names or {}
    return "[" + ",".join(group_to_text(g, names) for g in sorted_groups(a.groups)) + "]"


_GROUP = re.compile(r"\[([^\[\]]*)\]")


def parse_groups(text: str, index: Mapping[str, int]) -> list[int] | None:
    """Parse ``[[X],[X,Y]]`` into bitmasks; returns None for ``bottom``."""
    text = text.strip()
    if text == "bottom":
        return None
    inner = text[1:-1].strip() if text.startswith("[") and text.endswith("]") else None
    if inner is None:
        raise ValueError(f"bad sharing text: {text!r}")
    out = []
    for m in _GROUP.finditer(inner):
        names = [n.strip() for n in m.group(1).split(",") if n.strip()]
        g = 0
        for n in names:
            g |= 1 << index[n]
        if g:
            out.append(g)
    return out


def parse_sharing(text: str, index: Mapping[str, int], domain: Iterable[str] | None = None):
    groups = parse_groups(text, index)
    if groups is None:
        return BOTTOM
    dom = 0
    for g in groups:
        dom |= g
    if domain is not None:
        for n in domain:
            dom |= 1 << index[n]
    return Sharing(dom, frozenset(groups))


class ShareDomain:
    """Operations the solver needs, over plain :class:`Sharing` values."""

    name = "share"

    def __init__(self, precise_topmost: bool = False):
        self.precise_topmost = precise_topmost

    is_bottom = staticmethod(is_bottom)
    project = staticmethod(project)
    augment = staticmethod(augment)
    extend = staticmethod(extend)
    lub = staticmethod(lub)
    leq = staticmethod(leq)
    ground = staticmethod(ground)
    unify = staticmethod(abstract_unify_literal)
    call_to_entry = staticmethod(call_to_entry)
    exit_to_prime = staticmethod(exit_to_prime)
    remap = staticmethod(remap)
    shift = staticmethod(shift)
    to_text = staticmethod(to_text)

    def topmost(self, vs, proj=None):
        return topmost(vs, proj, self.precise_topmost)

    @staticmethod
    def from_sharing(a):
        return a

    @staticmethod
    def to_sharing(a):
        return a

    @staticmethod
    def size(a) -> int:
        return 0 if a is BOTTOM else len(a.groups)

    @staticmethod
    def domain(a) -> int:
        return a.domain

    @staticmethod
    def key(a):
        return a if a is BOTTOM else (a.domain, a.groups)

    @staticmethod
    def equal(a, b) -> bool:
        return a == b
