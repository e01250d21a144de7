"""Clique-compressed set-sharing.

A clique ``C`` stands for every nonempty subset of ``C``.  An abstraction is
``BOTTOM`` or a :class:`CliqueSharing` holding a domain mask, a set of
cliques and a set of plain sharing groups; its meaning is the plain
:class:`~shtrim.share.Sharing` obtained by :func:`decompress`.  Compression is
lossless, so every operation here agrees exactly with its plain counterpart
after decompression.

Projection, augmentation, lub, grounding and topmost work directly on the
compressed form.  Unification and extend split off the part of the
abstraction that the operation cannot touch, decompress only the rest, run
the plain operation and compress the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from operator import or_
from typing import Iterable, Mapping

from . import share as S
from .share import BOTTOM, Sharing, as_mask, bits, popcount, subsets
from .syntax import Term, Var, unify_solved_form, var_mask


@dataclass(frozen=True)
class CliqueSharing:
    domain: int
    cliques: frozenset
    groups: frozenset

    def __post_init__(self):
        assert 0 not in self.cliques and 0 not in self.groups
        assert not (reduce(or_, self.cliques, 0) | reduce(or_, self.groups, 0)) & ~self.domain

    @property
    def size(self) -> int:
        return len(self.cliques) + len(self.groups)

    def __repr__(self) -> str:
        return f"CliqueSharing{to_text(self)}"


def _covered(g: int, cliques: Iterable[int]) -> bool:
    return any(not g & ~c for c in cliques)


def normalize(domain: int, cliques: Iterable[int], groups: Iterable[int]) -> CliqueSharing:
    """Canonical redundancy-free form with the same meaning."""
    cl = set()
    gs = set(groups)
    for c in cliques:
        if not c:
            continue
        if popcount(c) == 1:
            gs.add(c)
        else:
            cl.add(c)
    # keep only maximal cliques
    kept: list[int] = []
    for c in sorted(cl, key=popcount, reverse=True):
        if not _covered(c, kept):
            kept.append(c)
    gs.discard(0)
    gs = {g for g in gs if not _covered(g, kept)}
    return CliqueSharing(domain, frozenset(kept), frozenset(gs))


def is_normal(a: CliqueSharing) -> bool:
    cl = list(a.cliques)
    if any(popcount(c) < 2 for c in cl):
        return False
    for i, c in enumerate(cl):
        if any(not c & ~d for j, d in enumerate(cl) if i != j):
            return False
    return not any(_covered(g, cl) for g in a.groups)


@lru_cache(maxsize=1 << 16)
def compress(a):
    """Greedy lossless compression of a plain abstraction.

    Candidates are the remaining groups of size at least two, largest first
    and then in variable order.  A candidate whose whole powerset is still
    present becomes a clique and its powerset leaves the remainder.
    """
    if a is BOTTOM:
        return a
    remaining = set(a.groups)
    cliques = []
    cands = sorted((g for g in remaining if popcount(g) >= 2), key=lambda g: (-popcount(g), bits(g)))
    for c in cands:
        if c not in remaining:
            continue
        if any(1 << i not in remaining for i in bits(c)):
            continue
        if all(s in remaining for s in subsets(c)):
            cliques.append(c)
            remaining.difference_update(subsets(c))
    return normalize(a.domain, cliques, remaining)


def decompress_groups(a: CliqueSharing) -> frozenset:
    out = set(a.groups)
    for c in a.cliques:
        out.update(subsets(c))
    return frozenset(out)


def decompress(a):
    if a is BOTTOM:
        return a
    return Sharing(a.domain, decompress_groups(a))


def _contains(a: CliqueSharing, g: int) -> bool:
    return g in a.groups or _covered(g, a.cliques)


# ---------------------------------------------------------------------------
# Native operations


def project_c(vs, a):
    if a is BOTTOM:
        return a
    vs = as_mask(vs) & a.domain
    if vs == a.domain:
        return a
    return normalize(vs, (c & vs for c in a.cliques), (g & vs for g in a.groups))


def augment_c(vs, a):
    if a is BOTTOM:
        return a
    vs = as_mask(vs)
    if vs & a.domain:
        raise ValueError("augment: new variables overlap the domain")
    if not vs:
        return a
    return CliqueSharing(a.domain | vs, a.cliques, a.groups | {1 << i for i in bits(vs)})


def lub_c(a, b):
    if a is BOTTOM:
        return b
    if b is BOTTOM:
        return a
    assert a.domain == b.domain, "domain mismatch"
    return normalize(a.domain, a.cliques | b.cliques, a.groups | b.groups)


def topmost_c(vs, proj=None, precise: bool = False) -> CliqueSharing:
    vs = as_mask(vs)
    live = vs
    if precise and proj is not None and proj is not BOTTOM:
        live &= ~ground_vars_c(proj)
    return normalize(vs, [live] if live else [], [])


def ground_c(vs, a):
    if a is BOTTOM:
        return a
    vs = as_mask(vs)
    return normalize(a.domain, (c & ~vs for c in a.cliques), (g for g in a.groups if not g & vs))


def leq_c(a, b) -> bool:
    if a is BOTTOM:
        return True
    if b is BOTTOM:
        return False
    assert a.domain == b.domain, "domain mismatch"
    if a == b:
        return True
    if not all(_contains(b, g) for g in a.groups):
        return False
    for c in a.cliques:
        if _covered(c, b.cliques):
            continue
        if not all(_contains(b, s) for s in subsets(c)):
            return False
    return True


def equal_c(a, b) -> bool:
    if a is BOTTOM or b is BOTTOM:
        return a is b
    return a == b or (leq_c(a, b) and leq_c(b, a))


def ground_vars_c(a: CliqueSharing) -> int:
    covered = 0
    for m in a.cliques | a.groups:
        covered |= m
    return a.domain & ~covered


# ---------------------------------------------------------------------------
# Split / decompress / recompress operations


def _split(a: CliqueSharing, touch: int):
    """Separate ``a`` into the part disjoint from ``touch`` and the rest.

    Returns ``(cliques, groups, relevant)``: the untouched cliques and groups
    (still compressed) and the plain groups meeting ``touch``.
    """
    cl, gs, rel = [], [], set()
    for g in a.groups:
        (rel.add if g & touch else gs.append)(g)
    for c in a.cliques:
        if not c & touch:
            cl.append(c)
            continue
        outside = c & ~touch
        if outside:
            cl.append(outside)
        rel.update(s for s in subsets(c) if s & touch)
    return cl, gs, rel


def _merge(domain: int, cliques, groups, plain: Iterable[int]) -> CliqueSharing:
    packed = compress(Sharing(domain, frozenset(plain)))
    return normalize(domain, list(cliques) + list(packed.cliques), list(groups) + list(packed.groups))


def amgu_c(x: Var, t: Term, a):
    if a is BOTTOM:
        return a
    xm = 1 << x.index
    tm = var_mask(t)
    assert not (xm | tm) & ~a.domain, "amgu: binding outside the domain"
    cl, gs, rel = _split(a, xm | tm)
    return _merge(a.domain, cl, gs, S._amgu_groups(xm, tm, frozenset(rel)))


def abstract_unify_literal_c(t1: Term, t2: Term, a):
    if a is BOTTOM:
        return a
    sf = unify_solved_form(t1, t2)
    if sf is None:
        return BOTTOM
    for x, t in sf:
        a = amgu_c(x, t, a)
    return a


def extend_c(call, goal_vars, prime):
    if call is BOTTOM or prime is BOTTOM:
        return BOTTOM
    gv = as_mask(goal_vars)
    cl, gs, rel = _split(call, gv)
    rel_call = Sharing(call.domain, frozenset(rel))
    ext = S.extend(rel_call, gv, decompress(prime))
    return _merge(call.domain, cl, gs, ext.groups)


def call_to_entry_c(proj, goal: Term, head: Term):
    return compress(S.call_to_entry(decompress(proj), goal, head))


def exit_to_prime_c(beta_exit, head: Term, goal: Term, proj=None):
    plain_proj = None if proj is None else decompress(proj)
    return compress(S.exit_to_prime(decompress(beta_exit), head, goal, plain_proj))


# ---------------------------------------------------------------------------
# Renaming and text


def remap_c(a, mapping: Mapping[int, int]):
    if a is BOTTOM:
        return a
    rm = S.remap_mask
    return CliqueSharing(
        rm(a.domain, mapping),
        frozenset(rm(c, mapping) for c in a.cliques),
        frozenset(rm(g, mapping) for g in a.groups),
    )


def shift_c(a, n: int):
    if a is BOTTOM or n == 0:
        return a
    if n > 0:
        f = lambda m: m << n  # noqa: E731
    else:
        assert not a.domain & ((1 << -n) - 1)
        f = lambda m: m >> -n  # noqa: E731
    return CliqueSharing(f(a.domain), frozenset(map(f, a.cliques)), frozenset(map(f, a.groups)))


def to_text(a, names: Mapping[int, str] | None = None) -> str:
    if a is BOTTOM:
        return "bottom"
    names = names or {}

    def fam(ms):
        return "[" + ",".join(S.group_to_text(m, names) for m in S.sorted_groups(ms)) + "]"

    return f"(cliques={fam(a.cliques)}, sharing={fam(a.groups)})"


def parse_clique(text: str, index: Mapping[str, int], domain: Iterable[str] | None = None):
    text = text.strip()
    if text == "bottom":
        return BOTTOM
    body = text.strip("()")
    head, _, tail = body.partition("sharing=")
    cl_text = head.strip().rstrip(",").strip()
    if not cl_text.startswith("cliques="):
        raise ValueError(f"bad clique text: {text!r}")
    cliques = S.parse_groups(cl_text[len("cliques="):], index)
    groups = S.parse_groups(tail, index)
    dom = 0
    for m in cliques + groups:
        dom |= m
    for n in domain or ():
        dom |= 1 << index[n]
    return normalize(dom, cliques, groups)


class CliqueDomain:
    """Solver-facing operations over :class:`CliqueSharing` values."""

    name = "share-clique"

    def __init__(self, precise_topmost: bool = False):
        self.precise_topmost = precise_topmost

    is_bottom = staticmethod(S.is_bottom)
    project = staticmethod(project_c)
    augment = staticmethod(augment_c)
    extend = staticmethod(extend_c)
    lub = staticmethod(lub_c)
    leq = staticmethod(leq_c)
    equal = staticmethod(equal_c)
    ground = staticmethod(ground_c)
    unify = staticmethod(abstract_unify_literal_c)
    call_to_entry = staticmethod(call_to_entry_c)
    exit_to_prime = staticmethod(exit_to_prime_c)
    remap = staticmethod(remap_c)
    shift = staticmethod(shift_c)
    from_sharing = staticmethod(compress)
    to_sharing = staticmethod(decompress)
    to_text = staticmethod(to_text)

    def topmost(self, vs, proj=None):
        return topmost_c(vs, proj, self.precise_topmost)

    @staticmethod
    def size(a) -> int:
        return 0 if a is BOTTOM else a.size

    @staticmethod
    def domain(a) -> int:
        return a.domain

    @staticmethod
    def key(a):
        # keyed by meaning: two normal forms can denote the same sharing
        return a if a is BOTTOM else (a.domain, decompress_groups(a))
