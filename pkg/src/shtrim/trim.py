"""Abstract environment trimming.

During a clause body traversal only the live variables are kept in the
abstraction: head variables, plus body variables that have already appeared
and appear again later.  A variable is added when it first shows up and
projected away right after its last occurrence, so the abstraction domain
never spans the whole clause environment.
"""

from __future__ import annotations

from typing import Sequence

from .share import BOTTOM, bits
from .syntax import Clause, Literal


def live_vars(live: int, lit: Literal) -> int:
    """Variables of ``lit`` that become alive there (not yet in ``live``)."""
    return lit.mask & ~live


def dead_vars(live: int, hvars: int, remaining: Sequence[Literal]) -> int:
    """Live variables that are neither head variables nor used later on."""
    fut = 0
    for lit in remaining:
        fut |= lit.mask
    return live & ~fut & ~hvars


def liveness_by_definition(clause: Clause) -> list[int]:
    """Live set after each body literal, straight from the definition.

    Entry ``i`` holds the head variables plus every variable occurring both in
    some literal ``j <= i`` and some literal ``k > i``.  The literal at
    position ``i`` itself is counted as before (its variables are live while
    it runs), which is what the per-point maximum uses.
    """
    body = clause.body
    out = []
    for i in range(len(body)):
        before = 0
        for lit in body[: i + 1]:
            before |= lit.mask
        after = 0
        for lit in body[i:]:
            after |= lit.mask
        out.append(clause.head_mask | (before & after))
    return out


def max_live(clause: Clause) -> int:
    """Largest number of simultaneously live variables in ``clause``."""
    if not clause.body:
        return clause.head_mask.bit_count()
    return max(m.bit_count() for m in liveness_by_definition(clause))


def entry_to_exit_trimmed(entry, clause: Clause, ctx):
    """Traverse ``clause``'s body keeping only live variables in the domain.

    ``entry`` ranges over exactly the head variables.  ``ctx`` supplies the
    abstract domain and the literal transfer used by the classic traversal.
    """
    D = ctx.domain
    hvars = clause.head_mask
    live = hvars
    exit_ = entry
    suffix = clause.suffix_masks
    peak = live.bit_count()
    for i, lit in enumerate(clause.body):
        nlive = live_vars(live, lit)
        live |= nlive
        peak = max(peak, live.bit_count())
        exit_ = D.augment(nlive, exit_)
        exit_ = ctx.process_literal(lit, exit_)
        if exit_ is BOTTOM:
            ctx.note_live(clause, peak)
            return BOTTOM
        dead = live & ~suffix[i + 1] & ~hvars
        if ctx.check_liveness:
            assert dead == dead_vars(live, hvars, clause.body[i + 1:])
        live &= ~dead
        exit_ = D.project(live, exit_)
        assert D.domain(exit_) == live, (bits(D.domain(exit_)), bits(live))
        ctx.observe(exit_)
    ctx.note_live(clause, peak)
    return exit_
