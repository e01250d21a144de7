"""Environment reassociation by folding consecutive body segments.

A plan is a tree over the body literals (numbered from 1).  A ``Leaf``
covers a run of literals; a ``Split`` covers the concatenation of its
children.  Folding turns every non-root node that spans two or more
literals into an auxiliary predicate whose arguments are the node's
interface variables: the variables of its literals that also occur in the
head or in some literal outside the node.  Single literals stay inline.

The search looks for the plan whose largest generated clause environment is
as small as possible, preferring fewer auxiliary predicates and then the
first plan in enumeration order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Union

from .share import bits
from .syntax import Clause, Program, Struct, Var, normalize_clause, term_to_str

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Leaf:
    start: int
    end: int

    def __str__(self) -> str:
        return str(self.start) if self.start == self.end else f"{self.start}-{self.end}"


@dataclass(frozen=True)
class Split:
    children: tuple

    @property
    def start(self) -> int:
        return self.children[0].start

    @property
    def end(self) -> int:
        return self.children[-1].end

    def __str__(self) -> str:
        return "[" + ",".join(map(str, self.children)) + "]"


Plan = Union[Leaf, Split]


def leaves(plan: Plan) -> Iterator[Leaf]:
    if isinstance(plan, Leaf):
        yield plan
    else:
        for c in plan.children:
            yield from leaves(c)


def covers(plan: Plan, n: int) -> bool:
    """True when the leaves tile ``1..n`` in order."""
    pos = 1
    for lf in leaves(plan):
        if lf.start != pos or lf.end < lf.start:
            return False
        pos = lf.end + 1
    if isinstance(plan, Split) and len(plan.children) < 2:
        return False
    return pos == n + 1


class _Segments:
    """Variable masks of body segments of one clause (1-based, inclusive)."""

    def __init__(self, clause: Clause):
        self.clause = clause
        self.n = len(clause.body)
        self.head = clause.head_mask
        masks = [lit.mask for lit in clause.body]
        self.lit = [0] + masks
        self.pre = [0] * (self.n + 1)
        for i in range(1, self.n + 1):
            self.pre[i] = self.pre[i - 1] | masks[i - 1]
        self.suf = [0] * (self.n + 2)
        for i in range(self.n, 0, -1):
            self.suf[i] = self.suf[i + 1] | masks[i - 1]
        self._vars: dict = {}

    def vars(self, s: int, e: int) -> int:
        k = (s, e)
        m = self._vars.get(k)
        if m is None:
            m = 0
            for i in range(s, e + 1):
                m |= self.lit[i]
            self._vars[k] = m
        return m

    def iface(self, s: int, e: int) -> int:
        outside = self.head | self.pre[s - 1] | self.suf[e + 1]
        return self.vars(s, e) & outside

    def contrib(self, s: int, e: int) -> int:
        """What a child spanning ``s..e`` puts into its parent's environment."""
        return self.lit[s] if s == e else self.iface(s, e)


def interface_vars(clause: Clause, start: int, end: int) -> int:
    """Interface of literals ``start..end`` (1-based) as a variable mask."""
    return _Segments(clause).iface(start, end)


def _node_env(seg: _Segments, node: Plan, root: bool) -> int:
    if isinstance(node, Leaf):
        m = seg.vars(node.start, node.end)
    else:
        m = 0
        for c in node.children:
            m |= seg.contrib(c.start, c.end)
    return m | seg.head if root else m


def plan_envs(clause: Clause, plan: Plan) -> list[int]:
    """Environment sizes of the clauses folding would emit, root first."""
    seg = _Segments(clause)
    out = []

    def walk(node: Plan, root: bool):
        out.append(_node_env(seg, node, root).bit_count())
        if isinstance(node, Split):
            for c in node.children:
                if c.start != c.end:
                    walk(c, False)

    walk(plan, True)
    return out


def plan_cost(clause: Clause, plan: Plan) -> int:
    return max(plan_envs(clause, plan))


def aux_count(plan: Plan) -> int:
    """Number of auxiliary predicates folding along ``plan`` creates."""
    if isinstance(plan, Leaf):
        return 0
    return sum(1 + aux_count(c) for c in plan.children if c.start != c.end)


# ---------------------------------------------------------------------------
# Search


class BudgetExceeded(Exception):
    pass


@dataclass
class PlanResult:
    plan: Plan
    cost: int
    aux: int
    optimal: bool = True
    objective: str = "max"
    envs: list = field(default_factory=list)


class _Search:
    def __init__(self, clause: Clause, budget: int):
        self.seg = _Segments(clause)
        self.budget = budget
        self.steps = 0

    def spend(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise BudgetExceeded

    def parts_iter(self, s: int, e: int, base: int, cap: int) -> Iterator[tuple[tuple, int]]:
        """Compositions of ``s..e`` whose parent env stays within ``cap``.

        Yields ``(parts, env)``; partial unions over the cap are pruned.
        """
        seg = self.seg

        def rec(a: int, acc: int) -> Iterator[tuple[tuple, int]]:
            for b in range(a, e + 1):
                if a == s and b == e:
                    continue
                self.spend()
                m = acc | seg.contrib(a, b)
                if m.bit_count() > cap:
                    continue
                if b == e:
                    yield ((a, e),), m
                else:
                    for rest, mm in rec(b + 1, m):
                        yield ((a, b),) + rest, mm

        yield from rec(s, base)

    # minimum aux count for a folded node under a cap
    def folded(self, s: int, e: int, cap: int, memo: dict):
        key = (s, e)
        if key in memo:
            return memo[key]
        seg = self.seg
        best = None
        if seg.vars(s, e).bit_count() <= cap:
            best = (1, Leaf(s, e))
        else:
            for parts, _ in self.parts_iter(s, e, 0, cap):
                total, kids = 1, []
                for a, b in parts:
                    if a == b:
                        kids.append(Leaf(a, a))
                        continue
                    sub = self.folded(a, b, cap, memo)
                    if sub is None:
                        break
                    total += sub[0]
                    kids.append(sub[1])
                else:
                    if best is None or total < best[0]:
                        best = (total, Split(tuple(kids)))
        memo[key] = best
        return best

    def root(self, cap: int):
        seg = self.seg
        n = seg.n
        memo: dict = {}
        if (seg.head | seg.vars(1, n)).bit_count() <= cap:
            return (0, Leaf(1, n))
        best = None
        for parts, _ in self.parts_iter(1, n, seg.head, cap):
            total, kids = 0, []
            for a, b in parts:
                if a == b:
                    kids.append(Leaf(a, a))
                    continue
                sub = self.folded(a, b, cap, memo)
                if sub is None:
                    break
                total += sub[0]
                kids.append(sub[1])
            else:
                if best is None or total < best[0]:
                    best = (total, Split(tuple(kids)))
        return best

    def lower_bound(self) -> int:
        seg = self.seg
        lb = seg.head.bit_count()
        for i in range(1, seg.n + 1):
            lb = max(lb, seg.lit[i].bit_count())
        return lb

    # sum-of-environments objective
    def sum_folded(self, s: int, e: int, memo: dict):
        key = (s, e)
        if key in memo:
            return memo[key]
        seg = self.seg
        best = (seg.vars(s, e).bit_count(), 1, Leaf(s, e))
        for parts, env in self.parts_iter(s, e, 0, 1 << 30):
            cost, aux, kids = env.bit_count(), 1, []
            for a, b in parts:
                if a == b:
                    kids.append(Leaf(a, a))
                    continue
                c, x, p = self.sum_folded(a, b, memo)
                cost += c
                aux += x
                kids.append(p)
            if (cost, aux) < best[:2]:
                best = (cost, aux, Split(tuple(kids)))
        memo[key] = best
        return best

    def sum_root(self):
        seg = self.seg
        n = seg.n
        memo: dict = {}
        best = ((seg.head | seg.vars(1, n)).bit_count(), 0, Leaf(1, n))
        for parts, env in self.parts_iter(1, n, seg.head, 1 << 30):
            cost, aux, kids = env.bit_count(), 0, []
            for a, b in parts:
                if a == b:
                    kids.append(Leaf(a, a))
                    continue
                c, x, p = self.sum_folded(a, b, memo)
                cost += c
                aux += x
                kids.append(p)
            if (cost, aux) < best[:2]:
                best = (cost, aux, Split(tuple(kids)))
        return best


def binary_plan(s: int, e: int, root: bool = True) -> Plan:
    """Balanced binary splitting, used when the search runs out of budget."""
    if s == e:
        return Leaf(s, s)
    if e - s == 1:
        return Split((Leaf(s, s), Leaf(e, e))) if root else Leaf(s, e)
    mid = (s + e) // 2
    return Split((binary_plan(s, mid, False), binary_plan(mid + 1, e, False)))


def optimal_plan(clause: Clause, budget: int = 200_000, objective: str = "max") -> PlanResult:
    """Best folding plan for ``clause``'s body within ``budget`` search steps."""
    n = len(clause.body)
    if n == 0:
        raise ValueError("optimal_plan needs a nonempty body")
    search = _Search(clause, budget)
    identity = Leaf(1, n)
    try:
        if objective == "sum":
            _, aux, plan = search.sum_root()
        elif objective == "max":
            cap = search.lower_bound()
            while True:
                found = search.root(cap)
                if found is not None:
                    aux, plan = found
                    break
                cap += 1
        else:
            raise ValueError(f"unknown objective {objective!r}")
        envs = plan_envs(clause, plan)
        return PlanResult(plan, max(envs), aux, True, objective, envs)
    except BudgetExceeded:
        log.info("plan search over budget for %s; using binary splits", term_to_str(clause.head))
        candidates = [identity, binary_plan(1, n)]
        plan = min(candidates, key=lambda p: (plan_cost(clause, p), aux_count(p)))
        envs = plan_envs(clause, plan)
        return PlanResult(plan, max(envs), aux_count(plan), False, objective, envs)


# ---------------------------------------------------------------------------
# Folding


def _args_of(mask: int, names: dict) -> tuple:
    return tuple(Var(i, names.get(i, f"_{i}")) for i in bits(mask))


def fold(clause: Clause, plan: Plan, base_name: str, taken: set | None = None) -> list[Clause]:
    """Clauses produced by folding ``clause`` along ``plan``, root first.

    Auxiliary predicates are named ``<base_name><path>`` where the path
    numbers folded children left to right at every level.  Arguments follow
    the clause's own variable numbering.
    """
    n = len(clause.body)
    if not covers(plan, n):
        raise ValueError(f"plan {plan} does not cover a body of {n} literals")
    seg = _Segments(clause)
    names = clause.names
    taken = set() if taken is None else taken
    out: list[Clause] = []

    def aux_name(path: str) -> str:
        name = f"{base_name}{path}"
        while (name, None) in taken:
            name += "_"
        return name

    def body_for(node: Plan, path: str, pending: list) -> list:
        if isinstance(node, Leaf):
            return [clause.body[i - 1].goal for i in range(node.start, node.end + 1)]
        goals, k = [], 0
        for c in node.children:
            if c.start == c.end and isinstance(c, Leaf):
                goals.append(clause.body[c.start - 1].goal)
                continue
            k += 1
            sub = path + str(k)
            name = aux_name(sub)
            taken.add((name, None))
            args = _args_of(seg.iface(c.start, c.end), names)
            goals.append(Struct(name, args))
            pending.append((c, sub, Struct(name, args)))
        return goals

    pending: list = []
    root_body = body_for(plan, "", pending) if isinstance(plan, Split) else [lit.goal for lit in clause.body]
    out.append(normalize_clause(clause.head, root_body))
    while pending:
        node, path, head = pending.pop(0)
        more: list = []
        body = body_for(node, path, more)
        out.append(normalize_clause(head, body))
        pending[0:0] = more
    return out


@dataclass
class ClauseReport:
    pred: str
    clause: int
    original_env: int
    transformed_max_env: int
    plan: str
    aux: int
    optimal: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Transformed:
    program: Program
    reports: list
    origin: dict  # aux predicate key -> original predicate key


def transform_program(program: Program, budget: int = 200_000, objective: str = "max") -> Transformed:
    """Fold every clause with two or more body literals along its best plan."""
    out = Program(entries=list(program.entries))
    taken = {(k[0], None) for k in program.predicates}
    reports = []
    origin = {}
    for key, clauses in program.predicates.items():
        out.predicates.setdefault(key, [])
        for ci, clause in enumerate(clauses, 1):
            if len(clause.body) < 2:
                out.predicates[key].append(clause)
                continue
            res = optimal_plan(clause, budget, objective)
            base = f"{key[0]}_aux" if ci == 1 else f"{key[0]}_{ci}_aux"
            emitted = fold(clause, res.plan, base, taken)
            out.predicates[key].append(emitted[0])
            for aux in emitted[1:]:
                out.add_clause(aux)
                origin[aux.head.key] = key
            envs = [c.env_mask.bit_count() for c in emitted]
            reports.append(
                ClauseReport(
                    "%s/%d" % key,
                    ci,
                    clause.env_mask.bit_count(),
                    max(envs),
                    str(res.plan),
                    len(emitted) - 1,
                    res.optimal,
                )
            )
    return Transformed(out, reports, origin)
