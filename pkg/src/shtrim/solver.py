"""Goal-dependent top-down fixpoint engine.

The analysis starts from the program's entry points and tables every call
pattern it meets.  A call pattern is a predicate goal whose variables are
renumbered by first occurrence, together with the projected calling
abstraction over those variables.  Each table entry holds a success
abstraction that only grows.  Entries that read another entry's success are
recorded as its dependents and are queued again whenever it changes, until
nothing changes any more.

Per clause the success of a call is computed as

    Proj  = project(vars(Goal), Call)
    Entry = call_to_entry(Proj, Goal, Head)        (+ body vars, classic)
    Exit  = entry_to_exit(Entry, Head, Body)
    Prime = exit_to_prime(project(vars(Head), Exit), Head, Goal)
    Succ  = extend(Call, vars(Goal), lub of the Primes)

The body traversal is either the classic one (whole clause environment in
the domain) or the trimmed one from :mod:`shtrim.trim`.
"""

from __future__ import annotations

import json
import logging
import sys
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Mapping

from . import share as S
from .clique import CliqueDomain
from .share import BOTTOM, ShareDomain
from .syntax import (
    Clause,
    Entry,
    Literal,
    Program,
    Struct,
    Var,
    iter_vars,
    rename_term,
    shift_term,
    term_to_str,
    unifiable,
    var_mask,
)
from .trim import entry_to_exit_trimmed

log = logging.getLogger(__name__)

FAIL = object()

DEFAULT_BUILTINS: dict[str, list[int]] = {"true/0": []}


class AnalysisError(Exception):
    status = "error"

    def __init__(self, message: str, stats: "Stats | None" = None):
        super().__init__(message)
        self.stats = stats


class AnalysisTimeout(AnalysisError):
    status = "timeout"


class SizeGuard(AnalysisError):
    status = "oom-guard"


class IterationGuard(AnalysisError):
    status = "iteration-guard"


def make_domain(name: str, precise_topmost: bool = False):
    if name == "share":
        return ShareDomain(precise_topmost)
    if name in ("share-clique", "clique"):
        return CliqueDomain(precise_topmost)
    raise ValueError(f"unknown domain {name!r}")


def canonical_goal(goal: Struct) -> tuple[Struct, dict[int, int]]:
    """Rename ``goal``'s variables to 0..m-1 by first occurrence."""
    mapping: dict[int, int] = {}
    for v in iter_vars(goal):
        if v.index not in mapping:
            mapping[v.index] = len(mapping)
    renamed = rename_term(goal, lambda v: Var(mapping[v.index], f"V{mapping[v.index] + 1}"))
    return renamed, mapping


def goal_names(goal: Struct) -> dict[int, str]:
    return {v.index: v.name or f"_{v.index}" for v in iter_vars(goal)}


def parse_builtins(spec: Mapping[str, Any] | None) -> dict[tuple[str, int], tuple[int, ...]]:
    table = dict(DEFAULT_BUILTINS)
    table.update(spec or {})
    out = {}
    for key, positions in table.items():
        name, _, arity = key.rpartition("/")
        out[(name, int(arity))] = tuple(int(p) for p in positions)
    return out


@dataclass
class Stats:
    max_size: int = 0
    max_domain: int = 0
    literals: int = 0
    iterations: int = 0
    elapsed_ms: float = 0.0
    max_live: dict = field(default_factory=dict)

    def as_dict(self, times: bool = True) -> dict:
        return {
            "max_abs_size": self.max_size,
            "max_domain": self.max_domain,
            "literals": self.literals,
            "iterations": self.iterations,
            "max_live": max((p for _, p in self.max_live.values()), default=0),
            "elapsed_ms": round(self.elapsed_ms, 3) if times else 0.0,
        }


@dataclass
class ClauseTrace:
    names: dict
    proj: Any = None
    entry: Any = None
    exit: Any = None
    prime: Any = None


@dataclass
class Record:
    goal: Struct
    proj: Any
    success: Any = BOTTOM
    status: str = "in-progress"
    dependents: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    history: list = field(default_factory=list)


@dataclass
class EntryResult:
    entry: Entry
    names: dict
    call: Any
    proj: Any = BOTTOM
    prime: Any = BOTTOM
    succ: Any = BOTTOM


@dataclass
class AnalysisResult:
    domain: Any
    strategy: str
    entries: list
    table: dict
    stats: Stats

    def succ_text(self, i: int = 0, plain: bool = True) -> str:
        e = self.entries[i]
        a = self.domain.to_sharing(e.succ) if plain else e.succ
        return (S.to_text if plain else self.domain.to_text)(a, e.names)

    def successes(self) -> dict:
        """Call pattern -> plain success text, for cross-strategy comparison."""
        out = {}
        for rec in self.table.values():
            names = goal_names(rec.goal)
            k = (term_to_str(rec.goal), S.to_text(self.domain.to_sharing(rec.proj), names))
            out[k] = S.to_text(self.domain.to_sharing(rec.success), names)
        return out

    def to_json_obj(self, times: bool = True) -> dict:
        D = self.domain
        entries = []
        for e in self.entries:
            item = {
                "goal": term_to_str(e.entry.goal),
                "call": S.to_text(D.to_sharing(e.call), e.names),
                "proj": S.to_text(D.to_sharing(e.proj), e.names),
                "prime": S.to_text(D.to_sharing(e.prime), e.names),
                "succ": S.to_text(D.to_sharing(e.succ), e.names),
            }
            if D.name != "share":
                item["succ_repr"] = D.to_text(e.succ, e.names)
            entries.append(item)
        patterns = []
        for rec in self.table.values():
            names = goal_names(rec.goal)
            patterns.append(
                {
                    "pred": "%s/%d" % rec.goal.key,
                    "goal": term_to_str(rec.goal),
                    "call": S.to_text(D.to_sharing(rec.proj), names),
                    "success": S.to_text(D.to_sharing(rec.success), names),
                    "status": rec.status,
                }
            )
        patterns.sort(key=lambda p: (p["pred"], p["goal"], p["call"]))
        stats = self.stats.as_dict(times)
        return {
            "domain": D.name,
            "strategy": self.strategy,
            "entries": entries,
            "call_patterns": patterns,
            "stats": stats,
        }

    def to_json(self, times: bool = True) -> str:
        return json.dumps(self.to_json_obj(times), indent=2, sort_keys=False)


class Analyzer:
    def __init__(
        self,
        program: Program,
        domain="share",
        strategy: str = "classic",
        builtins: Mapping[str, Any] | None = None,
        timeout_ms: float | None = None,
        max_iterations: int = 1_000_000,
        max_size: int = 1 << 22,
        precise_topmost: bool = False,
        keep_history: bool = False,
    ):
        if strategy not in ("classic", "trim"):
            raise ValueError(f"unknown strategy {strategy!r}")
        self.program = program
        self.domain = make_domain(domain, precise_topmost) if isinstance(domain, str) else domain
        self.strategy = strategy
        self.builtins = parse_builtins(builtins)
        self.deadline = None if timeout_ms is None else time.perf_counter() + timeout_ms / 1000.0
        self.timeout_ms = timeout_ms
        self.max_iterations = max_iterations
        self.max_size = max_size
        self.keep_history = keep_history
        self.check_liveness = False
        self.table: dict[tuple, Record] = {}
        self.worklist: deque = deque()
        self.queued: set = set()
        self.current: tuple | None = None
        self.stats = Stats()

    # -- bookkeeping ------------------------------------------------------

    def observe(self, a) -> None:
        D = self.domain
        if a is BOTTOM:
            return
        size = D.size(a)
        if size > self.stats.max_size:
            self.stats.max_size = size
        dom = D.domain(a).bit_count()
        if dom > self.stats.max_domain:
            self.stats.max_domain = dom
        if size > self.max_size:
            raise SizeGuard(f"abstraction size {size} exceeds guard {self.max_size}", self.stats)

    def note_live(self, clause: Clause, peak: int) -> None:
        k = id(clause)
        if peak > self.stats.max_live.get(k, (None, -1))[1]:
            self.stats.max_live[k] = (clause, peak)

    def tick(self) -> None:
        self.stats.literals += 1
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise AnalysisTimeout(f"timeout after {self.timeout_ms} ms", self.stats)

    # -- literals ---------------------------------------------------------

    def abstract_literal(self, lit: Literal, proj):
        D = self.domain
        if lit.kind == "unify":
            return D.unify(lit.lhs, lit.rhs, proj)
        positions = self.builtins.get(lit.pred)
        if positions is None:
            return FAIL
        m = 0
        for p in positions:
            m |= var_mask(lit.args[p - 1])
        return D.ground(m, proj)

    def process_literal(self, lit: Literal, exit_):
        D = self.domain
        self.tick()
        if exit_ is BOTTOM:
            return BOTTOM
        gv = lit.mask
        proj = D.project(gv, exit_)
        if lit.kind == "call" and lit.pred in self.program.predicates:
            goal, mapping = canonical_goal(lit.goal)
            success = self.solve(goal, D.remap(proj, mapping))
            inverse = {v: k for k, v in mapping.items()}
            prime = D.remap(success, inverse)
        else:
            prime = self.abstract_literal(lit, proj)
            if prime is FAIL:
                prime = D.topmost(gv, proj)
        out = D.extend(exit_, gv, prime)
        self.observe(out)
        return out

    def entry_to_exit_classic(self, entry, clause: Clause):
        exit_ = entry
        for lit in clause.body:
            exit_ = self.process_literal(lit, exit_)
            if exit_ is BOTTOM:
                return BOTTOM
        return exit_

    # -- call patterns ----------------------------------------------------

    def solve(self, goal: Struct, proj):
        key = (goal, self.domain.key(proj))
        rec = self.table.get(key)
        if rec is None:
            rec = self.table[key] = Record(goal, proj)
            self.evaluate(key)
        if self.current is not None:
            rec.dependents[self.current] = None
        return rec.success

    def evaluate(self, key) -> None:
        D = self.domain
        rec = self.table[key]
        self.stats.iterations += 1
        if self.stats.iterations > self.max_iterations:
            raise IterationGuard(f"more than {self.max_iterations} evaluations", self.stats)
        saved, self.current = self.current, key
        try:
            new = BOTTOM
            for ci, clause in enumerate(self.program.predicates[rec.goal.key]):
                new = D.lub(new, self.analyze_clause(rec, ci, clause))
        finally:
            self.current = saved
        if not D.leq(new, rec.success):
            rec.success = D.lub(rec.success, new)
            if self.keep_history:
                rec.history.append(rec.success)
            for dep in rec.dependents:
                if dep not in self.queued:
                    self.queued.add(dep)
                    self.worklist.append(dep)

    def analyze_clause(self, rec: Record, ci: int, clause: Clause):
        D = self.domain
        n = max(clause.names) + 1 if clause.names else 0
        goal = shift_term(rec.goal, n)
        if not unifiable(goal, clause.head):
            return BOTTOM
        proj = D.shift(rec.proj, n)
        names = dict(clause.names)
        names.update({i + n: f"V{i + 1}" for i in range(var_mask(rec.goal).bit_length())})
        trace = rec.traces.get(ci)
        if trace is None:
            trace = rec.traces[ci] = ClauseTrace(names)
        trace.proj = proj
        entry = D.call_to_entry(proj, goal, clause.head)
        if self.strategy == "classic":
            entry = D.augment(clause.body_mask & ~clause.head_mask, entry)
        trace.entry = entry
        self.observe(entry)
        if entry is BOTTOM:
            exit_ = BOTTOM
        elif self.strategy == "classic":
            exit_ = self.entry_to_exit_classic(entry, clause)
        else:
            exit_ = entry_to_exit_trimmed(entry, clause, self)
        trace.exit = exit_
        prime = D.exit_to_prime(D.project(clause.head_mask, exit_), clause.head, goal, proj)
        trace.prime = prime
        return D.shift(prime, -n)

    def drain(self) -> None:
        while self.worklist:
            key = self.worklist.popleft()
            self.queued.discard(key)
            self.evaluate(key)

    # -- entries ----------------------------------------------------------

    def entry_call(self, e: Entry):
        D = self.domain
        dom = e.domain_mask
        if e.sharing is None:
            return D.topmost(dom)
        groups = [sum(1 << v.index for v in g) for g in e.sharing]
        return D.from_sharing(S.make(dom, [g for g in groups if g]))

    def run_entry(self, e: Entry) -> EntryResult:
        D = self.domain
        call = self.entry_call(e)
        res = EntryResult(e, e.names, call)
        lit = Literal("call", e.goal, 0)
        self.process_literal(lit, call)
        self.drain()
        # final pass against the settled table
        res.proj = D.project(lit.mask, call)
        res.succ = self.process_literal(lit, call)
        assert not self.worklist
        if lit.pred in self.program.predicates:
            goal, mapping = canonical_goal(e.goal)
            rec = self.table[(goal, D.key(D.remap(res.proj, mapping)))]
            res.prime = D.remap(rec.success, {v: k for k, v in mapping.items()})
        else:
            p = self.abstract_literal(lit, res.proj)
            res.prime = D.topmost(lit.mask, res.proj) if p is FAIL else p
        return res

    def run(self, entries=None) -> AnalysisResult:
        start = time.perf_counter()
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 20000))
        try:
            results = [self.run_entry(e) for e in (self.program.entries if entries is None else entries)]
        finally:
            sys.setrecursionlimit(limit)
            self.stats.elapsed_ms = (time.perf_counter() - start) * 1000.0
        for rec in self.table.values():
            rec.status = "stable"
        return AnalysisResult(self.domain, self.strategy, results, self.table, self.stats)


def analyze(program: Program, domain="share", strategy: str = "classic", entries=None, **kw) -> AnalysisResult:
    """Analyze ``program`` from its entry points (or the given ones)."""
    return Analyzer(program, domain, strategy, **kw).run(entries)


def select_entries(program: Program, spec: str | None) -> list[Entry]:
    """Entries whose predicate matches ``name/arity`` (all when None)."""
    if spec is None:
        return list(program.entries)
    name, _, arity = spec.rpartition("/")
    return [e for e in program.entries if e.goal.key == (name, int(arity))]
