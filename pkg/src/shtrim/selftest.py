"""Oracle cross-checks bundled with the package.

Each check returns a :class:`Check` with the number of cases tried and the
first failing instance, written out verbatim.  The domain operations under
test can be swapped out, which is how a deliberately broken operation is
shown to be caught.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterator

from . import clique as C
from . import share as S
from .reassoc import transform_program
from .share import Sharing, bits, subsets
from .solver import analyze
from .syntax import Atom, Struct, Var, parse_program, program_to_str, vars_of

GOLDEN = ("sec2_example", "app")


@dataclass
class Check:
    name: str
    passed: bool
    cases: int
    failure: str | None = None
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        s = f"{verdict} {self.name}: {self.cases} cases in {self.seconds:.1f}s"
        return s if self.passed else f"{s}\n    {self.failure}"


def corpus_dir() -> Path:
    return Path(str(resources.files("shtrim") / "corpus"))


# ---------------------------------------------------------------------------
# Enumeration helpers


def all_abstractions(nvars: int) -> Iterator[Sharing]:
    """Every abstraction over variables ``0..nvars-1``."""
    dom = (1 << nvars) - 1
    groups = list(range(1, dom + 1))
    for pick in range(1 << len(groups)):
        yield Sharing(dom, frozenset(g for i, g in enumerate(groups) if pick >> i & 1))


def sample_abstractions(nvars: int, count: int) -> list[Sharing]:
    """A fixed spread of abstractions for the second argument of binary ops."""
    dom = (1 << nvars) - 1
    groups = list(range(1, dom + 1))
    total = 1 << len(groups)
    step = max(1, total // count)
    out = []
    for pick in range(0, total, step):
        out.append(Sharing(dom, frozenset(g for i, g in enumerate(groups) if pick >> i & 1)))
    out.append(S.topmost(dom))
    return out


def term_over(mask: int) -> Struct | Atom:
    """A depth-two term whose variables are exactly ``mask``."""
    vs = [Var(i) for i in bits(mask)]
    if not vs:
        return Atom("a")
    if len(vs) == 1:
        return Struct("f", (Struct("g", (vs[0],)),))
    return Struct("f", (Struct("g", tuple(vs[:2])), *vs[2:]))


def bindings(nvars: int) -> list[tuple[Var, Struct | Atom]]:
    """Every ``x = t`` over ``nvars`` variables, one term per variable set.

    The transfer functions only look at ``vars(t)``, so one representative
    of depth at most two per variable set covers all such terms.
    """
    return [(Var(x), term_over(m)) for x in range(nvars) for m in range(1 << nvars)]


def _show(a) -> str:
    return S.to_text(a) if not isinstance(a, C.CliqueSharing) else C.to_text(a)


# ---------------------------------------------------------------------------
# amgu


def check_amgu(max_vars: int = 4, amgu: Callable = S.amgu, reference: Callable = S.amgu_reference) -> Check:
    start = time.perf_counter()
    cases = 0
    for n in range(1, max_vars + 1):
        binds = bindings(n)
        for a in all_abstractions(n):
            for x, t in binds:
                cases += 1
                got, want = amgu(x, t, a), reference(x, t, a)
                if got != want:
                    msg = f"amgu({x!r}, {t!r}, {_show(a)}) = {_show(got)}, reference {_show(want)}"
                    return Check("amgu", False, cases, msg, time.perf_counter() - start)
    return Check("amgu", True, cases, None, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# extend


def extend_reference(call: Sharing, gv: int, prime: Sharing) -> Sharing:
    """Set-of-sets version of extend, saturating unions naively."""
    sets = {frozenset(bits(g)) for g in call.groups}
    g = frozenset(bits(gv))
    pr = {frozenset(bits(p)) for p in prime.groups}
    keep = {s for s in sets if not s & g}
    fam = {s for s in sets if s & g}
    while True:
        new = {p | q for p in fam for q in fam} - fam
        if not new:
            break
        fam |= new
    out = keep | {s for s in fam if s & g in pr}
    return Sharing(call.domain, frozenset(S.as_mask(s) for s in out))


def check_extend(max_vars: int = 3, extend: Callable = S.extend) -> Check:
    start = time.perf_counter()
    cases = 0
    for n in range(1, max_vars + 1):
        dom = (1 << n) - 1
        for call in all_abstractions(n):
            for gv in subsets(dom):
                primes = [S.project(gv, call), S.topmost(gv)]
                if gv.bit_count() <= 2:
                    primes = list(all_abstractions_on(gv))
                for prime in primes:
                    cases += 1
                    got, want = extend(call, gv, prime), extend_reference(call, gv, prime)
                    if got != want:
                        msg = (f"extend({_show(call)}, {bits(gv)}, {_show(prime)}) = {_show(got)}, "
                               f"reference {_show(want)}")
                        return Check("extend", False, cases, msg, time.perf_counter() - start)
    return Check("extend", True, cases, None, time.perf_counter() - start)


def all_abstractions_on(mask: int) -> Iterator[Sharing]:
    groups = list(subsets(mask))
    for pick in range(1 << len(groups)):
        yield Sharing(mask, frozenset(g for i, g in enumerate(groups) if pick >> i & 1))


# ---------------------------------------------------------------------------
# clique commutation


def _goal_head_pairs() -> list[tuple[Struct, Struct]]:
    """Goal/head pairs over goal vars 0..3 and head vars 4..7."""
    v = [Var(i) for i in range(8)]
    return [
        (Struct("p", (v[0], v[1])), Struct("p", (v[4], v[5]))),
        (Struct("p", (v[0], Struct("f", (v[1],)), v[2])), Struct("p", (Struct("f", (v[4],)), Struct("f", (v[5],)), v[6]))),
        (Struct("q", (v[0], v[1], v[2], v[3])), Struct("q", (Struct(".", (v[4], v[5])), v[6], v[6], v[7]))),
        (Struct("r", (v[0], v[1])), Struct("r", (Atom("a"), Struct("g", (v[4], v[5]))))),
    ]


def check_clique(max_vars: int = 4, ops: dict | None = None) -> Check:
    """decompress(op_c(compress(a))) == op(a) for every abstraction."""
    ops = ops or {}
    project_c = ops.get("project", C.project_c)
    extend_c = ops.get("extend", C.extend_c)
    amgu_c = ops.get("amgu", C.amgu_c)
    start = time.perf_counter()
    cases = 0
    pairs = _goal_head_pairs()

    def fail(what: str) -> Check:
        return Check("clique", False, cases, what, time.perf_counter() - start)

    for n in range(1, max_vars + 1):
        dom = (1 << n) - 1
        # secondary arguments: exhaustive up to three variables, a fixed spread at four
        wide = n >= 4
        others = [(b, C.compress(b)) for b in sample_abstractions(n, 8 if wide else 12)]
        binds = [(Var(x), term_over(m)) for x in range(n) for m in (0, 1 << ((x + 1) % n), dom & ~(1 << x), dom)]
        if wide:
            binds = binds[::2]
        vsets = [0, 1, 0b11, 0b101, 0b1010, 0b1110, dom] if wide else list(subsets(dom))
        for a in all_abstractions(n):
            c = C.compress(a)
            cases += 1
            if C.decompress(c) != a or not C.is_normal(c):
                return fail(f"round trip of {_show(a)} gave {_show(c)}")
            for vs in vsets:
                cases += 2
                if C.decompress(project_c(vs, c)) != S.project(vs, a):
                    return fail(f"project({bits(vs)}, {_show(a)})")
                if C.decompress(C.ground_c(vs, c)) != S.ground(vs, a):
                    return fail(f"ground({bits(vs)}, {_show(a)})")
                prime = S.project(vs, a)
                for p in (prime, S.topmost(vs)):
                    cases += 1
                    if C.decompress(extend_c(c, vs, C.compress(p))) != S.extend(a, vs, p):
                        return fail(f"extend({_show(a)}, {bits(vs)}, {_show(p)})")
            extra = 0b11 << n
            cases += 1
            if C.decompress(C.augment_c(extra, c)) != S.augment(extra, a):
                return fail(f"augment({_show(a)})")
            for x, t in binds:
                cases += 1
                if C.decompress(amgu_c(x, t, c)) != S.amgu(x, t, a):
                    return fail(f"amgu({x!r}, {t!r}, {_show(a)})")
            for b, cb in others:
                cases += 3
                if C.decompress(C.lub_c(c, cb)) != S.lub(a, b):
                    return fail(f"lub({_show(a)}, {_show(b)})")
                if C.leq_c(c, cb) != S.leq(a, b):
                    return fail(f"leq({_show(a)}, {_show(b)})")
                if C.equal_c(c, cb) != (a == b):
                    return fail(f"equal({_show(a)}, {_show(b)})")
            for goal, head in pairs:
                gm = S.as_mask(vars_of(goal))
                if gm != dom:
                    continue
                cases += 3
                if C.decompress(C.call_to_entry_c(c, goal, head)) != S.call_to_entry(a, goal, head):
                    return fail(f"call_to_entry({_show(a)}, {goal!r}, {head!r})")
                hm = S.as_mask(vars_of(head))
                beta = S.topmost(hm)
                if C.decompress(C.exit_to_prime_c(C.compress(beta), head, goal, c)) != S.exit_to_prime(beta, head, goal, a):
                    return fail(f"exit_to_prime({_show(beta)}, {head!r}, {goal!r}, {_show(a)})")
                lit_a = S.augment(hm, a)
                if C.decompress(C.abstract_unify_literal_c(goal, head, C.compress(lit_a))) != S.abstract_unify_literal(goal, head, lit_a):
                    return fail(f"unify({goal!r}, {head!r}, {_show(lit_a)})")
        for k in range(0, n + 1):
            vs = (1 << k) - 1
            cases += 1
            if C.decompress(C.topmost_c(vs)) != S.topmost(vs):
                return fail(f"topmost({bits(vs)})")
    return Check("clique", True, cases, None, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# corpus


def corpus_files(directory: Path | None = None) -> list[Path]:
    return sorted((directory or corpus_dir()).rglob("*.pl"))


def check_corpus(files: list[Path] | None = None) -> Check:
    """classic, trim and reassoc agree on every entry and call pattern."""
    start = time.perf_counter()
    cases = 0
    for f in files if files is not None else corpus_files():
        prog = parse_program(f.read_text())
        if not prog.entries:
            continue
        folded = parse_program(program_to_str(transform_program(prog).program))
        for dom in ("share", "share-clique"):
            base = analyze(prog, dom, "classic")
            ref = base.to_json_obj(False)
            for label, res in (("trim", analyze(prog, dom, "trim")), ("reassoc", analyze(folded, dom, "classic"))):
                cases += 1
                got = res.to_json_obj(False)
                if [e["succ"] for e in got["entries"]] != [e["succ"] for e in ref["entries"]]:
                    return Check("corpus", False, cases, f"{f.name} {dom} {label}: succ differs",
                                 time.perf_counter() - start)
                if label == "trim" and got["call_patterns"] != ref["call_patterns"]:
                    return Check("corpus", False, cases, f"{f.name} {dom} trim: call patterns differ",
                                 time.perf_counter() - start)
    return Check("corpus", True, cases, None, time.perf_counter() - start)


def golden_json(name: str, domain: str = "share", strategy: str = "classic") -> str:
    prog = parse_program((corpus_dir() / f"{name}.pl").read_text())
    return analyze(prog, domain, strategy).to_json(times=False) + "\n"


def golden_path(name: str, domain: str = "share", strategy: str = "classic") -> Path:
    return corpus_dir() / "golden" / f"{name}.{domain}.{strategy}.json"


def check_golden() -> Check:
    start = time.perf_counter()
    cases = 0
    for name in GOLDEN:
        for dom in ("share", "share-clique"):
            for strat in ("classic", "trim"):
                cases += 1
                path = golden_path(name, dom, strat)
                got = golden_json(name, dom, strat)
                want = path.read_text() if path.exists() else None
                if got != want:
                    return Check("golden", False, cases, f"{path.name} does not match", time.perf_counter() - start)
    return Check("golden", True, cases, None, time.perf_counter() - start)


def run_selftest(max_vars: int = 4, overrides: dict | None = None) -> list[Check]:
    """Run every check; ``overrides`` maps op names to replacement functions."""
    o = overrides or {}
    return [
        check_amgu(max_vars, o.get("amgu", S.amgu)),
        check_extend(min(max_vars, 3), o.get("extend", S.extend)),
        check_clique(max_vars, o.get("clique")),
        check_corpus(),
        check_golden(),
    ]
