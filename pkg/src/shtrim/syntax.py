"""Terms, clauses and programs of the analysed Horn-clause subset.

The accepted language is a small, operator-free Prolog: facts and rules whose
bodies are ``,``-separated literals, infix ``=`` for unification, list
syntax, integers and atoms.  Directives of the form ``:- entry Goal.`` or
``:- entry Goal sharing [[X],[X,Y]].`` declare analysis entry points.

Variables are numbered densely per clause (head first, then body, in order of
first occurrence), which lets the abstract domains use plain integer bitmasks
for sets of variables.
"""

from __future__ import annotations

import logging
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Union

log = logging.getLogger(__name__)

NIL = "[]"
CONS = "."


@dataclass(frozen=True)
class Var:
    index: int
    name: str = field(default="", compare=False)

    def __repr__(self) -> str:
        return self.name or f"_{self.index}"


@dataclass(frozen=True)
class Atom:
    value: Union[str, int]

    def __repr__(self) -> str:
        return term_to_str(self)


@dataclass(frozen=True)
class Struct:
    name: str
    args: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> tuple[str, int]:
        return (self.name, len(self.args))

    def __repr__(self) -> str:
        return term_to_str(self)


Term = Union[Var, Atom, Struct]


def mklist(items: Iterable[Term], tail: Term = Atom(NIL)) -> Term:
    items = list(items)
    for item in reversed(items):
        tail = Struct(CONS, (item, tail))
    return tail


def iter_vars(t: Term) -> Iterator[Var]:
    """Yield variable occurrences of ``t`` left to right (with repeats)."""
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            yield t
        elif isinstance(t, Struct):
            stack.extend(reversed(t.args))


def vars_of(t: Term) -> frozenset[Var]:
    return frozenset(iter_vars(t))


def var_mask(t: Term) -> int:
    m = 0
    for v in iter_vars(t):
        m |= 1 << v.index
    return m


def rename_term(t: Term, fn) -> Term:
    """Rebuild ``t`` with every variable replaced by ``fn(var)``."""
    if isinstance(t, Var):
        return fn(t)
    if isinstance(t, Struct):
        return Struct(t.name, tuple(rename_term(a, fn) for a in t.args))
    return t


def shift_term(t: Term, offset: int, suffix: str = "") -> Term:
    return rename_term(t, lambda v: Var(v.index + offset, v.name + suffix))


def depth(t: Term) -> int:
    if isinstance(t, Struct) and t.args:
        return 1 + max(depth(a) for a in t.args)
    return 0


# ---------------------------------------------------------------------------
# Clauses and programs


@dataclass(frozen=True)
class Literal:
    """A body literal: either a (user or builtin) call, or ``Lhs = Rhs``."""

    kind: str  # "call" | "unify"
    goal: Struct
    position: int = 0

    @property
    def pred(self) -> tuple[str, int]:
        return self.goal.key

    @property
    def args(self) -> tuple:
        return self.goal.args

    @property
    def lhs(self) -> Term:
        return self.goal.args[0]

    @property
    def rhs(self) -> Term:
        return self.goal.args[1]

    @cached_property
    def mask(self) -> int:
        return var_mask(self.goal)

    def __str__(self) -> str:
        if self.kind == "unify":
            return f"{term_to_str(self.lhs)} = {term_to_str(self.rhs)}"
        return term_to_str(self.goal)


def make_literal(goal: Struct, position: int = 0) -> Literal:
    kind = "unify" if goal.key == ("=", 2) else "call"
    return Literal(kind, goal, position)


@dataclass(frozen=True)
class Clause:
    head: Struct
    body: tuple[Literal, ...] = ()

    @cached_property
    def head_mask(self) -> int:
        return var_mask(self.head)

    @cached_property
    def body_mask(self) -> int:
        m = 0
        for lit in self.body:
            m |= lit.mask
        return m

    @cached_property
    def env_mask(self) -> int:
        return self.head_mask | self.body_mask

    @cached_property
    def suffix_masks(self) -> tuple[int, ...]:
        """``suffix_masks[i]`` = vars of body literals ``i..n-1`` (0-based)."""
        out = [0] * (len(self.body) + 1)
        for i in range(len(self.body) - 1, -1, -1):
            out[i] = out[i + 1] | self.body[i].mask
        return tuple(out)

    @cached_property
    def names(self) -> dict[int, str]:
        out: dict[int, str] = {}
        for t in (self.head, *(lit.goal for lit in self.body)):
            for v in iter_vars(t):
                out.setdefault(v.index, v.name or f"_{v.index}")
        return out

    @property
    def env(self) -> frozenset[Var]:
        return frozenset(v for t in self.terms() for v in iter_vars(t))

    def terms(self) -> Iterator[Struct]:
        yield self.head
        for lit in self.body:
            yield lit.goal

    def __str__(self) -> str:
        return clause_to_str(self)


@dataclass(frozen=True)
class Entry:
    """An analysis entry point.

    ``sharing`` is None for the default (topmost) call abstraction, otherwise
    a tuple of variable groups given in the directive.  ``extra`` lists
    variables that occur only in the sharing spec (part of the calling
    context but not of the goal).
    """

    goal: Struct
    sharing: tuple[tuple[Var, ...], ...] | None = None
    extra: tuple[Var, ...] = ()

    @cached_property
    def names(self) -> dict[int, str]:
        out = {v.index: v.name for v in iter_vars(self.goal)}
        for v in self.extra:
            out[v.index] = v.name
        return out

    @cached_property
    def domain_mask(self) -> int:
        m = var_mask(self.goal)
        for v in self.extra:
            m |= 1 << v.index
        return m

    def __str__(self) -> str:
        s = f":- entry {term_to_str(self.goal)}"
        if self.sharing is not None:
            groups = ",".join("[" + ",".join(v.name for v in g) + "]" for g in self.sharing)
            s += f" sharing [{groups}]"
        return s + "."


@dataclass
class Program:
    predicates: dict[tuple[str, int], list[Clause]] = field(default_factory=dict)
    entries: list[Entry] = field(default_factory=list)

    def add_clause(self, c: Clause) -> None:
        self.predicates.setdefault(c.head.key, []).append(c)

    def clauses(self) -> Iterator[Clause]:
        for cs in self.predicates.values():
            yield from cs

    def __str__(self) -> str:
        return program_to_str(self)


def normalize_clause(head: Struct, body: Iterable[Struct | Literal]) -> Clause:
    """Renumber variables densely in first-occurrence order."""
    mapping: dict[int, Var] = {}

    def ren(v: Var) -> Var:
        nv = mapping.get(v.index)
        if nv is None:
            nv = mapping[v.index] = Var(len(mapping), v.name)
        return nv

    new_head = rename_term(head, ren)
    lits = []
    for i, b in enumerate(body, 1):
        goal = b.goal if isinstance(b, Literal) else b
        lits.append(make_literal(rename_term(goal, ren), i))
    return Clause(new_head, tuple(lits))


class Fresh:
    """Source of variable indices never handed out before."""

    def __init__(self, start: int = 0):
        self.next = start

    def take(self, n: int) -> int:
        base = self.next
        self.next += n
        return base


def rename_apart(c: Clause, fresh: Fresh, suffix: str = "") -> Clause:
    idx = sorted(c.names)
    base = fresh.take(len(idx))
    mapping = {old: Var(base + k, c.names[old] + suffix) for k, old in enumerate(idx)}
    fn = lambda v: mapping[v.index]  # noqa: E731
    return Clause(
        rename_term(c.head, fn),
        tuple(Literal(l.kind, rename_term(l.goal, fn), l.position) for l in c.body),
    )


# ---------------------------------------------------------------------------
# Unification


def apply_subst(subst: dict[Var, Term], t: Term) -> Term:
    if not subst:
        return t
    if isinstance(t, Var):
        return subst.get(t, t)
    if isinstance(t, Struct) and t.args:
        return Struct(t.name, tuple(apply_subst(subst, a) for a in t.args))
    return t


def _occurs(v: Var, t: Term) -> bool:
    return any(u == v for u in iter_vars(t))


@lru_cache(maxsize=65536)
def unify_solved_form(t1: Term, t2: Term) -> tuple[tuple[Var, Term], ...] | None:
    """Most general unifier of ``t1`` and ``t2`` in idempotent solved form.

    Returns the bindings in discovery order (left to right, depth first), or
    None on a functor clash or an occurs-check failure.  When both sides of a
    binding are variables the left one is bound.
    """
    subst: dict[Var, Term] = {}
    work = deque([(t1, t2)])
    while work:
        a, b = work.popleft()
        a = apply_subst(subst, a)
        b = apply_subst(subst, b)
        if a == b:
            continue
        if not isinstance(a, Var) and isinstance(b, Var):
            a, b = b, a
        if isinstance(a, Var):
            if _occurs(a, b):
                return None
            single = {a: b}
            for k in subst:
                subst[k] = apply_subst(single, subst[k])
            subst[a] = b
        elif isinstance(a, Struct) and isinstance(b, Struct):
            if a.name != b.name or len(a.args) != len(b.args):
                return None
            work.extendleft(reversed(list(zip(a.args, b.args))))
        else:
            return None
    return tuple(subst.items())


def unifiable(t1: Term, t2: Term) -> bool:
    return unify_solved_form(t1, t2) is not None


# ---------------------------------------------------------------------------
# Printing

_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


def atom_to_str(name: str | int) -> str:
    if isinstance(name, int):
        return str(name)
    if _PLAIN_ATOM.match(name) or name in (NIL, "!", "="):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def term_to_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name or f"_{t.index}"
    if isinstance(t, Atom):
        return atom_to_str(t.value)
    if t.name == CONS and len(t.args) == 2:
        items = []
        while isinstance(t, Struct) and t.name == CONS and len(t.args) == 2:
            items.append(term_to_str(t.args[0]))
            t = t.args[1]
        inner = ",".join(items)
        if isinstance(t, Atom) and t.value == NIL:
            return f"[{inner}]"
        return f"[{inner}|{term_to_str(t)}]"
    if not t.args:
        return atom_to_str(t.name)
    return f"{atom_to_str(t.name)}({','.join(term_to_str(a) for a in t.args)})"


def clause_to_str(c: Clause) -> str:
    head = term_to_str(c.head)
    if not c.body:
        return head + "."
    return head + " :-\n    " + ",\n    ".join(str(l) for l in c.body) + "."


def program_to_str(p: Program) -> str:
    parts = [str(e) for e in p.entries]
    for cs in p.predicates.values():
        parts.extend(clause_to_str(c) for c in cs)
    return "\n".join(parts) + ("\n" if parts else "")


# ---------------------------------------------------------------------------
# Parsing


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*|/\*.*?\*/)
  | (?P<neck>:-)
  | (?P<int>-?\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<atom>[a-z][A-Za-z0-9_]*|'(?:[^'\\]|\\.)*'|!|\[\])
  | (?P<punct>[()\[\],|=.])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "atom" and text.startswith("'"):
                text = re.sub(r"\\(.)", r"\1", text[1:-1])
                kind = "qatom"
            toks.append(_Tok(kind, text, line, pos - line_start + 1))
        nl = text.count("\n") if kind == "ws" else 0
        if nl:
            line += nl
            line_start = m.start() + m.group().rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0
        self.varmap: dict[str, Var] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str) -> ParseError:
        t = self.tok
        found = t.text or "end of input"
        return ParseError(f"{msg} (found {found!r})", t.line, t.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("punct", "neck") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            raise self.error(f"expected {text!r}")

    def var(self, name: str) -> Var:
        if name == "_":
            v = Var(len(self.varmap), f"_{len(self.varmap)}")
            self.varmap[f"\0{len(self.varmap)}"] = v
            return v
        v = self.varmap.get(name)
        if v is None:
            v = self.varmap[name] = Var(len(self.varmap), name)
        return v

    def term(self) -> Term:
        t = self.tok
        if t.kind == "var":
            self.i += 1
            return self.var(t.text)
        if t.kind == "int":
            self.i += 1
            return Atom(int(t.text))
        if t.kind in ("atom", "qatom"):
            self.i += 1
            if self.accept("("):
                args = self.args(")")
                return Struct(t.text, tuple(args))
            return Atom(t.text)
        if self.accept("["):
            if self.accept("]"):
                return Atom(NIL)
            items = [self.term()]
            while self.accept(","):
                items.append(self.term())
            tail: Term = Atom(NIL)
            if self.accept("|"):
                tail = self.term()
            self.expect("]")
            return mklist(items, tail)
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        raise self.error("expected a term")

    def args(self, close: str) -> list[Term]:
        out = [self.term()]
        while self.accept(","):
            out.append(self.term())
        self.expect(close)
        return out

    def goal(self) -> Struct:
        lhs = self.term()
        if self.accept("="):
            return Struct("=", (lhs, self.term()))
        if isinstance(lhs, Atom) and isinstance(lhs.value, str):
            return Struct(lhs.value, ())
        if isinstance(lhs, Struct):
            return lhs
        raise self.error("expected a callable goal")

    def sentence(self, prog: Program) -> None:
        self.varmap = {}
        if self.accept(":-"):
            self.directive(prog)
            return
        head = self.goal()
        if head.key == ("=", 2):
            raise self.error("'=' cannot be a clause head")
        body = []
        if self.accept(":-"):
            body.append(self.goal())
            while self.accept(","):
                body.append(self.goal())
        self.expect(".")
        prog.add_clause(normalize_clause(head, body))

    def directive(self, prog: Program) -> None:
        t = self.tok
        if t.kind == "atom" and t.text == "entry" and self.toks[self.i + 1].kind != "punct":
            self.i += 1
            goal = self.goal()
            sharing = None
            if self.tok.kind == "atom" and self.tok.text == "sharing":
                self.i += 1
                sharing = self.sharing_spec()
            self.expect(".")
            goal_vars = vars_of(goal)
            extra = tuple(v for v in self.varmap.values() if v not in goal_vars)
            prog.entries.append(Entry(goal, sharing, extra))
            return
        # other directives are outside the subset; skip them
        skipped = self.goal()
        while self.accept(","):
            self.goal()
        self.expect(".")
        log.debug("ignoring directive %s", term_to_str(skipped))

    def accept_nil(self) -> bool:
        if self.tok.kind == "atom" and self.tok.text == NIL:
            self.i += 1
            return True
        return False

    def var_group(self) -> tuple[Var, ...]:
        if self.accept_nil():
            return ()
        self.expect("[")
        g: list[Var] = []
        if self.accept("]"):
            return ()
        while True:
            if self.tok.kind != "var":
                raise self.error("expected a variable in sharing group")
            g.append(self.var(self.tok.text))
            self.i += 1
            if self.accept("]"):
                return tuple(g)
            self.expect(",")

    def sharing_spec(self) -> tuple[tuple[Var, ...], ...]:
        if self.accept_nil():
            return ()
        self.expect("[")
        if self.accept("]"):
            return ()
        groups = [self.var_group()]
        while self.accept(","):
            groups.append(self.var_group())
        self.expect("]")
        return tuple(groups)

    def program(self) -> Program:
        prog = Program()
        while self.tok.kind != "eof":
            self.sentence(prog)
        return prog


def parse_program(source: str) -> Program:
    return _Parser(source).program()


def parse_term(source: str) -> Term:
    """Parse a single term (variables numbered in order of appearance)."""
    p = _Parser(source)
    t = p.term()
    if p.tok.kind != "eof":
        raise p.error("trailing input after term")
    return t


def parse_clause(source: str) -> Clause:
    prog = parse_program(source)
    clauses = list(prog.clauses())
    if len(clauses) != 1:
        raise ValueError(f"expected exactly one clause, got {len(clauses)}")
    return clauses[0]
