"""Pseudo-random program generator for stress and equivalence testing.

Everything is driven by a seeded :class:`random.Random`, so the same seed
and parameters always give byte-identical source text.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path


@dataclass
class GenParams:
    predicates: int = 3
    max_clauses: int = 3
    max_body: int = 6
    max_arity: int = 3
    max_vars: int = 8
    reuse: float = 0.6
    externals: int = 2


def dead_temp_source(k: int) -> str:
    """One clause whose k temporaries each appear in a single literal.

    The classic environment holds ``k + 1`` variables while at most two are
    ever live.  ``opaque/2`` is left undefined so each literal takes the
    topmost path.
    """
    head = "dt(X)"
    lines = [f"% dead temporaries, k = {k}", ":- entry dt(X).", ""]
    if k == 0:
        lines.append(f"{head} :-\n    true.")
    else:
        body = ",\n".join(f"    opaque(X,T{i})" for i in range(1, k + 1))
        lines.append(f"{head} :-\n{body}.")
    return "\n".join(lines) + "\n"


class _ClauseGen:
    def __init__(self, rng: random.Random, params: GenParams):
        self.rng = rng
        self.p = params
        self.nv = rng.randint(2, params.max_vars)
        self.used: list[str] = []

    def var(self) -> str:
        rng = self.rng
        if self.used and (len(self.used) >= self.nv or rng.random() < self.p.reuse):
            return rng.choice(self.used)
        name = f"V{len(self.used)}"
        self.used.append(name)
        return name

    def term(self, depth: int = 0) -> str:
        rng = self.rng
        r = rng.random()
        if depth >= 2 or r < 0.55:
            return self.var()
        if r < 0.65:
            return rng.choice(["a", "b", "[]", "0"])
        if r < 0.85:
            return f"f({self.term(depth + 1)})" if rng.random() < 0.5 else f"g({self.term(depth + 1)},{self.term(depth + 1)})"
        return f"[{self.term(depth + 1)}|{self.term(depth + 1)}]"


def random_program(rng: random.Random, params: GenParams | None = None) -> str:
    p = params or GenParams()
    preds = [(f"p{i}", rng.randint(1, p.max_arity)) for i in range(p.predicates)]
    exts = [(f"ext{i}", rng.randint(1, 2)) for i in range(p.externals)]
    lines = []
    name, arity = preds[0]
    goal_vars = [f"A{i}" for i in range(arity)]
    if rng.random() < 0.5:
        groups = []
        for v in goal_vars:
            if rng.random() < 0.7:
                groups.append([v])
        if len(goal_vars) > 1 and rng.random() < 0.6:
            groups.append(rng.sample(goal_vars, 2))
        spec = "[" + ",".join("[" + ",".join(g) + "]" for g in groups) + "]"
        lines.append(f":- entry {name}({','.join(goal_vars)}) sharing {spec}.")
    else:
        lines.append(f":- entry {name}({','.join(goal_vars)}).")
    lines.append("")
    for pname, parity in preds:
        for _ in range(rng.randint(1, p.max_clauses)):
            g = _ClauseGen(rng, p)
            head = f"{pname}({','.join(g.term(1) for _ in range(parity))})"
            body = []
            for _ in range(rng.randint(0, p.max_body)):
                r = rng.random()
                if r < 0.4:
                    body.append(f"{g.var()} = {g.term()}")
                elif r < 0.75:
                    cname, carity = rng.choice(preds)
                    body.append(f"{cname}({','.join(g.term(1) for _ in range(carity))})")
                elif r < 0.95:
                    cname, carity = rng.choice(exts)
                    body.append(f"{cname}({','.join(g.var() for _ in range(carity))})")
                else:
                    body.append("true")
            if body:
                lines.append(f"{head} :-\n    " + ",\n    ".join(body) + ".")
            else:
                lines.append(f"{head}.")
    return "\n".join(lines) + "\n"


def generate(seed: int, count: int, params: GenParams | None = None) -> list[tuple[str, str]]:
    """``count`` (file name, source) pairs for ``seed``."""
    rng = random.Random(seed)
    return [(f"gen_{seed}_{i:04d}.pl", random_program(rng, params)) for i in range(count)]


def write_corpus(out_dir: str | Path, seed: int, count: int, params: GenParams | None = None,
                 dead_temps: list[int] | None = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, src in generate(seed, count, params):
        path = out / name
        path.write_text(src)
        written.append(path)
    for k in dead_temps or ():
        path = out / f"dead_temp_{k:02d}.pl"
        path.write_text(dead_temp_source(k))
        written.append(path)
    return written
