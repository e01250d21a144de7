"""Benchmark matrix, speed-up summary and plot data.

A bench run analyzes every module of a corpus under each (domain, mode)
cell and records one row per cell.  The CSV holds the raw rows, then the
per-module speed-ups of each mode over classic and a per-domain summary of
failure counts and mean speed-ups.  Means only use modules where both
compared runs finished.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .reassoc import transform_program
from .solver import AnalysisError, analyze
from .syntax import ParseError, parse_program

log = logging.getLogger(__name__)

DOMAINS = ("share", "share-clique")
MODES = ("classic", "trim", "reassoc")
FIELDS = ["module", "domain", "mode", "time_ms", "status", "max_abs_size"]


@dataclass
class BenchRow:
    module: str
    domain: str
    mode: str
    time_ms: float
    status: str
    max_abs_size: int

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def run_cell(path: str, domain: str, mode: str, timeout_ms: float = 300000, max_size: int = 1 << 22,
             builtins: dict | None = None) -> BenchRow:
    """Load, preprocess and analyze one module; never raises."""
    module = Path(path).stem
    start = time.perf_counter()
    size = 0
    try:
        program = parse_program(Path(path).read_text())
        strategy = mode
        if mode == "reassoc":
            program = transform_program(program).program
            strategy = "classic"
        elapsed = (time.perf_counter() - start) * 1000.0
        res = analyze(program, domain, strategy, builtins=builtins,
                      timeout_ms=max(timeout_ms - elapsed, 1.0), max_size=max_size)
        status, size = "ok", res.stats.max_size
    except AnalysisError as exc:
        status = exc.status
        size = exc.stats.max_size if exc.stats else 0
    except (ParseError, RecursionError, MemoryError, ValueError) as exc:
        log.warning("%s %s %s: %s", module, domain, mode, exc)
        status = "oom-guard" if isinstance(exc, MemoryError) else "error"
    # rounded once here so speed-ups recompute exactly from the CSV
    return BenchRow(module, domain, mode, round((time.perf_counter() - start) * 1000.0, 3), status, size)


def _cell(args) -> BenchRow:
    return run_cell(*args)


def run_bench(files: Iterable[str], domains=DOMAINS, modes=MODES, timeout_ms: float = 300000,
              max_size: int = 1 << 22, builtins: dict | None = None, jobs: int = 1,
              times: bool = True) -> list[BenchRow]:
    cells = [(str(f), d, m, timeout_ms, max_size, builtins) for f in sorted(map(str, files))
             for d in domains for m in modes]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_cell, cells))
    else:
        rows = [_cell(c) for c in cells]
    if not times:
        for r in rows:
            r.time_ms = 0.0
    return rows


def speedups(rows: list[BenchRow]) -> list[tuple[str, str, str, float]]:
    """(module, domain, mode, classic/mode time) where both runs are ok."""
    classic = {(r.module, r.domain): r for r in rows if r.mode == "classic"}
    out = []
    for r in rows:
        if r.mode == "classic":
            continue
        c = classic.get((r.module, r.domain))
        if c is None or not (c.ok and r.ok) or r.time_ms <= 0:
            continue
        out.append((r.module, r.domain, r.mode, c.time_ms / r.time_ms))
    return out


def summary(rows: list[BenchRow]) -> list[dict]:
    out = []
    rho = speedups(rows)
    for d in sorted({r.domain for r in rows}, key=lambda x: (x not in DOMAINS, x)):
        mods = sorted({r.module for r in rows if r.domain == d})
        fails = {m: sum(1 for r in rows if r.domain == d and r.mode == m and not r.ok) for m in MODES}

        def mean(mode):
            vals = [s for (_, dd, mm, s) in rho if dd == d and mm == mode]
            return sum(vals) / len(vals) if vals else math.nan

        out.append({
            "domain": d,
            "mods": len(mods),
            "fc": fails["classic"],
            "ft": fails["trim"],
            "fr": fails["reassoc"],
            "mu_t": mean("trim"),
            "mu_r": mean("reassoc"),
        })
    return out


def _fmt(x: float) -> str:
    return "" if isinstance(x, float) and math.isnan(x) else repr(float(x))


def bench_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in rows:
        w.writerow([r.module, r.domain, r.mode, repr(r.time_ms), r.status, r.max_abs_size])
    buf.write("\n# speedups\n")
    w.writerow(["module", "domain", "mode", "rho"])
    for m, d, mode, s in speedups(rows):
        w.writerow([m, d, mode, _fmt(s)])
    buf.write("\n# summary\n")
    w.writerow(["domain", "mods", "fc", "ft", "fr", "mu_t", "mu_r"])
    for s in summary(rows):
        w.writerow([s["domain"], s["mods"], s["fc"], s["ft"], s["fr"], _fmt(s["mu_t"]), _fmt(s["mu_r"])])
    return buf.getvalue()


def read_rows(text: str) -> list[BenchRow]:
    """Raw rows of a bench CSV (everything before the first blank line)."""
    block = text.split("\n\n", 1)[0]
    rows = []
    for rec in csv.DictReader(io.StringIO(block)):
        rows.append(BenchRow(rec["module"], rec["domain"], rec["mode"], float(rec["time_ms"]),
                             rec["status"], int(rec["max_abs_size"])))
    return rows


# ---------------------------------------------------------------------------
# Plot data


def cactus(rows: list[BenchRow]) -> list[tuple[str, str, int, float]]:
    """Per (domain, mode): ok times sorted ascending, as running sums."""
    out = []
    cells = sorted({(r.domain, r.mode) for r in rows})
    for d, m in cells:
        times = sorted(r.time_ms for r in rows if r.domain == d and r.mode == m and r.ok)
        acc = 0.0
        for i, t in enumerate(times, 1):
            acc += t
            out.append((d, m, i, acc))
    return out


def scatter(rows: list[BenchRow]) -> list[tuple[str, str, str, float, float, float]]:
    """(module, domain, mode, classic, other, log10 speed-up) for mutually ok pairs."""
    classic = {(r.module, r.domain): r for r in rows if r.mode == "classic"}
    out = []
    for r in sorted(rows, key=lambda r: (r.domain, r.mode, r.module)):
        if r.mode == "classic":
            continue
        c = classic.get((r.module, r.domain))
        if c is None or not (c.ok and r.ok):
            continue
        lg = math.log10(c.time_ms / r.time_ms) if c.time_ms > 0 and r.time_ms > 0 else math.nan
        out.append((r.module, r.domain, r.mode, c.time_ms, r.time_ms, lg))
    return out


def cactus_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["domain", "mode", "i", "accumulated_ms"])
    for d, m, i, acc in cactus(rows):
        w.writerow([d, m, i, repr(acc)])
    return buf.getvalue()


def scatter_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["module", "domain", "mode", "classic_ms", "other_ms", "log10_speedup"])
    for m, d, mode, c, o, lg in scatter(rows):
        w.writerow([m, d, mode, repr(c), repr(o), _fmt(lg)])
    return buf.getvalue()


def load_builtins(path: str | None) -> dict | None:
    if not path:
        return None
    return json.loads(Path(path).read_text())
