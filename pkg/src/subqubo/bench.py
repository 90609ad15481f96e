"""Benchmark sweeps, record encodings and the calls-versus-size scaling fit."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from .driver import SolverConfig, solve
from .qubo import QuboError, QuboInstance

Z95 = 1.96


@dataclass(frozen=True)
class BenchRecord:
    instance_id: str
    n: int
    kind: str
    method: str
    d: int
    subsolver: str
    value: float
    subroutine_calls: int
    total_optimizer_evals: int
    wall_time: float
    seed: int

    def to_json(self, with_time: bool = True) -> str:
        row = asdict(self)
        if not with_time:
            row.pop("wall_time")
        return json.dumps(row, sort_keys=True)

    @classmethod
    def from_dict(cls, row: dict) -> "BenchRecord":
        kw = {}
        for f in fields(cls):
            if f.name not in row:
                raise QuboError(f"bench record missing field {f.name!r}")
            kw[f.name] = _coerce(f.type, row[f.name])
        return cls(**kw)


def _coerce(ftype, value):
    if ftype in ("int", int):
        return int(value)
    if ftype in ("float", float):
        return float(value)
    return str(value)


RECORD_FIELDS = [f.name for f in fields(BenchRecord)]


@dataclass(frozen=True)
class BenchInstance:
    instance_id: str
    kind: str
    qubo: QuboInstance


def _run_cell(args) -> BenchRecord:
    inst, config = args
    res = solve(inst.qubo, config, inst.instance_id)
    return BenchRecord(
        instance_id=inst.instance_id,
        n=inst.qubo.n,
        kind=inst.kind,
        method=config.grouping_method,
        d=config.sub_size,
        subsolver=config.subsolver,
        value=res.best.value,
        subroutine_calls=res.metrics.subroutine_calls,
        total_optimizer_evals=res.metrics.total_optimizer_evals,
        wall_time=res.metrics.wall_time,
        seed=config.seed,
    )


def bench_cells(
    instances: Sequence[BenchInstance],
    methods: Sequence[str],
    sizes: Sequence[int],
    base: SolverConfig,
) -> list[tuple[BenchInstance, SolverConfig]]:
    """Grid of ``(instance, config)`` cells; instance ``i`` solves with seed ``base.seed ^ i``."""
    if not instances or not methods or not sizes:
        raise QuboError("bench grid needs instances, methods and sizes")
    cells = []
    for i, inst in enumerate(instances):
        for method in methods:
            for d in sizes:
                if d > inst.qubo.n:
                    raise QuboError(f"d={d} exceeds n={inst.qubo.n} for {inst.instance_id}")
                cells.append((inst, replace(base, grouping_method=method, sub_size=d, seed=base.seed ^ i)))
    return cells


def run_bench(
    instances: Sequence[BenchInstance],
    methods: Sequence[str],
    sizes: Sequence[int],
    base: SolverConfig,
    jobs: int = 1,
) -> Iterator[BenchRecord]:
    """Yield one record per grid cell, in grid order regardless of ``jobs``."""
    cells = bench_cells(instances, methods, sizes, base)
    if jobs <= 1:
        for cell in cells:
            yield _run_cell(cell)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_run_cell, cells)


def records_to_csv(records: Iterable[BenchRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RECORD_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        row = asdict(r)
        row["value"] = repr(r.value)
        row["wall_time"] = repr(r.wall_time)
        writer.writerow(row)
    return buf.getvalue()


def read_records(text: str) -> list[BenchRecord]:
    """Parse JSONL or CSV bench output (detected from the first line)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        return []
    if lines[0].lstrip().startswith("{"):
        try:
            return [BenchRecord.from_dict(json.loads(ln)) for ln in lines]
        except json.JSONDecodeError as exc:
            raise QuboError(f"malformed JSONL record: {exc}") from exc
    return [BenchRecord.from_dict(row) for row in csv.DictReader(io.StringIO("\n".join(lines)))]


def _mean_ci(values: Sequence[float]) -> tuple[float, float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return mean, se, Z95 * se


def summarize(records: Iterable[BenchRecord]) -> list[dict]:
    """Per-(method, n, d) means with 95% intervals (mean +- 1.96 SE)."""
    cells: dict[tuple, list[BenchRecord]] = defaultdict(list)
    for r in records:
        cells[(r.method, r.n, r.d)].append(r)
    out = []
    for (method, n, d), rs in sorted(cells.items()):
        row = {"method": method, "n": n, "d": d, "count": len(rs)}
        for key in ("value", "subroutine_calls", "total_optimizer_evals"):
            mean, se, half = _mean_ci([getattr(r, key) for r in rs])
            row[f"{key}_mean"] = mean
            row[f"{key}_se"] = se
            row[f"{key}_ci_low"] = mean - half
            row[f"{key}_ci_high"] = mean + half
        out.append(row)
    return out


@dataclass(frozen=True)
class ScalingFit:
    """``calls ~ a / (d/N)`` per problem size, then ``a(N) * N ~ alpha N^2 + beta N``."""

    per_n: dict
    alpha: float
    beta: float
    r2: float

    def to_dict(self) -> dict:
        return {
            "per_n": {str(n): v for n, v in sorted(self.per_n.items())},
            "alpha": self.alpha,
            "beta": self.beta,
            "r2": self.r2,
        }


def _r2(y: np.ndarray, pred: np.ndarray) -> float:
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-12 * max(1.0, float(np.sum(y**2))) else 0.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def fit_scaling(points: Iterable) -> ScalingFit:
    """Fit mean subroutine calls against the size ratio.

    ``points`` are bench records or ``(n, d, calls)`` triples. Calls are first
    averaged per ``(n, d)``; each ``n`` gets a zero-intercept least-squares
    slope ``a`` of calls on ``n/d`` and its R^2. Then ``a * n``, the numerator
    of ``calls = a n / d``, is fitted on ``(n^2, n)``.
    """
    raw: dict[int, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for p in points:
        if isinstance(p, BenchRecord):
            n, d, calls = p.n, p.d, p.subroutine_calls
        else:
            n, d, calls = p
        raw[int(n)][int(d)].append(float(calls))
    if len(raw) < 2:
        raise QuboError(f"scaling fit needs at least 2 problem sizes, got {len(raw)}")
    per_n = {}
    for n, by_d in sorted(raw.items()):
        if len(by_d) < 4:
            raise QuboError(f"scaling fit needs at least 4 sub-QUBO sizes for N={n}, got {len(by_d)}")
        ds = np.array(sorted(by_d), dtype=float)
        y = np.array([np.mean(by_d[int(d)]) for d in ds])
        xr = n / ds
        a = float(xr @ y / (xr @ xr))
        per_n[n] = {"a": a, "r2": _r2(y, a * xr), "d": ds.astype(int).tolist(), "mean_calls": y.tolist()}
    ns = np.array(sorted(per_n), dtype=float)
    numer = np.array([per_n[int(n)]["a"] * n for n in ns])
    A = np.column_stack([ns**2, ns])
    (alpha, beta), *_ = np.linalg.lstsq(A, numer, rcond=None)
    return ScalingFit(per_n, float(alpha), float(beta), _r2(numer, A @ np.array([alpha, beta])))
