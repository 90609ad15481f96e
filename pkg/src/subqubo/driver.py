"""Hybrid outer loop: group, extract, sub-solve, merge, refine, keep the best."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .grouping import (
    SolutionPool,
    certainty_grouping,
    cluster_grouping,
    impact_grouping,
    random_grouping,
)
from .local_search import TabuConfig, greedy_descent, tabu_search
from .qubo import BinarySolution, QuboError, QuboInstance, evaluate, extract_sub_qubo, merge_sub_solution
from .subsolver import EXACT_CAP, QaoaConfig, exact_solve, qaoa_solve, qubit_cap

GROUPING_METHODS = ("cluster", "impact", "certainty", "random")
SUBSOLVERS = ("qaoa", "exact")
LOCAL_SEARCHES = ("greedy", "tabu")
IMPROVE_TOL = 1e-9


class SolveError(RuntimeError):
    """A solve failed; the message names the offending instance."""


@dataclass(frozen=True)
class SolverConfig:
    grouping_method: str = "cluster"
    sub_size: int = 12
    subsolver: str = "qaoa"
    qaoa: QaoaConfig = field(default_factory=QaoaConfig)
    local_search: str = "greedy"
    tabu: TabuConfig = field(default_factory=TabuConfig)
    patience: int = 3
    max_outer_iters: int = 100
    pool_capacity: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.grouping_method not in GROUPING_METHODS:
            raise QuboError(f"unknown grouping method {self.grouping_method!r}")
        if self.subsolver not in SUBSOLVERS:
            raise QuboError(f"unknown subsolver {self.subsolver!r}")
        if self.local_search not in LOCAL_SEARCHES:
            raise QuboError(f"unknown local search {self.local_search!r}")
        if self.patience < 1 or self.max_outer_iters < 1 or self.pool_capacity < 1:
            raise QuboError("patience, max_outer_iters and pool_capacity must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunMetrics:
    subroutine_calls: int = 0
    total_optimizer_evals: int = 0
    best_trace: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def outer_iterations(self) -> int:
        return len(self.best_trace) - 1


@dataclass
class SolveResult:
    best: BinarySolution
    metrics: RunMetrics
    config: SolverConfig
    instance_id: str = ""

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "n": int(self.best.bits.shape[0]),
            "best_value": self.best.value,
            "best_bits": [int(b) for b in self.best.bits],
            "subroutine_calls": self.metrics.subroutine_calls,
            "total_optimizer_evals": self.metrics.total_optimizer_evals,
            "outer_iterations": self.metrics.outer_iterations,
            "best_trace": [[int(t), float(v)] for t, v in self.metrics.best_trace],
            "wall_time": self.metrics.wall_time,
            "config": self.config.to_dict(),
        }


def _validate(instance: QuboInstance, config: SolverConfig) -> None:
    d = config.sub_size
    if not 1 <= d <= instance.n:
        raise QuboError(f"sub_size d={d} must satisfy 1 <= d <= n={instance.n}")
    if config.subsolver == "qaoa" and d > qubit_cap():
        raise QuboError(f"d={d} exceeds the statevector cap of {qubit_cap()} qubits")
    if config.subsolver == "exact" and d > EXACT_CAP:
        raise QuboError(f"d={d} exceeds the exact-solver cap of {EXACT_CAP}")


def _refine(instance: QuboInstance, bits, config: SolverConfig) -> BinarySolution:
    if config.local_search == "greedy":
        return greedy_descent(instance, bits)
    return tabu_search(instance, bits, config.tabu)[0]


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**63 - 1))


def solve(
    instance: QuboInstance,
    config: SolverConfig = SolverConfig(),
    instance_id: str = "",
    trace: Optional[Callable[[dict], None]] = None,
) -> SolveResult:
    """Run the decomposition loop until ``patience`` idle iterations or ``max_outer_iters``.

    Sub-solutions are merged one cluster at a time, so each extraction sees the
    assignments produced by the clusters solved before it. ``trace`` receives
    one record per outer iteration.
    """
    _validate(instance, config)
    t0 = time.perf_counter()
    n, d = instance.n, config.sub_size
    rng = np.random.default_rng(config.seed)
    metrics = RunMetrics()

    x0 = rng.integers(0, 2, size=n).astype(np.int8)
    best = _refine(instance, x0, config)
    pool = SolutionPool(config.pool_capacity)
    pool.push(best.bits)
    metrics.best_trace.append((0, best.value))

    idle = 0
    for it in range(1, config.max_outer_iters + 1):
        method = config.grouping_method
        if method == "cluster":
            grouping = cluster_grouping(instance, best.bits, d, seed=_seed(rng))
        elif method == "impact":
            grouping = impact_grouping(instance, best.bits, d)
        elif method == "certainty":
            grouping = certainty_grouping(pool, d)
        else:
            grouping = random_grouping(n, d, seed=_seed(rng))

        work = np.array(best.bits, dtype=np.int8)
        deltas = []
        for S in grouping.clusters:
            sub = extract_sub_qubo(instance, work, S)
            before = evaluate(sub.inner, work[list(S)])
            if config.subsolver == "qaoa":
                res = qaoa_solve(sub, work[list(S)], replace(config.qaoa, seed=_seed(rng)))
            else:
                res = exact_solve(sub)
            metrics.subroutine_calls += 1
            metrics.total_optimizer_evals += res.optimizer_evals
            deltas.append(evaluate(sub.inner, res.bits) - before)
            work = merge_sub_solution(work, S, res.bits)

        merged_value = evaluate(instance, work)
        refined = _refine(instance, work, config)
        pool.push(refined.bits)
        if refined.value < best.value - IMPROVE_TOL:
            best = refined
            idle = 0
        else:
            idle += 1
        metrics.best_trace.append((it, best.value))
        if trace is not None:
            trace(
                {
                    "iteration": it,
                    "group_sizes": [len(c) for c in grouping.clusters],
                    "groups": grouping.to_json(),
                    "sub_deltas": deltas,
                    "merged_value": merged_value,
                    "refined_value": refined.value,
                    "best_value": best.value,
                }
            )
        if idle >= config.patience:
            break

    metrics.wall_time = time.perf_counter() - t0
    return SolveResult(best, metrics, config, instance_id)


def _solve_one(args) -> SolveResult:
    instance, config, instance_id = args
    try:
        return solve(instance, config, instance_id)
    except Exception as exc:
        raise SolveError(f"instance {instance_id}: {exc}") from exc


def solve_suite(
    instances: Sequence[QuboInstance],
    config: SolverConfig = SolverConfig(),
    parallelism: int = 1,
    instance_ids: Optional[Sequence[str]] = None,
) -> list[SolveResult]:
    """Solve every instance with seed ``config.seed ^ index``; output order follows input order."""
    if not instances:
        raise QuboError("instance list is empty")
    ids = list(instance_ids) if instance_ids is not None else [str(i) for i in range(len(instances))]
    jobs = [(inst, replace(config, seed=config.seed ^ i), ids[i]) for i, inst in enumerate(instances)]
    if parallelism <= 1:
        return [_solve_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_solve_one, jobs))
