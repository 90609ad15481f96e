"""Classical refinement: single-bit-flip greedy descent and tabu search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qubo import BinarySolution, QuboError, QuboInstance, _as_bits

# flips must gain more than this; guards against float noise cycling on zero-gain moves
_GAIN_EPS = 1e-12


@dataclass(frozen=True)
class TabuConfig:
    iter_max: Optional[int] = None  # None -> 50 * n
    n_tabu: Optional[int] = None  # None -> min(10, n // 3), at least 1
    target: Optional[float] = None

    def __post_init__(self):
        if self.n_tabu is not None and self.n_tabu < 1:
            raise QuboError("tabu tenure must be >= 1")
        if self.iter_max is not None and self.iter_max < 1:
            raise QuboError("iter_max must be positive")

    def tenure_for(self, n: int) -> int:
        # a tenure near n leaves a single legal move per iteration
        return self.n_tabu if self.n_tabu is not None else min(10, max(1, n // 3))

    def iterations_for(self, n: int) -> int:
        return self.iter_max if self.iter_max is not None else 50 * n


class _FlipState:
    """Current bits with incrementally maintained local fields."""

    def __init__(self, instance: QuboInstance, bits):
        self.instance = instance
        self.x = _as_bits(bits, instance.n).copy()
        self.fields = instance.local_fields(self.x)

    def cost(self, i: int) -> float:
        return (1 - 2 * int(self.x[i])) * float(self.fields[i])

    def costs(self) -> np.ndarray:
        return (1 - 2 * self.x.astype(float)) * self.fields

    def flip(self, i: int) -> None:
        step = 1 - 2 * int(self.x[i])
        self.x[i] ^= 1
        nbr, w = self.instance.neighbors[i]
        self.fields[nbr] += step * w


def greedy_descent(instance: QuboInstance, bits) -> BinarySolution:
    """Sweep ``0..n-1`` flipping any bit with negative energy change until a sweep is idle."""
    st = _FlipState(instance, bits)
    changed = True
    while changed:
        changed = False
        for i in range(instance.n):
            if st.cost(i) < -_GAIN_EPS:
                st.flip(i)
                changed = True
    return BinarySolution.of(instance, st.x)


def tabu_search(
    instance: QuboInstance,
    bits,
    config: TabuConfig = TabuConfig(),
    move_log: Optional[list] = None,
) -> tuple[BinarySolution, float]:
    """Tabu search for QUBO minimization.

    Each iteration scans the non-tabu bits in ascending flip-cost order. The
    first flip that beats the best energy seen is taken at once; failing that,
    the best non-tabu neighbour is taken even if it is uphill. A flipped bit is
    locked for the tenure. The loop stops after ``iter_max`` iterations or
    once the best energy reaches ``target``.

    If ``move_log`` is given, ``(iteration, bit)`` is appended for every flip.
    """
    n = instance.n
    iter_max = config.iterations_for(n)
    tenure = config.tenure_for(n)
    st = _FlipState(instance, bits)
    energy = BinarySolution.of(instance, st.x).value
    best_x = st.x.copy()
    best_e = energy
    if config.target is not None and best_e <= config.target:
        return BinarySolution.of(instance, best_x), best_e

    tabu = np.zeros(n, dtype=int)
    bit_flips = 0
    while bit_flips < iter_max:
        costs = st.costs()
        order = np.argsort(costs, kind="stable")
        neighbour_best = np.inf
        best_bit = -1
        improved = False
        for k in order:
            if tabu[k]:
                continue
            new_e = energy + costs[k]
            if new_e < best_e - _GAIN_EPS:
                st.flip(k)
                energy = new_e
                best_e = energy
                best_x = st.x.copy()
                tabu[k] = tenure
                improved = True
                if move_log is not None:
                    move_log.append((bit_flips, int(k)))
                break
            if new_e < neighbour_best:
                neighbour_best = new_e
                best_bit = k
        if not improved and best_bit >= 0:
            st.flip(best_bit)
            energy = neighbour_best
            tabu[best_bit] = tenure
            if move_log is not None:
                move_log.append((bit_flips, int(best_bit)))
        np.maximum(tabu - 1, 0, out=tabu)
        bit_flips += 1
        if config.target is not None and best_e <= config.target:
            break

    best = BinarySolution.of(instance, best_x)
    return best, best.value
