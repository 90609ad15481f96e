"""Sub-QUBO solvers: a simulated p-layer QAOA and exhaustive enumeration.

Basis states are indexed little-endian: bit ``k`` of the integer ``z`` is the
value of sub-problem variable ``k``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qubo import (
    IsingModel,
    QuboError,
    SubQubo,
    index_to_bits,
    instance_energies,
    ising_energies,
    to_ising,
    evaluate,
)

DEFAULT_QUBIT_CAP = 20
EXACT_CAP = 24
# energies within this of the minimum count as ties
TIE_TOL = 1e-9


def qubit_cap() -> int:
    """Statevector size limit; ``SUBQUBO_QUBIT_CAP`` overrides the default of 20."""
    raw = os.environ.get("SUBQUBO_QUBIT_CAP")
    if raw is None:
        return DEFAULT_QUBIT_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise QuboError(f"SUBQUBO_QUBIT_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise QuboError("SUBQUBO_QUBIT_CAP must be positive")
    return cap


@dataclass(frozen=True)
class QaoaConfig:
    depth: int = 1
    shots: int = 1024
    initial_radius: float = 1.0
    final_radius: float = 1e-4
    max_evals: int = 100
    expectation_mode: str = "sampled"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.depth < 1:
            raise QuboError("QAOA depth must be >= 1")
        if self.shots < 1 or self.max_evals < 1:
            raise QuboError("shots and max_evals must be positive")
        if not 0 < self.final_radius < self.initial_radius:
            raise QuboError("need 0 < final_radius < initial_radius")
        if self.expectation_mode not in ("sampled", "exact"):
            raise QuboError(f"unknown expectation mode {self.expectation_mode!r}")


@dataclass(frozen=True, eq=False)
class QaoaState:
    amplitudes: np.ndarray

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.shape[0]).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()


@dataclass(frozen=True, eq=False)
class SubSolveResult:
    bits: np.ndarray
    value: float
    optimizer_evals: int


def _apply_mixer(psi: np.ndarray, q: int, beta: float) -> np.ndarray:
    """``exp(-i beta H_M)`` with ``H_M = -sum_k X_k``, whose ground state is the start state."""
    c, s = math.cos(beta), 1j * math.sin(beta)
    for k in range(q):
        view = psi.reshape(-1, 2, 1 << k)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 + s * a1
        view[:, 1, :] = s * a0 + c * a1
    return psi


def evolve(diag: np.ndarray, gammas, betas) -> QaoaState:
    """QAOA state for a cost Hamiltonian given by its diagonal."""
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    if gammas.shape != betas.shape:
        raise QuboError("need as many gammas as betas")
    dim = diag.shape[0]
    q = dim.bit_length() - 1
    psi = np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)
    for g, b in zip(gammas, betas):
        psi *= np.exp(-1j * g * diag)
        _apply_mixer(psi, q, b)
    return QaoaState(psi)


def _check_qubits(q: int, cap: Optional[int]) -> None:
    cap = qubit_cap() if cap is None else cap
    if q > cap:
        raise QuboError(f"{q} qubits exceed the statevector cap of {cap}")


def build_qaoa_state(ising: IsingModel, gammas, betas, cap: Optional[int] = None) -> QaoaState:
    """Hadamard start, then alternating cost phase and X mixer for each layer."""
    _check_qubits(ising.n, cap)
    return evolve(ising_energies(ising), gammas, betas)


def _draw(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(probs.shape[0], size=shots, p=probs)


def sample_states(state: QaoaState, shots: int, seed=None) -> np.ndarray:
    """Measure ``shots`` times in the computational basis; returns basis indices."""
    return _draw(state.probabilities(), shots, np.random.default_rng(seed))


def _expectation(probs: np.ndarray, diag: np.ndarray, mode: str, shots: int, rng) -> float:
    if mode == "exact":
        return float(probs @ diag)
    return float(diag[_draw(probs, shots, rng)].mean())


def expectation(state: QaoaState, ising: IsingModel, mode: str = "exact", shots: int = 1024, seed=None) -> float:
    """``<H_C>`` exactly or as a mean over ``shots`` computational-basis samples."""
    if mode not in ("exact", "sampled"):
        raise QuboError(f"unknown expectation mode {mode!r}")
    diag = ising_energies(ising)
    return _expectation(state.probabilities(), diag, mode, shots, np.random.default_rng(seed))


def _optimize(diag: np.ndarray, config: QaoaConfig, rng) -> tuple[np.ndarray, np.ndarray, int, float]:
    """Compass search on (gammas, betas) with a halving step.

    Each round tries +-step along every coordinate and moves to the first
    improving point; a round without improvement halves the step. Stops when
    the step drops below ``final_radius`` or the evaluation budget is spent.
    """
    p = config.depth

    def value(theta):
        state = evolve(diag, theta[:p], theta[p:])
        return _expectation(state.probabilities(), diag, config.expectation_mode, config.shots, rng)

    theta = np.full(2 * p, 0.5 * config.initial_radius)
    best = value(theta)
    evals = 1
    step = config.initial_radius
    while step >= config.final_radius and evals < config.max_evals:
        moved = False
        for k in range(2 * p):
            for sign in (1.0, -1.0):
                if evals >= config.max_evals:
                    break
                trial = theta.copy()
                trial[k] += sign * step
                if k >= p:
                    trial[k] %= math.pi
                v = value(trial)
                evals += 1
                if v < best:
                    theta, best, moved = trial, v, True
                    break
            if moved or evals >= config.max_evals:
                break
        if not moved:
            step *= 0.5
    return theta[:p].copy(), theta[p:].copy(), evals, best


def optimize_params(ising: IsingModel, config: QaoaConfig = QaoaConfig()) -> tuple[np.ndarray, np.ndarray, int]:
    """Derivative-free minimization of ``<H_C>``; returns ``(gammas, betas, evals)``."""
    _check_qubits(ising.n, None)
    rng = np.random.default_rng(config.seed)
    gammas, betas, evals, _ = _optimize(ising_energies(ising), config, rng)
    return gammas, betas, evals


def qaoa_solve(sub: SubQubo, current_bits, config: QaoaConfig = QaoaConfig()) -> SubSolveResult:
    """Optimize QAOA angles on the sub-problem, sample, and keep the best sample.

    The incoming assignment is returned instead unless some sample is strictly
    better, so the result is never worse than ``current_bits``.
    """
    inner = sub.inner
    q = inner.n
    _check_qubits(q, None)
    current = np.asarray(current_bits, dtype=np.int8).reshape(-1)
    if current.shape[0] != q:
        raise QuboError(f"current assignment has {current.shape[0]} bits, sub-problem has {q}")
    rng = np.random.default_rng(config.seed)
    diag = ising_energies(to_ising(inner))
    gammas, betas, evals, _ = _optimize(diag, config, rng)
    probs = evolve(diag, gammas, betas).probabilities()
    draws = np.unique(_draw(probs, config.shots, rng))
    # diag equals the inner QUBO objective on each basis state
    z = int(draws[np.argmin(diag[draws])])
    cand = index_to_bits(z, q)
    cand_val = evaluate(inner, cand)
    cur_val = evaluate(inner, current)
    if cand_val < cur_val:
        return SubSolveResult(cand, cand_val, evals)
    return SubSolveResult(current.copy(), cur_val, evals)


def exact_solve(sub: SubQubo) -> SubSolveResult:
    """Global minimizer by enumeration; ties go to the smallest little-endian index."""
    inner = sub.inner
    if inner.n > EXACT_CAP:
        raise QuboError(f"exact solve limited to {EXACT_CAP} variables, got {inner.n}")
    energies = instance_energies(inner)
    z = int(np.flatnonzero(energies <= energies.min() + TIE_TOL)[0])
    bits = index_to_bits(z, inner.n)
    return SubSolveResult(bits, evaluate(inner, bits), 0)
