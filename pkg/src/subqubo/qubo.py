"""Canonical QUBO representation and the operations built on it.

A problem is stored as linear terms ``l_i``, upper-triangular couplings
``c_ij`` (``i < j``) and a constant offset, so the objective reads

    f(x) = offset + sum_i l_i x_i + sum_{i<j} c_ij x_i x_j,   x_i in {0, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np


class QuboError(ValueError):
    """Raised on malformed instances or out-of-range arguments."""


def _as_bits(bits, n: int) -> np.ndarray:
    x = np.asarray(bits, dtype=np.int8).reshape(-1)
    if x.shape[0] != n:
        raise QuboError(f"expected {n} bits, got {x.shape[0]}")
    return x


@dataclass(frozen=True, eq=False)
class QuboInstance:
    n: int
    linear: np.ndarray
    couplings: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        lin = np.array(self.linear, dtype=float).reshape(-1)
        if lin.shape[0] != self.n:
            raise QuboError(f"linear has length {lin.shape[0]}, expected {self.n}")
        lin.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        merged: dict[tuple[int, int], float] = {}
        for (i, j), c in self.couplings.items():
            i, j = int(i), int(j)
            if not (0 <= i < j < self.n):
                raise QuboError(f"coupling key ({i}, {j}) violates 0 <= i < j < {self.n}")
            merged[(i, j)] = float(c)
        object.__setattr__(self, "couplings", merged)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_matrix(cls, Q, c=None, offset: float = 0.0) -> "QuboInstance":
        """Canonicalize ``x^T Q x + c^T x`` for an arbitrary square ``Q``."""
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise QuboError("Q must be square")
        n = Q.shape[0]
        lin = np.diag(Q).copy()
        if c is not None:
            c = np.asarray(c, dtype=float).reshape(-1)
            if c.shape[0] != n:
                raise QuboError("c length does not match Q")
            lin += c
        sym = Q + Q.T
        iu, ju = np.triu_indices(n, k=1)
        couplings = {(int(i), int(j)): float(sym[i, j]) for i, j in zip(iu, ju) if sym[i, j] != 0.0}
        return cls(n, lin, couplings, offset)

    @classmethod
    def zeros(cls, n: int) -> "QuboInstance":
        return cls(n, np.zeros(n))

    @cached_property
    def dense(self) -> np.ndarray:
        """Symmetric coupling matrix with ``C[i, j] = C[j, i] = c_ij`` and zero diagonal."""
        C = np.zeros((self.n, self.n))
        for (i, j), c in self.couplings.items():
            C[i, j] += c
            C[j, i] += c
        C.setflags(write=False)
        return C

    @cached_property
    def neighbors(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        """Per-variable ``(indices, weights)`` of nonzero couplings."""
        nbr: list[list[int]] = [[] for _ in range(self.n)]
        wts: list[list[float]] = [[] for _ in range(self.n)]
        for (i, j), c in self.couplings.items():
            if c == 0.0:
                continue
            nbr[i].append(j)
            wts[i].append(c)
            nbr[j].append(i)
            wts[j].append(c)
        return tuple(
            (np.array(a, dtype=np.intp), np.array(w, dtype=float)) for a, w in zip(nbr, wts)
        )

    def local_fields(self, bits) -> np.ndarray:
        """``l_i + sum_{j != i} c_ij x_j`` for every ``i``."""
        x = _as_bits(bits, self.n)
        return self.linear + self.dense @ x

    def __eq__(self, other):
        if not isinstance(other, QuboInstance):
            return NotImplemented
        return (
            self.n == other.n
            and self.offset == other.offset
            and np.array_equal(self.linear, other.linear)
            and {k: v for k, v in self.couplings.items() if v != 0.0}
            == {k: v for k, v in other.couplings.items() if v != 0.0}
        )

    def __repr__(self):
        return f"QuboInstance(n={self.n}, couplings={len(self.couplings)}, offset={self.offset})"


@dataclass(frozen=True, eq=False)
class BinarySolution:
    bits: np.ndarray
    value: float

    @classmethod
    def of(cls, instance: QuboInstance, bits) -> "BinarySolution":
        x = _as_bits(bits, instance.n).copy()
        x.setflags(write=False)
        return cls(x, evaluate(instance, x))

    def __eq__(self, other):
        if not isinstance(other, BinarySolution):
            return NotImplemented
        return self.value == other.value and np.array_equal(self.bits, other.bits)


@dataclass(frozen=True)
class IsingModel:
    """``E(s) = constant + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j`` over ``s_i = +-1``."""

    fields: np.ndarray
    couplings: Mapping[tuple[int, int], float]
    constant: float = 0.0

    @property
    def n(self) -> int:
        return len(self.fields)

    def energy(self, spins) -> float:
        s = np.asarray(spins, dtype=float)
        e = self.constant + float(self.fields @ s)
        for (i, j), J in self.couplings.items():
            e += J * s[i] * s[j]
        return e


@dataclass(frozen=True)
class SubQubo:
    indices: tuple[int, ...]
    inner: QuboInstance
    context_offset: float


def evaluate(instance: QuboInstance, bits) -> float:
    x = _as_bits(bits, instance.n).astype(float)
    return float(instance.offset + instance.linear @ x + 0.5 * x @ instance.dense @ x)


def _check_index(instance: QuboInstance, i: int) -> int:
    i = int(i)
    if not 0 <= i < instance.n:
        raise QuboError(f"index {i} out of range for n={instance.n}")
    return i


def delta_flip(instance: QuboInstance, bits, i: int) -> float:
    """Objective change from flipping bit ``i``; O(degree of i)."""
    x = _as_bits(bits, instance.n)
    i = _check_index(instance, i)
    nbr, w = instance.neighbors[i]
    field_i = instance.linear[i] + float(w @ x[nbr])
    return float((1 - 2 * int(x[i])) * field_i)


def delta_flip_pair(instance: QuboInstance, bits, i: int, j: int) -> float:
    x = _as_bits(bits, instance.n)
    i = _check_index(instance, i)
    j = _check_index(instance, j)
    if i == j:
        raise QuboError("pair flip needs two distinct indices")
    si = 1 - 2 * int(x[i])
    sj = 1 - 2 * int(x[j])
    return delta_flip(instance, x, i) + delta_flip(instance, x, j) + si * sj * instance.dense[i, j]


def to_ising(instance: QuboInstance) -> IsingModel:
    """Substitute ``x_i = (1 + s_i) / 2``."""
    h = instance.linear / 2.0 + instance.dense.sum(axis=1) / 4.0
    J = {k: c / 4.0 for k, c in instance.couplings.items()}
    constant = instance.offset + instance.linear.sum() / 2.0 + sum(instance.couplings.values()) / 4.0
    return IsingModel(h, J, float(constant))


def extract_sub_qubo(instance: QuboInstance, bits, S: Iterable[int]) -> SubQubo:
    """Restrict the objective to ``S`` with every other variable frozen at ``bits``.

    Cross terms with frozen variables fold into the inner linear terms; terms
    touching only frozen variables go to ``context_offset``. The original
    offset stays with the inner instance.
    """
    x = _as_bits(bits, instance.n)
    idx = tuple(int(i) for i in S)
    if not idx:
        raise QuboError("sub-QUBO index set is empty")
    if len(set(idx)) != len(idx):
        raise QuboError("sub-QUBO indices must be distinct")
    for i in idx:
        _check_index(instance, i)
    local = {g: k for k, g in enumerate(idx)}
    inside = np.zeros(instance.n, dtype=bool)
    inside[list(idx)] = True
    fixed = np.where(inside, 0, x).astype(float)

    sel = np.array(idx, dtype=np.intp)
    lin = instance.linear[sel] + instance.dense[sel] @ fixed
    inner_c: dict[tuple[int, int], float] = {}
    context = float(instance.linear @ fixed)
    for (i, j), c in instance.couplings.items():
        if inside[i] and inside[j]:
            a, b = local[i], local[j]
            inner_c[(a, b) if a < b else (b, a)] = c
        elif not inside[i] and not inside[j]:
            context += c * fixed[i] * fixed[j]
    inner = QuboInstance(len(idx), lin, inner_c, instance.offset)
    return SubQubo(idx, inner, context)


def merge_sub_solution(bits, S: Sequence[int], sub_bits) -> np.ndarray:
    x = np.array(bits, dtype=np.int8).reshape(-1)
    y = np.asarray(sub_bits, dtype=np.int8).reshape(-1)
    S = list(S)
    if y.shape[0] != len(S):
        raise QuboError(f"sub solution has {y.shape[0]} bits for {len(S)} indices")
    x[S] = y
    return x


def basis_energies(linear, dense, offset: float = 0.0, spin: bool = False) -> np.ndarray:
    """Objective on every basis state, indexed little-endian (bit ``k`` of ``z`` is variable ``k``).

    Built by doubling: appending variable ``k`` adds ``v_k * (a_k + sum_{j<k} C_jk v_j)``
    where ``v`` ranges over {0, 1} (or {-1, +1} when ``spin``).
    """
    linear = np.asarray(linear, dtype=float)
    dense = np.asarray(dense, dtype=float)
    lo, hi = (-1.0, 1.0) if spin else (0.0, 1.0)
    energies = np.array([float(offset)])
    for k in range(len(linear)):
        # field on variable k from the already-placed variables 0..k-1
        fld = np.array([linear[k]])
        for j in range(k):
            cjk = dense[j, k]
            fld = np.concatenate((fld + lo * cjk, fld + hi * cjk))
        energies = np.concatenate((energies + lo * fld, energies + hi * fld))
    return energies


def instance_energies(instance: QuboInstance) -> np.ndarray:
    return basis_energies(instance.linear, instance.dense, instance.offset)


def ising_energies(model: IsingModel) -> np.ndarray:
    n = model.n
    J = np.zeros((n, n))
    for (i, j), c in model.couplings.items():
        J[i, j] = J[j, i] = c
    return basis_energies(model.fields, J, model.constant, spin=True)


def index_to_bits(z: int, n: int) -> np.ndarray:
    return ((int(z) >> np.arange(n)) & 1).astype(np.int8)
