"""Variable-grouping strategies that split the variables into sub-QUBO index sets.

``cluster_grouping`` is the correlation-driven method: build the signed
correlation matrix at the current solution, split it into repulsive and
attractive views, embed each view spectrally, concatenate the embeddings and
run k-means. ``impact_grouping``, ``certainty_grouping`` and
``random_grouping`` are the sort-and-chunk baselines.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .qubo import QuboError, QuboInstance, _as_bits, delta_flip

KMEANS_MAX_ITER = 300


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Grouping:
    clusters: tuple[tuple[int, ...], ...]
    max_size: int

    def __post_init__(self):
        clusters = tuple(tuple(sorted(int(i) for i in c)) for c in self.clusters)
        object.__setattr__(self, "clusters", clusters)
        seen: set[int] = set()
        for c in clusters:
            if not c:
                raise QuboError("empty cluster")
            if len(c) > self.max_size:
                raise QuboError(f"cluster of size {len(c)} exceeds max_size {self.max_size}")
            if seen.intersection(c):
                raise QuboError("clusters overlap")
            seen.update(c)
        if seen != set(range(len(seen))):
            raise QuboError("clusters do not cover 0..n-1")

    @property
    def n(self) -> int:
        return sum(len(c) for c in self.clusters)

    def as_sets(self) -> set[frozenset[int]]:
        return {frozenset(c) for c in self.clusters}

    def to_json(self) -> list[list[int]]:
        return [list(c) for c in self.clusters]


class SolutionPool:
    """FIFO pool of the most recent local minima."""

    def __init__(self, capacity: int = 20):
        if capacity < 1:
            raise QuboError("pool capacity must be >= 1")
        self.capacity = capacity
        self._entries: deque[np.ndarray] = deque(maxlen=capacity)

    def push(self, bits) -> None:
        x = np.array(bits, dtype=np.int8).reshape(-1)
        if self._entries and x.shape != self._entries[0].shape:
            raise QuboError("pool entries must share one length")
        self._entries.append(x)

    @property
    def entries(self) -> list[np.ndarray]:
        return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)


def _check_d(n: int, d: int) -> None:
    if not 1 <= d <= n:
        raise QuboError(f"sub-QUBO size d must satisfy 1 <= d <= n (got d={d}, n={n})")


def _chunks(order: Sequence[int], d: int, n: int) -> Grouping:
    order = list(order)
    return Grouping(tuple(tuple(order[s : s + d]) for s in range(0, n, d)), d)


def correlation_matrix(instance: QuboInstance, bits) -> CorrelationMatrix:
    """``Sigma_ij = (-1)^(x_i + x_j) c_ij``, i.e. joint-flip change minus both single-flip changes."""
    x = _as_bits(bits, instance.n)
    sign = 1.0 - 2.0 * x
    return CorrelationMatrix(np.outer(sign, sign) * instance.dense)


def split_views(sigma: CorrelationMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Repulsive (positive) and attractive (negative) parts, both nonnegative."""
    S = np.asarray(sigma.entries, dtype=float)
    return np.maximum(S, 0.0), np.maximum(-S, 0.0)


def normalized_laplacian(A) -> np.ndarray:
    """``I - D^-1/2 A D^-1/2``; isolated nodes keep an identity row."""
    A = np.asarray(A, dtype=float)
    deg = A.sum(axis=1)
    inv = np.zeros_like(deg)
    pos = deg > 0
    inv[pos] = 1.0 / np.sqrt(deg[pos])
    return np.eye(A.shape[0]) - inv[:, None] * A * inv[None, :]


def spectral_features(L, m: int) -> np.ndarray:
    """First ``m`` eigenvectors of ``L`` (ascending eigenvalue) as columns."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if not 1 <= m <= n:
        raise QuboError(f"feature count m must satisfy 1 <= m <= n (got m={m}, n={n})")
    _, vecs = np.linalg.eigh(L)
    U = vecs[:, :m].copy()
    # fix the sign ambiguity: largest-magnitude entry of each column positive
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(m)])
    signs[signs == 0] = 1.0
    return U * signs


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(points, points[chosen]).min(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dists(points, points[[nxt]])[:, 0])
    return points[chosen].astype(float)


def _kmeans_fit(points: np.ndarray, k: int, seed) -> tuple[np.ndarray, np.ndarray]:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k <= n:
        raise QuboError(f"k must satisfy 1 <= k <= n (got k={k}, n={n})")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(points, k, rng)
    labels = np.full(n, -1)
    for _ in range(KMEANS_MAX_ITER):
        dist = _sq_dists(points, centers)
        new = np.argmin(dist, axis=1)
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # reseed from the point farthest from its centre, never emptying a donor
            own = dist[np.arange(n), new]
            own = np.where(counts[new] > 1, own, -np.inf)
            far = int(np.argmax(own))
            counts[new[far]] -= 1
            new[far] = c
            counts[c] = 1
            centers[c] = points[far]
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
    return labels, centers


def kmeans(points, k: int, seed=None) -> np.ndarray:
    """Lloyd's algorithm from k-means++ seeding; every label in ``0..k-1`` is used."""
    return _kmeans_fit(points, k, seed)[0]


def _repair_capacity(points: np.ndarray, labels: np.ndarray, centers: np.ndarray, d: int) -> np.ndarray:
    labels = labels.copy()
    k = centers.shape[0]
    dist = _sq_dists(points, centers)
    counts = np.bincount(labels, minlength=k)
    while np.any(counts > d):
        c = int(np.argmax(counts > d))
        members = np.flatnonzero(labels == c)
        far = int(members[np.argmax(dist[members, c])])
        room = np.flatnonzero(counts < d)
        dest = int(room[np.argmin(dist[far, room])])
        labels[far] = dest
        counts[c] -= 1
        counts[dest] += 1
    return labels


def cluster_features(instance: QuboInstance, bits, m: int) -> np.ndarray | None:
    """Concatenated spectral embedding of the nonzero correlation views, or None if both vanish."""
    pos, neg = split_views(correlation_matrix(instance, bits))
    blocks = [spectral_features(normalized_laplacian(v), m) for v in (pos, neg) if np.any(v)]
    if not blocks:
        return None
    return np.hstack(blocks)


def cluster_grouping(instance: QuboInstance, bits, d: int, seed=None) -> Grouping:
    n = instance.n
    _check_d(n, d)
    k = math.ceil(n / d)
    if k == 1:
        return Grouping((tuple(range(n)),), d)
    feats = cluster_features(instance, bits, k)
    if feats is None:
        return random_grouping(n, d, seed)
    labels, centers = _kmeans_fit(feats, k, seed)
    labels = _repair_capacity(feats, labels, centers, d)
    clusters = [tuple(np.flatnonzero(labels == c).tolist()) for c in range(k)]
    clusters = sorted((c for c in clusters if c), key=lambda c: c[0])
    return Grouping(tuple(clusters), d)


def impact_grouping(instance: QuboInstance, bits, d: int) -> Grouping:
    """Sort by single-flip objective change (ties by index) and cut into blocks of ``d``."""
    n = instance.n
    _check_d(n, d)
    x = _as_bits(bits, n)
    impacts = [delta_flip(instance, x, i) for i in range(n)]
    order = sorted(range(n), key=lambda i: (impacts[i], i))
    return _chunks(order, d, n)


def certainty_grouping(pool: SolutionPool | Iterable, d: int) -> Grouping:
    """Most undetermined variables first: certainty ``|N_S/2 - c_i|`` over the pool."""
    entries = pool.entries if isinstance(pool, SolutionPool) else [np.asarray(e) for e in pool]
    if not entries:
        raise QuboError("certainty grouping needs a non-empty pool")
    X = np.vstack(entries).astype(float)
    n = X.shape[1]
    _check_d(n, d)
    counts = X.sum(axis=0)
    certainty = np.abs(X.shape[0] / 2.0 - counts)
    order = np.lexsort((np.arange(n), certainty))
    return _chunks(order.tolist(), d, n)


def random_grouping(n: int, d: int, seed=None) -> Grouping:
    _check_d(n, d)
    rng = np.random.default_rng(seed)
    return _chunks(rng.permutation(n).tolist(), d, n)
