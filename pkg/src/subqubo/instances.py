"""Benchmark graph generators, the Max-Cut reduction and JSON instance files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .qubo import QuboError, QuboInstance

WEIGHT_MODES = ("unit", "uniform")


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        norm = []
        for u, v, w in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise QuboError(f"self-loop at vertex {u}")
            if u > v:
                u, v = v, u
            if not (0 <= u and v < self.n):
                raise QuboError(f"edge ({u}, {v}) out of range for n={self.n}")
            if (u, v) in seen:
                raise QuboError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            norm.append((u, v, float(w)))
        object.__setattr__(self, "edges", tuple(norm))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def cut_value(self, bits) -> float:
        x = np.asarray(bits)
        return float(sum(w for u, v, w in self.edges if x[u] != x[v]))


def _weights(rng: np.random.Generator, count: int, weight_mode: str) -> np.ndarray:
    if weight_mode == "unit":
        return np.ones(count)
    if weight_mode == "uniform":
        # shift [0, 1) to (0, 1]
        return 1.0 - rng.random(count)
    raise QuboError(f"unknown weight mode {weight_mode!r}; expected one of {WEIGHT_MODES}")


def gen_regular(n: int, k: int, weight_mode: str = "unit", seed=None, max_tries: int = 100_000) -> WeightedGraph:
    """Random simple ``k``-regular graph by the pairing (configuration) model.

    Stubs are shuffled and paired; any pairing containing a self-loop or a
    repeated edge is discarded and redrawn.
    """
    if k < 0 or k >= n:
        raise QuboError(f"k-regular graph needs 0 <= k < n (got n={n}, k={k})")
    if (n * k) % 2:
        raise QuboError(f"no {k}-regular graph on {n} vertices: n*k is odd")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), k)
    for _ in range(max_tries):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        u = pairs.min(axis=1)
        v = pairs.max(axis=1)
        if np.any(u == v):
            continue
        keys = u * n + v
        if len(np.unique(keys)) != len(keys):
            continue
        order = np.argsort(keys)
        w = _weights(rng, len(keys), weight_mode)
        return WeightedGraph(n, tuple(zip(u[order].tolist(), v[order].tolist(), w.tolist())))
    raise QuboError(f"pairing model failed to produce a simple graph in {max_tries} tries")


def gen_er(n: int, p: float, weight_mode: str = "unit", seed=None) -> WeightedGraph:
    if not 0.0 <= p <= 1.0:
        raise QuboError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    u, v = iu[keep], ju[keep]
    w = _weights(rng, len(u), weight_mode)
    return WeightedGraph(n, tuple(zip(u.tolist(), v.tolist(), w.tolist())))


def maxcut_to_qubo(graph: WeightedGraph) -> QuboInstance:
    """Minimize ``sum_(i,j) w_ij (2 x_i x_j - x_i - x_j)``; the negated value is the cut weight."""
    lin = np.zeros(graph.n)
    couplings: dict[tuple[int, int], float] = {}
    for u, v, w in graph.edges:
        lin[u] -= w
        lin[v] -= w
        couplings[(u, v)] = 2.0 * w
    return QuboInstance(graph.n, lin, couplings, 0.0)


def instance_to_dict(obj: Union[QuboInstance, WeightedGraph]) -> dict:
    if isinstance(obj, WeightedGraph):
        return {"n": obj.n, "edges": [[u, v, w] for u, v, w in obj.edges]}
    return {
        "n": obj.n,
        "linear": [float(v) for v in obj.linear],
        "couplings": [[i, j, c] for (i, j), c in sorted(obj.couplings.items())],
        "offset": obj.offset,
    }


def instance_from_dict(data: dict) -> Union[QuboInstance, WeightedGraph]:
    if not isinstance(data, dict) or "n" not in data:
        raise QuboError("instance JSON must be an object with an 'n' field")
    n = data["n"]
    if not isinstance(n, int) or n < 0:
        raise QuboError(f"'n' must be a non-negative integer, got {n!r}")
    try:
        if "edges" in data:
            return WeightedGraph(n, tuple((int(u), int(v), float(w)) for u, v, w in data["edges"]))
        linear = data.get("linear", [0.0] * n)
        couplings = {}
        for i, j, c in data.get("couplings", []):
            key = (int(i), int(j))
            if key in couplings:
                raise QuboError(f"duplicate coupling {key}")
            couplings[key] = float(c)
        return QuboInstance(n, linear, couplings, float(data.get("offset", 0.0)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, QuboError):
            raise
        raise QuboError(f"malformed instance: {exc}") from exc


def save_instance(obj: Union[QuboInstance, WeightedGraph], path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(obj)) + "\n")


def load_raw(path) -> Union[QuboInstance, WeightedGraph]:
    """Parse a file as written, keeping the Max-Cut edge form as a graph."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise QuboError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data)


def load_instance(path) -> QuboInstance:
    """Load a QUBO; edge-form files go through :func:`maxcut_to_qubo`."""
    obj = load_raw(path)
    return maxcut_to_qubo(obj) if isinstance(obj, WeightedGraph) else obj
