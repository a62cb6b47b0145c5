"""Graphs, graph shift operators and shifted signals.

All storage is dense and 0-based; vertex numbers in error messages and file
formats are 1-based.
"""

from __future__ import annotations

import math
import os
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    AsymmetricWeights,
    DimensionMismatch,
    IsolatedVertex,
    NegativeWeight,
    NonzeroDiagonal,
    TooSmall,
    ZeroDegreeVertex,
)

SYMMETRY_ATOL = 1e-9

# Reference 8-vertex graph (1-based edge list).
PAPER8_EDGES = (
    (1, 2), (1, 3), (1, 8), (2, 3), (2, 4), (2, 5), (2, 8),
    (3, 4), (4, 5), (4, 6), (5, 6), (5, 7), (5, 8), (6, 7),
)


class OperatorKind(str, Enum):
    LAPLACIAN = "laplacian"
    NORMALIZED_LAPLACIAN = "normalized_laplacian"
    NORMALIZED_WEIGHT = "normalized_weight"
    RANDOM_WALK = "random_walk"
    ADJACENCY = "adjacency"
    ADJACENCY_TRANSPOSE = "adjacency_transpose"
    ADJACENCY_NORMALIZED = "adjacency_normalized"

    @property
    def normalized(self) -> bool:
        return self in (OperatorKind.NORMALIZED_LAPLACIAN, OperatorKind.NORMALIZED_WEIGHT, OperatorKind.RANDOM_WALK)


# CLI short names.
OPERATOR_ALIASES = {
    "l": OperatorKind.LAPLACIAN,
    "ln": OperatorKind.NORMALIZED_LAPLACIAN,
    "wn": OperatorKind.NORMALIZED_WEIGHT,
    "rw": OperatorKind.RANDOM_WALK,
    "a": OperatorKind.ADJACENCY,
    "at": OperatorKind.ADJACENCY_TRANSPOSE,
    "an": OperatorKind.ADJACENCY_NORMALIZED,
}


def as_kind(kind) -> OperatorKind:
    if isinstance(kind, OperatorKind):
        return kind
    key = str(kind).lower()
    if key in OPERATOR_ALIASES:
        return OPERATOR_ALIASES[key]
    return OperatorKind(key)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph with cached degrees."""

    weights: np.ndarray
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights))
        object.__setattr__(self, "degrees", _frozen(self.weights.sum(axis=1)))

    @property
    def n_vertices(self) -> int:
        return self.weights.shape[0]

    def neighbors(self, n: int) -> np.ndarray:
        """0-based neighbours of 0-based vertex ``n``."""
        row = self.weights[n]
        idx = np.flatnonzero(row != 0)
        return idx[idx != n]


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"adjacency must be square, got shape {a.shape}")
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("directed adjacency entries must be 0 or 1")
        if np.any(np.diag(a) != 0):
            n = int(np.flatnonzero(np.diag(a))[0])
            raise NonzeroDiagonal(f"self-loop at vertex {n + 1}")
        object.__setattr__(self, "adjacency", _frozen(a))

    @property
    def n_vertices(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True, eq=False)
class ShiftOperator:
    kind: OperatorKind
    matrix: np.ndarray
    graph: Graph | DirectedGraph | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", as_kind(self.kind))
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def n_vertices(self) -> int:
        return self.matrix.shape[0]

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.matrix, self.matrix.T))

    def __matmul__(self, x):
        return matvec(self.matrix, x)


def strict_fp() -> bool:
    """``GMF_GCNN_FPMODE=strict`` switches matrix-vector products to exactly
    rounded per-row sums (``math.fsum``), which no BLAS kernel can reassociate
    or fuse."""
    return os.environ.get("GMF_GCNN_FPMODE", "").lower() == "strict"


def matvec(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    if strict_fp():
        a = np.asarray(a, dtype=np.float64)
        xs = [float(v) for v in np.asarray(x, dtype=np.float64)]
        return np.array([math.fsum(float(aij) * xj for aij, xj in zip(row, xs)) for row in a])
    return np.asarray(a) @ np.asarray(x)


def build_graph(weights, *, atol: float = SYMMETRY_ATOL, allow_isolated: bool = False) -> Graph:
    """Validate a dense weight matrix and wrap it as a :class:`Graph`.

    Symmetry is checked to ``atol`` and the stored matrix is the exact average
    ``(W + W.T) / 2``. Isolated vertices are rejected unless
    ``allow_isolated`` is set; normalized operators still refuse them later.
    """
    w = np.array(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionMismatch(f"weight matrix must be square, got shape {w.shape}")
    n = w.shape[0]
    if n < 2:
        raise TooSmall(f"a graph needs at least 2 vertices, got {n}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weight matrix contains non-finite entries")
    diff = np.abs(w - w.T)
    if np.any(diff > atol):
        i, j = np.argwhere(diff > atol)[0]
        i, j = sorted((int(i), int(j)))
        raise AsymmetricWeights(
            f"W({i + 1},{j + 1})={w[i, j]!r} but W({j + 1},{i + 1})={w[j, i]!r}"
        )
    if np.any(w < 0):
        i, j = np.argwhere(w < 0)[0]
        raise NegativeWeight(f"W({i + 1},{j + 1})={w[i, j]!r} is negative")
    if np.any(np.diag(w) != 0):
        i = int(np.flatnonzero(np.diag(w))[0])
        raise NonzeroDiagonal(f"W({i + 1},{i + 1})={w[i, i]!r}; self-loops are not supported")
    w = 0.5 * (w + w.T)
    g = Graph(w)
    if not allow_isolated and np.any(g.degrees == 0):
        i = int(np.flatnonzero(g.degrees == 0)[0])
        raise IsolatedVertex(f"vertex {i + 1} has zero degree")
    return g


def graph_from_edges(n: int, edges, weights=None) -> Graph:
    """Undirected graph from 1-based ``(u, v)`` pairs."""
    w = np.zeros((n, n))
    for e, (u, v) in enumerate(edges):
        val = 1.0 if weights is None else float(weights[e])
        w[u - 1, v - 1] = w[v - 1, u - 1] = val
    return build_graph(w)


def paper8_graph() -> Graph:
    """The 8-vertex, 14-edge unit-weight reference graph."""
    return graph_from_edges(8, PAPER8_EDGES)


def circular_graph(n: int) -> Graph:
    """Unweighted undirected ring on ``n`` vertices."""
    if n < 3:
        raise TooSmall(f"a ring needs at least 3 vertices, got {n}")
    w = np.zeros((n, n))
    for i in range(n):
        w[i, (i + 1) % n] = w[(i + 1) % n, i] = 1.0
    return build_graph(w)


def directed_ring(n: int) -> DirectedGraph:
    """Directed ring with ``A(n, n-1) = 1``, so ``(A x)(n) = x(n-1)``."""
    if n < 3:
        raise TooSmall(f"a ring needs at least 3 vertices, got {n}")
    a = np.zeros((n, n))
    for i in range(n):
        a[i, (i - 1) % n] = 1.0
    return DirectedGraph(a)


def _spectral_radius(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def shift_operator(graph: Graph | DirectedGraph, kind) -> ShiftOperator:
    kind = as_kind(kind)
    if isinstance(graph, DirectedGraph):
        a = graph.adjacency
        if kind is OperatorKind.ADJACENCY:
            return ShiftOperator(kind, a, graph)
        if kind is OperatorKind.ADJACENCY_TRANSPOSE:
            return ShiftOperator(kind, a.T, graph)
        if kind is OperatorKind.ADJACENCY_NORMALIZED:
            rho = _spectral_radius(a)
            if rho == 0:
                raise ZeroDegreeVertex("adjacency has zero spectral radius; cannot normalize")
            return ShiftOperator(kind, a / rho, graph)
        raise ValueError(f"operator {kind.value} needs an undirected graph")

    w, d = graph.weights, graph.degrees
    n = graph.n_vertices
    if kind.normalized and np.any(d <= 0):
        i = int(np.flatnonzero(d <= 0)[0])
        raise ZeroDegreeVertex(f"vertex {i + 1} has zero degree; {kind.value} is undefined")
    if kind is OperatorKind.LAPLACIAN:
        m = np.diag(d) - w
    elif kind is OperatorKind.NORMALIZED_WEIGHT:
        m = w / np.sqrt(np.outer(d, d))
    elif kind is OperatorKind.NORMALIZED_LAPLACIAN:
        m = np.eye(n) - w / np.sqrt(np.outer(d, d))
    elif kind is OperatorKind.RANDOM_WALK:
        m = w / d[:, None]
    elif kind in (OperatorKind.ADJACENCY, OperatorKind.ADJACENCY_TRANSPOSE):
        m = w.copy()
    elif kind is OperatorKind.ADJACENCY_NORMALIZED:
        rho = _spectral_radius(w)
        if rho == 0:
            raise ZeroDegreeVertex("graph has no edges; cannot normalize adjacency")
        m = w / rho
    else:  # pragma: no cover
        raise ValueError(kind)
    return ShiftOperator(kind, m, graph)


def _check_signal(op: ShiftOperator, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (op.n_vertices,):
        raise DimensionMismatch(f"signal has shape {x.shape}, operator acts on {op.n_vertices} vertices")
    return x


def apply_shift(op: ShiftOperator, x, power: int = 1) -> np.ndarray:
    """``S^power x`` by repeated matrix-vector products."""
    if power < 0:
        raise ValueError("power must be non-negative")
    y = _check_signal(op, x).copy()
    for _ in range(power):
        y = matvec(op.matrix, y)
    return y


def shifted_signals(op: ShiftOperator, x, count: int) -> np.ndarray:
    """Rows ``x, Sx, ..., S^(count-1) x`` as a ``count x N`` array."""
    y = _check_signal(op, x)
    out = np.empty((count, y.size))
    for m in range(count):
        out[m] = y
        if m + 1 < count:
            y = matvec(op.matrix, y)
    return out


def directed_shift(dg: DirectedGraph, x, w0: float, w1: float, w2: float) -> np.ndarray:
    """``w0 x + w1 A x + w2 A^T x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dg.n_vertices,):
        raise DimensionMismatch(f"signal has shape {x.shape}, graph has {dg.n_vertices} vertices")
    a = dg.adjacency
    return w0 * x + w1 * matvec(a, x) + w2 * matvec(a.T, x)


def delta(n: int, vertex: int) -> np.ndarray:
    """Unit pulse at 1-based ``vertex``."""
    x = np.zeros(n)
    x[vertex - 1] = 1.0
    return x


def hop_neighborhood(matrix, n0: int, hops: int) -> np.ndarray:
    """Boolean mask of vertices within ``hops`` steps of 0-based ``n0``.

    Follows the sparsity pattern of ``matrix`` (either direction of an entry
    counts as an edge), so it bounds the support of ``S^hops delta``.
    """
    pattern = np.asarray(matrix) != 0
    pattern = pattern | pattern.T
    n = pattern.shape[0]
    dist = np.full(n, -1)
    dist[n0] = 0
    queue = deque([n0])
    while queue:
        u = queue.popleft()
        if dist[u] == hops:
            continue
        for v in np.flatnonzero(pattern[u]):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist >= 0
