"""Signal-driven graph coarsening used as max-pooling, plus lifting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeSignal, ShapeMismatch
from .graph_core import Graph


@dataclass(frozen=True, eq=False)
class IndicatorMatrix:
    """Binary ``N_c x N`` partition matrix; ``groups`` hold 0-based vertices."""

    matrix: np.ndarray
    groups: tuple

    def __post_init__(self):
        p = np.array(self.matrix, dtype=np.float64)
        if p.ndim != 2:
            raise ShapeMismatch(f"indicator must be 2-D, got shape {p.shape}")
        if not np.all((p == 0) | (p == 1)):
            raise ValueError("indicator entries must be 0 or 1")
        if not np.all(p.sum(axis=0) == 1):
            bad = int(np.flatnonzero(p.sum(axis=0) != 1)[0])
            raise ValueError(f"vertex {bad + 1} is not in exactly one group")
        if np.any(p.sum(axis=1) == 0):
            raise ValueError("empty group in indicator matrix")
        groups = tuple(tuple(int(v) for v in g) for g in self.groups)
        if [tuple(np.flatnonzero(row)) for row in p] != [tuple(sorted(g)) for g in groups]:
            raise ValueError("groups do not match the indicator matrix")
        p.setflags(write=False)
        object.__setattr__(self, "matrix", p)
        object.__setattr__(self, "groups", groups)

    @classmethod
    def from_groups(cls, groups, n: int) -> "IndicatorMatrix":
        p = np.zeros((len(groups), n))
        for i, g in enumerate(groups):
            p[i, list(g)] = 1.0
        return cls(p, tuple(tuple(g) for g in groups))

    @classmethod
    def identity(cls, n: int) -> "IndicatorMatrix":
        return cls.from_groups([(i,) for i in range(n)], n)

    @property
    def n_groups(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.matrix.shape[1]

    def sizes(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def groups_1based(self) -> list:
        return [sorted(v + 1 for v in g) for g in self.groups]


@dataclass(frozen=True, eq=False)
class CoarseningResult:
    indicator: IndicatorMatrix
    coarse_weights: np.ndarray
    pooled_values: np.ndarray
    kept_vertices: np.ndarray  # 0-based

    def canonical(self) -> "CoarseningResult":
        """Groups reordered by their smallest member."""
        order = sorted(range(self.indicator.n_groups), key=lambda i: min(self.indicator.groups[i]))
        ind = IndicatorMatrix(self.indicator.matrix[order], tuple(self.indicator.groups[i] for i in order))
        return CoarseningResult(
            ind,
            self.coarse_weights[np.ix_(order, order)],
            self.pooled_values[order],
            self.kept_vertices[order],
        )


def _weights_of(graph) -> np.ndarray:
    return graph.weights if isinstance(graph, Graph) else np.asarray(graph, dtype=np.float64)


def coarsen_weights(w, p: IndicatorMatrix) -> np.ndarray:
    """``P W P^T``."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (p.n_vertices, p.n_vertices):
        raise ShapeMismatch(f"matrix shape {w.shape} does not match indicator with {p.n_vertices} vertices")
    wc = p.matrix @ w @ p.matrix.T
    if np.array_equal(w, w.T):
        # matmul summation order can differ between (i, j) and (j, i)
        wc = 0.5 * (wc + wc.T)
    return wc


def pseudo_inverse(p: IndicatorMatrix) -> np.ndarray:
    """``P^+ = P^T (P P^T)^{-1}``; ``P P^T`` is the diagonal of group sizes."""
    return p.matrix.T / p.sizes()


def lift_weights(w_c, p: IndicatorMatrix) -> np.ndarray:
    """``P^+ W_c (P^+)^T``."""
    w_c = np.asarray(w_c, dtype=np.float64)
    if w_c.shape != (p.n_groups, p.n_groups):
        raise ShapeMismatch(f"coarse matrix shape {w_c.shape} does not match {p.n_groups} groups")
    pp = pseudo_inverse(p)
    wl = pp @ w_c @ pp.T
    if np.array_equal(w_c, w_c.T):
        wl = 0.5 * (wl + wl.T)
    return wl


def coarsen_laplacian(lap, p: IndicatorMatrix) -> np.ndarray:
    return coarsen_weights(lap, p)


def lift_laplacian(lap_c, p: IndicatorMatrix) -> np.ndarray:
    return lift_weights(lap_c, p)


def greedy_groups(w: np.ndarray, signal: np.ndarray) -> list:
    """Repeatedly take the largest unassigned vertex (lowest index on ties)
    and fuse it with its unassigned one-hop neighbours."""
    n = w.shape[0]
    assigned = np.zeros(n, dtype=bool)
    groups = []
    # Stable sort on -signal gives max-first with lowest index on ties.
    order = np.argsort(-signal, kind="stable")
    for v in order:
        if assigned[v]:
            continue
        nbrs = [int(u) for u in np.flatnonzero(w[v] != 0) if u != v and not assigned[u]]
        group = [int(v)] + nbrs
        assigned[group] = True
        groups.append(group)
    return groups


def max_pool_coarsen(graph, signal) -> CoarseningResult:
    """Max-pooling by coarsening: groups in formation order, ``W_c = P W P^T``.

    ``graph`` may be a :class:`Graph` or a (possibly self-looped) coarse weight
    matrix from a previous level. ``kept_vertices[i]`` is the group's leader,
    i.e. the vertex whose value was pooled.
    """
    w = _weights_of(graph)
    s = np.asarray(signal, dtype=np.float64)
    if s.shape != (w.shape[0],):
        raise ShapeMismatch(f"signal shape {s.shape} does not match {w.shape[0]} vertices")
    if np.any(s < 0):
        i = int(np.flatnonzero(s < 0)[0])
        raise NegativeSignal(f"signal({i + 1})={s[i]!r}; pooling expects post-activation values")
    groups = greedy_groups(w, s)
    ind = IndicatorMatrix.from_groups(groups, w.shape[0])
    kept = np.array([g[0] for g in groups], dtype=int)
    return CoarseningResult(ind, coarsen_weights(w, ind), s[kept].copy(), kept)


@dataclass(frozen=True, eq=False)
class CoarseLevel:
    indicator: IndicatorMatrix
    weights: np.ndarray
    pooled_values: np.ndarray


def multilevel(graph, signals) -> list:
    """Chain coarsening steps, one pooling signal per level."""
    w = _weights_of(graph)
    levels = []
    for lvl, s in enumerate(signals, start=1):
        s = np.asarray(s, dtype=np.float64)
        if s.shape != (w.shape[0],):
            raise ShapeMismatch(f"level {lvl}: signal has {s.size} entries, graph has {w.shape[0]} vertices")
        res = max_pool_coarsen(w, s)
        levels.append(CoarseLevel(res.indicator, res.coarse_weights, res.pooled_values))
        w = res.coarse_weights
    return levels


def multilevel_from_signal(graph, signal, n_levels: int) -> list:
    """Coarsen ``n_levels`` times, each level pooling the previous pooled values."""
    w = _weights_of(graph)
    s = np.asarray(signal, dtype=np.float64)
    levels = []
    for _ in range(n_levels):
        res = max_pool_coarsen(w, s)
        levels.append(CoarseLevel(res.indicator, res.coarse_weights, res.pooled_values))
        w, s = res.coarse_weights, res.pooled_values
    return levels


def composed_indicator(levels, n: int) -> np.ndarray:
    """``P_L ... P_1``; the identity when there are no levels."""
    p = np.eye(n)
    for lvl in levels:
        p = lvl.indicator.matrix @ p
    return p


@dataclass(frozen=True, eq=False)
class PoolIndicator:
    matrix: np.ndarray


def pool_indicator(relu_mask, results) -> PoolIndicator:
    """``K x N`` mask of values that survived activation and max-pooling."""
    mask = np.asarray(relu_mask)
    if mask.ndim != 2 or len(results) != mask.shape[0]:
        raise ShapeMismatch(f"{len(results)} coarsening results for a mask of shape {mask.shape}")
    out = np.zeros(mask.shape)
    for k, res in enumerate(results):
        if res.indicator.n_vertices != mask.shape[1]:
            raise ShapeMismatch(f"channel {k + 1}: coarsening covers {res.indicator.n_vertices} vertices")
        for v, val in zip(res.kept_vertices, res.pooled_values):
            if val > 0 and mask[k, v]:
                out[k, v] = 1.0
    return PoolIndicator(out)
