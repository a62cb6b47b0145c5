"""Graph matched filters for diffusion-generated features."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import BadVertexIndex, DimensionMismatch, EmptyBank, OperatorKindMismatch
from .graph_core import Graph, OperatorKind, ShiftOperator, as_kind, delta, shift_operator
from .spectral import PolynomialFilter, SpectralBasis, SpectralFilter, filter_vertex, gft, igft

CROSS_CHECK_ATOL = 1e-10


def normalized_weight_to_laplacian(b) -> np.ndarray:
    """Rewrite ``sum_m b_m W_N^m`` as ``sum_m a_m L_N^m`` using ``W_N = I - L_N``."""
    b = np.ravel(np.asarray(b, dtype=np.float64))
    a = np.zeros_like(b)
    for m, bm in enumerate(b):
        for j in range(m + 1):
            a[j] += bm * comb(m, j) * (-1.0) ** j
    return a


@dataclass(frozen=True, eq=False)
class DiffusionFeature:
    """Diffusion of a unit pulse at 1-based ``origin``: ``sum_m a_m S^m delta``.

    ``coeffs`` are canonical, in the basis of ``operator_kind`` (the normalized
    Laplacian unless stated otherwise); use :meth:`from_normalized_weight` for
    coefficients written against ``W_N``.
    """

    origin: int
    coeffs: np.ndarray
    operator_kind: OperatorKind = OperatorKind.NORMALIZED_LAPLACIAN

    def __post_init__(self):
        c = np.array(np.ravel(self.coeffs), dtype=np.float64)
        if c.size < 1:
            raise ValueError("a diffusion feature needs at least one coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "operator_kind", as_kind(self.operator_kind))
        if int(self.origin) < 1:
            raise BadVertexIndex(f"origin must be a 1-based vertex, got {self.origin}")

    @classmethod
    def from_normalized_weight(cls, origin: int, b) -> "DiffusionFeature":
        return cls(origin, normalized_weight_to_laplacian(b), OperatorKind.NORMALIZED_LAPLACIAN)

    @property
    def filter(self) -> PolynomialFilter:
        return PolynomialFilter(self.coeffs, self.operator_kind)


@dataclass(frozen=True, eq=False)
class MatchedFilterBank:
    filters: tuple

    def __post_init__(self):
        filters = tuple(self.filters)
        if not filters:
            raise EmptyBank("a filter bank needs at least one filter")
        kinds = {f.operator_kind for f in filters}
        if len(kinds) != 1:
            raise OperatorKindMismatch(f"bank mixes operator kinds {sorted(k.value for k in kinds)}")
        object.__setattr__(self, "filters", filters)

    @classmethod
    def from_features(cls, features) -> "MatchedFilterBank":
        return cls(tuple(f.filter for f in features))

    @property
    def operator_kind(self) -> OperatorKind:
        return self.filters[0].operator_kind


def _check_origin(f: DiffusionFeature, n: int):
    if not 1 <= f.origin <= n:
        raise BadVertexIndex(f"origin {f.origin} outside 1..{n}")


def synthesize_feature(f: DiffusionFeature, graph: Graph | ShiftOperator) -> np.ndarray:
    op = graph if isinstance(graph, ShiftOperator) else shift_operator(graph, f.operator_kind)
    if op.kind is not f.operator_kind:
        raise OperatorKindMismatch(f"feature diffuses in {f.operator_kind.value}, operator is {op.kind.value}")
    _check_origin(f, op.n_vertices)
    return filter_vertex(delta(op.n_vertices, f.origin), f.filter, op)


def matched_gains(f: DiffusionFeature, basis: SpectralBasis) -> SpectralFilter:
    """``G(lambda_k) = sum_m a_m lambda_k^m``."""
    if basis.kind is not f.operator_kind:
        raise OperatorKindMismatch(f"feature is in {f.operator_kind.value}, basis is {basis.kind.value}")
    return SpectralFilter(f.filter.response(basis.eigenvalues))


def _close(a, b, what: str):
    scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    err = float(np.max(np.abs(a - b)))
    if err > CROSS_CHECK_ATOL * scale:
        raise ArithmeticError(f"{what}: vertex and spectral forms differ by {err:.3e}")


def matched_impulse_response(f: DiffusionFeature, basis: SpectralBasis) -> np.ndarray:
    """Vertex-domain impulse response ``g = U G(Lambda) 1``.

    Also evaluated as ``sum_m a_m S^m g0`` with ``g0 = U 1``; the two must
    agree or ``ArithmeticError`` is raised. ``g0`` depends on the eigenvector
    sign convention of the basis.
    """
    gains = matched_gains(f, basis).gains
    u = basis.eigenvectors
    g_spec = u @ gains
    g0 = u @ np.ones(basis.n_vertices)
    g_vert = filter_vertex(g0, f.filter, basis.operator)
    _close(g_spec, g_vert, "impulse response")
    return g_spec


def matched_response(x, f: DiffusionFeature, op: ShiftOperator, basis: SpectralBasis | None = None) -> np.ndarray:
    """Vertex-domain response ``sum_m a_m S^m x``; cross-checked against
    ``IGFT{X(k) G(lambda_k)}`` when ``basis`` is given."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (op.n_vertices,):
        raise DimensionMismatch(f"signal has shape {x.shape}, operator acts on {op.n_vertices} vertices")
    if op.kind is not f.operator_kind:
        raise OperatorKindMismatch(f"feature is in {f.operator_kind.value}, operator is {op.kind.value}")
    y = filter_vertex(x, f.filter, op)
    if basis is not None:
        y_spec = igft(gft(x, basis) * matched_gains(f, basis).gains, basis)
        _close(y, y_spec, "matched response")
    return y


def schwartz_bound(x, f: DiffusionFeature, basis: SpectralBasis) -> np.ndarray:
    """Per-vertex bound ``sqrt(sum_k X(k)^2 * sum_k (G(lambda_k) u_k(n))^2)``."""
    X = gft(x, basis)
    gu = basis.eigenvectors * matched_gains(f, basis).gains
    return np.sqrt(np.sum(X**2) * np.sum(gu**2, axis=1))


@dataclass
class BankDecision:
    winner: int
    scores: np.ndarray


def bank_decide(x, bank: MatchedFilterBank, op: ShiftOperator, relu: bool = False) -> BankDecision:
    """Pick the filter (1-based) whose largest vertex response is highest."""
    if not bank.filters:
        raise EmptyBank("a filter bank needs at least one filter")
    scores = np.vstack([filter_vertex(x, h, op) for h in bank.filters])
    if relu:
        scores = np.maximum(scores, 0.0)
    peaks = scores.max(axis=1)
    return BankDecision(int(np.argmax(peaks)) + 1, scores)


def signal_energy(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(x @ x)


def dft_eigenbasis(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unitary DFT basis ``u_k(n) = exp(j 2 pi n k / N) / sqrt(N)`` and the
    matching eigenvalues ``exp(-j 2 pi k / N)`` of the directed-ring adjacency."""
    idx = np.arange(n)
    u = np.exp(2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)
    lam = np.exp(-2j * np.pi * idx / n)
    return lam, u


def classical_g0(n: int) -> np.ndarray:
    """``g0 = U 1`` in the DFT basis; equals ``sqrt(N) delta(n)``."""
    _, u = dft_eigenbasis(n)
    return u @ np.ones(n)

