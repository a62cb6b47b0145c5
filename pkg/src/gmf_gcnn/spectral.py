"""Graph Fourier transform and three ways to apply a spectral filter.

(a) directly through the eigenbasis, (b) through a least-squares monomial
fit of the gains evaluated in the vertex domain, and (c) through a Chebyshev
interpolant evaluated with the three-term recurrence.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatch,
    IllConditionedWarning,
    NotDiagonalizable,
    OperatorKindMismatch,
    SpectrumOutOfRange,
)
from .graph_core import OperatorKind, ShiftOperator, apply_shift, as_kind, matvec

RESIDUAL_RTOL = 1e-8
VANDERMONDE_COND_LIMIT = 1e12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    inverse: np.ndarray
    operator: ShiftOperator

    @property
    def kind(self) -> OperatorKind:
        return self.operator.kind

    @property
    def n_vertices(self) -> int:
        return self.eigenvalues.size

    @property
    def orthonormal(self) -> bool:
        return self.operator.symmetric


@dataclass(frozen=True, eq=False)
class SpectralFilter:
    gains: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gains", _frozen(np.ravel(self.gains)))


@dataclass(frozen=True, eq=False)
class PolynomialFilter:
    """``H(S) = sum_m coeffs[m] S^m`` in the operator family ``operator_kind``."""

    coeffs: np.ndarray
    operator_kind: OperatorKind = OperatorKind.NORMALIZED_LAPLACIAN

    def __post_init__(self):
        c = _frozen(np.ravel(self.coeffs))
        if c.size < 1:
            raise ValueError("a polynomial filter needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "operator_kind", as_kind(self.operator_kind))

    @property
    def order(self) -> int:
        return self.coeffs.size

    def response(self, lam) -> np.ndarray:
        """Transfer function ``H(lambda)`` (Horner on the scalar variable)."""
        lam = np.asarray(lam, dtype=np.float64)
        out = np.zeros_like(lam)
        for c in self.coeffs[::-1]:
            out = out * lam + c
        return out


@dataclass(frozen=True, eq=False)
class ChebyshevFilter:
    """Chebyshev series ``sum_m c_m T_m(t)`` on ``t = (2 lambda - lo - hi)/(hi - lo)``."""

    cheb_coeffs: np.ndarray
    interval: tuple = (0.0, 2.0)

    def __post_init__(self):
        object.__setattr__(self, "cheb_coeffs", _frozen(np.ravel(self.cheb_coeffs)))
        lo, hi = (float(v) for v in self.interval)
        if not hi > lo:
            raise ValueError(f"empty Chebyshev interval [{lo}, {hi}]")
        object.__setattr__(self, "interval", (lo, hi))

    @property
    def lam_max(self) -> float:
        return self.interval[1]

    def response(self, lam) -> np.ndarray:
        lo, hi = self.interval
        t = (2.0 * np.asarray(lam, dtype=np.float64) - lo - hi) / (hi - lo)
        return np.polynomial.chebyshev.chebval(t, self.cheb_coeffs)


def _fix_signs(u: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry positive; first index wins on ties.
    u = u.copy()
    for k in range(u.shape[1]):
        col = np.abs(u[:, k])
        top = col.max()
        i = int(np.flatnonzero(col >= top * (1 - 1e-12))[0])
        if u[i, k] < 0:
            u[:, k] = -u[:, k]
    return u


def eigendecompose(op: ShiftOperator) -> SpectralBasis:
    """Eigenbasis with ascending eigenvalues and unit-norm, sign-fixed vectors.

    Symmetric operators go through ``eigh``; others through ``eig`` and are
    accepted only with a real spectrum, an invertible eigenvector matrix and
    per-pair residuals below ``1e-8 * ||S||``.
    """
    s = op.matrix
    norm = max(np.linalg.norm(s, 2), 1e-300)
    if op.symmetric:
        lam, u = np.linalg.eigh(s)
        u = _fix_signs(u)
        inv = u.T.copy()
    else:
        lam_c, u_c = np.linalg.eig(s)
        if np.max(np.abs(lam_c.imag), initial=0.0) > 1e-9 * norm:
            raise NotDiagonalizable(f"{op.kind.value} has a complex spectrum; use the vertex domain")
        lam = lam_c.real
        u = u_c.real
        order = np.argsort(lam, kind="stable")
        lam, u = lam[order], u[:, order]
        u = u / np.linalg.norm(u, axis=0)
        u = _fix_signs(u)
        if np.linalg.cond(u) > 1e12:
            raise NotDiagonalizable(f"{op.kind.value} eigenvectors are numerically dependent")
        inv = np.linalg.inv(u)
    resid = np.linalg.norm(s @ u - u * lam, axis=0)
    if np.any(resid > RESIDUAL_RTOL * norm):
        k = int(np.argmax(resid))
        raise NotDiagonalizable(f"eigenpair {k + 1} residual {resid[k]:.3e} exceeds tolerance")
    return SpectralBasis(_frozen(lam), _frozen(u), _frozen(inv), op)


def _check_len(x, n: int, what: str = "signal") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise DimensionMismatch(f"{what} has shape {x.shape}, basis has {n} vertices")
    return x


def gft(x, basis: SpectralBasis) -> np.ndarray:
    x = _check_len(x, basis.n_vertices)
    return basis.inverse @ x


def igft(X, basis: SpectralBasis) -> np.ndarray:
    X = _check_len(X, basis.n_vertices, "spectrum")
    return basis.eigenvectors @ X


def filter_spectral(x, f: SpectralFilter, basis: SpectralBasis) -> np.ndarray:
    """``y = U diag(G) U^{-1} x``."""
    g = _check_len(f.gains, basis.n_vertices, "gain vector")
    return igft(g * gft(x, basis), basis)


def gains_from_function(g: Callable, basis: SpectralBasis) -> SpectralFilter:
    return SpectralFilter(np.array([g(float(lam)) for lam in basis.eigenvalues]))


def vandermonde(lam, m: int) -> np.ndarray:
    return np.vander(np.asarray(lam, dtype=np.float64), m, increasing=True)


def fit_polynomial_ls(gains: SpectralFilter, basis: SpectralBasis, m: int) -> PolynomialFilter:
    """Least-squares ``h`` for ``V h = G`` with ``V(k, m) = lambda_k^m``."""
    n = basis.n_vertices
    if not 1 <= m <= n:
        raise ValueError(f"order must satisfy 1 <= M <= N={n}, got {m}")
    g = _check_len(gains.gains, n, "gain vector")
    v = vandermonde(basis.eigenvalues, m)
    if not np.all(np.isfinite(v)):
        raise ValueError("Vandermonde matrix overflowed")
    cond = np.linalg.cond(v)
    if cond > VANDERMONDE_COND_LIMIT:
        warnings.warn(
            f"Vandermonde condition number {cond:.2e} exceeds {VANDERMONDE_COND_LIMIT:.0e}",
            IllConditionedWarning,
            stacklevel=2,
        )
    h, *_ = np.linalg.lstsq(v, g, rcond=None)
    return PolynomialFilter(h, basis.kind)


def chebyshev_nodes(m: int) -> np.ndarray:
    j = np.arange(m)
    return np.cos(np.pi * (j + 0.5) / m)


def fit_chebyshev(g: Callable, lam_max: float, m: int, lam_min: float = 0.0) -> ChebyshevFilter:
    """Degree ``m - 1`` Chebyshev interpolant of ``g`` on ``[lam_min, lam_max]``.

    Coefficients come from discrete orthogonality at the ``m`` Chebyshev
    nodes: ``c_j = (2/m) sum_i g(lambda_i) T_j(t_i)`` with ``c_0`` halved.
    """
    if lam_max <= lam_min:
        raise ValueError(f"lambda_max={lam_max} must exceed lambda_min={lam_min}")
    if m < 1:
        raise ValueError("order must be at least 1")
    t = chebyshev_nodes(m)
    lam = lam_min + (t + 1.0) * (lam_max - lam_min) / 2.0
    vals = np.array([g(float(v)) for v in lam], dtype=np.float64)
    theta = np.arccos(t)
    c = np.array([2.0 / m * np.sum(vals * np.cos(j * theta)) for j in range(m)])
    c[0] /= 2.0
    return ChebyshevFilter(c, (lam_min, lam_max))


def filter_vertex(x, h: PolynomialFilter, op: ShiftOperator) -> np.ndarray:
    """``sum_m h_m S^m x`` accumulated from repeated shifts, no eigensolve."""
    if h.operator_kind is not op.kind:
        raise OperatorKindMismatch(f"filter is in {h.operator_kind.value}, operator is {op.kind.value}")
    shifted = apply_shift(op, x, 0)
    y = h.coeffs[0] * shifted
    for c in h.coeffs[1:]:
        shifted = matvec(op.matrix, shifted)
        y = y + c * shifted
    return y


def filter_chebyshev_vertex(x, c: ChebyshevFilter, op: ShiftOperator, basis: SpectralBasis | None = None) -> np.ndarray:
    """Evaluate the series on ``S~ = (2 S - (lo + hi) I)/(hi - lo)`` by recurrence."""
    x = apply_shift(op, x, 0)
    lo, hi = c.interval
    if basis is not None:
        lam = basis.eigenvalues
        slack = 1e-9 * max(1.0, abs(hi), abs(lo))
        if lam.min() < lo - slack or lam.max() > hi + slack:
            raise SpectrumOutOfRange(
                f"eigenvalues span [{lam.min():.6g}, {lam.max():.6g}], outside [{lo:.6g}, {hi:.6g}]"
            )
    scale, shift = 2.0 / (hi - lo), (hi + lo) / (hi - lo)

    def s_tilde(v):
        return scale * matvec(op.matrix, v) - shift * v

    coeffs = c.cheb_coeffs
    t_prev = x
    y = coeffs[0] * t_prev
    if coeffs.size == 1:
        return y
    t_cur = s_tilde(x)
    y = y + coeffs[1] * t_cur
    for cm in coeffs[2:]:
        t_prev, t_cur = t_cur, 2.0 * s_tilde(t_cur) - t_prev
        y = y + cm * t_cur
    return y


@dataclass
class FilterComparison:
    outputs: dict
    max_abs_diff: dict
    seconds: dict
    polynomial: PolynomialFilter | None = None
    chebyshev: ChebyshevFilter | None = None

    def csv_rows(self):
        yield ("approach", "max_abs_diff_vs_a", "seconds")
        for name in ("a", "b", "c"):
            yield (name, self.max_abs_diff[("a", name)], self.seconds[name])


def compare_filtering(x, g: Callable, m: int, op: ShiftOperator, basis: SpectralBasis) -> FilterComparison:
    """Run all three filtering approaches on ``x`` and compare against (a).

    The Chebyshev interval is ``[min(0, lambda_min), lambda_max]`` so operators
    with negative spectra (e.g. the normalized weight matrix) are covered.
    """
    if basis.operator is not op and not np.array_equal(basis.operator.matrix, op.matrix):
        raise OperatorKindMismatch("basis was not computed from this operator")
    x = _check_len(x, basis.n_vertices)
    outputs, seconds = {}, {}

    t0 = time.perf_counter()
    gains = gains_from_function(g, basis)
    outputs["a"] = filter_spectral(x, gains, basis)
    seconds["a"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    h = fit_polynomial_ls(gains, basis, min(m, basis.n_vertices))
    outputs["b"] = filter_vertex(x, h, op)
    seconds["b"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lo = min(0.0, float(basis.eigenvalues.min()))
    hi = float(basis.eigenvalues.max())
    if hi <= lo:
        hi = lo + 1.0
    cf = fit_chebyshev(g, hi, m, lam_min=lo)
    outputs["c"] = filter_chebyshev_vertex(x, cf, op)
    seconds["c"] = time.perf_counter() - t0

    diffs = {}
    for p in ("a", "b", "c"):
        for q in ("a", "b", "c"):
            diffs[(p, q)] = float(np.max(np.abs(outputs[p] - outputs[q])))
    return FilterComparison(outputs, diffs, seconds, h, cf)


def named_gain(spec: str) -> Callable:
    """Gain function from ``identity``, ``heat:t`` (``exp(-t lambda)``) or
    ``lowpass:c`` (1 for ``lambda <= c``, else 0)."""
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "identity":
        return lambda lam: 1.0
    if name == "heat":
        t = float(arg) if arg else 1.0
        return lambda lam: float(np.exp(-t * lam))
    if name == "lowpass":
        if not arg:
            raise ValueError("lowpass needs a cutoff, e.g. lowpass:1.0")
        cut = float(arg)
        return lambda lam: 1.0 if lam <= cut else 0.0
    raise ValueError(f"unknown gain {spec!r}; expected identity, heat:t or lowpass:c")
