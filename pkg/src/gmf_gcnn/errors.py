"""Exception and warning types raised across the package.

Everything derives from ``GmfError`` (itself a ``ValueError``) so the CLI can
map the whole family onto a single "bad input" exit code.
"""


class GmfError(ValueError):
    pass


class AsymmetricWeights(GmfError):
    pass


class NegativeWeight(GmfError):
    pass


class NonzeroDiagonal(GmfError):
    pass


class IsolatedVertex(GmfError):
    pass


class ZeroDegreeVertex(GmfError):
    pass


class TooSmall(GmfError):
    pass


class DimensionMismatch(GmfError):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class OperatorKindMismatch(GmfError):
    pass


class NotDiagonalizable(GmfError):
    pass


class SpectrumOutOfRange(GmfError):
    pass


class BadVertexIndex(GmfError):
    pass


class EmptyBank(GmfError):
    pass


class TraceMismatch(GmfError):
    pass


class NegativeSignal(GmfError):
    pass


class CorruptCheckpoint(GmfError):
    pass


class IllConditionedWarning(RuntimeWarning):
    """Vandermonde system too ill-conditioned for a trustworthy monomial fit."""


class ZeroProbabilityWarning(RuntimeWarning):
    """Softmax probability of the target class underflowed and was clamped."""
