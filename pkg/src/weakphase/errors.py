"""Exception hierarchy shared by every module of the package."""


class WeakPhaseError(Exception):
    """Base class. ``leg`` is set when the error comes from one polygon leg."""

    leg = None


class DimensionError(WeakPhaseError, ValueError):
    """States of incompatible or unsupported Hilbert-space dimension."""


class UndefinedPhaseError(WeakPhaseError, ArithmeticError):
    """A phase was requested from a (near-)vanishing complex number."""


class DecompositionSingular(UndefinedPhaseError):
    """The fan of triangles needs an overlap <A_1|A_k> that vanishes."""


class DegenerateTriangleError(WeakPhaseError, ArithmeticError):
    """Two vertices of a spherical triangle are antipodal."""


class PostselectionSingular(WeakPhaseError, ArithmeticError):
    """The post-selected ensemble is (nearly) empty."""


class GridError(WeakPhaseError, ValueError):
    """Pointer grid violates its size or extent constraints."""


class ResolutionError(WeakPhaseError):
    """Pointer grid too coarse for the coupling-induced oscillation."""
