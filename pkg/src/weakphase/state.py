"""Pure states, qubit Bloch vectors and spherical-triangle geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTriangleError, DimensionError, UndefinedPhaseError

__all__ = [
    "EPS_OVERLAP",
    "EPS_ANTIPODAL",
    "PureState",
    "BlochVector",
    "wrap_angle",
    "basis",
    "inner",
    "relative_phase",
    "bloch_to_state",
    "state_to_bloch",
    "haar_random_state",
    "oriented_solid_angle",
]

EPS_OVERLAP = 1e-9
EPS_ANTIPODAL = 1e-8
_NORM_TOL = 1e-12


def wrap_angle(x):
    """Map an angle (scalar or array) onto the principal branch (-pi, pi]."""
    wrapped = x - 2.0 * np.pi * np.ceil((np.asarray(x) - np.pi) / (2.0 * np.pi))
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def _arg(z: complex) -> float:
    # np.angle returns -pi for (-1, -0.0); fold onto the principal branch
    return wrap_angle(float(np.angle(z)))


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized ket of dimension ``d >= 2``.

    The amplitude array is stored read-only. Use :meth:`normalized` to build a
    state from an arbitrary nonzero vector.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size < 2:
            raise DimensionError(f"pure state needs d >= 2, got d = {amps.size}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"amplitudes are not normalized (norm = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, vector) -> PureState:
        vec = np.asarray(vector, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(vec)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(vec / norm)

    @property
    def d(self) -> int:
        return self.amplitudes.size

    def rephase(self, theta: float) -> PureState:
        """Return ``exp(i theta)`` times this ket (same ray)."""
        return PureState(np.exp(1j * theta) * self.amplitudes)

    def __repr__(self):
        return f"PureState({np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if abs(self.x**2 + self.y**2 + self.z**2 - 1.0) > _NORM_TOL:
            raise ValueError(f"Bloch vector {self.as_array()} is not a unit vector")

    @classmethod
    def normalized(cls, vector) -> BlochVector:
        v = np.asarray(vector, dtype=float).reshape(3)
        n = np.linalg.norm(v)
        if n == 0.0 or not np.isfinite(n):
            raise ValueError("cannot normalize a zero or non-finite vector")
        v = v / n
        return cls(*v)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __neg__(self):
        return BlochVector(-self.x, -self.y, -self.z)


def basis(d: int, k: int) -> PureState:
    """Computational basis ket ``|k>`` in dimension ``d``."""
    amps = np.zeros(d, dtype=np.complex128)
    amps[k] = 1.0
    return PureState(amps)


def _check_dims(*states: PureState) -> int:
    d = states[0].d
    for s in states[1:]:
        if s.d != d:
            raise DimensionError(f"dimension mismatch: {d} vs {s.d}")
    return d


def inner(a: PureState, b: PureState) -> complex:
    """Scalar product <a|b>, conjugating the first argument."""
    _check_dims(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def relative_phase(a: PureState, b: PureState, eps: float = EPS_OVERLAP) -> float:
    """Pancharatnam relative phase of ``a`` with respect to ``b``, arg <b|a>.

    The two kets are in phase exactly when the result is zero.

    Raises
    ------
    UndefinedPhaseError
        If ``|<b|a>| <= eps``; orthogonal rays carry no relative phase.
    """
    z = inner(b, a)
    if abs(z) <= eps:
        raise UndefinedPhaseError(f"|<b|a>| = {abs(z):.3g} is below {eps:g}")
    return _arg(z)


def bloch_to_state(n: BlochVector) -> PureState:
    """Spin-1/2 ket with <sigma> = n; first amplitude real and >= 0."""
    up = math.sqrt(max(0.0, (1.0 + n.z) / 2.0))
    down_mag = math.sqrt(max(0.0, (1.0 - n.z) / 2.0))
    r = math.hypot(n.x, n.y)
    down = down_mag * complex(n.x, n.y) / r if r > 0.0 else complex(down_mag)
    return PureState.normalized([up, down])


def state_to_bloch(a: PureState) -> BlochVector:
    if a.d != 2:
        raise DimensionError(f"Bloch vectors exist only for d = 2, got d = {a.d}")
    u, v = a.amplitudes
    cross = np.conj(u) * v
    return BlochVector.normalized([2.0 * cross.real, 2.0 * cross.imag, abs(u) ** 2 - abs(v) ** 2])


def haar_random_state(d: int, seed: int) -> PureState:
    """Unitarily invariant random ket, reproducible for a given seed."""
    if d < 2:
        raise DimensionError(f"pure state needs d >= 2, got d = {d}")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState.normalized(vec)


def _solid_angle(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    numer = float(np.dot(a, np.cross(b, c)))
    denom = 1.0 + float(np.dot(a, b) + np.dot(b, c) + np.dot(c, a))
    return 2.0 * math.atan2(numer, denom)


def oriented_solid_angle(
    a: BlochVector, b: BlochVector, c: BlochVector, eps: float = EPS_ANTIPODAL
) -> float:
    """Signed solid angle of the geodesic triangle ``a -> b -> c``.

    Positive for counter-clockwise traversal seen from outside the sphere, so
    that the triangle phase of the matching qubit kets is ``-omega / 2``.

    Raises
    ------
    DegenerateTriangleError
        If any pair of vertices satisfies ``1 + u.v <= eps``.
    """
    va, vb, vc = a.as_array(), b.as_array(), c.as_array()
    for (u, v), label in zip(((va, vb), (vb, vc), (vc, va)), ("ab", "bc", "ca")):
        if 1.0 + float(np.dot(u, v)) <= eps:
            raise DegenerateTriangleError(f"vertices {label[0]} and {label[1]} are antipodal")
    return _solid_angle(va, vb, vc)
