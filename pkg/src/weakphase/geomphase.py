"""Bargmann invariants and geometric phases of state sequences and curves."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DecompositionSingular, UndefinedPhaseError
from .state import EPS_OVERLAP, PureState, _check_dims, inner, wrap_angle

__all__ = [
    "PathSpec",
    "bargmann3",
    "triangle_phase",
    "sequence_phase",
    "triangle_decomposition",
    "discretized_path_phase",
]


@dataclass(frozen=True)
class PathSpec:
    """Either an explicit polygon or a sampled state-valued curve.

    Build with :meth:`polygon` or :meth:`curve`. A curve is sampled at
    ``samples`` parameter values in ``[0, duration]``; for ``closed`` curves
    the endpoint is dropped since it repeats the starting ray.
    """

    vertices: tuple[PureState, ...] | None = None
    sampler: Callable[[float], PureState] | None = None
    duration: float = 1.0
    samples: int = 0
    closed: bool = False

    @classmethod
    def polygon(cls, vertices: Sequence[PureState]) -> PathSpec:
        vertices = tuple(vertices)
        if len(vertices) < 3:
            raise ValueError(f"a polygon needs at least 3 vertices, got {len(vertices)}")
        _check_dims(*vertices)
        return cls(vertices=vertices)

    @classmethod
    def curve(cls, sampler, duration=1.0, samples=256, closed=False) -> PathSpec:
        if samples < 3:
            raise ValueError(f"need at least 3 samples, got {samples}")
        return cls(sampler=sampler, duration=float(duration), samples=int(samples), closed=closed)

    def states(self, samples: int | None = None) -> tuple[PureState, ...]:
        if self.vertices is not None:
            return self.vertices
        n = self.samples if samples is None else int(samples)
        if n < 3:
            raise ValueError(f"need at least 3 samples, got {n}")
        ts = np.linspace(0.0, self.duration, n, endpoint=not self.closed)
        states = tuple(self.sampler(float(t)) for t in ts)
        _check_dims(*states)
        return states


def _vertices(path) -> tuple[PureState, ...]:
    if isinstance(path, PathSpec):
        return path.states()
    return PathSpec.polygon(path).vertices


def _unit_phasor(z: complex, eps: float, what: str, exc=UndefinedPhaseError) -> complex:
    mag = abs(z)
    if mag <= eps:
        raise exc(f"overlap {what} has modulus {mag:.3g} <= {eps:g}")
    return z / mag


def bargmann3(a: PureState, b: PureState, c: PureState) -> complex:
    """Three-vertex Bargmann invariant <a|c><c|b><b|a>."""
    _check_dims(a, b, c)
    return inner(a, c) * inner(c, b) * inner(b, a)


def triangle_phase(a: PureState, b: PureState, c: PureState, eps: float = EPS_OVERLAP) -> float:
    """Geometric phase of the geodesic triangle ``a, b, c``."""
    _check_dims(a, b, c)
    z = (
        _unit_phasor(inner(a, c), eps, "<a|c>")
        * _unit_phasor(inner(c, b), eps, "<c|b>")
        * _unit_phasor(inner(b, a), eps, "<b|a>")
    )
    return wrap_angle(float(np.angle(z)))


def sequence_phase(path, eps: float = EPS_OVERLAP) -> float:
    """Phase of the closed product <A_1|A_n><A_n|A_{n-1}>...<A_2|A_1>.

    ``path`` is a :class:`PathSpec` or a plain sequence of states. Unit phasors
    are multiplied instead of raw overlaps so long sequences cannot underflow.
    """
    states = _vertices(path)
    amps = np.array([s.amplitudes for s in states])
    # forward[k] = <A_{k+1}|A_k>, with the last entry closing the loop
    forward = np.einsum("ij,ij->i", amps[np.r_[1 : len(states), 0]].conj(), amps)
    mags = np.abs(forward)
    k = int(np.argmin(mags))
    if mags[k] <= eps:
        raise UndefinedPhaseError(
            f"overlap between vertices {k + 1} and {(k + 1) % len(states) + 1} "
            f"has modulus {mags[k]:.3g} <= {eps:g}"
        )
    return wrap_angle(float(np.angle(np.prod(forward / mags))))


def triangle_decomposition(path, eps: float = EPS_OVERLAP) -> float:
    """Sum of triangle phases Delta(A_1, A_k, A_{k+1}) for k = 2..n-1.

    Equal to :func:`sequence_phase` modulo 2 pi. The fan around ``A_1`` consumes
    overlaps <A_1|A_k> that the direct product never sees; when one of them
    vanishes :class:`DecompositionSingular` is raised.
    """
    states = _vertices(path)
    first = states[0]
    total = 1.0 + 0.0j
    for k in range(1, len(states) - 1):
        ak, ak1 = states[k], states[k + 1]
        total *= _unit_phasor(inner(first, ak1), eps, f"<A_1|A_{k + 2}>", DecompositionSingular)
        total *= _unit_phasor(inner(ak1, ak), eps, f"<A_{k + 2}|A_{k + 1}>", DecompositionSingular)
        total *= _unit_phasor(inner(ak, first), eps, f"<A_{k + 1}|A_1>", DecompositionSingular)
    return wrap_angle(float(np.angle(total)))


def discretized_path_phase(curve: PathSpec, samples: int | None = None, eps: float = EPS_OVERLAP) -> float:
    """Geometric phase of the polygon inscribed in a sampled curve.

    Open curves are closed by the geodesic from the last sample back to the
    first. Refining ``samples`` converges to the continuum phase of the curve.
    """
    if not isinstance(curve, PathSpec) or curve.sampler is None:
        raise TypeError("discretized_path_phase needs a PathSpec built with PathSpec.curve")
    return sequence_phase(curve.states(samples), eps=eps)
