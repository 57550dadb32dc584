"""Gaussian pointer coupled to a one-dimensional projector.

The coupling ``exp(-i kappa P_B (x) Q)`` is applied exactly through the
projector identity ``exp(-i kappa P q) = 1 + (exp(-i kappa q) - 1) P``, so the
post-selected pointer is

    M(q) = [<C|A> + (exp(-i kappa q) - 1) <C|B><B|A>] M_0(q).

Momentum-space quantities use ``M~(p) ~ int exp(-i p q / hbar) M(q) dq``, under
which ``exp(-i kappa q)`` shifts the momentum by ``-hbar kappa``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GridError, PostselectionSingular, ResolutionError
from .state import PureState, _check_dims, inner

__all__ = [
    "EPS_PROB",
    "CouplingConfig",
    "GridSpec",
    "PointerWavefunction",
    "Moments",
    "ClosedFormMoments",
    "initial_pointer",
    "postselected_pointer",
    "moments",
    "momentum_density",
    "closed_form_moments",
    "postselection_probability",
]

EPS_PROB = 1e-12
MAX_PHASE_PER_STEP = 0.1


@dataclass(frozen=True)
class CouplingConfig:
    """Measurement strength ``kappa``, pointer width ``sigma`` and ``hbar``."""

    kappa: float
    sigma: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("kappa", "sigma", "hbar"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.hbar <= 0.0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")

    @property
    def strength(self) -> float:
        """Dimensionless regime parameter ``|kappa| sigma``."""
        return abs(self.kappa) * self.sigma


@dataclass(frozen=True)
class GridSpec:
    """Uniform position grid over ``[-extent sigma, extent sigma]``."""

    extent: float = 10.0
    points: int = 4096

    def __post_init__(self):
        points = int(self.points)
        if points < 256 or points & (points - 1):
            raise GridError(f"points must be a power of two >= 256, got {self.points}")
        if not self.extent >= 6.0:
            raise GridError(f"extent must be at least 6 sigma, got {self.extent}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "extent", float(self.extent))

    def positions(self, sigma: float) -> np.ndarray:
        half = self.extent * sigma
        return np.linspace(-half, half, self.points)

    def spacing(self, sigma: float) -> float:
        return 2.0 * self.extent * sigma / (self.points - 1)


@dataclass(frozen=True, eq=False)
class PointerWavefunction:
    grid: GridSpec
    positions: np.ndarray
    values: np.ndarray
    norm_squared: float


class Moments(NamedTuple):
    mean_q: float
    mean_p: float
    var_q: float
    norm: float


class ClosedFormMoments(NamedTuple):
    mean_q: float
    mean_p: float
    norm: float


def _gaussian(q: np.ndarray, sigma: float) -> np.ndarray:
    return (math.pi * sigma**2) ** -0.25 * np.exp(-(q**2) / (2.0 * sigma**2))


def _make(grid: GridSpec, q: np.ndarray, values: np.ndarray) -> PointerWavefunction:
    values.setflags(write=False)
    norm = float(np.trapezoid(np.abs(values) ** 2, q))
    return PointerWavefunction(grid, q, values, norm)


def initial_pointer(cfg: CouplingConfig, grid: GridSpec | None = None) -> PointerWavefunction:
    """Normalized Gaussian ``M_0(q) ~ exp(-q^2 / (2 sigma^2))``."""
    grid = GridSpec() if grid is None else grid
    if not isinstance(grid, GridSpec):
        raise GridError(f"expected a GridSpec, got {type(grid).__name__}")
    q = grid.positions(cfg.sigma)
    return _make(grid, q, _gaussian(q, cfg.sigma).astype(np.complex128))


def _amplitudes(a: PureState, b: PureState, c: PureState) -> tuple[complex, complex]:
    """Return ``<C|A>`` and ``<C|B><B|A>``."""
    _check_dims(a, b, c)
    return inner(c, a), inner(c, b) * inner(b, a)


def postselected_pointer(
    a: PureState,
    b: PureState,
    c: PureState,
    cfg: CouplingConfig,
    grid: GridSpec | None = None,
    eps: float = EPS_PROB,
) -> PointerWavefunction:
    """Unnormalized pointer state after coupling to ``|b><b|`` and keeping ``c``.

    Exact to all orders in ``kappa``. ``norm_squared`` is the post-selection
    probability.

    Raises
    ------
    PostselectionSingular
        If the post-selection probability is at most ``eps``.
    """
    grid = GridSpec() if grid is None else grid
    ca, cba = _amplitudes(a, b, c)
    q = grid.positions(cfg.sigma)
    factor = ca + (np.exp(-1j * cfg.kappa * q) - 1.0) * cba
    wf = _make(grid, q, factor * _gaussian(q, cfg.sigma))
    if wf.norm_squared <= eps:
        raise PostselectionSingular(
            f"post-selection probability {wf.norm_squared:.3g} is below {eps:g}"
        )
    return wf


def _check_resolution(wf: PointerWavefunction, cfg: CouplingConfig) -> float:
    dq = float(wf.positions[1] - wf.positions[0])
    if abs(cfg.kappa) * dq > MAX_PHASE_PER_STEP:
        raise ResolutionError(
            f"kappa * dq = {abs(cfg.kappa) * dq:.3g} exceeds {MAX_PHASE_PER_STEP}; refine the grid"
        )
    return dq


def momentum_density(wf: PointerWavefunction, cfg: CouplingConfig) -> tuple[np.ndarray, np.ndarray]:
    """Momentum grid (ascending) and unnormalized ``|M~(p)|^2`` on it."""
    dq = _check_resolution(wf, cfg)
    n = wf.values.size
    p = 2.0 * math.pi * cfg.hbar * np.fft.fftshift(np.fft.fftfreq(n, d=dq))
    spectrum = np.fft.fftshift(np.fft.fft(wf.values))
    return p, np.abs(spectrum) ** 2


def moments(wf: PointerWavefunction, cfg: CouplingConfig, eps: float = EPS_PROB) -> Moments:
    """Position and momentum moments of a pointer state by quadrature.

    Position moments use the trapezoid rule on the grid; the mean momentum is
    taken from the discrete Fourier transform of the same samples.
    """
    if wf.norm_squared <= eps:
        raise PostselectionSingular(f"pointer norm {wf.norm_squared:.3g} is below {eps:g}")
    q = wf.positions
    rho = np.abs(wf.values) ** 2
    mean_q = float(np.trapezoid(q * rho, q)) / wf.norm_squared
    var_q = float(np.trapezoid((q - mean_q) ** 2 * rho, q)) / wf.norm_squared
    p, rho_p = momentum_density(wf, cfg)
    mean_p = float(np.sum(p * rho_p) / np.sum(rho_p))
    return Moments(mean_q, mean_p, var_q, wf.norm_squared)


def _closed_form(ca: complex, v: complex, cfg: CouplingConfig) -> tuple[float, float, float]:
    x = (cfg.kappa * cfg.sigma) ** 2 / 4.0
    damp, one_minus_damp = math.exp(-x), -math.expm1(-x)
    cross = np.conj(ca) * v
    norm = abs(ca) ** 2 + 2.0 * one_minus_damp * (abs(v) ** 2 - cross.real)
    mean_q_num = cfg.kappa * cfg.sigma**2 * cross.imag * damp
    mean_p_num = -cfg.hbar * cfg.kappa * (cross.real * damp + abs(v) ** 2 * one_minus_damp)
    return float(norm), float(mean_q_num), float(mean_p_num)


def closed_form_moments(
    a: PureState, b: PureState, c: PureState, cfg: CouplingConfig, eps: float = EPS_PROB
) -> ClosedFormMoments:
    """Analytic mean position, mean momentum and norm of the exact pointer.

    Writing ``M = [u + v exp(-i kappa q)] M_0`` with ``v = <C|B><B|A>`` and
    ``u = <C|A> - v``, and ``E = exp(-kappa^2 sigma^2 / 4)``, the Gaussian
    integrals against ``M_0^2`` give

        norm   = |u|^2 + |v|^2 + 2 Re(u* v) E
        mean_q = kappa sigma^2 Im(u* v) E / norm
        mean_p = -hbar kappa (|v|^2 + Re(u* v) E) / norm

    evaluated here in the equivalent form expanded around ``E = 1``.
    """
    ca, v = _amplitudes(a, b, c)
    norm, mq, mp = _closed_form(ca, v, cfg)
    if norm <= eps:
        raise PostselectionSingular(f"post-selection probability {norm:.3g} is below {eps:g}")
    return ClosedFormMoments(mq / norm, mp / norm, norm)


def postselection_probability(a: PureState, b: PureState, c: PureState, cfg: CouplingConfig) -> float:
    """Probability of passing the post-selection onto ``c``; zero is allowed.

    Equals the norm of the exact post-selected pointer, from its closed form.
    """
    ca, v = _amplitudes(a, b, c)
    norm, _, _ = _closed_form(ca, v, cfg)
    return min(max(norm, 0.0), 1.0)
