"""Weak values, pointer-shift phase readout and calibrated baselines."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import pointer
from .errors import PostselectionSingular, UndefinedPhaseError, WeakPhaseError
from .geomphase import _vertices, bargmann3
from .pointer import CouplingConfig, GridSpec
from .state import (
    EPS_ANTIPODAL,
    EPS_OVERLAP,
    BlochVector,
    PureState,
    _check_dims,
    _solid_angle,
    basis,
    inner,
    wrap_angle,
)

__all__ = [
    "EPS_SHIFT",
    "Mode",
    "ProtocolResult",
    "BaselineCurve",
    "weak_value",
    "predicted_shifts",
    "extract_phase",
    "run_protocol",
    "polygon_legs",
    "polygon_protocol",
    "spin_weak_value",
    "polarimetry_intensity",
    "interferometry_intensity",
    "polarimetry_curve",
    "interferometry_curve",
    "fringe_shift",
    "inverse_cdf_sample",
    "resolve_workers",
    "thread_cap",
]

EPS_SHIFT = 1e-15
MIN_MC_SAMPLES = 1000
MIN_FRINGE_SAMPLES = 64


class Mode(str, enum.Enum):
    WEAK = "weak-approx"
    EXACT = "exact"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class ProtocolResult:
    delta_q: float
    delta_p: float
    phase: float
    post_prob: float
    mode: Mode
    n_samples: int = 0
    stderr_phase: float = 0.0
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True, eq=False)
class BaselineCurve:
    chi_values: np.ndarray
    intensities: np.ndarray
    calibration_offset: float = 0.0

    def __post_init__(self):
        chi = np.asarray(self.chi_values, dtype=float)
        inten = np.asarray(self.intensities, dtype=float)
        if chi.shape != inten.shape or chi.ndim != 1:
            raise ValueError("chi_values and intensities must be 1-d arrays of equal length")
        object.__setattr__(self, "chi_values", chi)
        object.__setattr__(self, "intensities", inten)


def weak_value(a: PureState, b: PureState, c: PureState, eps: float = EPS_OVERLAP) -> complex:
    """Weak value of ``|b><b|`` for pre-selection ``a`` and post-selection ``c``."""
    _check_dims(a, b, c)
    ca = inner(c, a)
    if abs(ca) <= eps:
        raise PostselectionSingular(
            f"|<C|A>| = {abs(ca):.3g} <= {eps:g}: pre- and post-selection are orthogonal"
        )
    return inner(c, b) * inner(b, a) / ca


def predicted_shifts(w: complex, cfg: CouplingConfig) -> tuple[float, float]:
    """First-order pointer shifts ``(kappa sigma^2 Im w, -hbar kappa Re w)``."""
    w = complex(w)
    return cfg.kappa * cfg.sigma**2 * w.imag, -cfg.hbar * cfg.kappa * w.real


def extract_phase(delta_q: float, delta_p: float, cfg: CouplingConfig, eps: float = EPS_SHIFT) -> float:
    """Recover arg of the weak value from measured pointer shifts.

    Uses the quadrant-resolving arctangent of ``(-delta_p / (hbar kappa),
    delta_q / (kappa sigma^2))``. For a positive real part this is
    ``-arctan(hbar delta_q / (sigma^2 delta_p))``.
    """
    if math.hypot(delta_q, delta_p) <= eps:
        raise UndefinedPhaseError("pointer shifts vanish; the weak value is zero")
    if cfg.kappa == 0.0:
        raise ValueError("nonzero shifts are inconsistent with kappa = 0")
    re = -delta_p / (cfg.hbar * cfg.kappa)
    im = delta_q / (cfg.kappa * cfg.sigma**2)
    return wrap_angle(math.atan2(im, re))


def thread_cap() -> int | None:
    """Worker cap from the ``WEAKPHASE_THREADS`` environment variable, if set."""
    raw = os.environ.get("WEAKPHASE_THREADS", "").strip()
    if not raw:
        return None
    value = int(raw)
    if value < 1:
        raise ValueError(f"WEAKPHASE_THREADS must be >= 1, got {raw!r}")
    return value


def resolve_workers(requested: int | None = None) -> int:
    """Effective Monte Carlo worker count: ``requested`` (default 1) capped by the env."""
    cap = thread_cap()
    if requested is None:
        return cap or 1
    if requested < 1:
        raise ValueError(f"workers must be >= 1, got {requested}")
    return requested if cap is None else min(requested, cap)


def inverse_cdf_sample(grid: np.ndarray, density: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Map uniforms ``u`` in [0, 1) through the inverse of a tabulated CDF.

    The CDF is the cumulative trapezoid integral of ``density`` (any positive
    scale) and is inverted linearly inside each cell, so the draws follow the
    piecewise-constant density whose cell masses are the trapezoid masses.
    """
    dx = np.diff(grid)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * dx)))
    cdf /= cdf[-1]
    idx = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, grid.size - 2)
    lo, hi = cdf[idx], cdf[idx + 1]
    frac = (u - lo) / (hi - lo)
    return grid[idx] + frac * dx[idx]


def _chunk_bounds(n: int, workers: int) -> list[tuple[int, int]]:
    edges = [n * w // workers for w in range(workers + 1)]
    return list(zip(edges[:-1], edges[1:]))


def _sample_stats(grid, density, n, seed, workers, stream):
    """Mean and unbiased variance of ``n`` draws, split deterministically over workers."""
    bounds = _chunk_bounds(n, workers)

    def work(w):
        count = bounds[w][1] - bounds[w][0]
        ss = np.random.SeedSequence([seed, stream, w])
        rng = np.random.Generator(np.random.Philox(ss))
        x = inverse_cdf_sample(grid, density, rng.random(count))
        mean = float(np.mean(x)) if count else 0.0
        return count, mean, float(np.sum((x - mean) ** 2))

    if workers == 1:
        parts = [work(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(workers)))
    # pairwise merge of (count, mean, M2) in worker order
    n_tot, mean, m2 = 0, 0.0, 0.0
    for count, m, s in parts:
        if count == 0:
            continue
        delta = m - mean
        total = n_tot + count
        mean += delta * count / total
        m2 += s + delta**2 * n_tot * count / total
        n_tot = total
    return mean, m2 / (n_tot - 1)


def _phase_stderr(mean_q, var_q, n_q, mean_p, var_p, n_p, cfg) -> float:
    re = -mean_p / (cfg.hbar * cfg.kappa)
    im = mean_q / (cfg.kappa * cfg.sigma**2)
    var_re = var_p / n_p / (cfg.hbar * cfg.kappa) ** 2
    var_im = var_q / n_q / (cfg.kappa * cfg.sigma**2) ** 2
    r2 = re * re + im * im
    return math.sqrt(im * im * var_re + re * re * var_im) / r2


def _check_postselection(a, c, eps_antipodal):
    # 2|<C|A>|^2 is 1 + n.m for qubits, so the qubit antipodal tolerance carries over
    overlap2 = 2.0 * abs(inner(c, a)) ** 2
    if overlap2 <= eps_antipodal:
        raise PostselectionSingular(
            f"2|<C|A>|^2 = {overlap2:.3g} <= {eps_antipodal:g}: "
            "post-selection is (nearly) orthogonal to pre-selection"
        )


def run_protocol(
    a: PureState,
    b: PureState,
    c: PureState,
    cfg: CouplingConfig,
    grid: GridSpec | None = None,
    mode: Mode | str = Mode.WEAK,
    n_samples: int = 0,
    seed: int = 0,
    workers: int | None = None,
    eps_antipodal: float = EPS_ANTIPODAL,
) -> ProtocolResult:
    """Measure the weak value of ``|b><b|`` between ``a`` and ``c`` via pointer shifts.

    Parameters
    ----------
    mode : Mode or str
        ``weak-approx`` uses first-order shifts, ``exact`` the quadrature
        moments of the exact pointer, ``monte-carlo`` sample means over
        ``n_samples`` simulated shots.
    n_samples : int
        Monte Carlo shot count (at least 1000). Half of the shots read the
        pointer position, the other half its momentum.
    seed, workers : int
        Monte Carlo results depend only on ``(seed, n_samples, workers)``.
        ``workers`` is resolved by :func:`resolve_workers`.

    Raises
    ------
    PostselectionSingular
        If ``2 |<C|A>|^2 <= eps_antipodal`` or the pointer norm vanishes.
    UndefinedPhaseError
        If both pointer shifts vanish.
    ResolutionError
        If the grid cannot resolve the coupling oscillation.
    """
    mode = Mode(mode)
    grid = GridSpec() if grid is None else grid
    workers = resolve_workers(workers)
    _check_dims(a, b, c)
    _check_postselection(a, c, eps_antipodal)
    post_prob = pointer.postselection_probability(a, b, c, cfg)
    stderr = 0.0
    if mode is Mode.WEAK:
        n_samples = 0
        dq, dp = predicted_shifts(weak_value(a, b, c), cfg)
    else:
        wf = pointer.postselected_pointer(a, b, c, cfg, grid)
        if mode is Mode.EXACT:
            n_samples = 0
            m = pointer.moments(wf, cfg)
            dq, dp = m.mean_q, m.mean_p
        else:
            if n_samples < MIN_MC_SAMPLES:
                raise ValueError(f"monte-carlo mode needs n_samples >= {MIN_MC_SAMPLES}, got {n_samples}")
            n_q = n_samples // 2
            n_p = n_samples - n_q
            p_grid, rho_p = pointer.momentum_density(wf, cfg)
            rho_q = np.abs(wf.values) ** 2
            dq, var_q = _sample_stats(wf.positions, rho_q, n_q, seed, workers, 0)
            dp, var_p = _sample_stats(p_grid, rho_p, n_p, seed, workers, 1)
    phase = extract_phase(dq, dp, cfg)
    if mode is Mode.MONTE_CARLO:
        stderr = _phase_stderr(dq, var_q, n_q, dp, var_p, n_p, cfg)
    return ProtocolResult(
        delta_q=float(dq),
        delta_p=float(dp),
        phase=phase,
        post_prob=post_prob,
        mode=mode,
        n_samples=int(n_samples),
        stderr_phase=float(stderr),
        seed=int(seed),
        workers=workers,
    )


def _leg_seed(seed: int, leg: int) -> int:
    return int(np.random.SeedSequence([seed, leg]).generate_state(1)[0])


def polygon_legs(
    vertices,
    cfg: CouplingConfig,
    grid: GridSpec | None = None,
    mode: Mode | str = Mode.WEAK,
    n_samples: int = 0,
    seed: int = 0,
    workers: int | None = None,
) -> list[tuple[int, ProtocolResult]]:
    """Run one protocol per fan triangle: prepare A_1, weakly probe A_k, keep A_{k+1}.

    Returns ``(k, result)`` pairs with 1-based vertex index ``k = 2..n-1``.
    Errors raised inside a leg carry the leg index in ``exc.leg``.
    """
    mode = Mode(mode)
    states = _vertices(vertices)
    first = states[0]
    legs = []
    for k in range(2, len(states)):
        leg_seed = _leg_seed(seed, k) if mode is Mode.MONTE_CARLO else seed
        try:
            res = run_protocol(
                first, states[k - 1], states[k], cfg, grid, mode, n_samples, leg_seed, workers
            )
        except WeakPhaseError as exc:
            exc.leg = k
            exc.args = (f"leg k={k}: {exc}",)
            raise
        legs.append((k, res))
    return legs


def polygon_protocol(
    vertices,
    cfg: CouplingConfig,
    grid: GridSpec | None = None,
    mode: Mode | str = Mode.WEAK,
    n_samples: int = 0,
    seed: int = 0,
    workers: int | None = None,
) -> float:
    """Geometric phase of a polygon as the wrapped sum of per-leg protocol phases."""
    legs = polygon_legs(vertices, cfg, grid, mode, n_samples, seed, workers)
    return wrap_angle(sum(res.phase for _, res in legs))


_UP_Z = basis(2, 0)
_Z_AXIS = np.array([0.0, 0.0, 1.0])


def spin_weak_value(n: BlochVector, m: BlochVector, eps: float = EPS_ANTIPODAL) -> complex:
    """Weak value of the spin-up-z projector between directions ``n`` and ``m``.

    Closed form: modulus ``sqrt((1 + n_z + m_z + n.m)^2 + (n x m)_z^2) / (2 (1 + n.m))``
    and phase ``-omega / 2``, with ``omega`` the signed solid angle of the
    triangle ``(n, z, m)``.
    """
    vn, vm = n.as_array(), m.as_array()
    nm = float(np.dot(vn, vm))
    if 1.0 + nm <= eps:
        raise PostselectionSingular(f"1 + n.m = {1.0 + nm:.3g} <= {eps:g}: weak value diverges")
    cross_z = vn[0] * vm[1] - vn[1] * vm[0]
    modulus = math.hypot(1.0 + vn[2] + vm[2] + nm, cross_z) / (2.0 * (1.0 + nm))
    omega = _solid_angle(vn, _Z_AXIS, vm)
    return modulus * complex(math.cos(omega / 2.0), -math.sin(omega / 2.0))


def polarimetry_intensity(a: PureState, b: PureState, c: PureState, chi):
    """Unit-mean intensity ``1 + Re(exp(-i chi) <A|C><C|B>)``; ``chi`` may be an array."""
    amp = inner(a, c) * inner(c, b)
    return 1.0 + np.real(np.exp(-1j * np.asarray(chi)) * amp)


def interferometry_intensity(a: PureState, b: PureState, c: PureState, chi):
    """Unit-mean intensity ``1 + Re(exp(-i chi) <A|C><C|B><B|A>)``."""
    amp = bargmann3(a, b, c)
    return 1.0 + np.real(np.exp(-1j * np.asarray(chi)) * amp)


def _chi_grid(samples: int) -> np.ndarray:
    return np.linspace(-np.pi, np.pi, samples, endpoint=False)


def polarimetry_curve(
    a: PureState, b: PureState, c: PureState, samples: int = 256, calibrated: bool = True
) -> BaselineCurve:
    """Polarimetric fringe; ``calibrated`` subtracts phi_AB = arg <A|B>."""
    chi = _chi_grid(samples)
    offset = 0.0
    if calibrated:
        ab = inner(a, b)
        if abs(ab) <= EPS_OVERLAP:
            raise UndefinedPhaseError("calibration needs a nonzero <A|B>")
        offset = wrap_angle(float(np.angle(ab)))
    return BaselineCurve(chi, polarimetry_intensity(a, b, c, chi), offset)


def interferometry_curve(a: PureState, b: PureState, c: PureState, samples: int = 256) -> BaselineCurve:
    chi = _chi_grid(samples)
    return BaselineCurve(chi, interferometry_intensity(a, b, c, chi), 0.0)


def fringe_shift(curve: BaselineCurve, min_visibility: float = 1e-6) -> float:
    """Location of the fringe maximum minus the calibration offset.

    Projects the samples onto the first harmonic, which is exact for
    ``1 + v cos(chi - phi0)`` sampled uniformly over one period.
    """
    chi, inten = curve.chi_values, curve.intensities
    n = chi.size
    if n < MIN_FRINGE_SAMPLES:
        raise ValueError(f"need at least {MIN_FRINGE_SAMPLES} samples, got {n}")
    step = 2.0 * np.pi / n
    if not np.allclose(np.diff(chi), step, rtol=0.0, atol=1e-12):
        raise ValueError("chi must be uniformly spaced over exactly one 2 pi period")
    harmonic = np.sum(inten * np.exp(1j * chi))
    visibility = 2.0 * abs(harmonic) / n
    if visibility <= min_visibility:
        raise UndefinedPhaseError(f"fringe visibility {visibility:.3g} is below {min_visibility:g}")
    return wrap_angle(float(np.angle(harmonic)) - curve.calibration_offset)
