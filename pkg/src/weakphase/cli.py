"""Command-line front end.

    weakphase triangle|protocol|sweep|polygon|spin|baseline \\
        --config cfg.json --out result.csv --format csv|json [--seed N]

Exit codes: 0 success, 2 invalid config, 3 singular physics (orthogonal
pre/post-selection, vanishing overlaps), 4 grid or resolution problems.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import __version__
from .errors import (
    DegenerateTriangleError,
    GridError,
    PostselectionSingular,
    ResolutionError,
    UndefinedPhaseError,
    WeakPhaseError,
)
from .geomphase import sequence_phase, triangle_decomposition, triangle_phase
from .pointer import MAX_PHASE_PER_STEP, CouplingConfig, GridSpec, postselection_probability
from .state import BlochVector, PureState, bloch_to_state, oriented_solid_angle, state_to_bloch, wrap_angle
from .weaklab import (
    MIN_MC_SAMPLES,
    Mode,
    fringe_shift,
    interferometry_curve,
    polarimetry_curve,
    polygon_legs,
    resolve_workers,
    run_protocol,
    spin_weak_value,
    thread_cap,
    weak_value,
)

EXIT_OK, EXIT_CONFIG, EXIT_SINGULAR, EXIT_GRID = 0, 2, 3, 4

COMMON_COLUMNS = ["mode", "kappa", "sigma", "hbar", "seed", "n_samples"]
PROTOCOL_COLUMNS = COMMON_COLUMNS + [
    "delta_q", "delta_p", "phase_rad", "phase_exact_rad", "post_prob", "stderr_phase_rad",
]
TRIANGLE_COLUMNS = COMMON_COLUMNS + [
    "d", "triangle_phase_rad", "weak_value_re", "weak_value_im", "weak_value_phase_rad",
    "minus_half_solid_angle_rad", "weak_minus_triangle_rad", "solid_minus_triangle_rad",
]
SWEEP_COLUMNS = COMMON_COLUMNS + [
    "kappa_sigma", "phase_exact_mode_rad", "phase_weak_rad", "discrepancy_rad",
    "post_prob", "singular", "error",
]
POLYGON_COLUMNS = ["record", "leg"] + COMMON_COLUMNS + [
    "delta_q", "delta_p", "phase_rad", "post_prob", "stderr_phase_rad",
    "total_rad", "sequence_phase_rad", "decomposition_rad",
    "total_minus_decomposition_rad", "total_minus_sequence_rad",
]
SPIN_COLUMNS = COMMON_COLUMNS + [
    "n_x", "n_y", "n_z", "m_x", "m_y", "m_z",
    "closed_form_re", "closed_form_im", "generic_re", "generic_im",
    "magnitude", "phase_rad", "omega_rad", "minus_half_omega_rad", "closed_minus_generic_abs",
]
BASELINE_COLUMNS = COMMON_COLUMNS + [
    "chi_rad", "polarimetry_intensity", "interferometry_intensity",
    "interferometry_shift_rad", "polarimetry_raw_shift_rad", "polarimetry_calibrated_shift_rad",
    "calibration_offset_rad", "triangle_phase_rad",
]


class ConfigError(ValueError):
    """Config rejected before any computation."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class AmplitudeEntry(_Strict):
    kind: Literal["amplitudes"]
    re: list[float]
    im: list[float] | None = None

    @field_validator("im")
    @classmethod
    def _same_length(cls, im, info):
        re = info.data.get("re")
        if im is not None and re is not None and len(im) != len(re):
            raise ValueError(f"length {len(im)} does not match re (length {len(re)})")
        return im


class BlochEntry(_Strict):
    kind: Literal["bloch"]
    vector: list[float] = Field(min_length=3, max_length=3)


StateEntry = Annotated[Union[AmplitudeEntry, BlochEntry], Field(discriminator="kind")]


class GridEntry(_Strict):
    extent: float = 10.0
    points: int = 4096


class SweepEntry(_Strict):
    kappa_start: float = Field(gt=0)
    kappa_end: float = Field(gt=0)
    steps: int = Field(ge=2)


class ExperimentConfig(_Strict):
    """Structured experiment description shared by every subcommand."""

    states: list[StateEntry] = Field(min_length=1)
    kappa: float = 0.01
    sigma: float = Field(default=1.0, gt=0)
    hbar: float = Field(default=1.0, gt=0)
    grid: GridEntry = GridEntry()
    mode: Mode | list[Mode] = Mode.WEAK
    n_samples: int = Field(default=0, ge=0)
    seed: int = Field(default=0, ge=0)
    workers: int = Field(default=1, ge=1)
    sweep: SweepEntry | None = None
    chi_samples: int = Field(default=256, ge=64)

    @property
    def modes(self) -> list[Mode]:
        return list(self.mode) if isinstance(self.mode, list) else [self.mode]

    def coupling(self, kappa: float | None = None) -> CouplingConfig:
        return CouplingConfig(self.kappa if kappa is None else kappa, self.sigma, self.hbar)

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.grid.extent, self.grid.points)


@dataclass
class Report:
    command: str
    columns: list[str]
    records: list[dict]
    metadata: dict
    summary: dict = field(default_factory=dict)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    return parse_config(data)


def parse_config(data) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(part) for part in err["loc"]) or "<root>"
            lines.append(f"config.{loc}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from exc


# --- validation ------------------------------------------------------------


def _to_state(entry, idx: int) -> PureState:
    where = f"config.states.{idx}"
    if isinstance(entry, BlochEntry):
        try:
            return bloch_to_state(BlochVector.normalized(entry.vector))
        except ValueError as exc:
            raise ConfigError(f"{where}.vector: {exc}") from exc
    im = entry.im if entry.im is not None else [0.0] * len(entry.re)
    vec = np.asarray(entry.re, dtype=float) + 1j * np.asarray(im, dtype=float)
    if vec.size < 2:
        raise ConfigError(f"{where}.re: a state needs at least 2 amplitudes")
    try:
        return PureState.normalized(vec)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _states(cfg: ExperimentConfig, count: int | None = None, minimum: int | None = None) -> list[PureState]:
    n = len(cfg.states)
    if count is not None and n != count:
        raise ConfigError(f"config.states: expected {count} states, got {n}")
    if minimum is not None and n < minimum:
        raise ConfigError(f"config.states: expected at least {minimum} states, got {n}")
    states = [_to_state(entry, i) for i, entry in enumerate(cfg.states)]
    dims = {s.d for s in states}
    if len(dims) > 1:
        raise ConfigError(f"config.states: all states must share one dimension, got {sorted(dims)}")
    return states


def _check_coupling(cfg: ExperimentConfig, kappas) -> GridSpec:
    grid = cfg.grid_spec()
    for kappa in kappas:
        if kappa == 0.0 or not math.isfinite(kappa):
            raise ConfigError("config.kappa: zero-strength protocol has no pointer shifts")
        step = grid.spacing(cfg.sigma)
        if abs(kappa) * step > MAX_PHASE_PER_STEP:
            raise ResolutionError(
                f"config.grid: kappa * dq = {abs(kappa) * step:.3g} exceeds {MAX_PHASE_PER_STEP}"
            )
    if Mode.MONTE_CARLO in cfg.modes and cfg.n_samples < MIN_MC_SAMPLES:
        raise ConfigError(f"config.n_samples: monte-carlo mode needs at least {MIN_MC_SAMPLES}")
    return grid


def _ladder(cfg: ExperimentConfig) -> list[float]:
    if cfg.sweep is None:
        raise ConfigError("config.sweep: the sweep command needs a sweep ladder")
    sw = cfg.sweep
    kappas = np.geomspace(sw.kappa_start, sw.kappa_end, sw.steps)
    top = float(np.max(kappas)) * cfg.sigma
    if top > 0.5:
        raise ConfigError(f"config.sweep: kappa * sigma = {top:g} exceeds 0.5 at the top of the ladder")
    return [float(k) for k in kappas]


# --- commands --------------------------------------------------------------


def _metadata(cfg: ExperimentConfig) -> dict:
    return {
        "version": __version__,
        "workers": resolve_workers(cfg.workers),
        "threads_cap": thread_cap(),
    }


def _common(cfg: ExperimentConfig, mode, kappa=None, n_samples=0) -> dict:
    return {
        "mode": mode.value if isinstance(mode, Mode) else mode,
        "kappa": cfg.kappa if kappa is None else kappa,
        "sigma": cfg.sigma,
        "hbar": cfg.hbar,
        "seed": cfg.seed,
        "n_samples": n_samples,
    }


def cmd_triangle(cfg: ExperimentConfig) -> Report:
    a, b, c = _states(cfg, count=3)
    w = weak_value(a, b, c)
    delta = triangle_phase(a, b, c)
    w_phase = wrap_angle(float(np.angle(w)))
    solid = None
    if a.d == 2:
        omega = oriented_solid_angle(state_to_bloch(a), state_to_bloch(b), state_to_bloch(c))
        solid = wrap_angle(-omega / 2.0)
    rec = _common(cfg, "analytic") | {
        "d": a.d,
        "triangle_phase_rad": delta,
        "weak_value_re": w.real,
        "weak_value_im": w.imag,
        "weak_value_phase_rad": w_phase,
        "minus_half_solid_angle_rad": solid,
        "weak_minus_triangle_rad": wrap_angle(w_phase - delta),
        "solid_minus_triangle_rad": None if solid is None else wrap_angle(solid - delta),
    }
    return Report("triangle", TRIANGLE_COLUMNS, [rec], _metadata(cfg))


def _protocol_record(cfg, res, reference) -> dict:
    return _common(cfg, res.mode, n_samples=res.n_samples) | {
        "seed": res.seed,
        "delta_q": res.delta_q,
        "delta_p": res.delta_p,
        "phase_rad": res.phase,
        "phase_exact_rad": reference,
        "post_prob": res.post_prob,
        "stderr_phase_rad": res.stderr_phase,
    }


def cmd_protocol(cfg: ExperimentConfig) -> Report:
    a, b, c = _states(cfg, count=3)
    grid = _check_coupling(cfg, [cfg.kappa])
    workers = resolve_workers(cfg.workers)
    records = []
    for mode in cfg.modes:
        res = run_protocol(a, b, c, cfg.coupling(), grid, mode, cfg.n_samples, cfg.seed, workers)
        records.append(_protocol_record(cfg, res, triangle_phase(a, b, c)))
    return Report("protocol", PROTOCOL_COLUMNS, records, _metadata(cfg))


def cmd_sweep(cfg: ExperimentConfig) -> Report:
    a, b, c = _states(cfg, count=3)
    kappas = _ladder(cfg)
    grid = _check_coupling(cfg, kappas)
    records = []
    for kappa in kappas:
        coupling = cfg.coupling(kappa)
        rec = _common(cfg, Mode.EXACT, kappa=kappa) | {"kappa_sigma": coupling.strength}
        try:
            exact = run_protocol(a, b, c, coupling, grid, Mode.EXACT)
            weak = run_protocol(a, b, c, coupling, grid, Mode.WEAK)
        except (PostselectionSingular, UndefinedPhaseError) as exc:
            rec |= {
                "phase_exact_mode_rad": None,
                "phase_weak_rad": None,
                "discrepancy_rad": None,
                "post_prob": postselection_probability(a, b, c, coupling),
                "singular": True,
                "error": type(exc).__name__,
            }
        else:
            rec |= {
                "phase_exact_mode_rad": exact.phase,
                "phase_weak_rad": weak.phase,
                "discrepancy_rad": abs(wrap_angle(exact.phase - weak.phase)),
                "post_prob": exact.post_prob,
                "singular": False,
                "error": None,
            }
        records.append(rec)
    return Report("sweep", SWEEP_COLUMNS, records, _metadata(cfg))


def cmd_polygon(cfg: ExperimentConfig) -> Report:
    states = _states(cfg, minimum=3)
    grid = _check_coupling(cfg, [cfg.kappa])
    workers = resolve_workers(cfg.workers)
    runs = [
        (mode, polygon_legs(states, cfg.coupling(), grid, mode, cfg.n_samples, cfg.seed, workers))
        for mode in cfg.modes
    ]
    seq = sequence_phase(states)
    decomp = triangle_decomposition(states)
    records = []
    for mode, legs in runs:
        for k, res in legs:
            records.append({"record": "leg", "leg": k} | _protocol_record(cfg, res, None))
        total = wrap_angle(sum(res.phase for _, res in legs))
        records.append(
            {"record": "total", "leg": None}
            | _common(cfg, mode, n_samples=legs[0][1].n_samples)
            | {
                "total_rad": total,
                "sequence_phase_rad": seq,
                "decomposition_rad": decomp,
                "total_minus_decomposition_rad": wrap_angle(total - decomp),
                "total_minus_sequence_rad": wrap_angle(total - seq),
            }
        )
    return Report("polygon", POLYGON_COLUMNS, records, _metadata(cfg))


def _bloch(entry, state: PureState, idx: int) -> BlochVector:
    if isinstance(entry, BlochEntry):
        return BlochVector.normalized(entry.vector)
    if state.d != 2:
        raise ConfigError(f"config.states.{idx}: spin scenario needs qubit states")
    return state_to_bloch(state)


def cmd_spin(cfg: ExperimentConfig) -> Report:
    states = _states(cfg, count=2)
    n, m = (_bloch(cfg.states[i], states[i], i) for i in range(2))
    closed = spin_weak_value(n, m)
    up = PureState(np.array([1.0, 0.0]))
    generic = weak_value(bloch_to_state(n), up, bloch_to_state(m))
    omega = oriented_solid_angle(n, BlochVector(0.0, 0.0, 1.0), m)
    rec = _common(cfg, "analytic") | {
        "n_x": n.x, "n_y": n.y, "n_z": n.z,
        "m_x": m.x, "m_y": m.y, "m_z": m.z,
        "closed_form_re": closed.real,
        "closed_form_im": closed.imag,
        "generic_re": generic.real,
        "generic_im": generic.imag,
        "magnitude": abs(closed),
        "phase_rad": wrap_angle(float(np.angle(closed))),
        "omega_rad": omega,
        "minus_half_omega_rad": wrap_angle(-omega / 2.0),
        "closed_minus_generic_abs": abs(closed - generic),
    }
    return Report("spin", SPIN_COLUMNS, [rec], _metadata(cfg))


def cmd_baseline(cfg: ExperimentConfig) -> Report:
    a, b, c = _states(cfg, count=3)
    inter = interferometry_curve(a, b, c, cfg.chi_samples)
    pol_raw = polarimetry_curve(a, b, c, cfg.chi_samples, calibrated=False)
    pol_cal = polarimetry_curve(a, b, c, cfg.chi_samples, calibrated=True)
    summary = {
        "interferometry_shift_rad": fringe_shift(inter),
        "polarimetry_raw_shift_rad": fringe_shift(pol_raw),
        "polarimetry_calibrated_shift_rad": fringe_shift(pol_cal),
        "calibration_offset_rad": pol_cal.calibration_offset,
        "triangle_phase_rad": triangle_phase(a, b, c),
    }
    records = [
        _common(cfg, "analytic")
        | {"chi_rad": float(chi), "polarimetry_intensity": float(ip), "interferometry_intensity": float(ii)}
        | summary
        for chi, ip, ii in zip(inter.chi_values, pol_raw.intensities, inter.intensities)
    ]
    return Report("baseline", BASELINE_COLUMNS, records, _metadata(cfg), summary)


COMMANDS = {
    "triangle": cmd_triangle,
    "protocol": cmd_protocol,
    "sweep": cmd_sweep,
    "polygon": cmd_polygon,
    "spin": cmd_spin,
    "baseline": cmd_baseline,
}


# --- output ----------------------------------------------------------------


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.generic):
        return value.item()
    return value


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "command": report.command,
            "metadata": report.metadata,
            "columns": report.columns,
            "records": [{k: _clean(rec.get(k)) for k in report.columns} for rec in report.records],
        }
        if report.summary:
            doc["summary"] = {k: _clean(v) for k, v in report.summary.items()}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=report.columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for rec in report.records:
        row = {}
        for k in report.columns:
            v = _clean(rec.get(k))
            row[k] = "" if v is None else ("true" if v is True else "false" if v is False else v)
        writer.writerow(row)
    return buf.getvalue()


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".weakphase-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def run(command: str, cfg: ExperimentConfig, fmt: str = "csv") -> str:
    """Execute a subcommand on a parsed config and return the rendered output."""
    return render(COMMANDS[command](cfg), fmt)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakphase", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", help="output file (stdout when omitted)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--seed", type=int, help="override the config seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg = cfg.model_copy(update={"seed": args.seed})
        text = run(args.command, cfg, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GridError, ResolutionError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GRID
    except (PostselectionSingular, UndefinedPhaseError, DegenerateTriangleError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except WeakPhaseError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        _write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
