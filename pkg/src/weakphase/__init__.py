"""Weak-measurement readout of Pancharatnam's geometric phase."""

__version__ = "0.1.0"

from .errors import (
    DecompositionSingular,
    DegenerateTriangleError,
    DimensionError,
    GridError,
    PostselectionSingular,
    ResolutionError,
    UndefinedPhaseError,
    WeakPhaseError,
)
from .geomphase import (
    PathSpec,
    bargmann3,
    discretized_path_phase,
    sequence_phase,
    triangle_decomposition,
    triangle_phase,
)
from .pointer import (
    CouplingConfig,
    GridSpec,
    PointerWavefunction,
    closed_form_moments,
    initial_pointer,
    moments,
    postselected_pointer,
    postselection_probability,
)
from .state import (
    BlochVector,
    PureState,
    basis,
    bloch_to_state,
    haar_random_state,
    inner,
    oriented_solid_angle,
    relative_phase,
    state_to_bloch,
    wrap_angle,
)
from .weaklab import (
    BaselineCurve,
    Mode,
    ProtocolResult,
    extract_phase,
    fringe_shift,
    interferometry_curve,
    interferometry_intensity,
    polarimetry_curve,
    polarimetry_intensity,
    polygon_protocol,
    predicted_shifts,
    run_protocol,
    spin_weak_value,
    weak_value,
)

__all__ = [
    "DecompositionSingular",
    "DegenerateTriangleError",
    "DimensionError",
    "GridError",
    "PostselectionSingular",
    "ResolutionError",
    "UndefinedPhaseError",
    "WeakPhaseError",
    "PathSpec",
    "bargmann3",
    "discretized_path_phase",
    "sequence_phase",
    "triangle_decomposition",
    "triangle_phase",
    "CouplingConfig",
    "GridSpec",
    "PointerWavefunction",
    "closed_form_moments",
    "initial_pointer",
    "moments",
    "postselected_pointer",
    "postselection_probability",
    "BlochVector",
    "PureState",
    "basis",
    "bloch_to_state",
    "haar_random_state",
    "inner",
    "oriented_solid_angle",
    "relative_phase",
    "state_to_bloch",
    "wrap_angle",
    "BaselineCurve",
    "Mode",
    "ProtocolResult",
    "extract_phase",
    "fringe_shift",
    "interferometry_curve",
    "interferometry_intensity",
    "polarimetry_curve",
    "polarimetry_intensity",
    "polygon_protocol",
    "predicted_shifts",
    "run_protocol",
    "spin_weak_value",
    "weak_value",
]
