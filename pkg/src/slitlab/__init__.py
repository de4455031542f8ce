"""Monte Carlo laboratory for two-hole matter-wave interference,
which-path and null measurements, and electron-shelving telegraph
statistics."""

from .optics import (
    Hole,
    QuadratureConvergenceError,
    RealDensity,
    SlitGeometry,
    TransverseAmplitude,
    default_geometry,
    fresnel_oracle,
    intensity,
    relative_l2_error,
    single_hole_amplitude,
    superpose,
    visibility,
)
from .measurement import (
    ConditionalState,
    IlluminationConfig,
    IlluminationMode,
    MeasurementOutcome,
    OutcomeTag,
    apply_measurement,
    coherent_initial_state,
    conditional_density,
    ensemble_density,
    outcome_probabilities,
)
from .stats import (
    ChiSquareResult,
    GriddedCdf,
    Histogram,
    KsResult,
    PositionSample,
    chi_square_gof,
    filter_positions,
    fringe_visibility_from_positions,
    histogram,
    ks_exponential,
    sample_positions,
)
from .shelving import (
    DetectionScore,
    IonState,
    PhotonRecord,
    TelegraphTrajectory,
    VSystemRates,
    dark_threshold_for_false_rate,
    default_dark_threshold,
    default_rates,
    detect_jumps,
    emit_photons,
    score_detections,
    simulate_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "ChiSquareResult",
    "ConditionalState",
    "DetectionScore",
    "GriddedCdf",
    "Histogram",
    "Hole",
    "IlluminationConfig",
    "IlluminationMode",
    "IonState",
    "KsResult",
    "MeasurementOutcome",
    "OutcomeTag",
    "PhotonRecord",
    "PositionSample",
    "QuadratureConvergenceError",
    "RealDensity",
    "SlitGeometry",
    "TelegraphTrajectory",
    "TransverseAmplitude",
    "VSystemRates",
    "apply_measurement",
    "chi_square_gof",
    "coherent_initial_state",
    "conditional_density",
    "dark_threshold_for_false_rate",
    "default_dark_threshold",
    "default_geometry",
    "default_rates",
    "detect_jumps",
    "emit_photons",
    "ensemble_density",
    "filter_positions",
    "fresnel_oracle",
    "fringe_visibility_from_positions",
    "histogram",
    "intensity",
    "ks_exponential",
    "outcome_probabilities",
    "relative_l2_error",
    "sample_positions",
    "score_detections",
    "simulate_trajectory",
    "single_hole_amplitude",
    "superpose",
    "visibility",
]
