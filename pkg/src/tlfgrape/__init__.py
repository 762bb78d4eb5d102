"""Open-system pulse optimization for a qubit coupled to a dissipative
two-level fluctuator.

The package models a driven qubit whose sigma_z axis couples to a
bath-damped two-level fluctuator, propagates the weak-coupling master
equation as superoperator slice maps, and optimizes piecewise-constant
control pulses by gradient ascent on the reduced-map trace fidelity.
"""

from .checks import CheckResult, run_all
from .experiments import (
    DEFAULT_GAMMA_GRID,
    DEFAULT_TG_GRID,
    FitResult,
    SweepSpec,
    SweepTable,
    fit_curve,
    make_grid,
    quadratic_peak,
    sweep_gamma,
    sweep_temperature,
    sweep_tg,
    t1_reference_curves,
    write_summary_json,
    write_sweep_csv,
)
from .grape import (
    OptimizationResult,
    OptimizerConfig,
    PenaltyParams,
    evaluate_pulse,
    fidelity,
    gradient,
    optimize,
    penalty,
    penalty_weight,
    rabi_baseline,
    read_pulse_csv,
    target_superop,
    write_pulse_csv,
)
from .propagation import (
    ControlPulse,
    MapTrajectory,
    StateTrajectory,
    evolve_state,
    full_map,
    reduced_map,
    slice_count,
    slice_propagator,
    slice_propagators,
    thermal_tlf_state,
    write_trajectory_csv,
)
from .redfield import (
    ModelParams,
    MotionalNarrowingWarning,
    RtnAnalytics,
    bath_weight,
    bose,
    control_operator,
    generator,
    hamiltonian,
    kappa_for_gamma,
    relaxation_superop,
    rtn_analytics,
    rtn_gamma,
    rtn_spectrum,
    sigma_tensor,
    spectral_density,
    t1_t2_rates,
)

__version__ = "0.1.0"

__all__ = [
    "CheckResult",
    "ControlPulse",
    "DEFAULT_GAMMA_GRID",
    "DEFAULT_TG_GRID",
    "FitResult",
    "MapTrajectory",
    "ModelParams",
    "MotionalNarrowingWarning",
    "OptimizationResult",
    "OptimizerConfig",
    "PenaltyParams",
    "RtnAnalytics",
    "StateTrajectory",
    "SweepSpec",
    "SweepTable",
    "bath_weight",
    "bose",
    "control_operator",
    "evaluate_pulse",
    "evolve_state",
    "fidelity",
    "fit_curve",
    "full_map",
    "generator",
    "gradient",
    "hamiltonian",
    "kappa_for_gamma",
    "make_grid",
    "optimize",
    "penalty",
    "penalty_weight",
    "quadratic_peak",
    "rabi_baseline",
    "read_pulse_csv",
    "reduced_map",
    "relaxation_superop",
    "rtn_analytics",
    "rtn_gamma",
    "rtn_spectrum",
    "run_all",
    "sigma_tensor",
    "slice_count",
    "slice_propagator",
    "slice_propagators",
    "spectral_density",
    "sweep_gamma",
    "sweep_temperature",
    "sweep_tg",
    "t1_reference_curves",
    "t1_t2_rates",
    "target_superop",
    "thermal_tlf_state",
    "write_pulse_csv",
    "write_summary_json",
    "write_sweep_csv",
    "write_trajectory_csv",
]
