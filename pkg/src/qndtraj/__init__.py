"""Conditional phonon-number trajectories under continuous QND measurement.

The package integrates the conditional rate equation for the diagonal
mechanical state under two-channel homodyne monitoring, synthesizes the
matching photocurrents, recovers time-averaged energy moments from the
currents alone, and sweeps the measurement strength to produce the
variance-collapse curve.
"""

__version__ = "0.1.0"

from .params import (RawOpticalParams, SystemParams, ConstraintReport,
                     PoleError, coeff_A1, coeff_A2_B_C, raman_rates,
                     measurement_rates, steady_nbar_b, check_constraints,
                     params_from_raw, reference_params)
from .trajectory import (FockDistribution, StepNoise, TrajectoryRecord,
                         TrajectoryFailure, TruncationError,
                         drift_thermal, innovation, moments, step,
                         suggest_dt, run_trajectory, thermal_distribution)
from .photocurrent import (PhotocurrentRecord, MomentEstimate,
                           MissingNoiseError, EstimatorError, SchemaError,
                           synthesize, estimate_moments, write_record,
                           read_record)
from .oracle import (JointState, LinearizedCouplings, DivergenceError,
                     RegimeError, unconditional_steady, apply_generator,
                     master_equation_solution, adiabatic_consistency)
from .experiment import (SweepConfig, SweepResult, PointResult, ConfigError,
                         parse_config, load_config, run_point,
                         run_collapse_sweep, detect_steady_state,
                         default_burn_in)

__all__ = [
    "__version__",
    "RawOpticalParams", "SystemParams", "ConstraintReport", "PoleError",
    "coeff_A1", "coeff_A2_B_C", "raman_rates", "measurement_rates",
    "steady_nbar_b", "check_constraints", "params_from_raw", "reference_params",
    "FockDistribution", "StepNoise", "TrajectoryRecord", "TrajectoryFailure",
    "TruncationError", "drift_thermal", "innovation", "moments", "step",
    "suggest_dt", "run_trajectory", "thermal_distribution",
    "PhotocurrentRecord", "MomentEstimate", "MissingNoiseError",
    "EstimatorError", "SchemaError", "synthesize", "estimate_moments",
    "write_record", "read_record",
    "JointState", "LinearizedCouplings", "DivergenceError", "RegimeError",
    "unconditional_steady", "apply_generator", "master_equation_solution",
    "adiabatic_consistency",
    "SweepConfig", "SweepResult", "PointResult", "ConfigError",
    "parse_config", "load_config", "run_point", "run_collapse_sweep",
    "detect_steady_state", "default_burn_in",
]
