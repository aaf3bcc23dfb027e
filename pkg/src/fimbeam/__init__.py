"""Transmit-power minimization for a base station with a flexible metasurface array.

The array elements can be displaced perpendicular to the array plane; the
package alternates SINR-constrained beamforming with updates of that surface
shape, and runs seeded Monte Carlo comparisons against a rigid array.
"""

from .beamforming import (MMSE, ZF, BeamformingSolution, InfeasibleError, SinrReport,
                          mmse_beamformer, sinr_report, solve, zf_beamformer)
from .channel import (LinkBudget, ScatteringEnvironment, ScenarioGeometry, channel_matrix,
                      make_link_budget, noise_power, path_gain, sample_environment,
                      sample_user_positions)
from .experiment import (ConfigError, ExperimentConfig, SweepResult, emit_results, load_config,
                         run_experiment)
from .geometry import (FimGeometry, SurfaceShape, element_positions, project, steering_matrix,
                       steering_vector)
from .kernels import BACKEND
from .morphing import MarginReport, MorphConfig, margin_gradient, morph_ascent, sinr_margins
from .optimizer import AoConfig, OptimizationTrace, optimize, transmit_power_dbm

__version__ = "0.1.0"

__all__ = [
    "AoConfig", "BACKEND", "BeamformingSolution", "ConfigError", "ExperimentConfig",
    "FimGeometry", "InfeasibleError", "LinkBudget", "MMSE", "MarginReport", "MorphConfig",
    "OptimizationTrace", "ScatteringEnvironment", "ScenarioGeometry", "SinrReport",
    "SurfaceShape", "SweepResult", "ZF", "channel_matrix", "element_positions", "emit_results",
    "load_config", "make_link_budget", "margin_gradient", "mmse_beamformer", "morph_ascent",
    "noise_power", "optimize", "path_gain", "project", "run_experiment", "sample_environment",
    "sample_user_positions", "sinr_margins", "sinr_report", "solve", "steering_matrix",
    "steering_vector", "transmit_power_dbm", "zf_beamformer",
]
