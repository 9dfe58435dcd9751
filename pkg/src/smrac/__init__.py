"""Switched model reference adaptive control with per-subsystem memory."""

from .analysis import (
    LyapunovContext,
    compare_runs,
    convergence_report,
    decay_fit,
    lyapunov_value,
    monotonicity_check,
)
from .engine import ReferenceSignal, SimulationConfig, SimulationResult, Simulator, reference_input, run_scenario
from .scenario import default_config, dump_scenario, load_scenario, parse_scenario
from .system_model import ReferenceModel, Subsystem, SwitchSchedule, solve_matching
from .trace import Trace

__version__ = "0.1.0"
