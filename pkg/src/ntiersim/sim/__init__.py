from .engine import ModelSpec, SimParams, SimState, SimulationError, WindowMetrics, run_window
from .experiment import (ExperimentConfig, ExperimentConfigError, ExperimentResult, fault_sanity_check,
                         run_experiment, summarize)
from .trace import (AccessDistribution, WorkloadSpec, generate_trace, generate_window, read_trace,
                    split_windows, write_trace)

__all__ = [
    "ModelSpec", "SimParams", "SimState", "SimulationError", "WindowMetrics", "run_window",
    "ExperimentConfig", "ExperimentConfigError", "ExperimentResult", "fault_sanity_check",
    "run_experiment", "summarize", "AccessDistribution", "WorkloadSpec", "generate_trace",
    "generate_window", "read_trace", "split_windows", "write_trace",
]
