"""Periodic-box simulation: solvers, monitoring, falsification, exports."""

from .export import read_field, read_trace_csv, write_field, write_trace_csv
from .falsify import FalsifyWitness, bump, counterexample_init, falsify
from .monitor import MonitorResult, field_scale, random_inbody_field, run_monitored, solver_tolerance
from .solvers import (
    Grid,
    SimConfig,
    evolve_explicit,
    propagator,
    propagator_alignment,
    resolve_dt,
    spectral_run,
    stability_limit,
    step_explicit,
)

__all__ = [
    "FalsifyWitness", "Grid", "MonitorResult", "SimConfig", "bump", "counterexample_init",
    "evolve_explicit", "falsify", "field_scale", "propagator", "propagator_alignment",
    "random_inbody_field", "read_field", "read_trace_csv", "resolve_dt", "run_monitored",
    "solver_tolerance", "spectral_run", "stability_limit", "step_explicit", "write_field",
    "write_trace_csv",
]
