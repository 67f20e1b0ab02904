"""Anomaly flow of conformally balanced Hermitian metrics.

Exact pointwise form algebra, the (m-1)-root solver, Chern-connection
geometry on jets, a periodic-grid flow integrator and its monitors.
"""

__version__ = "0.1.0"

from .diagnostics import (DiagnosticSample, doubling_monitor, evolution_consistency, sample,
                          shi_monitor, stationarity_check)
from .flow import FlowConfig, FlowResult, FlowState, build_initial_balanced, run_flow, step
from .forms import FormPQ, HermitianPointMetric, hodge_star_eps, inner, norm_Omega, omega_form, omega_power, wedge
from .geometry import Geometry, MetricJet
from .grid import Grid
from .report import ResidualReport
from .roots import hodge_star_closed, root_constants, solve_root, solve_root_star
from .verify import run_verification

__all__ = [
    "DiagnosticSample", "FlowConfig", "FlowResult", "FlowState", "FormPQ", "Geometry", "Grid",
    "HermitianPointMetric", "MetricJet", "ResidualReport", "build_initial_balanced",
    "doubling_monitor", "evolution_consistency", "hodge_star_closed", "hodge_star_eps", "inner",
    "norm_Omega", "omega_form", "omega_power", "root_constants", "run_flow", "run_verification",
    "sample", "shi_monitor", "solve_root", "solve_root_star", "stationarity_check", "step", "wedge",
]
