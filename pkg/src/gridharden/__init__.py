"""Wildfire shutoff and undergrounding planning toolkit.

Builds mixed-integer switching/undergrounding models over a DC network,
solves them through pluggable process-based backends, and reports
per-group load-shed equity metrics.
"""

__version__ = "0.1.0"

from .network import (Bus, Generator, GroupFamily, Horizon, Line, Network,
                      load_network, validate_network)
from .scenarios import ScenarioSpec, make_spec, scenario_catalog
from .risk import PixelGrid, PixelStats, RiskProfile, RiskThresholds, build_risk_profile
from .demographics import (AssignmentMatrix, BusDemographics, TractRecord,
                           assign_tracts)
from .model import BaselineReference, MilpModel
from .builder import build_scenario
from .backends import BackendConfig, Solution, SolveOptions, solve
from .oracle import oracle_solve
from .analysis import GroupMetrics, compute_group_metrics, postprocess_equity

__all__ = [
    "Bus", "Generator", "GroupFamily", "Horizon", "Line", "Network",
    "load_network", "validate_network",
    "ScenarioSpec", "make_spec", "scenario_catalog",
    "PixelGrid", "PixelStats", "RiskProfile", "RiskThresholds", "build_risk_profile",
    "AssignmentMatrix", "BusDemographics", "TractRecord", "assign_tracts",
    "BaselineReference", "MilpModel", "build_scenario",
    "BackendConfig", "Solution", "SolveOptions", "solve", "oracle_solve",
    "GroupMetrics", "compute_group_metrics", "postprocess_equity",
]
