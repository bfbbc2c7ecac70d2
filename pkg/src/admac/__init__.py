"""Analytical model and simulator for CSMA/CA in sectored service periods.

Saturated stations contend inside their sector's share of a repeating
beacon interval; backoff counters freeze outside it.  The package computes
saturation throughput and MAC delay from a per-station Markov chain, checks
the closed form against an explicit-chain oracle, and cross-validates both
against a deterministic slot-level simulator.
"""

from .chain import (DEFAULT_GRID, ExplicitChain, build_chain, raw_sector,
                    stationary_distribution, validation_report)
from .config import (DEFAULTS, ModelParams, SectorModel, TimingDurations,
                     derive_sector_models, derive_timings, frame_airtime,
                     make_params, parse_config_file, window_sizes)
from .errors import (AdmacError, ConfigError, InfeasibleModelError,
                     InternalConsistencyError, OracleError, OracleSizeError,
                     ValidationError)
from .markov import (FixedPointSolution, SteadyStateVector, b000_closed_form,
                     collision_probability, eta_terms, solve_fixed_point,
                     steady_state_vector, tau_of)
from .metrics import (PerformanceReport, SlotProbabilities,
                      aggregate_utilization, analyze, expected_delay,
                      sector_utilization, sigma_avg, slot_probabilities)
from .simulator import (SectorSchedule, SimStats, Station, empirical_report,
                        make_stations, run_simulation, schedule_from_params)

__version__ = "0.1.0"

__all__ = [
    "AdmacError", "ConfigError", "InfeasibleModelError",
    "InternalConsistencyError", "OracleError", "OracleSizeError",
    "ValidationError",
    "DEFAULTS", "ModelParams", "SectorModel", "TimingDurations",
    "derive_sector_models", "derive_timings", "frame_airtime", "make_params",
    "parse_config_file", "window_sizes",
    "FixedPointSolution", "SteadyStateVector", "b000_closed_form",
    "collision_probability", "eta_terms", "solve_fixed_point",
    "steady_state_vector", "tau_of",
    "DEFAULT_GRID", "ExplicitChain", "build_chain", "raw_sector",
    "stationary_distribution", "validation_report",
    "PerformanceReport", "SlotProbabilities", "aggregate_utilization",
    "analyze", "expected_delay", "sector_utilization", "sigma_avg",
    "slot_probabilities",
    "SectorSchedule", "SimStats", "Station", "empirical_report",
    "make_stations", "run_simulation", "schedule_from_params",
    "__version__",
]
