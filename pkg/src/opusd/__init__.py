"""Optimal unambiguous discrimination of linearly independent pure states."""

__version__ = "0.1.0"

from .ensemble import StateEnsemble, gram_matrix, parse_ensemble, validate_ensemble  # noqa: E402
from .estimator import OptimalUSD  # noqa: E402
from .kkt import PhaseAssignment, UsdSolution, kkt_residuals, search_phases, solve_optimal  # noqa: E402
from .oracle import grid_refine_maximize, simulate_measurement, support_exhaustive_maximize  # noqa: E402
from .reciprocal import dual_gram, povm_from_probabilities, reciprocal_states  # noqa: E402
from .sdpcheck import build_sdp_data, slackness_and_gap  # noqa: E402

__all__ = [
    "OptimalUSD",
    "PhaseAssignment",
    "StateEnsemble",
    "UsdSolution",
    "build_sdp_data",
    "dual_gram",
    "grid_refine_maximize",
    "gram_matrix",
    "kkt_residuals",
    "parse_ensemble",
    "povm_from_probabilities",
    "reciprocal_states",
    "search_phases",
    "simulate_measurement",
    "slackness_and_gap",
    "solve_optimal",
    "support_exhaustive_maximize",
    "validate_ensemble",
]
