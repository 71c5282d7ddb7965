from .analytical import AnalyticalConfig, analytical_place
from .mckp import Infeasible, solve_mckp
from .migration import ScreenDecision, migration_screen
from .scoring import ScoringPolicy, TierRow, score_tiers
from .tco import ConfigError, PlacementPlan, TcoModel, compute_tco, estimate_perf_ovh
from .waterfall import WaterfallConfig, threshold_for_coverage, waterfall_step

__all__ = [
    "AnalyticalConfig", "analytical_place", "Infeasible", "solve_mckp",
    "ScreenDecision", "migration_screen", "ScoringPolicy", "TierRow", "score_tiers",
    "ConfigError", "PlacementPlan", "TcoModel", "compute_tco", "estimate_perf_ovh",
    "WaterfallConfig", "threshold_for_coverage", "waterfall_step",
]
