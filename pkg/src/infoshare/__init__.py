"""Insurance Cournot duopoly with noisy cost signals and optional mandatory sharing."""

from infoshare.equilibrium import (
    EquilibriumReport,
    NECategory,
    best_response,
    brute_force_ne,
    classify,
    classify_nonsharing,
    classify_sharing,
    epsilon_ne_check,
    kkt_feasible,
    mutually_exclusive_check,
)
from infoshare.errors import DomainError, InternalError
from infoshare.market import InfoTech, MarketParams, Regime, StrategyProfile
from infoshare.payoff import PayoffSurface
from infoshare.regions import region_map, regime_comparison
from infoshare.tailsim import TailMixture, simulate_stage2, tail_payoff_bounds

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EquilibriumReport",
    "InfoTech",
    "InternalError",
    "MarketParams",
    "NECategory",
    "PayoffSurface",
    "Regime",
    "StrategyProfile",
    "TailMixture",
    "best_response",
    "brute_force_ne",
    "classify",
    "classify_nonsharing",
    "classify_sharing",
    "epsilon_ne_check",
    "kkt_feasible",
    "mutually_exclusive_check",
    "region_map",
    "regime_comparison",
    "simulate_stage2",
    "tail_payoff_bounds",
]
