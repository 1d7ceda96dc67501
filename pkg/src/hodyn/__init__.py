"""Higher-order learning dynamics on finite normal-form games."""

from .analysis import (Classification, LimitReport, RateFit, classify_limit,
                       extinction_rate_fit, field_divergence, kl_divergence,
                       strict_convergence_fit, weak_dominance_escape_check)
from .builtins import BUILTINS, get_builtin
from .dominance import (DominanceReport, Mode, dominates_mixed, dominates_pure,
                        iterated_elimination)
from .dynamics import (DynamicsConfig, Kind, Observable, faa_di_bruno_remainder, gibbs,
                       make_field, make_observable, reduced_gibbs)
from .game import (Game, GameError, MixedProfile, Restriction, expected_payoff, is_nash,
                   is_restricted_equilibrium, is_strict_nash, load_game, restrict)
from .integrator import (IntegrationError, IntegratorConfig, Method, Trajectory,
                         event_convergence, event_extinction, integrate)
from .kernels import BACKEND
from .simulation import simulate

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BUILTINS", "Classification", "DominanceReport", "DynamicsConfig", "Game",
    "GameError", "IntegrationError", "IntegratorConfig", "Kind", "LimitReport", "Method",
    "MixedProfile", "Mode", "Observable", "RateFit", "Restriction", "Trajectory",
    "classify_limit", "dominates_mixed", "dominates_pure", "event_convergence",
    "event_extinction", "expected_payoff", "extinction_rate_fit", "faa_di_bruno_remainder",
    "field_divergence", "get_builtin", "gibbs", "integrate", "is_nash",
    "is_restricted_equilibrium", "is_strict_nash", "iterated_elimination", "kl_divergence",
    "load_game", "make_field", "make_observable", "reduced_gibbs", "restrict", "simulate",
    "strict_convergence_fit", "weak_dominance_escape_check",
]
