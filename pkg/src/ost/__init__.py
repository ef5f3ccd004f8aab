"""Optimal safeguards tool.

Selects application levels for cyber-hygiene safeguards by solving one
zero-sum game per (safeguard, level cap), funds the resulting plans under a
budget through one-choice-per-safeguard knapsack optimization, and validates
the chosen strategies by Monte Carlo attack simulation against Nash,
asset-weighted, and opportunistic attacker profiles.
"""

__version__ = "0.1.0"

from .game_core import (  # noqa: F401
    GameFamily,
    GameSolution,
    MixedStrategy,
    UtilityMatrix,
    build_game_family,
    build_utility_matrix,
    expected_loss,
    expected_utility,
    plan_efficacy,
    plan_expected_loss,
    plan_financial_cost,
    solve_maximin,
    support_enumeration,
)
from .knapsack import (  # noqa: F401
    Candidate,
    InvestmentSolution,
    Portfolio,
    candidate_from_plan,
    combined_residual_factor,
    enumerate_candidates,
    portfolio_objective,
    solve_dp,
    solve_exhaustive,
)
from .scenario import (  # noqa: F401
    Scenario,
    SafeguardSpec,
    UserGroup,
    Weights,
    builtin_use_case,
    load_scenario,
    save_scenario,
    validate_scenario,
)
from .simulate import (  # noqa: F401
    ComparisonReport,
    SimConfig,
    compare_strategies,
    run_simulation,
    weighted_attacker,
    weighted_defender,
)
