"""Budgeted selection of one equilibrium plan per safeguard.

Every safeguard contributes one candidate plan per level cap (the level-0
candidate is "do not apply": zero cost, zero efficacy), and a portfolio picks
exactly one candidate per safeguard.  The objective, minimized subject to
``total direct cost <= budget``, is the aggregated residual expected loss

    sum_i  R_i * A_i * prod_sigma (1 - E(plan_sigma, i))

where plan efficacies of distinct safeguards combine multiplicatively on the
surviving risk (two plans mitigating 20% and 30% of a group's risk leave a
0.8 * 0.7 = 0.56 residual factor, not 0.5).

Two solvers are provided: :func:`solve_exhaustive` enumerates every
combination (and doubles as the reporting path, exporting the full candidate
frontier), while :func:`solve_dp` runs a dynamic program over direct costs
discretized to a quantum, pruning cost-cell states by residual-vector
dominance.  Ties on the objective are broken by lowest total cost, then by
lexicographically smallest level tuple, identically in both solvers.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .game_core import GameFamily, GameSolution, plan_efficacy, plan_financial_cost
from .scenario import Scenario

__all__ = [
    "Candidate",
    "Portfolio",
    "FrontierEntry",
    "InvestmentSolution",
    "KnapsackError",
    "EnumerationCapError",
    "combined_residual_factor",
    "candidate_from_plan",
    "enumerate_candidates",
    "portfolio_objective",
    "make_portfolio",
    "solve_exhaustive",
    "solve_dp",
    "frontier_csv",
]

DEFAULT_ENUMERATION_CAP = 1_000_000
DEFAULT_COST_QUANTUM = 0.01
_MAX_COST_CELLS = 2_000_000


class KnapsackError(Exception):
    """Base class for investment-selection failures."""


class EnumerationCapError(KnapsackError):
    """Too many combinations for exhaustive search; use :func:`solve_dp`."""


@dataclass(frozen=True)
class Candidate:
    """One fundable plan: a safeguard, its level cap, cost, and residuals.

    ``residual_factor_per_group`` maps group id -> ``1 - plan efficacy``,
    the fraction of that group's risk the plan leaves standing (in (0, 1]).
    """

    safeguard_id: str
    lam: int
    solution: GameSolution
    cost: float
    residual_factor_per_group: dict


@dataclass(frozen=True)
class Portfolio:
    """Exactly one candidate per safeguard, with its totals."""

    candidates: tuple
    total_cost: float
    objective: float

    @property
    def lambdas(self):
        return tuple(c.lam for c in self.candidates)

    @property
    def selection(self):
        return {c.safeguard_id: c for c in self.candidates}


@dataclass(frozen=True)
class FrontierEntry:
    """One enumerated combination, kept for cost-vs-risk reporting."""

    index: int
    lambdas: tuple
    total_cost: float
    objective: float
    feasible: bool
    chosen: bool


@dataclass(frozen=True)
class InvestmentSolution:
    """The chosen portfolio plus every enumerated combination."""

    portfolio: Portfolio
    frontier: tuple
    safeguard_ids: tuple


def combined_residual_factor(efficacies) -> float:
    """Residual risk factor of stacked plans: ``prod (1 - e)`` over efficacies."""
    factor = 1.0
    for e in efficacies:
        factor *= 1.0 - e
    return factor


def candidate_from_plan(s: Scenario, safeguard_id: str, plan, solution=None) -> Candidate:
    """Build a candidate from an arbitrary plan (not necessarily an equilibrium).

    Useful for what-if portfolios such as "fund pure level j everywhere".
    """
    probs = np.asarray(plan.probabilities if hasattr(plan, "probabilities") else plan, dtype=np.float64)
    residual = {gid: 1.0 - plan_efficacy(s, safeguard_id, probs, gid) for gid in s.group_ids}
    return Candidate(
        safeguard_id=safeguard_id,
        lam=probs.size - 1,
        solution=solution,
        cost=plan_financial_cost(s, safeguard_id, probs),
        residual_factor_per_group=residual,
    )


def enumerate_candidates(s: Scenario, families) -> list:
    """One candidate per (safeguard, level cap) from solved game families."""
    seen = set()
    out = []
    for fam in families:
        if not isinstance(fam, GameFamily):
            raise TypeError(f"expected a GameFamily, got {type(fam).__name__}")
        if fam.safeguard_id in seen:
            raise KnapsackError(f"duplicate game family for safeguard {fam.safeguard_id!r}")
        seen.add(fam.safeguard_id)
        for sol in fam.solutions:
            out.append(candidate_from_plan(s, fam.safeguard_id, sol.nsp, solution=sol))
    return out


def _residual_vector(s: Scenario, candidate: Candidate) -> np.ndarray:
    missing = [gid for gid in s.group_ids if gid not in candidate.residual_factor_per_group]
    unknown = [gid for gid in candidate.residual_factor_per_group if gid not in s.group_ids]
    if missing or unknown:
        raise KnapsackError(
            f"candidate ({candidate.safeguard_id!r}, lam={candidate.lam}) group mismatch: "
            f"missing {missing}, unknown {unknown}")
    return np.array([candidate.residual_factor_per_group[gid] for gid in s.group_ids])


def portfolio_objective(s: Scenario, candidates) -> float:
    """Aggregated residual expected loss of a candidate combination."""
    if isinstance(candidates, Portfolio):
        candidates = candidates.candidates
    vectors = [_residual_vector(s, c) for c in candidates]
    total = 0.0
    for gi, g in enumerate(s.groups):
        factor = 1.0
        for vec in vectors:
            factor *= vec[gi]
        total += g.attack_probability * g.asset_value * factor
    return total


def make_portfolio(s: Scenario, candidates) -> Portfolio:
    """Assemble a portfolio, computing its cost and objective canonically."""
    candidates = tuple(candidates)
    cost = 0.0
    for c in candidates:
        cost += c.cost
    return Portfolio(candidates=candidates, total_cost=cost,
                     objective=portfolio_objective(s, candidates))


def _grouped(candidates):
    """Candidates bucketed by safeguard (first-appearance order, level ascending)."""
    order = []
    buckets = {}
    for c in candidates:
        if c.safeguard_id not in buckets:
            order.append(c.safeguard_id)
            buckets[c.safeguard_id] = []
        buckets[c.safeguard_id].append(c)
    for sid, bucket in buckets.items():
        bucket.sort(key=lambda c: c.lam)
        lams = [c.lam for c in bucket]
        if len(set(lams)) != len(lams):
            raise KnapsackError(f"duplicate level cap among candidates of safeguard {sid!r}")
    return order, buckets


def solve_exhaustive(s: Scenario, candidates, budget: float,
                     enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> InvestmentSolution:
    """Enumerate every one-per-safeguard combination and pick the best feasible.

    The frontier records all combinations (feasible or not), numbered from 1
    in lexicographic level-tuple order, for cost-vs-risk plots.
    """
    if budget < 0:
        raise KnapsackError(f"budget must be >= 0, got {budget}")
    order, buckets = _grouped(candidates)
    if not order:
        raise KnapsackError("no candidates given")

    count = 1
    for sid in order:
        count *= len(buckets[sid])
        if count > enumeration_cap:
            raise EnumerationCapError(
                f"{count}+ combinations exceed the enumeration cap "
                f"({enumeration_cap}); use solve_dp instead")

    raw = []
    best_key = None
    best_combo = None
    for combo in itertools.product(*(buckets[sid] for sid in order)):
        cost = 0.0
        for c in combo:
            cost += c.cost
        objective = portfolio_objective(s, combo)
        lambdas = tuple(c.lam for c in combo)
        feasible = cost <= budget
        raw.append((lambdas, cost, objective, feasible))
        if feasible:
            key = (objective, cost, lambdas)
            if best_key is None or key < best_key:
                best_key = key
                best_combo = combo
    if best_combo is None:
        raise KnapsackError(f"no combination fits the budget {budget}")

    chosen = tuple(c.lam for c in best_combo)
    frontier = tuple(
        FrontierEntry(index=k, lambdas=lams, total_cost=cost, objective=obj,
                      feasible=feas, chosen=lams == chosen)
        for k, (lams, cost, obj, feas) in enumerate(raw, start=1))
    return InvestmentSolution(portfolio=make_portfolio(s, best_combo),
                              frontier=frontier, safeguard_ids=tuple(order))


def _cells(amount: float, quantum: float) -> int:
    """Cost expressed in grid cells, rounding up except for fp-exact multiples."""
    r = amount / quantum
    nearest = round(r)
    if abs(r - nearest) <= 1e-6 * max(1.0, abs(r)):
        return int(nearest)
    return int(math.ceil(r))


def solve_dp(s: Scenario, candidates, budget: float,
             cost_quantum: float = DEFAULT_COST_QUANTUM) -> InvestmentSolution:
    """Dynamic program over direct costs discretized to ``cost_quantum``.

    Candidate costs are rounded up to the quantum (exact multiples are kept
    exact), so feasibility is judged conservatively.  Because the objective
    multiplies per-group residuals across safeguards, each cost cell keeps
    the set of undominated residual vectors instead of a single scalar; a
    state is dropped only when another state in the same cell is at least as
    good on every group, on true cost, and on the level-tuple tie-break.
    On instances whose costs are exact multiples of the quantum this returns
    exactly the :func:`solve_exhaustive` portfolio.
    """
    if budget < 0:
        raise KnapsackError(f"budget must be >= 0, got {budget}")
    if not math.isfinite(budget):
        raise KnapsackError("the cost table needs a finite budget; use solve_exhaustive")
    if cost_quantum <= 0:
        raise KnapsackError(f"cost quantum must be > 0, got {cost_quantum}")
    order, buckets = _grouped(candidates)
    if not order:
        raise KnapsackError("no candidates given")

    budget_cells = _cells_floor(budget, cost_quantum)
    if budget_cells + 1 > _MAX_COST_CELLS:
        raise KnapsackError(
            f"cost table would need {budget_cells + 1} cells at quantum {cost_quantum}; "
            "raise the quantum")

    cell_cost = {}
    for sid in order:
        for c in buckets[sid]:
            cell_cost[(sid, c.lam)] = _cells(c.cost, cost_quantum)

    n_groups = len(s.groups)
    # state: (residual vector, true cost, level tuple); keyed by used cells
    table = {0: [(np.ones(n_groups), 0.0, ())]}
    for sid in order:
        grown = {}
        for used in sorted(table):
            for vec, cost, lams in table[used]:
                for c in buckets[sid]:
                    total_cells = used + cell_cost[(sid, c.lam)]
                    if total_cells > budget_cells:
                        continue
                    entry = (vec * _residual_vector(s, c), cost + c.cost, lams + (c.lam,))
                    grown.setdefault(total_cells, []).append(entry)
        table = {used: _prune(entries) for used, entries in grown.items()}

    if not table:
        raise KnapsackError(f"no combination fits the budget {budget}")

    terminal = []
    for used in sorted(table):
        terminal.extend(table[used])
    by_lambda = {}
    for sid in order:
        for c in buckets[sid]:
            by_lambda[(sid, c.lam)] = c

    best = None
    scored = []
    for vec, cost, lams in terminal:
        combo = tuple(by_lambda[(sid, lam)] for sid, lam in zip(order, lams))
        objective = portfolio_objective(s, combo)
        scored.append((lams, cost, objective))
        key = (objective, cost, lams)
        if best is None or key < best[0]:
            best = (key, combo)

    chosen = tuple(c.lam for c in best[1])
    scored.sort(key=lambda t: t[0])
    frontier = tuple(
        FrontierEntry(index=k, lambdas=lams, total_cost=cost, objective=obj,
                      feasible=True, chosen=lams == chosen)
        for k, (lams, cost, obj) in enumerate(scored, start=1))
    return InvestmentSolution(portfolio=make_portfolio(s, best[1]),
                              frontier=frontier, safeguard_ids=tuple(order))


def _cells_floor(amount: float, quantum: float) -> int:
    r = amount / quantum
    nearest = round(r)
    if abs(r - nearest) <= 1e-6 * max(1.0, abs(r)):
        return int(nearest)
    return int(math.floor(r))


def _prune(entries):
    """Drop states that cannot beat a kept state under the final ordering.

    ``a`` makes ``b`` redundant when a's residual vector is no worse on any
    group, its true cost is no higher, and its level tuple precedes b's
    lexicographically; every completion then scores a at least as well on
    (objective, cost, levels).
    """
    kept = []
    for vec, cost, lams in entries:
        dominated = False
        for kvec, kcost, klams in kept:
            if kcost <= cost and klams < lams and bool(np.all(kvec <= vec)):
                dominated = True
                break
        if not dominated:
            kept = [
                (kvec, kcost, klams) for kvec, kcost, klams in kept
                if not (cost <= kcost and lams < klams and bool(np.all(vec <= kvec)))
            ]
            kept.append((vec, cost, lams))
    return kept


def frontier_csv(solution: InvestmentSolution) -> str:
    """Frontier table as CSV text for external cost-vs-risk plotting."""
    def sanitize(sid):
        return "".join(ch if ch.isalnum() else "_" for ch in sid)

    header = ["candidate_index"]
    header += [f"plan_{sanitize(sid)}_lambda" for sid in solution.safeguard_ids]
    header += ["total_cost", "aggregated_residual_risk", "feasible", "chosen"]
    lines = [",".join(header)]
    for entry in solution.frontier:
        row = [str(entry.index)]
        row += [str(lam) for lam in entry.lambdas]
        row += [f"{entry.total_cost:.12e}", f"{entry.objective:.12e}",
                str(entry.feasible).lower(), str(entry.chosen).lower()]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
