"""Zero-sum safeguard games: utility matrices, equilibria, and plan metrics.

For a safeguard capped at application level ``lam`` the defender picks a
level in ``0..lam`` (row) while the attacker picks a user group (column).
The defender's payoff for the pure profile ``(j, i)`` is

    U(j, i) = -loss_weight * R_i * A_i * (1 - E(j, i))
              - indirect_cost_weight * C(j, i)

with level 0 meaning "not applied" (zero efficacy, zero indirect cost).
The attacker's payoff is ``-U``.  Equilibria of these games are computed
two independent ways: :func:`solve_maximin` runs a deterministic simplex
on the induced linear program, and :func:`support_enumeration` solves the
indifference systems of every square support pair, which serves as a
cross-checking oracle in the test suite.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .scenario import Scenario

__all__ = [
    "EQ_TOLERANCE",
    "MixedStrategy",
    "UtilityMatrix",
    "GameSolution",
    "GameFamily",
    "SupportSizeError",
    "expected_loss",
    "build_utility_matrix",
    "expected_utility",
    "equilibrium_gaps",
    "solve_maximin",
    "support_enumeration",
    "build_game_family",
    "plan_efficacy",
    "plan_expected_loss",
    "plan_financial_cost",
    "solution_record",
]

# Saddle-point residuals of reported equilibria stay below this.
EQ_TOLERANCE = 1e-9

# Strategy weights below this are snapped to zero before normalization.
_CLIP = 1e-12

_SIMPLEX_MAX_ITER = 10_000


class SupportSizeError(ValueError):
    """Raised when a matrix is too large for exhaustive support enumeration."""


@dataclass(frozen=True)
class MixedStrategy:
    """A probability distribution over one player's pure strategies.

    ``owner`` is ``"defender"`` (over levels ``0..lam``) or ``"attacker"``
    (over user groups).  Weights must be non-negative and sum to 1 within
    1e-12; both are enforced at construction.
    """

    owner: str
    probabilities: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("a mixed strategy needs a non-empty 1-D weight vector")
        if probs.min() < 0.0:
            raise ValueError(f"negative strategy weight: {probs.min()!r}")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"strategy weights sum to {total!r}, not 1")
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probabilities", probs)

    def support(self):
        """Indices carrying strictly positive probability."""
        return tuple(int(k) for k in np.nonzero(self.probabilities > 0.0)[0])

    @classmethod
    def point_mass(cls, owner, index, size):
        probs = np.zeros(size)
        probs[index] = 1.0
        return cls(owner, probs)


@dataclass(frozen=True)
class UtilityMatrix:
    """Defender payoff table for one game: rows = levels 0..max_level,
    columns = user groups in scenario order."""

    safeguard_id: str
    max_level: int
    group_ids: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError("utility matrix must be 2-D")
        if vals.shape != (self.max_level + 1, len(self.group_ids)):
            raise ValueError(
                f"utility matrix shape {vals.shape} does not match "
                f"{self.max_level + 1} levels x {len(self.group_ids)} groups")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class GameSolution:
    """Equilibrium of one game: the defender's plan, the attacker's
    strategy, and the (unique) game value."""

    safeguard_id: str
    max_level: int
    nsp: MixedStrategy
    attacker_strategy: MixedStrategy
    value: float


@dataclass(frozen=True)
class GameFamily:
    """Equilibria of all games of one safeguard, indexed by the level cap."""

    safeguard_id: str
    solutions: tuple

    def solution(self, lam: int) -> GameSolution:
        return self.solutions[lam]


def _coerce_matrix(matrix):
    """Accept a UtilityMatrix or any 2-D array-like; return (values, id, lam)."""
    if isinstance(matrix, UtilityMatrix):
        return matrix.values, matrix.safeguard_id, matrix.max_level
    vals = np.asarray(matrix, dtype=np.float64)
    if vals.ndim != 2 or vals.size == 0:
        raise ValueError("expected a non-empty 2-D payoff matrix")
    return vals, "", vals.shape[0] - 1


def _coerce_weights(strategy, size, what):
    if isinstance(strategy, MixedStrategy):
        probs = strategy.probabilities
    else:
        probs = np.asarray(strategy, dtype=np.float64)
    if probs.ndim != 1 or probs.size != size:
        raise ValueError(f"{what} has {probs.size} weights, expected {size}")
    return probs


def _level_arrays(s: Scenario, safeguard_id: str):
    """Per-level efficacy/indirect-cost tables including the implicit level 0."""
    sg = s.safeguard(safeguard_id)
    n_levels = len(sg.levels)
    n_groups = len(s.groups)
    eff = np.zeros((n_levels + 1, n_groups))
    cost = np.zeros((n_levels + 1, n_groups))
    fee = np.zeros(n_levels + 1)
    for lv in sg.levels:
        for gi, g in enumerate(s.groups):
            eff[lv.level_index, gi] = lv.efficacy_per_group[g.id]
            cost[lv.level_index, gi] = lv.indirect_cost_per_group[g.id]
        fee[lv.level_index] = lv.direct_cost
    return eff, cost, fee


def expected_loss(s: Scenario, safeguard_id: str, level: int, group_id: str) -> float:
    """Expected loss ``R_i * A_i * (1 - E(level, i))`` for one group.

    Level 0 has zero efficacy, so it returns the unmitigated loss
    ``R_i * A_i``.
    """
    sg = s.safeguard(safeguard_id)
    g = s.group(group_id)
    if level == 0:
        eff = 0.0
    else:
        eff = sg.level(level).efficacy_per_group[group_id]
    return g.attack_probability * g.asset_value * (1.0 - eff)


def build_utility_matrix(s: Scenario, safeguard_id: str, lam: int) -> UtilityMatrix:
    """Defender payoff table for the game capped at level ``lam``."""
    sg = s.safeguard(safeguard_id)
    if not 0 <= lam <= len(sg.levels):
        raise ValueError(f"level cap {lam} outside 0..{len(sg.levels)} for safeguard {safeguard_id!r}")
    eff, cost, _ = _level_arrays(s, safeguard_id)
    w_l = s.weights.loss_weight
    w_c = s.weights.indirect_cost_weight
    vals = np.empty((lam + 1, len(s.groups)))
    for j in range(lam + 1):
        for gi, g in enumerate(s.groups):
            loss = g.attack_probability * g.asset_value * (1.0 - eff[j, gi])
            vals[j, gi] = -w_l * loss - w_c * cost[j, gi]
    return UtilityMatrix(safeguard_id=safeguard_id, max_level=lam,
                         group_ids=s.group_ids, values=vals)


def expected_utility(matrix, defender, attacker) -> float:
    """Bilinear expected defender payoff of a mixed-strategy profile."""
    vals, _, _ = _coerce_matrix(matrix)
    d = _coerce_weights(defender, vals.shape[0], "defender strategy")
    a = _coerce_weights(attacker, vals.shape[1], "attacker strategy")
    return float(d @ vals @ a)


def equilibrium_gaps(matrix, defender, attacker):
    """Best pure-deviation gains against a profile: ``(attacker_gap, defender_gap)``.

    ``attacker_gap  = v - min_i U(defender, i)``  (attacker pulls value down),
    ``defender_gap = max_j U(j, attacker) - v``  (defender pushes value up);
    both are <= tolerance at a saddle point.
    """
    vals, _, _ = _coerce_matrix(matrix)
    d = _coerce_weights(defender, vals.shape[0], "defender strategy")
    a = _coerce_weights(attacker, vals.shape[1], "attacker strategy")
    row_payoffs = vals @ a          # U(j, attacker) for every level j
    col_payoffs = d @ vals          # U(defender, i) for every group i
    v = float(d @ row_payoffs)
    return float(v - col_payoffs.min()), float(row_payoffs.max() - v)


def _cleanup(weights):
    w = np.where(weights < _CLIP, 0.0, weights)
    return w / w.sum()


def _solution_from_parts(sid, lam, vals, d, a):
    nsp = MixedStrategy("defender", d)
    att = MixedStrategy("attacker", a)
    value = float(d @ vals @ a)
    return GameSolution(safeguard_id=sid, max_level=lam, nsp=nsp,
                        attacker_strategy=att, value=value)


def solve_maximin(matrix) -> GameSolution:
    """Equilibrium of a zero-sum game by linear programming.

    The row player's maximin LP is solved through its dual: after shifting
    all entries positive, the simplex kernel maximizes the attacker's scaled
    strategy mass, and the defender's strategy is read off the dual values.
    Bland's pivot rule makes the returned vertex deterministic.  Single-row
    games short-circuit to the column minimum (first column on ties).
    """
    vals, sid, lam = _coerce_matrix(matrix)
    m, n = vals.shape

    if m == 1:
        col = int(np.argmin(vals[0]))
        return _solution_from_parts(
            sid, lam, vals,
            np.ones(1), MixedStrategy.point_mass("attacker", col, n).probabilities)

    shift = 1.0 - float(vals.min())
    status, z, y, x = _kernels.simplex_game(vals + shift, 1e-12, _SIMPLEX_MAX_ITER)
    if status != 0 or z <= 0.0:
        raise ArithmeticError(f"simplex failed on a finite matrix (status={status})")

    d = _cleanup(np.maximum(x, 0.0))
    a = _cleanup(np.maximum(y, 0.0))
    return _solution_from_parts(sid, lam, vals, d, a)


def support_enumeration(matrix, tolerance=EQ_TOLERANCE, max_actions=12) -> GameSolution:
    """Equilibrium by enumerating square support pairs.

    For each equal-size pair of row/column subsets, solves the two
    indifference systems (every supported pure strategy earns the candidate
    value, weights sum to one) and returns the first solution passing both
    no-profitable-deviation checks.  Independent of the LP path; intended
    as a verification oracle for small matrices.
    """
    vals, sid, lam = _coerce_matrix(matrix)
    m, n = vals.shape
    if m + n > max_actions:
        raise SupportSizeError(
            f"{m}x{n} matrix exceeds the {max_actions}-action enumeration limit")

    for k in range(1, min(m, n) + 1):
        system = np.zeros((k + 1, k + 1))
        rhs = np.zeros(k + 1)
        rhs[k] = 1.0
        for rows in itertools.combinations(range(m), k):
            sub_rows = vals[list(rows), :]
            for cols in itertools.combinations(range(n), k):
                sub = sub_rows[:, list(cols)]

                # Defender weights leave every supported column at value v.
                system[:k, :k] = sub.T
                system[:k, k] = -1.0
                system[k, :k] = 1.0
                system[k, k] = 0.0
                try:
                    d_sol = np.linalg.solve(system, rhs)
                except np.linalg.LinAlgError:
                    continue

                # Attacker weights leave every supported row at value v.
                system[:k, :k] = sub
                try:
                    a_sol = np.linalg.solve(system, rhs)
                except np.linalg.LinAlgError:
                    continue

                if d_sol[:k].min() < -tolerance or a_sol[:k].min() < -tolerance:
                    continue

                d = np.zeros(m)
                d[list(rows)] = np.maximum(d_sol[:k], 0.0)
                a = np.zeros(n)
                a[list(cols)] = np.maximum(a_sol[:k], 0.0)
                d = _cleanup(d)
                a = _cleanup(a)

                attacker_gap, defender_gap = equilibrium_gaps(vals, d, a)
                if attacker_gap <= tolerance and defender_gap <= tolerance:
                    return _solution_from_parts(sid, lam, vals, d, a)

    raise ArithmeticError("no equilibrium found; this cannot happen for finite matrices")


def build_game_family(s: Scenario, safeguard_id: str) -> GameFamily:
    """Solve the games for every level cap 0..|levels| of one safeguard."""
    sg = s.safeguard(safeguard_id)
    solutions = []
    for lam in range(len(sg.levels) + 1):
        solutions.append(solve_maximin(build_utility_matrix(s, safeguard_id, lam)))
    return GameFamily(safeguard_id=safeguard_id, solutions=tuple(solutions))


def plan_efficacy(s: Scenario, safeguard_id: str, plan, group_id: str) -> float:
    """Efficacy of a (possibly mixed) plan on one group: sum_j plan(j) * E(j, i).

    Mixing is linear, consistent with the linearity of expected loss; the
    implicit level 0 contributes nothing.
    """
    eff, _, _ = _level_arrays(s, safeguard_id)
    if group_id not in s.group_ids:
        raise KeyError(f"unknown group {group_id!r}")
    gi = s.group_ids.index(group_id)
    probs = _plan_weights(s, safeguard_id, plan)
    total = 0.0
    for j in range(1, probs.size):
        total += probs[j] * eff[j, gi]
    return total


def _plan_weights(s: Scenario, safeguard_id: str, plan):
    sg = s.safeguard(safeguard_id)
    if isinstance(plan, MixedStrategy):
        probs = plan.probabilities
    else:
        probs = np.asarray(plan, dtype=np.float64)
    if probs.ndim != 1 or not 1 <= probs.size <= len(sg.levels) + 1:
        raise ValueError(
            f"plan over {probs.size} levels does not fit safeguard {safeguard_id!r} "
            f"with levels 0..{len(sg.levels)}")
    return probs


def plan_expected_loss(s: Scenario, safeguard_id: str, plan, group_id: str) -> float:
    """Expected loss on a group under a plan: ``R_i * A_i * (1 - plan efficacy)``."""
    g = s.group(group_id)
    return g.attack_probability * g.asset_value * (1.0 - plan_efficacy(s, safeguard_id, plan, group_id))


def plan_financial_cost(s: Scenario, safeguard_id: str, plan) -> float:
    """Direct cost of a plan: sum_j plan(j) * F(j); level 0 is free."""
    _, _, fee = _level_arrays(s, safeguard_id)
    probs = _plan_weights(s, safeguard_id, plan)
    total = 0.0
    for j in range(1, probs.size):
        total += probs[j] * fee[j]
    return total


def solution_record(s: Scenario, sol: GameSolution) -> dict:
    """Flat exportable record of one game solution (JSON-friendly)."""
    return {
        "safeguard_id": sol.safeguard_id,
        "lambda": sol.max_level,
        "nsp": [float(p) for p in sol.nsp.probabilities],
        "attacker": [float(p) for p in sol.attacker_strategy.probabilities],
        "value": float(sol.value),
        "plan_cost": plan_financial_cost(s, sol.safeguard_id, sol.nsp),
        "plan_efficacy": {
            gid: plan_efficacy(s, sol.safeguard_id, sol.nsp, gid) for gid in s.group_ids
        },
    }
