"""Monte Carlo validation of defender policies against attacker profiles.

Replays i.i.d. attacks sampled from a defender policy and an attacker policy
over a game's utility matrix, yielding the average defender utility per run.
Three defender policies are compared:

* NSS -- the equilibrium plan of the game,
* WSS -- levels weighted by their utility-row sums ``sum_i U(j, i)``
  normalized by the grand total (note: with all-negative utilities this
  literally assigns MORE probability to worse rows; it is a common-sense
  baseline, reproduced as written),
* CSS -- always the highest application level,

against three attacker profiles: NAS (the game's equilibrium attacker),
WAS (groups proportional to asset value), and OAS (uniform).

Sampling uses the counter-based Philox generator with one jump-separated
substream per run, so results do not depend on run execution order and are
reproducible bit-for-bit from the seed.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .game_core import MixedStrategy, UtilityMatrix, build_utility_matrix, solve_maximin
from .scenario import Scenario

__all__ = [
    "DefenderPolicy",
    "AttackerPolicy",
    "SimConfig",
    "CellResult",
    "ImprovementRow",
    "ComparisonReport",
    "UnsupportedMatrixError",
    "DEFENDER_KINDS",
    "ATTACKER_KINDS",
    "nash_defender",
    "weighted_defender",
    "cautious_defender",
    "nash_attacker",
    "weighted_attacker",
    "opportunistic_attacker",
    "run_simulation",
    "compare_strategies",
    "comparison_csv",
    "improvement_csv",
]

DEFENDER_KINDS = ("NSS", "WSS", "CSS")
ATTACKER_KINDS = ("NAS", "WAS", "OAS")


class UnsupportedMatrixError(ValueError):
    """Matrix shape or sign structure a policy formula cannot handle."""


@dataclass(frozen=True)
class DefenderPolicy:
    """A named distribution over the levels of one game."""

    kind: str
    distribution: MixedStrategy


@dataclass(frozen=True)
class AttackerPolicy:
    """A named distribution over user groups."""

    kind: str
    distribution: MixedStrategy


@dataclass(frozen=True)
class SimConfig:
    """Sampling dimensions and the root seed.

    ``attacks_per_run`` draws form one run; ``runs`` independent runs are
    averaged.  All randomness derives from ``seed``.
    """

    seed: int
    attacks_per_run: int = 1000
    runs: int = 25

    def __post_init__(self):
        if self.attacks_per_run < 1:
            raise ValueError(f"attacks_per_run must be >= 1, got {self.attacks_per_run}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class CellResult:
    """Average defender utility of one (game, defender, attacker) cell."""

    safeguard_id: str
    max_level: int
    defender: str
    attacker: str
    run_means: tuple
    mean: float
    std_error: float

    @property
    def game(self) -> str:
        return f"{self.safeguard_id}:{self.max_level}"


@dataclass(frozen=True)
class ImprovementRow:
    """Relative advantage of NSS over the baselines under one attacker."""

    game: str
    attacker: str
    nss_over_wss_pct: float
    nss_over_css_pct: float


@dataclass(frozen=True)
class ComparisonReport:
    """Full policy cross for a list of games, plus improvement summary."""

    games: tuple
    config: SimConfig
    cells: tuple
    improvements: tuple

    def cell(self, game, defender, attacker) -> CellResult:
        sid, lam = game
        for c in self.cells:
            if (c.safeguard_id, c.max_level, c.defender, c.attacker) == (sid, lam, defender, attacker):
                return c
        raise KeyError((game, defender, attacker))


def nash_defender(solution) -> DefenderPolicy:
    return DefenderPolicy("NSS", solution.nsp)


def weighted_defender(matrix: UtilityMatrix) -> DefenderPolicy:
    """Levels weighted by row sums over the grand total of the matrix.

    Requires all entries to share one sign, otherwise the ratios are not
    probabilities.
    """
    vals = matrix.values if isinstance(matrix, UtilityMatrix) else np.asarray(matrix, dtype=np.float64)
    row_sums = vals.sum(axis=1)
    total = row_sums.sum()
    if (vals.max() > 0.0 and vals.min() < 0.0) or total == 0.0:
        raise UnsupportedMatrixError(
            "weighted level selection needs same-sign utilities with a nonzero total")
    return DefenderPolicy("WSS", MixedStrategy("defender", row_sums / total))


def cautious_defender(matrix: UtilityMatrix) -> DefenderPolicy:
    """Always the highest available application level."""
    vals = matrix.values if isinstance(matrix, UtilityMatrix) else np.asarray(matrix, dtype=np.float64)
    rows = vals.shape[0]
    return DefenderPolicy("CSS", MixedStrategy.point_mass("defender", rows - 1, rows))


def nash_attacker(solution) -> AttackerPolicy:
    return AttackerPolicy("NAS", solution.attacker_strategy)


def weighted_attacker(s: Scenario) -> AttackerPolicy:
    """Groups targeted proportionally to the asset value they reach."""
    assets = np.array([g.asset_value for g in s.groups], dtype=np.float64)
    total = assets.sum()
    if total <= 0.0:
        raise UnsupportedMatrixError("weighted attacker needs a positive total asset value")
    return AttackerPolicy("WAS", MixedStrategy("attacker", assets / total))


def opportunistic_attacker(s: Scenario) -> AttackerPolicy:
    """Uniform over user groups."""
    n = len(s.groups)
    return AttackerPolicy("OAS", MixedStrategy("attacker", np.full(n, 1.0 / n)))


def _cumulative(probs: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs)
    cum[-1] = 1.0  # guard inversion against cumulative-rounding shortfall
    return cum


def run_simulation(matrix, defender: DefenderPolicy, attacker: AttackerPolicy,
                   cfg: SimConfig, stream_key=()) -> np.ndarray:
    """Per-run mean defender utilities from sampled attacks.

    Each run draws ``cfg.attacks_per_run`` i.i.d. (level, group) pairs from
    the two policies and averages the matrix entries.  Run ``r`` uses the
    Philox substream ``jumped(r)`` of the stream derived from
    ``(cfg.seed, *stream_key)``, so runs are independent and the result does
    not depend on evaluation order.
    """
    vals = matrix.values if isinstance(matrix, UtilityMatrix) else np.asarray(matrix, dtype=np.float64)
    d = defender.distribution.probabilities
    a = attacker.distribution.probabilities
    if d.size != vals.shape[0]:
        raise ValueError(f"defender policy has {d.size} weights for {vals.shape[0]} levels")
    if a.size != vals.shape[1]:
        raise ValueError(f"attacker policy has {a.size} weights for {vals.shape[1]} groups")

    cum_d = _cumulative(d)
    cum_a = _cumulative(a)
    u_d = np.empty((cfg.runs, cfg.attacks_per_run))
    u_a = np.empty((cfg.runs, cfg.attacks_per_run))
    root = np.random.SeedSequence((int(cfg.seed),) + tuple(int(k) for k in stream_key))
    base = np.random.Philox(root)
    for r in range(cfg.runs):
        gen = np.random.Generator(base.jumped(r))
        u_d[r] = gen.random(cfg.attacks_per_run)
        u_a[r] = gen.random(cfg.attacks_per_run)
    return _kernels.sample_run_means(vals, cum_d, cum_a, u_d, u_a)


def _improvement_pct(nss: float, other: float) -> float:
    if other == 0.0:
        return math.nan
    return (nss - other) / abs(other) * 100.0


def compare_strategies(s: Scenario, games, cfg: SimConfig) -> ComparisonReport:
    """Cross every defender policy with every attacker profile per game.

    ``games`` lists (safeguard_id, level_cap) pairs.  The Nash attacker of a
    game is that game's own equilibrium attacker, faced by all three defender
    policies alike.  Improvement rows report NSS's advantage per game and,
    under the label ``average``, the mean across games per attacker.
    """
    cells = []
    for gi, (sid, lam) in enumerate(games):
        matrix = build_utility_matrix(s, sid, lam)
        sol = solve_maximin(matrix)
        defenders = (nash_defender(sol), weighted_defender(matrix), cautious_defender(matrix))
        attackers = (nash_attacker(sol), weighted_attacker(s), opportunistic_attacker(s))
        for di, dpol in enumerate(defenders):
            for ai, apol in enumerate(attackers):
                means = run_simulation(matrix, dpol, apol, cfg, stream_key=(gi, di, ai))
                mean = float(np.mean(means))
                if cfg.runs > 1:
                    std_error = float(np.std(means, ddof=1) / math.sqrt(cfg.runs))
                else:
                    std_error = 0.0
                cells.append(CellResult(
                    safeguard_id=sid, max_level=lam, defender=dpol.kind,
                    attacker=apol.kind, run_means=tuple(float(x) for x in means),
                    mean=mean, std_error=std_error))

    report = ComparisonReport(games=tuple(games), config=cfg,
                              cells=tuple(cells), improvements=())
    improvements = []
    for attacker in ATTACKER_KINDS:
        per_game = []
        for sid, lam in games:
            nss = report.cell((sid, lam), "NSS", attacker).mean
            wss = report.cell((sid, lam), "WSS", attacker).mean
            css = report.cell((sid, lam), "CSS", attacker).mean
            row = ImprovementRow(
                game=f"{sid}:{lam}", attacker=attacker,
                nss_over_wss_pct=_improvement_pct(nss, wss),
                nss_over_css_pct=_improvement_pct(nss, css))
            per_game.append(row)
            improvements.append(row)
        improvements.append(ImprovementRow(
            game="average", attacker=attacker,
            nss_over_wss_pct=float(np.mean([r.nss_over_wss_pct for r in per_game])),
            nss_over_css_pct=float(np.mean([r.nss_over_css_pct for r in per_game]))))
    return ComparisonReport(games=tuple(games), config=cfg,
                            cells=tuple(cells), improvements=tuple(improvements))


def comparison_csv(report: ComparisonReport) -> str:
    """Per-cell mean utilities as CSV text."""
    lines = ["game,defender,attacker,mean_utility,std_error,runs,attacks_per_run,seed"]
    for c in report.cells:
        lines.append(",".join([
            c.game, c.defender, c.attacker,
            f"{c.mean:.12e}", f"{c.std_error:.12e}",
            str(report.config.runs), str(report.config.attacks_per_run),
            str(report.config.seed),
        ]))
    return "\n".join(lines) + "\n"


def improvement_csv(report: ComparisonReport) -> str:
    """NSS improvement percentages as CSV text."""
    lines = ["game,nss_over_wss_pct,nss_over_css_pct,attacker"]
    for row in report.improvements:
        lines.append(",".join([
            row.game, f"{row.nss_over_wss_pct:.12e}", f"{row.nss_over_css_pct:.12e}",
            row.attacker,
        ]))
    return "\n".join(lines) + "\n"
