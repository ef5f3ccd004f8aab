"""Command-line surface: scenario handling, solving, investing, simulating.

Subcommands::

    ost scenario emit [--out FILE]            write the bundled scenario JSON
    ost scenario validate --scenario FILE     check a scenario file
    ost solve     [--scenario FILE] --out DIR [--format json|csv]
    ost invest    [--scenario FILE] --out DIR [--budget B] [--enum-cap N]
    ost simulate  [--scenario FILE] --out DIR [--seed N] [--runs N]
                  [--attacks N] [--games LIST]
    ost report    [--scenario FILE] --out DIR [... all of the above]

Exit codes: 0 success, 2 input/validation error, 3 internal enumeration cap.
``OST_SEED`` in the environment overrides ``--seed``.  Output files are
written atomically (write then rename).
"""

import argparse
import json
import os
import sys
import tempfile

from . import __version__
from .game_core import build_game_family, solution_record
from .knapsack import (
    DEFAULT_ENUMERATION_CAP,
    EnumerationCapError,
    KnapsackError,
    enumerate_candidates,
    frontier_csv,
    solve_exhaustive,
)
from .scenario import (
    ScenarioError,
    builtin_use_case,
    dump_scenario,
    load_scenario,
    validate_scenario,
)
from .simulate import SimConfig, compare_strategies, comparison_csv, improvement_csv

DEFAULT_GAMES = "17.4:2,17.4:3,17.6:2,17.6:3"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_LIMIT = 3


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ost-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load(args):
    if args.scenario:
        return load_scenario(args.scenario)
    return builtin_use_case()


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _fmt(x):
    return f"{x:.12g}"


def _seed(args):
    env = os.environ.get("OST_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ScenarioError(f"OST_SEED must be an integer, got {env!r}")
    return args.seed


def _parse_games(text, scenario):
    games = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        sid, sep, lam = token.rpartition(":")
        if not sep:
            raise ScenarioError(f"bad game {token!r}; expected SAFEGUARD:LAMBDA")
        try:
            lam = int(lam)
        except ValueError:
            raise ScenarioError(f"bad level cap in game {token!r}")
        sg = scenario.safeguard(sid)  # raises KeyError for unknown ids
        if not 0 <= lam <= len(sg.levels):
            raise ScenarioError(f"level cap {lam} outside 0..{len(sg.levels)} for safeguard {sid!r}")
        games.append((sid, lam))
    if not games:
        raise ScenarioError("empty game list")
    return games


def cmd_scenario_emit(args):
    text = dump_scenario(builtin_use_case())
    if args.out == "-":
        sys.stdout.write(text)
    else:
        _write_atomic(args.out, text)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_scenario_validate(args):
    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for v in validate_scenario(scenario):
        print(f"{v.severity}: {v.code} at {v.path}: {v.message}")
    print(f"{args.scenario}: valid ({len(scenario.groups)} groups, "
          f"{len(scenario.safeguards)} safeguards)")
    return EXIT_OK


def _solve_records(scenario):
    records = []
    for sg in scenario.safeguards:
        family = build_game_family(scenario, sg.id)
        for sol in family.solutions:
            records.append(solution_record(scenario, sol))
    return records


def cmd_solve(args):
    scenario = _load(args)
    records = _solve_records(scenario)
    out = _outdir(args)
    if args.format == "json":
        path = os.path.join(out, "solutions.json")
        _write_atomic(path, json.dumps({"solutions": records}, indent=2) + "\n")
    else:
        path = os.path.join(out, "solutions.csv")
        lines = ["safeguard_id,lambda,value,plan_cost,nsp,attacker,plan_efficacy"]
        for r in records:
            lines.append(",".join([
                r["safeguard_id"], str(r["lambda"]),
                f"{r['value']:.12e}", f"{r['plan_cost']:.12e}",
                ";".join(f"{p:.12e}" for p in r["nsp"]),
                ";".join(f"{p:.12e}" for p in r["attacker"]),
                ";".join(f"{v:.12e}" for v in r["plan_efficacy"].values()),
            ]))
        _write_atomic(path, "\n".join(lines) + "\n")
    print(f"wrote {path} ({len(records)} solutions)")
    return EXIT_OK


def _resolve_budget(args, scenario):
    budget = args.budget if args.budget is not None else scenario.budget
    if budget is None:
        raise ScenarioError("the scenario declares no budget; pass --budget")
    if budget < 0:
        raise ScenarioError(f"budget must be >= 0, got {budget}")
    return budget


def cmd_invest(args):
    scenario = _load(args)
    budget = _resolve_budget(args, scenario)
    families = [build_game_family(scenario, sg.id) for sg in scenario.safeguards]
    candidates = enumerate_candidates(scenario, families)
    solution = solve_exhaustive(scenario, candidates, budget, enumeration_cap=args.enum_cap)

    out = _outdir(args)
    frontier_path = os.path.join(out, "frontier.csv")
    _write_atomic(frontier_path, frontier_csv(solution))

    portfolio = solution.portfolio
    payload = {
        "budget": float(budget),
        "total_cost": portfolio.total_cost,
        "objective": portfolio.objective,
        "selection": [
            {
                "safeguard_id": c.safeguard_id,
                "lambda": c.lam,
                "cost": c.cost,
                "nsp": [float(p) for p in c.solution.nsp.probabilities] if c.solution else None,
                "residual_factor_per_group": {g: float(v) for g, v in sorted(c.residual_factor_per_group.items())},
            }
            for c in portfolio.candidates
        ],
    }
    invest_path = os.path.join(out, "investment.json")
    _write_atomic(invest_path, json.dumps(payload, indent=2) + "\n")
    print(f"wrote {invest_path} and {frontier_path}")
    print(f"chosen levels: {dict(zip(solution.safeguard_ids, portfolio.lambdas))}, "
          f"cost {_fmt(portfolio.total_cost)}, residual risk {_fmt(portfolio.objective)}")
    return EXIT_OK


def _run_comparison(args, scenario):
    games = _parse_games(args.games, scenario)
    cfg = SimConfig(seed=_seed(args), attacks_per_run=args.attacks, runs=args.runs)
    return compare_strategies(scenario, games, cfg)


def cmd_simulate(args):
    scenario = _load(args)
    report = _run_comparison(args, scenario)
    out = _outdir(args)
    cmp_path = os.path.join(out, "comparison.csv")
    imp_path = os.path.join(out, "improvements.csv")
    _write_atomic(cmp_path, comparison_csv(report))
    _write_atomic(imp_path, improvement_csv(report))
    print(f"wrote {cmp_path} and {imp_path} ({len(report.cells)} cells)")
    return EXIT_OK


def cmd_report(args):
    scenario = _load(args)
    budget = _resolve_budget(args, scenario)

    records = _solve_records(scenario)
    families = [build_game_family(scenario, sg.id) for sg in scenario.safeguards]
    candidates = enumerate_candidates(scenario, families)
    investment = solve_exhaustive(scenario, candidates, budget, enumeration_cap=args.enum_cap)
    report = _run_comparison(args, scenario)

    out = _outdir(args)
    _write_atomic(os.path.join(out, "solutions.json"),
                  json.dumps({"solutions": records}, indent=2) + "\n")
    _write_atomic(os.path.join(out, "frontier.csv"), frontier_csv(investment))
    _write_atomic(os.path.join(out, "comparison.csv"), comparison_csv(report))
    _write_atomic(os.path.join(out, "improvements.csv"), improvement_csv(report))

    lines = ["# Safeguard investment report", ""]
    lines.append(f"Groups: {', '.join(g.name for g in scenario.groups)}.  "
                 f"Budget: {_fmt(budget)}.")
    lines.append("")
    lines.append("## Game solutions")
    lines.append("")
    lines.append("| safeguard | level cap | value | plan cost | plan |")
    lines.append("|---|---|---|---|---|")
    for r in records:
        plan = ", ".join(_fmt(p) for p in r["nsp"])
        lines.append(f"| {r['safeguard_id']} | {r['lambda']} | {_fmt(r['value'])} "
                     f"| {_fmt(r['plan_cost'])} | ({plan}) |")
    lines.append("")
    lines.append("## Chosen investment")
    lines.append("")
    chosen = dict(zip(investment.safeguard_ids, investment.portfolio.lambdas))
    lines.append(f"Levels {chosen}, total cost {_fmt(investment.portfolio.total_cost)}, "
                 f"aggregated residual risk {_fmt(investment.portfolio.objective)}.")
    lines.append("")
    lines.append("## Strategy comparison")
    lines.append("")
    lines.append(f"Seed {report.config.seed}, {report.config.runs} runs x "
                 f"{report.config.attacks_per_run} attacks.")
    lines.append("")
    for row in report.improvements:
        if row.game == "average":
            lines.append(f"- Average NSS improvement across games vs {row.attacker}: "
                         f"{_fmt(row.nss_over_wss_pct)}% over WSS, "
                         f"{_fmt(row.nss_over_css_pct)}% over CSS.")
    summary_path = os.path.join(out, "summary.md")
    _write_atomic(summary_path, "\n".join(lines) + "\n")
    print(f"wrote {summary_path}")
    return EXIT_OK


def _add_scenario_opt(p):
    p.add_argument("--scenario", metavar="FILE", default=None,
                   help="scenario JSON file (default: bundled use case)")


def _add_out_opt(p):
    p.add_argument("--out", metavar="DIR", default="ost_out",
                   help="output directory (default: ost_out)")


def _add_sim_opts(p):
    p.add_argument("--seed", type=int, default=0, help="root RNG seed (default 0)")
    p.add_argument("--runs", type=int, default=25, help="runs per cell (default 25)")
    p.add_argument("--attacks", type=int, default=1000,
                   help="attack samples per run (default 1000)")
    p.add_argument("--games", default=DEFAULT_GAMES,
                   help=f"comma-separated SAFEGUARD:LAMBDA list (default {DEFAULT_GAMES})")


def _add_invest_opts(p):
    p.add_argument("--budget", type=float, default=None,
                   help="investment budget (default: scenario's budget)")
    p.add_argument("--enum-cap", type=int, default=DEFAULT_ENUMERATION_CAP,
                   help="max combinations for exhaustive search")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ost", description="Safeguard level selection, investment, and validation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    scen = sub.add_parser("scenario", help="emit or validate scenario files")
    scen_sub = scen.add_subparsers(dest="scenario_command", required=True)
    emit = scen_sub.add_parser("emit", help="write the bundled scenario JSON")
    emit.add_argument("--out", metavar="FILE", default="-",
                      help="target file (default: stdout)")
    emit.set_defaults(func=cmd_scenario_emit)
    val = scen_sub.add_parser("validate", help="validate a scenario file")
    val.add_argument("--scenario", metavar="FILE", required=True)
    val.set_defaults(func=cmd_scenario_validate)

    solve = sub.add_parser("solve", help="solve every game of every safeguard")
    _add_scenario_opt(solve)
    _add_out_opt(solve)
    solve.add_argument("--format", choices=("json", "csv"), default="json")
    solve.set_defaults(func=cmd_solve)

    invest = sub.add_parser("invest", help="pick the budget-optimal plan portfolio")
    _add_scenario_opt(invest)
    _add_out_opt(invest)
    _add_invest_opts(invest)
    invest.set_defaults(func=cmd_invest)

    sim = sub.add_parser("simulate", help="Monte Carlo policy comparison")
    _add_scenario_opt(sim)
    _add_out_opt(sim)
    _add_sim_opts(sim)
    sim.set_defaults(func=cmd_simulate)

    rep = sub.add_parser("report", help="solve + invest + simulate, with summary")
    _add_scenario_opt(rep)
    _add_out_opt(rep)
    _add_sim_opts(rep)
    _add_invest_opts(rep)
    rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EnumerationCapError as exc:
        print(f"limit exceeded: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (ScenarioError, KnapsackError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
