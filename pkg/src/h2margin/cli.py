"""Command-line front end.

Subcommands
-----------
``run``       solve one (alpha, margin) scenario and write its tables
``sweep``     solve an (alpha x margin) grid and write the trend tables
``verify``    re-certify a stored solution file against the oracles
``case-info`` summarize a case file (and the assembled model's row census)

Exit codes: 0 success, 1 solve or certification failure, 2 bad inputs.
Verbosity is controlled only by the ``H2MARGIN_LOG`` environment variable
(quiet|warn|info|debug); output files never embed timestamps, so identical
inputs and seed reproduce identical bytes.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .caseio import load_case, load_profiles
from .ipm import SolverOptions
from .model import ScenarioConfig, assemble
from .records import CaseError, validate_profiles
from .runner import (
    DEFAULT_P2H_MAX_MW,
    RunnerError,
    config_fingerprint,
    run_scenario,
    run_sweep,
    solution_payload,
    verify_solution,
    write_scenario_tables,
    write_solution,
    write_sweep_tables,
)

log = logging.getLogger("h2margin.cli")

_LOG_LEVELS = {
    "quiet": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> int:
    name = os.environ.get("H2MARGIN_LOG", "warn").strip().lower()
    level = _LOG_LEVELS.get(name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return level


def _grid(text: str, flag: str) -> list[float]:
    """Parse '0.1,0.2,0.3' or 'start:stop:step' into a float list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            count = int(round((stop - start) / step))
            vals = [start + k * step for k in range(count + 1)]
            return [round(v, 10) for v in vals if v <= stop + 1e-12]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise SystemExit(
            f"error: {flag} expects 'a,b,c' or 'start:stop:step', got {text!r}"
        ) from None


def _add_common(p: argparse.ArgumentParser, profiles_required: bool = True):
    p.add_argument("--case", required=True, help="case file path")
    p.add_argument(
        "--profiles", required=profiles_required, help="hourly profile CSV path"
    )


def _add_solver(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=("allocation", "dispatch"),
                   default="allocation", help="siting study or fixed-fleet run")
    p.add_argument("--out", default="h2margin-out", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="multi-start RNG seed")
    p.add_argument("--starts", type=int, default=1,
                   help="number of solver starts per cell")
    p.add_argument("--p2h-max-mw", type=float, default=DEFAULT_P2H_MAX_MW,
                   help="per-candidate capacity ceiling in allocation mode")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="h2margin",
        description="Margin-certified green-hydrogen harvesting on AC grids",
    )
    ap.add_argument("--version", action="version", version=f"h2margin {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a single (alpha, lm) scenario")
    _add_common(run)
    run.add_argument("--alpha", type=float, default=0.5,
                     help="hourly wind-penetration cap (fraction of demand)")
    run.add_argument("--lm", type=float, default=0.1,
                     help="required loading margin")
    _add_solver(run)

    sweep = sub.add_parser("sweep", help="solve an (alpha x lm) grid")
    _add_common(sweep)
    sweep.add_argument("--alpha", default="0.3,0.5,0.7",
                       help="grid: 'a,b,c' or 'start:stop:step'")
    sweep.add_argument("--lm", default="0.10:0.30:0.05",
                       help="grid: 'a,b,c' or 'start:stop:step'")
    _add_solver(sweep)

    ver = sub.add_parser("verify", help="re-certify a stored solution file")
    _add_common(ver)
    ver.add_argument("--solution", required=True, help="solution.json path")

    info = sub.add_parser("case-info", help="summarize a case file")
    _add_common(info, profiles_required=False)
    return ap


def _solver_options(level: int) -> SolverOptions:
    return SolverOptions(verbose=level <= logging.DEBUG)


def _cmd_run(args, level) -> int:
    case = load_case(args.case)
    profiles = load_profiles(args.profiles)
    res = run_scenario(
        case, profiles, args.alpha, args.lm, args.mode,
        seed=args.seed, starts=args.starts, p2h_max_mw=args.p2h_max_mw,
        options=_solver_options(level),
    )
    fp = config_fingerprint(
        case, profiles, command="run", alpha=args.alpha, lm=args.lm,
        mode=args.mode, seed=args.seed, starts=args.starts,
        p2h_max_mw=args.p2h_max_mw,
    )
    paths = write_scenario_tables(res, args.out, fp)
    payload = solution_payload(
        res, case, profiles,
        seed=args.seed, starts=args.starts, p2h_max_mw=args.p2h_max_mw,
    )
    paths.append(write_solution(os.path.join(args.out, "solution.json"), payload))
    print(f"status: {res.status}")
    print(f"harvest: {res.harvest_kg:.1f} kg over {len(profiles)} h")
    if res.verification is not None:
        v = res.verification
        lm_txt = "n/a" if np.isnan(v.min_oracle_lm) else f"{v.min_oracle_lm:.4f}"
        print(
            f"certified: residual {v.worst_residual:.2e}, "
            f"min oracle margin {lm_txt} (required {args.lm:g})"
        )
    for p in paths:
        print(f"wrote {p}")
    return 0 if res.certified else 1


def _cmd_sweep(args, level) -> int:
    case = load_case(args.case)
    profiles = load_profiles(args.profiles)
    alphas = _grid(args.alpha, "--alpha")
    lms = _grid(args.lm, "--lm")
    results = run_sweep(
        case, profiles, alphas, lms, args.mode,
        seed=args.seed, starts=args.starts, p2h_max_mw=args.p2h_max_mw,
        options=_solver_options(level),
    )
    fp = config_fingerprint(
        case, profiles, command="sweep", alphas=alphas, lms=lms,
        mode=args.mode, seed=args.seed, starts=args.starts,
        p2h_max_mw=args.p2h_max_mw,
    )
    paths = write_sweep_tables(results, args.out, fp)
    ok = True
    for r in results:
        mark = "ok" if r.certified else "FAILED"
        ok &= r.certified
        print(f"alpha={r.alpha:g} lm={r.lm:g}: {r.status} "
              f"TH={r.harvest_kg:.1f} kg [{mark}]")
    for p in paths:
        print(f"wrote {p}")
    return 0 if ok else 1


def _cmd_verify(args) -> int:
    case = load_case(args.case)
    profiles = load_profiles(args.profiles)
    rep = verify_solution(args.solution, case, profiles)
    for h in rep.hours:
        lm_txt = "skipped" if np.isnan(h.oracle_lm) else f"{h.oracle_lm:.4f}"
        print(
            f"hour {h.hour}: residual {max(h.residual_cop, h.residual_slp):.2e} "
            f"oracle-margin {lm_txt} "
            f"{'pass' if h.passed else 'FAIL'}"
        )
    print(
        f"verification {'PASSED' if rep.passed else 'FAILED'}: "
        f"worst residual {rep.worst_residual:.2e}, declared margin "
        f"{rep.declared_margin:g}"
    )
    return 0 if rep.passed else 1


def _cmd_case_info(args) -> int:
    case = load_case(args.case)
    base = case.base_mva
    pd, qd = case.demand_vectors()
    print(f"case: {case.name} (base {base:g} MVA)")
    print(f"buses: {case.n_bus}, branches: {len(case.branches)}, "
          f"generators: {len(case.generators)}, wind farms: {len(case.wind_farms)}, "
          f"hydrogen plants: {len(case.electrolyzers)}")
    print(f"nominal demand: {pd.sum() * base:.1f} MW / {qd.sum() * base:.1f} MVAr")
    pmax = sum(g.p_max for g in case.generators) * base
    print(f"generation capacity: {pmax:.1f} MW "
          f"(slack bus {case.generators[case.slack_index].bus})")
    if case.wind_farms:
        wind = ", ".join(
            f"{w.bus}:{w.p_max * base:g}MW" for w in case.wind_farms
        )
        print(f"wind fleet: {wind}")
    if case.electrolyzers:
        fleet = ", ".join(
            f"{u.bus}:{u.p_max * base:g}MW@{u.eta:g}kg/MWh"
            for u in case.electrolyzers
        )
        print(f"hydrogen fleet: {fleet}")
    if args.profiles:
        profiles = load_profiles(args.profiles)
        validate_profiles(profiles)
        dps = [p.demand_p for p in profiles]
        wa = [p.wind_available for p in profiles]
        print(f"profiles: {len(profiles)} h, demand {min(dps):g}-{max(dps):g} MW, "
              f"wind availability {min(wa):g}-{max(wa):g} MW per farm")
        if case.electrolyzers:
            inst = assemble(case, profiles[:1], ScenarioConfig(margin=0.1))
            print("model row census (single hour):")
            for row in inst.catalog():
                print(f"  {row['side']:>7}  {row['family']:<28} "
                      f"{row['kind']:<14} rows={row['rows']}")
    return 0


def main(argv=None) -> int:
    level = _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, level)
        if args.command == "sweep":
            return _cmd_sweep(args, level)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_case_info(args)
    except (CaseError, RunnerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
