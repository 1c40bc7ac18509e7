"""Experiment drivers: single harvest scenarios, (alpha, margin) sweeps, and
closed-loop verification of emitted solutions.

Every solution reported as locally optimal is re-checked against the
independent power-flow and continuation oracles (nodal balance residuals at
the claimed operating points, and the certified loading margin from a PV-curve
trace) -- the optimizer is never trusted to grade its own work.

Two siting modes exist:

* ``allocation`` -- every bus without a conventional generator becomes a
  hydrogen-plant candidate with a common capacity ceiling; plant sizes are
  read off the solution as the per-bus peak hourly intake.
* ``dispatch`` -- the case file's own hydrogen fleet (locations and ratings)
  is kept fixed and only operated.

All emitted files are byte-deterministic for identical inputs and seed: no
timestamps, stable float formatting, fixed row order, and a configuration
fingerprint in each header.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .admittance import build_admittance
from .caseio import dump_case
from .continuation import cpf_loading_margin
from .ipm import SolveReport, SolverOptions, multi_start
from .model import ModelInstance, ScenarioConfig, SolutionBundle, assemble
from .powerflow import Dispatch, OperatingPoint, mismatch, newton_solve
from .records import ElectrolyzerRecord, NetworkCase, nodal_demand

log = logging.getLogger("h2margin.runner")

DEFAULT_P2H_MAX_MW = 1200.0  # per-candidate capacity ceiling in allocation mode
SIZE_EPSILON_MW = 1.0  # buses below this peak intake are dropped from reports
RESIDUAL_TOL = 1e-8  # nodal balance tolerance for certification (pu)
MARGIN_TOL = 1e-3  # certified loading margin may undershoot by this much

_GOOD_STATUSES = ("optimal", "locally-optimal")


class RunnerError(RuntimeError):
    """Bad experiment setup or an incompatible solution file."""


# ---------------------------------------------------------------------------
# scenario construction
# ---------------------------------------------------------------------------

def candidate_buses(case: NetworkCase) -> list[int]:
    """Hydrogen-plant candidates: every bus without a conventional unit."""
    gen_buses = set(case.generator_buses)
    return [b.bus for b in case.buses if b.bus not in gen_buses]


def scenario_case(
    case: NetworkCase,
    mode: str,
    p2h_max_mw: float = DEFAULT_P2H_MAX_MW,
    eta: float | None = None,
) -> NetworkCase:
    """Return the case actually optimized under ``mode``.

    ``allocation`` replaces the hydrogen fleet with one zero-floor candidate
    per non-generator bus, capacity ``p2h_max_mw`` each; ``dispatch`` keeps
    the case's own fleet.
    """
    if mode == "dispatch":
        if not case.electrolyzers:
            raise RunnerError(
                "no P2H units: dispatch mode operates the case's own hydrogen "
                "fleet, but the case defines none"
            )
        return case
    if mode != "allocation":
        raise RunnerError(f"unknown mode {mode!r} (expected allocation|dispatch)")
    if eta is None:
        eta = case.electrolyzers[0].eta if case.electrolyzers else 13.90
    if p2h_max_mw <= 0:
        raise RunnerError("p2h_max_mw must be positive in allocation mode")
    units = [
        ElectrolyzerRecord(
            bus=b, p_min=0.0, p_max=p2h_max_mw / case.base_mva, eta=eta
        )
        for b in candidate_buses(case)
    ]
    if not units:
        raise RunnerError("no P2H units: every bus hosts a generator, so "
                          "allocation mode has no candidate locations")
    return case.with_electrolyzers(units)


# ---------------------------------------------------------------------------
# oracle refinement of solver output
# ---------------------------------------------------------------------------

def refine_bundle(
    case: NetworkCase,
    profiles,
    bundle: SolutionBundle,
    *,
    max_shift: float = 1e-4,
) -> float:
    """Re-solve each hour's power flow at the optimizer's dispatch and adopt
    the oracle's exact state.

    The optimizer decides the dispatch (generation pattern, voltage
    setpoints, wind and hydrogen intake); the voltages, reactive outputs and
    slack power that realize it are physics, so the oracle's Newton solution
    is the authoritative version of them.  A refined point is adopted only
    when it confirms the claimed one (voltage shift below ``max_shift``) --
    a larger shift means a different power-flow branch was found, and the
    claimed point is kept for the verifier to judge.  Returns the largest
    voltage shift adopted.
    """
    Y = build_admittance(case)
    gbus = case.bus_indices(case.generator_buses)
    kp = np.array([b.k_p for b in case.buses])
    kq = np.array([b.k_q for b in case.buses])
    lam = bundle.margin
    worst = 0.0
    for prof, h in zip(profiles, bundle.hours):
        pd, qd = nodal_demand(case, prof)
        for pt, pdv, qdv in (
            (h.cop, pd, qd),
            (h.slp, (1.0 + kp * lam) * pd, (1.0 + kq * lam) * qd),
        ):
            d = Dispatch(
                pg=pt.pg.copy(), vg=pt.vm[gbus].copy(), pd=pdv, qd=qdv,
                pw=pt.pw.copy(), qw=pt.qw.copy(),
                ph=pt.ph.copy(), qh=pt.qh.copy(),
            )
            try:
                sol, rep = newton_solve(
                    case, d, Y, enforce_q_limits=False,
                    vm0=pt.vm.copy(), va0=pt.va.copy(),
                )
            except RuntimeError:
                continue
            if not rep.converged:
                continue
            shift = float(np.abs(sol.vm - pt.vm).max())
            if shift > max_shift:
                log.debug(
                    "hour %d %s: refinement shifted voltages by %.2e, keeping "
                    "the claimed point", prof.hour, pt.point_class, shift,
                )
                continue
            pt.vm[:] = sol.vm
            pt.va[:] = sol.va
            pt.qg[:] = sol.qg
            pt.pg[:] = sol.pg
            worst = max(worst, shift)
        dp1, dq1 = mismatch(case, h.cop, pd, qd, Y)
        dp2, dq2 = mismatch(
            case, h.slp, (1.0 + kp * lam) * pd, (1.0 + kq * lam) * qd, Y
        )
        h.mismatch_cop = float(max(np.abs(dp1).max(), np.abs(dq1).max()))
        h.mismatch_slp = float(max(np.abs(dp2).max(), np.abs(dq2).max()))
    return worst


# ---------------------------------------------------------------------------
# verification (closed loop against the oracles)
# ---------------------------------------------------------------------------

@dataclass
class HourCheck:
    hour: int
    residual_cop: float
    residual_slp: float
    oracle_lm: float  # inf when the margin is unbounded; nan when skipped
    lm_ok: bool
    wind_cap_ok: bool
    reserve_ok: bool

    @property
    def passed(self) -> bool:
        return (
            self.residual_cop < RESIDUAL_TOL
            and self.residual_slp < RESIDUAL_TOL
            and self.lm_ok
            and self.wind_cap_ok
            and self.reserve_ok
        )


@dataclass
class VerificationReport:
    declared_margin: float
    hours: list[HourCheck]
    passed: bool = field(init=False)
    worst_residual: float = field(init=False)
    min_oracle_lm: float = field(init=False)

    def __post_init__(self):
        self.passed = all(h.passed for h in self.hours)
        self.worst_residual = max(
            max(h.residual_cop, h.residual_slp) for h in self.hours
        )
        lms = [h.oracle_lm for h in self.hours if not np.isnan(h.oracle_lm)]
        self.min_oracle_lm = float(min(lms)) if lms else float("nan")


def verify_points(
    case: NetworkCase,
    profiles,
    hour_points: list[tuple[OperatingPoint, OperatingPoint]],
    declared_margin: float,
    alpha: float,
    *,
    check_margin: bool = True,
) -> VerificationReport:
    """Certify claimed hourly operating points with the independent oracles.

    For each hour: nodal balance residuals of the claimed operating point and
    stressed point, a PV-curve trace from the operating point to certify the
    loading margin, the wind-penetration cap, and the spinning reserve rule
    (any single unit's output is coverable by the others' headroom).
    """
    if len(hour_points) != len(profiles):
        raise RunnerError(
            f"solution carries {len(hour_points)} hours but the profile set "
            f"has {len(profiles)}"
        )
    Y = build_admittance(case)
    pgmax = np.array([g.p_max for g in case.generators])
    head = pgmax.sum() - pgmax  # other units' combined capacity, per unit
    checks = []
    for prof, (cop, slp) in zip(profiles, hour_points):
        pd, qd = nodal_demand(case, prof)
        kp = np.array([b.k_p for b in case.buses])
        kq = np.array([b.k_q for b in case.buses])
        dp1, dq1 = mismatch(case, cop, pd, qd, Y)
        lam = declared_margin
        dp2, dq2 = mismatch(case, slp, (1.0 + kp * lam) * pd, (1.0 + kq * lam) * qd, Y)
        res1 = float(max(np.abs(dp1).max(), np.abs(dq1).max()))
        res2 = float(max(np.abs(dp2).max(), np.abs(dq2).max()))
        if check_margin and declared_margin > 0.0:
            curve = cpf_loading_margin(case, cop, pd, qd, Y)
            oracle_lm = float(curve.margin)
            lm_ok = oracle_lm >= declared_margin - MARGIN_TOL
        else:
            oracle_lm, lm_ok = float("nan"), True
        wind_ok = float(cop.pw.sum()) <= alpha * float(pd.sum()) + 1e-6
        total = float(cop.pg.sum())
        reserve_ok = bool(np.all(total <= head + 1e-6))
        checks.append(
            HourCheck(
                hour=prof.hour, residual_cop=res1, residual_slp=res2,
                oracle_lm=oracle_lm, lm_ok=lm_ok,
                wind_cap_ok=wind_ok, reserve_ok=reserve_ok,
            )
        )
        log.debug(
            "hour %d: residual %.2e/%.2e oracle-lm %s", prof.hour, res1, res2,
            "skipped" if np.isnan(oracle_lm) else f"{oracle_lm:.4f}",
        )
    return VerificationReport(declared_margin=declared_margin, hours=checks)


def verify_bundle(
    case: NetworkCase,
    profiles,
    bundle: SolutionBundle,
    alpha: float,
    **kw,
) -> VerificationReport:
    pts = [(h.cop, h.slp) for h in bundle.hours]
    return verify_points(case, profiles, pts, bundle.margin, alpha, **kw)


# ---------------------------------------------------------------------------
# single scenario
# ---------------------------------------------------------------------------

@dataclass
class ScenarioResult:
    alpha: float
    lm: float
    mode: str
    status: str  # solver status, downgraded to verify-failed when certification fails
    harvest_kg: float
    case: NetworkCase  # the case actually optimized (candidates expanded)
    bundle: SolutionBundle | None
    report: SolveReport | None
    verification: VerificationReport | None

    @property
    def certified(self) -> bool:
        return self.status in _GOOD_STATUSES and (
            self.verification is None or self.verification.passed
        )


def run_scenario(
    case: NetworkCase,
    profiles,
    alpha: float,
    lm: float,
    mode: str = "allocation",
    *,
    seed: int = 0,
    starts: int = 1,
    p2h_max_mw: float = DEFAULT_P2H_MAX_MW,
    options: SolverOptions | None = None,
    warm_start: np.ndarray | None = None,
    verify: bool = True,
) -> ScenarioResult:
    """Solve one (alpha, lm) cell and certify the result with the oracles."""
    if not 0.0 <= alpha <= 1.0:
        raise RunnerError(f"alpha must lie in [0, 1], got {alpha}")
    if lm < 0.0:
        raise RunnerError(f"required loading margin must be >= 0, got {lm}")
    scase = scenario_case(case, mode, p2h_max_mw)
    config = ScenarioConfig(margin=lm, alpha=alpha, mode=mode)
    inst = assemble(scase, profiles, config)
    extra = None
    if warm_start is not None:
        w = np.asarray(warm_start, dtype=float).copy()
        if w.size != inst.layout.n_var:
            raise RunnerError("warm start has the wrong dimension for this cell")
        w[inst.layout.lam] = lm
        extra = [w]
    rep = multi_start(
        inst, n_starts=starts, seed=seed, options=options, extra_starts=extra
    )
    bundle = inst.extract_solution(rep.x)
    status = rep.status
    if status in _GOOD_STATUSES:
        shift = refine_bundle(scase, profiles, bundle)
        log.debug("oracle refinement: max voltage shift %.2e", shift)
    verification = None
    if verify and status in _GOOD_STATUSES:
        verification = verify_bundle(scase, profiles, bundle, alpha)
        if not verification.passed:
            status = "verify-failed"
            log.warning(
                "alpha=%g lm=%g: solver reported %s but certification failed "
                "(worst residual %.2e, min oracle margin %s)",
                alpha, lm, rep.status, verification.worst_residual,
                f"{verification.min_oracle_lm:.4f}",
            )
    log.info(
        "alpha=%g lm=%g mode=%s: %s, harvest %.1f kg in %d iterations",
        alpha, lm, mode, status, bundle.harvest_kg, rep.iterations,
    )
    return ScenarioResult(
        alpha=alpha, lm=lm, mode=mode, status=status,
        harvest_kg=bundle.harvest_kg, case=scase, bundle=bundle,
        report=rep, verification=verification,
    )


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def run_sweep(
    case: NetworkCase,
    profiles,
    alphas,
    lms,
    mode: str = "allocation",
    *,
    seed: int = 0,
    starts: int = 1,
    p2h_max_mw: float = DEFAULT_P2H_MAX_MW,
    options: SolverOptions | None = None,
    verify: bool = True,
) -> list[ScenarioResult]:
    """Solve the full (alpha, lm) grid.

    Cells run in alpha-major order with the margin increasing inside each
    alpha; each cell is warm-started from the previous margin's solution (the
    feasible set only shrinks as the margin grows) alongside the cell's own
    cold start, and the better of the two is reported.  A failed cell is
    recorded with its failure status and the sweep continues.
    """
    alphas = sorted({float(a) for a in alphas})
    lms = sorted({float(m) for m in lms})
    if not alphas or not lms:
        raise RunnerError("sweep grids must be non-empty")
    results = []
    for a in alphas:
        warm = None
        for m in lms:
            try:
                res = run_scenario(
                    case, profiles, a, m, mode,
                    seed=seed, starts=starts, p2h_max_mw=p2h_max_mw,
                    options=options, warm_start=warm, verify=verify,
                )
            except (RunnerError, ValueError) as exc:
                log.error("alpha=%g lm=%g failed: %s", a, m, exc)
                results.append(
                    ScenarioResult(
                        alpha=a, lm=m, mode=mode, status="error",
                        harvest_kg=float("nan"), case=case, bundle=None,
                        report=None, verification=None,
                    )
                )
                warm = None
                continue
            results.append(res)
            warm = res.report.x if res.status in _GOOD_STATUSES else None
    return results


# ---------------------------------------------------------------------------
# deterministic output files
# ---------------------------------------------------------------------------

def _num(v, nd: int = 3) -> str:
    """Stable decimal rendering for table output."""
    if isinstance(v, float) and (np.isnan(v) or np.isinf(v)):
        return "nan" if np.isnan(v) else "inf"
    r = round(float(v), nd)
    if r == int(r) and abs(r) < 1e15:
        return f"{int(r)}.0" if nd else str(int(r))
    return repr(r)


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _case_fingerprint(case: NetworkCase) -> str:
    return hashlib.sha256(dump_case(case).encode()).hexdigest()


def _profiles_fingerprint(profiles) -> str:
    rows = [
        [p.hour, repr(float(p.demand_p)), repr(float(p.demand_q)),
         repr(float(p.wind_available))]
        for p in profiles
    ]
    return hashlib.sha256(json.dumps(rows).encode()).hexdigest()


def config_fingerprint(case: NetworkCase, profiles, **settings) -> str:
    """Hash of everything that determines the output tables."""
    payload = {
        "case": _case_fingerprint(case),
        "profiles": _profiles_fingerprint(profiles),
        "version": __version__,
        "settings": {k: settings[k] for k in sorted(settings)},
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def _table_header(fingerprint: str) -> str:
    return f"# h2margin {__version__} config={fingerprint}\n"


def write_sweep_tables(
    results: list[ScenarioResult], out_dir, fingerprint: str
) -> list[Path]:
    """Emit th_vs_lm.csv, allocation.csv and hourly_p2h.csv in grid order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    head = _table_header(fingerprint)

    th = [head, "alpha,lm,TH_kg,status\n"]
    alloc = [head, "alpha,lm,bus,size_MW\n"]
    hourly = [head, "alpha,lm,hour,PH_MW_total\n"]
    for r in results:
        th.append(f"{_num(r.alpha, 4)},{_num(r.lm, 4)},{_num(r.harvest_kg)},{r.status}\n")
        if r.bundle is None:
            continue
        sizes = r.bundle.allocation_peak_mw()
        for bus in sorted(sizes):
            if sizes[bus] >= SIZE_EPSILON_MW:
                alloc.append(
                    f"{_num(r.alpha, 4)},{_num(r.lm, 4)},{bus},{_num(sizes[bus])}\n"
                )
        for hour, mw in r.bundle.hourly_p2h_mw():
            hourly.append(f"{_num(r.alpha, 4)},{_num(r.lm, 4)},{hour},{_num(mw)}\n")

    paths = []
    for name, rows in (
        ("th_vs_lm.csv", th), ("allocation.csv", alloc), ("hourly_p2h.csv", hourly)
    ):
        p = out / name
        _write_atomic(p, "".join(rows))
        paths.append(p)
    return paths


def write_scenario_tables(
    result: ScenarioResult, out_dir, fingerprint: str
) -> list[Path]:
    """Emit dispatch.csv, hydrogen.csv and allocation.csv for one scenario."""
    if result.bundle is None:
        raise RunnerError("scenario produced no solution to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    head = _table_header(fingerprint)
    case, bundle = result.case, result.bundle
    base = case.base_mva

    disp = [head, "hour,gen_bus,PG_MW,QG_MVAr,V_pu\n"]
    for h in bundle.hours:
        for g, gen in enumerate(case.generators):
            bi = case.bus_index(gen.bus)
            disp.append(
                f"{h.hour},{gen.bus},{_num(h.cop.pg[g] * base)},"
                f"{_num(h.cop.qg[g] * base)},{_num(h.cop.vm[bi], 5)}\n"
            )

    sizes = bundle.allocation_peak_mw()
    kept = [b for b in sorted(sizes) if sizes[b] >= SIZE_EPSILON_MW]
    hyd = [head, "hour,bus,PH_MW,H2_kg\n"]
    for h in bundle.hours:
        for k, unit in enumerate(case.electrolyzers):
            if unit.bus in kept:
                hyd.append(
                    f"{h.hour},{unit.bus},{_num(h.cop.ph[k] * base)},"
                    f"{_num(h.cop.ph[k] * base * unit.eta)}\n"
                )

    energy = bundle.allocation_energy_mwh()
    alloc = [head, "bus,size_MW,energy_MWh,H2_kg\n"]
    eta_by_bus = {u.bus: u.eta for u in case.electrolyzers}
    for b in kept:
        alloc.append(
            f"{b},{_num(sizes[b])},{_num(energy[b])},"
            f"{_num(energy[b] * eta_by_bus[b])}\n"
        )

    paths = []
    for name, rows in (
        ("dispatch.csv", disp), ("hydrogen.csv", hyd), ("allocation.csv", alloc)
    ):
        p = out / name
        _write_atomic(p, "".join(rows))
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# solution files and their re-verification
# ---------------------------------------------------------------------------

_SOLUTION_FORMAT = 1
_POINT_FIELDS = ("vm", "va", "pg", "qg", "pw", "ph")


def solution_payload(
    result: ScenarioResult,
    base_case: NetworkCase,
    profiles,
    *,
    seed: int,
    starts: int,
    p2h_max_mw: float,
) -> dict:
    """JSON-ready snapshot of a solved scenario (full float precision)."""
    if result.bundle is None:
        raise RunnerError("scenario produced no solution to serialize")
    hours = []
    for h in result.bundle.hours:
        entry = {"hour": h.hour}
        for cls, pt in (("cop", h.cop), ("slp", h.slp)):
            entry[cls] = {f: [float(v) for v in getattr(pt, f)] for f in _POINT_FIELDS}
        hours.append(entry)
    ver = result.verification
    return {
        "format": _SOLUTION_FORMAT,
        "tool": {"name": "h2margin", "version": __version__},
        "config": {
            "alpha": result.alpha,
            "lm": result.lm,
            "mode": result.mode,
            "seed": seed,
            "starts": starts,
            "p2h_max_mw": p2h_max_mw,
            "case_sha256": _case_fingerprint(base_case),
            "profiles_sha256": _profiles_fingerprint(profiles),
        },
        "status": result.status,
        "harvest_kg": result.harvest_kg,
        "margin": result.bundle.margin,
        "p2h_buses": list(result.bundle.p2h_buses),
        "verification": None if ver is None else {
            "passed": ver.passed,
            "worst_residual": ver.worst_residual,
            "min_oracle_lm": ver.min_oracle_lm,
        },
        "hours": hours,
    }


def write_solution(path, payload: dict) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    _write_atomic(p, json.dumps(payload, sort_keys=True, indent=1) + "\n")
    return p


def verify_solution(
    solution_path, case: NetworkCase, profiles
) -> VerificationReport:
    """Re-certify a stored solution against freshly loaded case data.

    The stored case/profile fingerprints must match the supplied data --
    verifying a solution against inputs it was not computed from is refused.
    """
    try:
        data = json.loads(Path(solution_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise RunnerError(f"cannot read solution file: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != _SOLUTION_FORMAT:
        raise RunnerError("incompatible solution file (unknown format marker)")
    cfg = data.get("config", {})
    if cfg.get("case_sha256") != _case_fingerprint(case):
        raise RunnerError(
            "stale solution: the case no longer matches the fingerprint it "
            "was solved against"
        )
    if cfg.get("profiles_sha256") != _profiles_fingerprint(profiles):
        raise RunnerError(
            "stale solution: the profile set no longer matches the "
            "fingerprint it was solved against"
        )
    scase = scenario_case(
        case, cfg.get("mode", "dispatch"),
        p2h_max_mw=float(cfg.get("p2h_max_mw", DEFAULT_P2H_MAX_MW)),
    )
    expected_buses = [u.bus for u in scase.electrolyzers]
    if list(data.get("p2h_buses", [])) != expected_buses:
        raise RunnerError(
            "stale solution: stored hydrogen-plant buses do not match the "
            "scenario rebuilt from the case"
        )
    nG, nW, nH = len(scase.generators), len(scase.wind_farms), len(expected_buses)
    n = scase.n_bus
    want = {"vm": n, "va": n, "pg": nG, "qg": nG, "pw": nW, "ph": nH}
    points = []
    for entry in data["hours"]:
        pair = []
        for cls in ("cop", "slp"):
            raw = entry[cls]
            arrs = {}
            for f in _POINT_FIELDS:
                a = np.asarray(raw[f], dtype=float)
                if a.shape != (want[f],):
                    raise RunnerError(
                        f"incompatible solution file: hour {entry['hour']} "
                        f"{cls}.{f} has length {a.size}, expected {want[f]}"
                    )
                arrs[f] = a
            pair.append(
                OperatingPoint(
                    vm=arrs["vm"], va=arrs["va"], pg=arrs["pg"], qg=arrs["qg"],
                    pw=arrs["pw"], qw=np.zeros(nW), ph=arrs["ph"],
                    qh=np.zeros(nH), hour=int(entry["hour"]), point_class=cls,
                )
            )
        points.append(tuple(pair))
    return verify_points(
        scase, profiles, points, float(data["margin"]), float(cfg["alpha"])
    )


__all__ = [
    "DEFAULT_P2H_MAX_MW",
    "HourCheck",
    "RunnerError",
    "ScenarioResult",
    "VerificationReport",
    "candidate_buses",
    "config_fingerprint",
    "refine_bundle",
    "run_scenario",
    "run_sweep",
    "scenario_case",
    "solution_payload",
    "verify_bundle",
    "verify_points",
    "verify_solution",
    "write_scenario_tables",
    "write_solution",
    "write_sweep_tables",
]
