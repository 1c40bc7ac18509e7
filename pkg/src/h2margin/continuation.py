"""Continuation power flow: certified loading margins along a stress direction.

Starting from a solved operating point, demand grows as
``PD_b(lam) = (1 + k_p_b * lam) * PD_b(0)`` (reactive alike with ``k_q``) and
non-slack generation follows ``PG_g(lam) = min((1 + k_g * lam) * PG_g(0),
Pmax_g)`` with the slack absorbing the residual.  Hydrogen-plant and wind-farm
injections are held fixed.  The trace advances with an adaptive predictor step
and a Newton corrector (reactive capability envelopes enforced by the
power-flow oracle), and stops at the first of:

* the nose of the PV curve (corrector stalls at the minimum step size),
* a bus voltage crossing its security band,
* a branch loading crossing its rating.

Limit crossings are refined by bisection.  Each monitored quantity carries an
allowance of its excess at ``lam = 0`` plus a small grace band: the margin
certifies *additional* stress, and a limit that merely brushes its bound at
numerical-noise scale (an optimizer routinely parks voltages and flows exactly
on their limits) does not count as a crossing until it exceeds the bound
meaningfully.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .admittance import AdmittanceMatrix, build_admittance
from .capability import CapabilityDomainError, q_envelope
from .powerflow import (
    ENV_MAX,
    ENV_MIN,
    PV,
    SLACK,
    Dispatch,
    OperatingPoint,
    branch_limit_values,
    newton_solve,
)
from .records import NetworkCase

UNBOUNDED = math.inf


@dataclass
class PvCurve:
    lambdas: np.ndarray
    vm_trace: np.ndarray  # one voltage-magnitude row per accepted step
    margin: float
    stop_reason: str  # nose | voltage_floor | voltage_ceiling | branch_rating | unbounded
    binding: str | None
    events: list  # (lam, bus, limit kind) reactive-ceiling switches
    point: OperatingPoint | None  # solution at the margin


def _scaled_dispatch(
    case: NetworkCase,
    lam: float,
    pd0: np.ndarray,
    qd0: np.ndarray,
    kp: np.ndarray,
    kq: np.ndarray,
    kg: np.ndarray,
    pg0: np.ndarray,
    pmax: np.ndarray,
    vg: np.ndarray,
    base: OperatingPoint,
) -> Dispatch:
    pg = np.minimum((1.0 + kg * lam) * pg0, pmax)
    return Dispatch(
        pg=pg,
        vg=vg,
        pd=(1.0 + kp * lam) * pd0,
        qd=(1.0 + kq * lam) * qd0,
        pw=base.pw.copy(),
        qw=base.qw.copy(),
        ph=base.ph.copy(),
        qh=base.qh.copy(),
    )


def cpf_loading_margin(
    case: NetworkCase,
    start: OperatingPoint,
    pd0: np.ndarray,
    qd0: np.ndarray,
    Y: AdmittanceMatrix | None = None,
    *,
    v_limits: bool = True,
    branch_limits: bool = True,
    step0: float = 0.05,
    max_step: float = 0.2,
    min_step: float = 1e-5,
    max_lambda: float = 10.0,
    crossing_tol: float = 1e-6,
    crossing_grace: float = 5e-4,
    tol: float = 1e-8,
) -> PvCurve:
    """Trace the PV curve from ``start`` and return the certified margin."""
    Y = Y or build_admittance(case)
    n = case.n_bus
    gbus = case.bus_indices(case.generator_buses)
    slack_g = case.slack_index

    kp = np.array([b.k_p for b in case.buses])
    kq = np.array([b.k_q for b in case.buses])
    kg = np.array([case.buses[case.bus_index(g.bus)].k_g for g in case.generators])
    kg[slack_g] = 0.0
    pg0 = start.pg.copy()
    pmax = np.array([g.p_max for g in case.generators])
    vg = start.vm[gbus].copy()

    if not (np.any(kp * pd0) or np.any(kq * qd0)):
        return PvCurve(
            lambdas=np.array([0.0]),
            vm_trace=start.vm.reshape(1, -1),
            margin=UNBOUNDED,
            stop_reason="unbounded",
            binding=None,
            events=[],
            point=start,
        )

    vmin = np.array([b.v_min for b in case.buses])
    vmax = np.array([b.v_max for b in case.buses])
    smax = np.array([br.s_max for br in case.branches])
    rated = (smax > 0.0) & (smax < 0.99 * 10000.0 / case.base_mva)

    q_exempt: set[int] = set()

    def solve_at(lam, vm, va, modes):
        d = _scaled_dispatch(case, lam, pd0, qd0, kp, kq, kg, pg0, pmax, vg, start)
        return newton_solve(
            case, d, Y, tol=tol, enforce_q_limits=True,
            modes=modes, vm0=vm, va0=va, q_exempt=q_exempt,
        )

    def violations(point):
        out = []
        if v_limits:
            low = vmin - point.vm
            high = point.vm - vmax
            for b in np.flatnonzero(low > 0):
                out.append(("voltage_floor", f"bus {case.buses[b].bus} voltage floor", low[b]))
            for b in np.flatnonzero(high > 0):
                out.append(("voltage_ceiling", f"bus {case.buses[b].bus} voltage ceiling", high[b]))
        if branch_limits and rated.any():
            loading = branch_limit_values(case, point, Y)
            over = (loading - smax) * rated
            for e in np.flatnonzero(over > 0):
                br = case.branches[e]
                out.append(
                    ("branch_rating", f"branch {br.from_bus}-{br.to_bus} rating", over[e])
                )
        return out

    # settle the base point: generators whose reactive output already sits
    # outside their envelope at lam = 0 are pre-violated -- they hold voltage
    # for the whole trace so the margin certifies additional stress only
    d0 = _scaled_dispatch(case, 0.0, pd0, qd0, kp, kq, kg, pg0, pmax, vg, start)
    pt0, rep0 = newton_solve(case, d0, Y, tol=tol, enforce_q_limits=False)
    if not rep0.converged:
        raise RuntimeError("continuation start point does not solve")
    for g, gen in enumerate(case.generators):
        b = int(gbus[g])
        try:
            env = q_envelope(float(pt0.pg[g]), float(pt0.vm[b]), gen)
        except CapabilityDomainError:
            q_exempt.add(b)
            continue
        if pt0.qg[g] > env.q_max + 1e-7 or pt0.qg[g] < env.q_min - 1e-7:
            q_exempt.add(b)
    point, rep = solve_at(0.0, pt0.vm.copy(), pt0.va.copy(), None)
    if not rep.converged:
        raise RuntimeError("continuation start point does not solve")
    modes = rep.modes
    events = [(0.0, bus, kind) for bus, kind in rep.limit_switches]
    allowance = {name: excess for _, name, excess in violations(point)}

    def new_violations(pt):
        return [
            v for v in violations(pt)
            if v[2] > allowance.get(v[1], 0.0) + crossing_grace
        ]

    lams = [0.0]
    trace = [point.vm.copy()]
    lam = 0.0
    sigma = step0
    good = (point.vm.copy(), point.va.copy(), modes.copy())

    while lam < max_lambda:
        lam_try = min(lam + sigma, max_lambda)
        vm_g, va_g, modes_g = good
        pt_try, rep_try = solve_at(lam_try, vm_g.copy(), va_g.copy(), modes_g.copy())
        if not rep_try.converged:
            sigma *= 0.5
            if sigma < min_step:
                # nose of the curve within the step tolerance
                return PvCurve(
                    np.array(lams), np.array(trace), lam, "nose", None, events, point
                )
            continue

        viols = new_violations(pt_try)
        if viols:
            lam_star, pt_star, kind, name = _bisect_crossing(
                solve_at, new_violations, lam, good, lam_try, crossing_tol
            )
            for bus, k in rep_try.limit_switches:
                events.append((lam_star, bus, k))
            lams.append(lam_star)
            trace.append(pt_star.vm.copy())
            return PvCurve(
                np.array(lams), np.array(trace), lam_star, kind, name, events, pt_star
            )

        for bus, k in rep_try.limit_switches:
            events.append((lam_try, bus, k))
        lam = lam_try
        point = pt_try
        good = (pt_try.vm.copy(), pt_try.va.copy(), rep_try.modes.copy())
        lams.append(lam)
        trace.append(pt_try.vm.copy())
        if rep_try.iterations <= 3:
            sigma = min(sigma * 1.5, max_step)

    return PvCurve(
        np.array(lams), np.array(trace), UNBOUNDED, "unbounded", None, events, point
    )


def _bisect_crossing(solve_at, new_violations, lam_lo, good_lo, lam_hi, tol):
    """Refine the first security-limit crossing in (lam_lo, lam_hi]."""
    vm, va, modes = good_lo
    best = None
    while lam_hi - lam_lo > tol:
        mid = 0.5 * (lam_lo + lam_hi)
        pt, rep = solve_at(mid, vm.copy(), va.copy(), modes.copy())
        if not rep.converged:
            # treat like a violation: the crossing is below
            lam_hi = mid
            continue
        viols = new_violations(pt)
        if viols:
            lam_hi = mid
            best = (pt, viols)
        else:
            lam_lo = mid
            vm, va, modes = pt.vm, pt.va, rep.modes
    if best is None:
        pt, rep = solve_at(lam_hi, vm.copy(), va.copy(), modes.copy())
        viols = new_violations(pt) if rep.converged else []
        best = (pt, viols or [("nose", None, 0.0)])
    pt, viols = best
    worst = max(viols, key=lambda v: v[2] if v[2] is not None else 0.0)
    return lam_lo, pt, worst[0], worst[1]


__all__ = ["PvCurve", "cpf_loading_margin", "UNBOUNDED"]
