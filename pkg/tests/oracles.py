"""Brute-force certification of the toy harvest optimum.

Uses only the power-flow and continuation machinery (no NLP): every candidate
electrolyzer setting is checked by a full Newton solve, voltage limits,
machine capability envelopes and, when a margin is required, an actual PV
trace.  This gives an optimizer-independent reference optimum.
"""

from __future__ import annotations

import numpy as np

from h2margin import capability as cap
from h2margin import continuation as cont
from h2margin import powerflow as pf
from h2margin.records import nodal_demand


def feasible(case, pd, qd, vg, ph, lm):
    d = pf.base_dispatch(case)
    d.vg[:] = vg
    d.ph[:] = ph
    d.pd, d.qd = pd, qd
    point, rep = pf.newton_solve(case, d)
    if not rep.converged:
        return False
    vmin = np.array([b.v_min for b in case.buses])
    vmax = np.array([b.v_max for b in case.buses])
    if np.any(point.vm < vmin - 1e-9) or np.any(point.vm > vmax + 1e-9):
        return False
    for k, g in enumerate(case.generators):
        i = case.bus_index(g.bus)
        try:
            env = cap.q_envelope(point.pg[k], point.vm[i], g)
        except cap.CapabilityDomainError:
            return False
        if not (env.q_min - 1e-8 <= point.qg[k] <= env.q_max + 1e-8):
            return False
    if lm > 0:
        curve = cont.cpf_loading_margin(case, point, pd, qd)
        if curve.margin < lm - 1e-7:
            return False
    return True


def max_single_hour_ph(case, profiles, lm, step=1e-3):
    """Largest feasible electrolyzer intake, found by bisection over the
    intake and a scan over the source voltage set-point, then confirmed by a
    grid scan at the stated resolution."""
    pd, qd = nodal_demand(case, profiles[0])
    best = 0.0
    ph_hi = case.electrolyzers[0].p_max
    for vg in np.arange(0.90, 1.0 + 1e-12, 0.01):
        lo, hi = 0.0, ph_hi
        if not feasible(case, pd, qd, vg, lo, lm):
            continue
        while hi - lo > step / 4:
            mid = 0.5 * (lo + hi)
            if feasible(case, pd, qd, vg, mid, lm):
                lo = mid
            else:
                hi = mid
        grid = np.arange(max(0.0, lo - 5 * step), min(ph_hi, lo + 5 * step), step)
        ok = [p for p in grid if feasible(case, pd, qd, vg, p, lm)]
        val = max(ok) if ok else lo
        best = max(best, val)
    return best
