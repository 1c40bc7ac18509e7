"""Independent AC power-flow oracle.

Newton-Raphson in polar form over the sparse admittance structure, with
generator reactive limits enforced by switching voltage-holding buses onto
their capability envelope.  The oracle shares no code with the optimisation
model beyond the admittance kernels; it is the reference used to certify
optimisation results.

Sign conventions follow the nodal balances used across the package::

    PG + PW - PD - PH = sum_k V_b V_k Y_bk cos(va_b - va_k - gamma_bk)
    QG - QD - QW - QH = sum_k V_b V_k Y_bk sin(va_b - va_k - gamma_bk)

(wind and hydrogen-plant reactive terms enter as consumption).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

# a singular corrector Jacobian is an expected event at the PV-curve nose and
# is handled by step rejection; the non-finite solution already signals it
warnings.filterwarnings("ignore", category=spla.MatrixRankWarning)

from .admittance import AdmittanceMatrix, build_admittance
from .capability import CapabilityDomainError, q_envelope, q_envelope_derivatives
from .records import NetworkCase


class PowerFlowError(RuntimeError):
    pass


# bus operating modes during a solve
PQ = 0
PV = 1
SLACK = 2
ENV_MAX = 3  # generator pinned to its reactive ceiling, voltage free
ENV_MIN = 4  # generator pinned to its reactive floor, voltage free

_HYSTERESIS = 1e-9


@dataclass
class Dispatch:
    """Fixed quantities for one power-flow solve (all pu)."""

    pg: np.ndarray  # per generator; the slack entry is a free starting guess
    vg: np.ndarray  # voltage setpoints per generator
    pd: np.ndarray  # conventional active demand per bus
    qd: np.ndarray  # conventional reactive demand per bus
    pw: np.ndarray  # active output per wind farm
    qw: np.ndarray  # reactive consumption per wind farm
    ph: np.ndarray  # active intake per electrolyzer
    qh: np.ndarray  # reactive intake per electrolyzer


def base_dispatch(case: NetworkCase) -> Dispatch:
    """Case-file baseline: generator setpoints, no wind, no hydrogen load."""
    pd, qd = case.demand_vectors()
    return Dispatch(
        pg=np.array([g.pg_set for g in case.generators]),
        vg=np.array([g.vg_set for g in case.generators]),
        pd=pd,
        qd=qd,
        pw=np.zeros(len(case.wind_farms)),
        qw=np.zeros(len(case.wind_farms)),
        ph=np.zeros(len(case.electrolyzers)),
        qh=np.zeros(len(case.electrolyzers)),
    )


@dataclass
class OperatingPoint:
    vm: np.ndarray
    va: np.ndarray
    pg: np.ndarray
    qg: np.ndarray
    pw: np.ndarray
    qw: np.ndarray
    ph: np.ndarray
    qh: np.ndarray
    hour: int = 0
    point_class: str = "cop"


@dataclass
class NewtonReport:
    converged: bool
    iterations: int
    max_mismatch: float
    modes: np.ndarray = field(default_factory=lambda: np.array([]))
    limit_switches: list = field(default_factory=list)


def _bus_injection_arrays(case: NetworkCase, d: Dispatch):
    n = case.n_bus
    p_inj = -d.pd.copy()
    q_inj = -d.qd.copy()
    for w, farm in enumerate(case.wind_farms):
        b = case.bus_index(farm.bus)
        p_inj[b] += d.pw[w]
        q_inj[b] -= d.qw[w]
    for h, unit in enumerate(case.electrolyzers):
        b = case.bus_index(unit.bus)
        p_inj[b] -= d.ph[h]
        q_inj[b] -= d.qh[h]
    return p_inj, q_inj


def mismatch(
    case: NetworkCase,
    point: OperatingPoint,
    pd: np.ndarray,
    qd: np.ndarray,
    Y: AdmittanceMatrix | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Signed nodal balance residuals at every bus for a full operating point."""
    from .kernels import polar_injections

    Y = Y or build_admittance(case)
    p_calc, q_calc = polar_injections(Y.rows, Y.cols, Y.gdata, Y.bdata, point.vm, point.va)
    dp = -pd.copy()
    dq = -qd.copy()
    for g, gen in enumerate(case.generators):
        b = case.bus_index(gen.bus)
        dp[b] += point.pg[g]
        dq[b] += point.qg[g]
    for w, farm in enumerate(case.wind_farms):
        b = case.bus_index(farm.bus)
        dp[b] += point.pw[w]
        dq[b] -= point.qw[w]
    for h, unit in enumerate(case.electrolyzers):
        b = case.bus_index(unit.bus)
        dp[b] -= point.ph[h]
        dq[b] -= point.qh[h]
    return dp - p_calc, dq - q_calc


def newton_solve(
    case: NetworkCase,
    dispatch: Dispatch,
    Y: AdmittanceMatrix | None = None,
    tol: float = 1e-8,
    max_iter: int = 25,
    enforce_q_limits: bool = True,
    modes: np.ndarray | None = None,
    vm0: np.ndarray | None = None,
    va0: np.ndarray | None = None,
    q_exempt: frozenset | set | None = None,
) -> tuple[OperatingPoint, NewtonReport]:
    """Solve the power flow for a fixed dispatch.

    ``modes`` carries bus modes between successive solves (continuation);
    when omitted, generator buses start in voltage-holding mode.  Enforcing
    reactive limits re-solves with the offending generator moved onto its
    capability envelope until no further switching occurs.  Buses listed in
    ``q_exempt`` hold voltage regardless of their reactive envelope.
    """
    from .kernels import polar_flow_terms

    Y = Y or build_admittance(case)
    n = case.n_bus
    gens = case.generators
    gbus = case.bus_indices(case.generator_buses)
    slack_g = case.slack_index
    slack_bus = int(gbus[slack_g])
    gen_at_bus = {int(gbus[g]): g for g in range(len(gens))}

    if modes is None:
        modes = np.full(n, PQ, dtype=np.int8)
        modes[gbus] = PV
        modes[slack_bus] = SLACK
    else:
        modes = modes.copy()

    vm = np.ones(n) if vm0 is None else vm0.copy()
    va = np.zeros(n) if va0 is None else va0.copy()
    if vm0 is None:
        vm[gbus] = dispatch.vg
    p_base, q_base = _bus_injection_arrays(case, dispatch)

    switches: list[tuple[int, str]] = []
    report = NewtonReport(False, 0, np.inf)
    total_iters = 0

    for _round in range(2 * len(gens) + 1):
        # voltage-holding buses sit at their setpoints
        for b, g in gen_at_bus.items():
            if modes[b] in (PV, SLACK):
                vm[b] = dispatch.vg[g]

        vm_in, va_in = vm.copy(), va.copy()
        converged, iters, max_mm, vm, va = _nr_inner(
            case, Y, dispatch, modes, vm, va, p_base, q_base,
            gen_at_bus, slack_bus, tol, max_iter, polar_flow_terms,
        )
        total_iters += iters
        if not converged and any(modes[b] in (ENV_MAX, ENV_MIN) for b in gen_at_bus):
            # Envelope tracking turns singular when a machine runs near 100%
            # of its MW rating (the reactive ceiling is then a near-vertical
            # function of voltage).  Fall back to holding the limited machines
            # at a fixed reactive output and refining that pin to the envelope
            # by a damped fixed point.
            converged, iters, max_mm, vm, va = _pinned_envelope_solve(
                case, Y, dispatch, modes, vm_in, va_in, p_base, q_base,
                gen_at_bus, slack_bus, tol, max_iter, polar_flow_terms,
            )
            total_iters += iters
        if not converged:
            report = NewtonReport(False, total_iters, max_mm, modes, switches)
            point = _recover_point(case, Y, dispatch, vm, va, gen_at_bus, slack_g)
            return point, report

        point = _recover_point(case, Y, dispatch, vm, va, gen_at_bus, slack_g)
        if not enforce_q_limits:
            report = NewtonReport(True, total_iters, max_mm, modes, switches)
            return point, report

        changed = False
        for g, gen in enumerate(gens):
            b = int(gbus[g])
            if modes[b] not in (PV, SLACK):
                continue
            if q_exempt and b in q_exempt:
                continue
            try:
                env = q_envelope(float(point.pg[g]), float(vm[b]), gen)
            except CapabilityDomainError:
                # active output beyond the circle radius: the envelope is
                # empty, so pinning reactive power to it is meaningless --
                # keep holding voltage instead
                continue
            if point.qg[g] > env.q_max + _HYSTERESIS:
                modes[b] = ENV_MAX
                switches.append((gen.bus, env.binding))
                changed = True
            elif point.qg[g] < env.q_min - _HYSTERESIS:
                modes[b] = ENV_MIN
                switches.append((gen.bus, "underexcitation"))
                changed = True
        if not changed:
            report = NewtonReport(True, total_iters, max_mm, modes, switches)
            return point, report

    raise PowerFlowError("reactive-limit switching did not settle")


def _nr_inner(
    case, Y, dispatch, modes, vm, va, p_base, q_base,
    gen_at_bus, slack_bus, tol, max_iter, polar_flow_terms,
    q_pin=None,
):
    n = case.n_bus
    gens = case.generators
    va_cols = np.flatnonzero(modes != SLACK)
    vm_mask = (modes == PQ) | (modes == ENV_MAX) | (modes == ENV_MIN)
    vm_cols = np.flatnonzero(vm_mask)
    p_rows = va_cols
    q_rows = vm_cols
    env_buses = [
        b for b in q_rows
        if modes[b] in (ENV_MAX, ENV_MIN) and not (q_pin and b in q_pin)
    ]

    # voltage floors keeping ceiling-tracked buses inside the circle domains
    env_floor = {}
    for b in env_buses:
        g = gen_at_bus[b]
        gen = gens[g]
        if modes[b] == ENV_MAX and g != case.slack_index:
            pg_b = abs(dispatch.pg[g])
            floor = max(pg_b / gen.ig_max, pg_b * gen.xs / gen.emf)
            env_floor[b] = floor * (1.0 + 1e-9)

    indptr, indices = Y.csr.indptr, Y.csr.indices

    def blocks(data):
        return sp.csr_matrix((data, indices, indptr), shape=(n, n))

    max_mm = np.inf
    for it in range(1, max_iter + 1):
        p, q, dpa, dpv, dqa, dqv = polar_flow_terms(
            Y.rows, Y.cols, Y.diag, Y.gdata, Y.bdata, vm, va
        )
        p_spec = p_base.copy()
        q_spec = q_base.copy()
        for b, g in gen_at_bus.items():
            if modes[b] != SLACK:
                p_spec[b] += dispatch.pg[g]
        env_grad = {}
        for b in env_buses:
            g = gen_at_bus[b]
            gen = gens[g]
            if modes[b] == SLACK:
                pg_b = p[b] - p_base[b]
            else:
                pg_b = dispatch.pg[g]
            try:
                qmax, qmin = q_envelope(np.array([pg_b]), np.array([vm[b]]), gen)
            except CapabilityDomainError:
                # envelope degenerates along the trajectory: report failure so
                # the caller backs off rather than crashing
                return False, it, max_mm, vm, va
            qval = qmax[0] if modes[b] == ENV_MAX else qmin[0]
            if modes[b] == ENV_MAX:
                dq_dpg, dq_dv = q_envelope_derivatives(pg_b, vm[b], gen)
            else:
                cot = math.cos(gen.delta_max) / math.sin(gen.delta_max)
                dq_dpg, dq_dv = np.array(cot), np.array(-2.0 * vm[b] / gen.xs)
            q_spec[b] += qval
            env_grad[b] = (float(dq_dpg), float(dq_dv))
        if q_pin:
            for b, qv in q_pin.items():
                q_spec[b] += qv

        rp = (p_spec - p)[p_rows]
        rq = (q_spec - q)[q_rows]
        max_mm = max(
            np.abs(rp).max(initial=0.0), np.abs(rq).max(initial=0.0)
        )
        if max_mm < tol:
            return True, it - 1, max_mm, vm, va

        Jpa = blocks(dpa)
        Jpv = blocks(dpv)
        Jqa = blocks(dqa)
        Jqv = blocks(dqv)
        J11 = Jpa[p_rows][:, va_cols]
        J12 = Jpv[p_rows][:, vm_cols]
        J21 = Jqa[q_rows][:, va_cols]
        J22 = Jqv[q_rows][:, vm_cols]
        if env_buses:
            J21 = J21.tolil()
            J22 = J22.tolil()
            col_of_vm = {b: j for j, b in enumerate(vm_cols)}
            col_of_va = {b: j for j, b in enumerate(va_cols)}
            row_of_q = {b: i for i, b in enumerate(q_rows)}
            for b in env_buses:
                i = row_of_q[b]
                dq_dpg, dq_dv = env_grad[b]
                # residual = qenv - ... - q_calc; J holds d(q_calc) - d(spec)
                J22[i, col_of_vm[b]] -= dq_dv
                if modes[b] == SLACK:
                    # pg of the slack is itself a function of the state
                    prow_a = Jpa[b].toarray().ravel()
                    prow_v = Jpv[b].toarray().ravel()
                    for bb in va_cols:
                        J21[i, col_of_va[bb]] -= dq_dpg * prow_a[bb]
                    for bb in vm_cols:
                        J22[i, col_of_vm[bb]] -= dq_dpg * prow_v[bb]
            J21 = J21.tocsr()
            J22 = J22.tocsr()
        J = sp.bmat([[J11, J12], [J21, J22]], format="csc")
        try:
            dx = spla.spsolve(J, np.concatenate([rp, rq]))
        except RuntimeError as exc:  # singular factorization
            raise PowerFlowError(f"singular power-flow Jacobian: {exc}") from exc
        if not np.all(np.isfinite(dx)):
            return False, it, max_mm, vm, va
        # safeguard: scale overly aggressive steps (envelope-tracking rows can
        # be steep in voltage and push Newton far outside the basin)
        da = dx[: va_cols.size]
        dv = dx[va_cols.size :]
        scale = 1.0
        if da.size and np.abs(da).max() > 0.5:
            scale = min(scale, 0.5 / np.abs(da).max())
        if dv.size and np.abs(dv).max() > 0.1:
            scale = min(scale, 0.1 / np.abs(dv).max())
        va = va.copy()
        vm = vm.copy()
        va[va_cols] += scale * da
        vm[vm_cols] += scale * dv
        for b, floor in env_floor.items():
            if vm[b] < floor:
                vm[b] = floor
        if np.any(vm <= 0.0):
            return False, it, max_mm, vm, va
    return False, max_iter, max_mm, vm, va


def _pinned_envelope_solve(
    case, Y, dispatch, modes, vm, va, p_base, q_base,
    gen_at_bus, slack_bus, tol, max_iter, polar_flow_terms,
):
    """Solve with limited machines held at fixed reactive output.

    The pin starts at the envelope value evaluated at the entry voltage and
    is relaxed toward the envelope at the solved voltage until the two agree;
    the blend factor halves whenever the disagreement grows, which keeps the
    iteration contractive even where the ceiling is a steep function of
    voltage (machines running at their full MW rating)."""
    from .kernels import polar_injections

    gens = case.generators
    env_buses = [b for b in gen_at_bus if modes[b] in (ENV_MAX, ENV_MIN)]

    def envelope_value(b, vmag, pg_val):
        gen = gens[gen_at_bus[b]]
        if modes[b] == ENV_MIN:
            cot = math.cos(gen.delta_max) / math.sin(gen.delta_max)
            return pg_val * cot - vmag * vmag / gen.xs
        # ceiling: min of the two circles with the radicands clipped so a
        # transiently over-loaded machine pins at zero headroom instead of
        # raising out of the iteration
        r1 = max((vmag * gen.ig_max) ** 2 - pg_val**2, 0.0)
        r2 = max((vmag * gen.emf / gen.xs) ** 2 - pg_val**2, 0.0)
        return min(math.sqrt(r1), math.sqrt(r2) - vmag * vmag / gen.xs)

    def pg_at(b, vm_now, va_now):
        g = gen_at_bus[b]
        if modes[b] != SLACK:
            return float(dispatch.pg[g])
        p, _ = polar_injections(Y.rows, Y.cols, Y.gdata, Y.bdata, vm_now, va_now)
        return float(p[b] - p_base[b])

    pins = {b: envelope_value(b, vm[b], pg_at(b, vm, va)) for b in env_buses}
    blend, prev_err = 1.0, math.inf
    total, max_mm = 0, math.inf
    for _ in range(40):
        converged, iters, max_mm, vm, va = _nr_inner(
            case, Y, dispatch, modes, vm, va, p_base, q_base,
            gen_at_bus, slack_bus, tol, max_iter, polar_flow_terms,
            q_pin=pins,
        )
        total += iters
        if not converged:
            return False, total, max_mm, vm, va
        err = 0.0
        targets = {}
        for b in env_buses:
            targets[b] = envelope_value(b, vm[b], pg_at(b, vm, va))
            err = max(err, abs(targets[b] - pins[b]))
        if err < max(1e-9, 0.1 * tol):
            return True, total, max_mm, vm, va
        if err >= prev_err:
            blend *= 0.5
        prev_err = err
        for b in env_buses:
            pins[b] += blend * (targets[b] - pins[b])
    return False, total, max_mm, vm, va


def _recover_point(case, Y, dispatch, vm, va, gen_at_bus, slack_g):
    from .kernels import polar_injections

    p, q = polar_injections(Y.rows, Y.cols, Y.gdata, Y.bdata, vm, va)
    p_base, q_base = _bus_injection_arrays(case, dispatch)
    pg = dispatch.pg.copy()
    qg = np.zeros(len(case.generators))
    for b, g in gen_at_bus.items():
        qg[g] = q[b] - q_base[b]
        if g == slack_g:
            pg[g] = p[b] - p_base[b]
    return OperatingPoint(
        vm=vm.copy(),
        va=va.copy(),
        pg=pg,
        qg=qg,
        pw=dispatch.pw.copy(),
        qw=dispatch.qw.copy(),
        ph=dispatch.ph.copy(),
        qh=dispatch.qh.copy(),
    )


# ----------------------------------------------------------------------
# branch flows


def branch_flows(
    case: NetworkCase, point: OperatingPoint, Y: AdmittanceMatrix | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Complex from-end and to-end apparent power per branch (pu)."""
    Y = Y or build_admittance(case)
    v = point.vm * np.exp(1j * point.va)
    vf = v[Y.f_idx]
    vt = v[Y.t_idx]
    sf = vf * np.conj(Y.yff * vf + Y.yft * vt)
    st = vt * np.conj(Y.ytf * vf + Y.ytt * vt)
    return sf, st


def branch_limit_values(
    case: NetworkCase, point: OperatingPoint, Y: AdmittanceMatrix | None = None
) -> np.ndarray:
    """Orientation-independent loading per branch: max of both end magnitudes."""
    sf, st = branch_flows(case, point, Y)
    return np.maximum(np.abs(sf), np.abs(st))


__all__ = [
    "Dispatch",
    "OperatingPoint",
    "NewtonReport",
    "PowerFlowError",
    "base_dispatch",
    "mismatch",
    "newton_solve",
    "branch_flows",
    "branch_limit_values",
    "PQ",
    "PV",
    "SLACK",
    "ENV_MAX",
    "ENV_MIN",
]
