"""PV-curve tracing: nose detection, limit crossings, certified margins."""

import dataclasses
import time

import numpy as np
import pytest

from h2margin import continuation as cont
from h2margin import powerflow as pf
from h2margin.records import nodal_demand

from toynets import nose2, toy2


def _base_point(case, pd, qd):
    d = pf.base_dispatch(case)
    d.pd, d.qd = pd, qd
    point, rep = pf.newton_solve(case, d, enforce_q_limits=False)
    assert rep.converged
    return point


def test_analytic_nose_point():
    """Max deliverable power over a lossless line is E^2/(2x) = 2.0, giving a
    continuation margin of exactly 1.0 on top of the unit base load."""
    case = nose2()
    pd = np.array([b.pd for b in case.buses])
    qd = np.array([b.qd for b in case.buses])
    point = _base_point(case, pd, qd)
    t0 = time.perf_counter()
    curve = cont.cpf_loading_margin(
        case, point, pd, qd, v_limits=False, branch_limits=False
    )
    wall = time.perf_counter() - t0
    assert curve.stop_reason == "nose"
    assert curve.margin == pytest.approx(1.0, rel=0.01)
    assert wall < 1.0


def test_voltage_floor_crossing():
    """With the load-bus floor raised to 0.95 the trace must stop where the
    PV curve crosses it, well before the nose."""
    case, profs = toy2()
    buses = list(case.buses)
    buses[1] = dataclasses.replace(buses[1], v_min=0.95)
    case = case.copy()
    case.buses = buses
    pd, qd = nodal_demand(case, profs[0])
    point = _base_point(case, pd, qd)
    curve = cont.cpf_loading_margin(case, point, pd, qd, branch_limits=False)
    assert curve.stop_reason == "voltage_floor"
    # hand value: V2 = 0.95 = cos(delta), P = 4*V2*sin(delta) = 1.18667,
    # so lambda = P/0.5 - 1 = 1.3731 for the base demand of 0.5
    analytic = 4 * 0.95 * np.sin(np.arccos(0.95)) / 0.5 - 1.0
    assert analytic == pytest.approx(1.3731, abs=1e-4)
    # the certified margin sits at most one grace band beyond the raw crossing
    assert analytic <= curve.margin <= analytic + 0.02
    # and the stop point has exhausted exactly the grace allowance
    excess = 0.95 - curve.point.vm[1]
    assert 0.0 < excess <= 5e-4 + 1e-5


def test_unbounded_when_nothing_grows():
    case, profs = toy2()
    buses = [dataclasses.replace(b, k_p=0.0, k_q=0.0) for b in case.buses]
    case = case.copy()
    case.buses = buses
    pd, qd = nodal_demand(case, profs[0])
    point = _base_point(case, pd, qd)
    curve = cont.cpf_loading_margin(case, point, pd, qd)
    assert curve.stop_reason == "unbounded"
    assert curve.margin == np.inf


def test_ieee39_stock_margin(ieee39):
    pd, qd = ieee39.demand_vectors()
    point = _base_point(ieee39, pd, qd)
    curve = cont.cpf_loading_margin(ieee39, point, pd, qd)
    assert curve.margin == pytest.approx(0.0362, abs=1e-3)


def test_monotone_lambda_grid():
    case = nose2()
    pd = np.array([b.pd for b in case.buses])
    qd = np.array([b.qd for b in case.buses])
    point = _base_point(case, pd, qd)
    curve = cont.cpf_loading_margin(
        case, point, pd, qd, v_limits=False, branch_limits=False
    )
    lams = curve.lambdas
    assert np.all(np.diff(lams) > 0)
    assert lams[0] == 0.0
    assert lams[-1] == pytest.approx(curve.margin, abs=1e-6)
    # load-bus voltage falls monotonically toward the nose
    v2 = curve.vm_trace[:, 1]
    assert np.all(np.diff(v2) < 1e-12)


def test_preexisting_excess_is_not_a_crossing():
    """A quantity already (slightly) beyond its limit at the base point gets
    an allowance: the trace must not report an immediate crossing, only a
    growth beyond allowance plus grace counts."""
    case, profs = toy2()
    buses = list(case.buses)
    # ceiling a hair below the held setpoint of the source bus
    buses[0] = dataclasses.replace(buses[0], v_max=1.0 - 2e-5)
    case = case.copy()
    case.buses = buses
    pd, qd = nodal_demand(case, profs[0])
    point = _base_point(case, pd, qd)
    curve = cont.cpf_loading_margin(case, point, pd, qd, branch_limits=False)
    # the source keeps holding 1.0 as load grows: excess never exceeds the
    # allowance, so the stop must come from a real event elsewhere
    assert curve.stop_reason != "voltage_ceiling"
    assert curve.margin > 0.05
