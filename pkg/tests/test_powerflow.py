"""Newton power-flow solution values, convergence and limit handling."""

import math
import time

import numpy as np
import pytest

from h2margin import powerflow as pf
from h2margin.capability import CapabilityDomainError, q_envelope
from h2margin.records import nodal_demand

from toynets import toy2, toy3


def test_two_bus_voltage_closed_form():
    """Unity-pf load P through x from V1=1 with V2 free: V2 = cos(delta) and
    P = V1*V2*sin(delta)/x give sin(2*delta) = 2*P*x, solvable by hand."""
    case, profs = toy2()
    d = pf.base_dispatch(case)
    d.pd, d.qd = nodal_demand(case, profs[0])
    point, rep = pf.newton_solve(case, d)
    assert rep.converged
    assert rep.max_mismatch < 1e-8
    delta = math.asin(2 * 0.5 * 0.25) / 2
    assert point.vm[1] == pytest.approx(math.cos(delta), abs=1e-8)
    # slack covers the load exactly (lossless line)
    assert point.pg[0] == pytest.approx(0.5, abs=1e-8)


def test_mismatch_vanishes_at_solution():
    case, profs = toy3()
    d = pf.base_dispatch(case)
    d.pd, d.qd = nodal_demand(case, profs[0])
    point, rep = pf.newton_solve(case, d)
    assert rep.converged
    mis = pf.mismatch(case, point, d.pd, d.qd)
    assert np.abs(mis).max() < 1e-8


def test_ieee39_flat_start_convergence(ieee39):
    d = pf.base_dispatch(ieee39)
    t0 = time.perf_counter()
    point, rep = pf.newton_solve(ieee39, d, enforce_q_limits=False)
    wall = time.perf_counter() - t0
    assert rep.converged
    assert rep.iterations <= 15
    assert rep.max_mismatch < 1e-8
    assert wall < 1.0
    sb = ieee39.base_mva
    slack = ieee39.slack_index
    assert point.pg[slack] * sb == pytest.approx(677.871, abs=0.1)
    losses = (point.pg.sum() + point.pw.sum() - point.ph.sum()) * sb - d.pd.sum() * sb
    assert losses == pytest.approx(43.641, abs=0.05)


def _clipped_ceiling(gen, pg, v):
    r1 = max((v * gen.ig_max) ** 2 - pg**2, 0.0)
    r2 = max((v * gen.emf / gen.xs) ** 2 - pg**2, 0.0)
    return min(math.sqrt(r1), math.sqrt(r2) - v * v / gen.xs)


def test_ieee39_respects_reactive_envelopes(ieee39):
    """With limits enforced, every non-slack machine ends inside (or pinned
    onto) its capability envelope; machines dispatched at 100% of their MW
    rating have zero ceiling headroom and must land exactly there."""
    d = pf.base_dispatch(ieee39)
    point, rep = pf.newton_solve(ieee39, d, enforce_q_limits=True)
    assert rep.converged
    assert rep.max_mismatch < 1e-8
    for k, g in enumerate(ieee39.generators):
        if k == ieee39.slack_index:
            continue  # the slack holds voltage by definition
        i = ieee39.bus_index(g.bus)
        ceil = _clipped_ceiling(g, point.pg[k], point.vm[i])
        assert point.qg[k] <= ceil + 1e-7


def test_reactive_limit_switching_pins_generator_to_envelope():
    """Crank the reactive demand until a machine hits its ceiling: the solve
    must land it exactly on the envelope with the bus voltage released."""
    case, profs = toy3()
    d = pf.base_dispatch(case)
    d.pd, d.qd = nodal_demand(case, profs[0])
    d.qd = d.qd * 7.0
    point, rep = pf.newton_solve(case, d, enforce_q_limits=True)
    assert rep.converged
    assert rep.limit_switches  # at least one machine was limited
    bus_to_gen = {g.bus: k for k, g in enumerate(case.generators)}
    for bus_id, kind in rep.limit_switches:
        k = bus_to_gen[bus_id]
        g = case.generators[k]
        i = case.bus_index(bus_id)
        if kind == "underexcitation":
            from h2margin.capability import underexcitation_q_min

            floor = underexcitation_q_min(point.pg[k], point.vm[i], g.delta_max, g.xs)
            assert point.qg[k] == pytest.approx(float(floor), abs=1e-6)
        else:
            ceil = _clipped_ceiling(g, point.pg[k], point.vm[i])
            assert point.qg[k] == pytest.approx(ceil, abs=1e-6)


def test_branch_flow_conservation(ieee39):
    d = pf.base_dispatch(ieee39)
    point, _ = pf.newton_solve(ieee39, d, enforce_q_limits=False)
    sf, st = pf.branch_flows(ieee39, point)
    # active flows leaving each bus reconstruct the net nodal injection
    n = ieee39.n_bus
    pinj = np.zeros(n)
    for e, br in enumerate(ieee39.branches):
        f, t = ieee39.bus_index(br.from_bus), ieee39.bus_index(br.to_bus)
        pinj[f] += sf[e].real
        pinj[t] += st[e].real
    expect = -d.pd.copy()
    for k, g in enumerate(ieee39.generators):
        expect[ieee39.bus_index(g.bus)] += point.pg[k]
    for w, farm in enumerate(ieee39.wind_farms):
        expect[ieee39.bus_index(farm.bus)] += point.pw[w]
    for h, unit in enumerate(ieee39.electrolyzers):
        expect[ieee39.bus_index(unit.bus)] -= point.ph[h]
    assert np.abs(pinj - expect).max() < 1e-8


def test_branch_limit_values_orientation_independent(ieee39):
    d = pf.base_dispatch(ieee39)
    point, _ = pf.newton_solve(ieee39, d, enforce_q_limits=False)
    sf, st = pf.branch_flows(ieee39, point)
    loading = pf.branch_limit_values(ieee39, point)
    assert np.allclose(loading, np.maximum(np.abs(sf), np.abs(st)), atol=1e-14)
    assert np.all(loading >= 0)


def test_divergence_reported_not_raised():
    case, profs = toy2()
    d = pf.base_dispatch(case)
    d.pd, d.qd = nodal_demand(case, profs[0])
    d.pd = d.pd * 20.0  # far beyond deliverable power
    point, rep = pf.newton_solve(case, d, enforce_q_limits=False)
    assert not rep.converged
