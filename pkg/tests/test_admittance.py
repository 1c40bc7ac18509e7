"""Bus admittance construction invariants."""

import numpy as np
import pytest

from h2margin.admittance import build_admittance
from h2margin.records import BranchRecord, BusRecord, GeneratorRecord, NetworkCase

from toynets import toy2, toy3


def _dense(Y, n):
    M = np.zeros((n, n), dtype=complex)
    M[Y.rows, Y.cols] = Y.gdata + 1j * Y.bdata
    return M


def test_two_bus_reactive_line_matrix():
    case, _ = toy2()
    Y = build_admittance(case)
    M = _dense(Y, 2)
    y = 1.0 / 0.25j
    expect = np.array([[y, -y], [-y, y]])
    assert np.allclose(M, expect, atol=1e-14)


def test_symmetry_without_taps():
    case, _ = toy3()
    M = _dense(build_admittance(case), case.n_bus)
    assert np.allclose(M, M.T, atol=1e-14)


def test_row_sums_equal_shunt_injection():
    """With no shunts, the off-diagonals cancel the series part of the
    diagonal, leaving only the line-charging contribution."""
    case, _ = toy3()
    M = _dense(build_admittance(case), case.n_bus)
    charge = np.zeros(case.n_bus, dtype=complex)
    for br in case.branches:
        f, t = case.bus_index(br.from_bus), case.bus_index(br.to_bus)
        charge[f] += 1j * br.b_charging / 2.0
        charge[t] += 1j * br.b_charging / 2.0
    assert np.allclose(M.sum(axis=1), charge, atol=1e-14)


def _tap_case(tap):
    buses = [
        BusRecord(bus=1, pd=0.0, qd=0.0, v_min=0.9, v_max=1.1),
        BusRecord(bus=2, pd=0.5, qd=0.1, v_min=0.9, v_max=1.1),
    ]
    branches = [BranchRecord(1, 2, 0.01, 0.1, 0.04, s_max=2.0, tap=tap)]
    gens = [
        GeneratorRecord(
            bus=1, p_min=0.0, p_max=3.0, ramp_up=3.0, ramp_down=3.0,
            pg_set=0.5, vg_set=1.0, emf=2.574, xs=0.6, ig_max=3.0,
            delta_max=np.pi / 2, machine_base=300.0, is_slack=True,
        )
    ]
    return NetworkCase(
        name="tap", base_mva=100.0, buses=buses, branches=branches, generators=gens
    )


def test_off_nominal_tap_scaling():
    tap = 1.05
    M = _dense(build_admittance(_tap_case(tap)), 2)
    br = _tap_case(tap).branches[0]
    y = br.series_admittance
    sh = 1j * br.b_charging / 2.0
    assert M[0, 0] == pytest.approx((y + sh) / tap**2, rel=1e-14)
    assert M[0, 1] == pytest.approx(-y / tap, rel=1e-14)
    assert M[1, 0] == pytest.approx(-y / tap, rel=1e-14)
    assert M[1, 1] == pytest.approx(y + sh, rel=1e-14)


def test_ieee39_sparsity_and_finite(ieee39):
    Y = build_admittance(ieee39)
    assert np.all(np.isfinite(Y.gdata))
    assert np.all(np.isfinite(Y.bdata))
    # every branch contributes off-diagonal entries and every bus a diagonal
    n = ieee39.n_bus
    M = _dense(Y, n)
    assert np.count_nonzero(M.diagonal()) == n
    for br in ieee39.branches:
        f, t = ieee39.bus_index(br.from_bus), ieee39.bus_index(br.to_bus)
        assert M[f, t] != 0
