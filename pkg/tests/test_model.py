"""Scenario assembly: row census, residual identities, derivatives, harvest."""

import numpy as np
import pytest

from h2margin import model

from toynets import toy2, toy3


def _cfg(margin=0.1, alpha=0.5, mode="dispatch"):
    return model.ScenarioConfig(margin=margin, alpha=alpha, mode=mode)


def _replicate(profiles, T):
    import dataclasses

    base = profiles[0]
    return [dataclasses.replace(base, hour=t + 1) for t in range(T)]


def test_row_census_consistent():
    case, profs = toy3(T=2)
    inst = model.assemble(case, profs, _cfg())
    cat = inst.catalog()
    eq_rows = sum(r["rows"] for r in cat if r["side"] == "eq")
    in_rows = sum(r["rows"] for r in cat if r["side"] == "ineq")
    assert eq_rows == inst.m_eq
    assert in_rows == inst.m_in
    by_name = {r["family"]: r for r in cat}
    assert by_name["margin-pin"]["rows"] == 1
    T, ng = inst.layout.T, inst.layout.ng
    assert by_name["ceiling-slackness"]["rows"] == T * ng
    assert by_name["floor-slackness"]["rows"] == T * ng
    assert by_name["ramp-up-op"]["rows"] == (T - 1) * ng
    # residual vectors agree with the advertised sizes
    x0 = inst.initial_point()
    assert inst.eq_residual(x0).size == inst.m_eq
    assert inst.ineq_residual(x0).size == inst.m_in


def test_margin_pin_row_forces_lambda():
    case, profs = toy3(T=1)
    inst = model.assemble(case, profs, _cfg(margin=0.17))
    x = inst.initial_point()
    x[inst.layout.lam] = 0.17
    # locate the pin row as the one that moves 1:1 with lambda
    r0 = inst.eq_residual(x)
    x2 = x.copy()
    x2[inst.layout.lam] += 0.05
    r1 = inst.eq_residual(x2)
    moved = np.flatnonzero(np.abs(r1 - r0) > 1e-12)
    assert moved.size >= 1
    off = inst.eq_off["margin-pin"]
    assert off in moved
    assert r0[off] == pytest.approx(0.0, abs=1e-12)


def test_hold_rows_vanish_at_initial_point():
    """Wind and electrolyzer set-point duplication rows between the two
    operating points are identities at any consistently built point."""
    case, profs = toy3(T=2)
    inst = model.assemble(case, profs, _cfg())
    x0 = inst.initial_point()
    r = inst.eq_residual(x0)
    for fam in ("p2h-hold", "wind-hold"):
        off = inst.eq_off[fam]
        n = next(
            c["rows"] for c in inst.catalog() if c["family"] == fam and c["side"] == "eq"
        )
        assert np.abs(r[off:off + n]).max() == 0.0


def test_harvest_identity_full_output():
    """One electrolyzer at 1 pu for 24 one-hour periods on a 100 MVA base at
    13.9 kg/MWh must yield exactly 24*100*13.9 = 33360 kg."""
    case, profs = toy2()
    inst = model.assemble(case, _replicate(profs, 24), _cfg())
    x = np.zeros(inst.n_var)
    for t in range(24):
        x[inst.layout.idx("ph1", t)] = 1.0
    assert inst.harvest_kg(x) == pytest.approx(33360.0, rel=1e-12)


def test_harvest_scales_with_eta():
    case, profs = toy2()
    import dataclasses

    units = [dataclasses.replace(case.electrolyzers[0], eta=20.0)]
    case2 = case.with_electrolyzers(units)
    inst = model.assemble(case2, profs, _cfg())
    x = np.zeros(inst.n_var)
    x[inst.layout.idx("ph1", 0)] = 0.5
    assert inst.harvest_kg(x) == pytest.approx(0.5 * 100.0 * 20.0, rel=1e-12)


def test_wind_penetration_row_value():
    case, profs = toy3(T=1)
    inst = model.assemble(case, profs, _cfg(alpha=0.4))
    x = inst.initial_point()
    iw = inst.layout.idx("pw1", 0)
    x[iw] = 0.55  # single farm
    r = inst.ineq_residual(x)
    off = inst.ineq_off["wind-penetration"]
    assert r[off] == pytest.approx(0.55 - 0.4 * inst.pd1[0].sum(), rel=1e-9)


def _fd_check(inst, x, rows, cols, seed, n_checks=40, h=1e-6):
    """Spot-check sparse Jacobians against central differences."""
    JE, JI = inst.jacobians(x)
    rng = np.random.default_rng(seed)
    idx = rng.choice(x.size, size=min(n_checks, x.size), replace=False)
    worst = 0.0
    for j in idx:
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        de = (inst.eq_residual(xp) - inst.eq_residual(xm)) / (2 * h)
        di = (inst.ineq_residual(xp) - inst.ineq_residual(xm)) / (2 * h)
        ae = np.asarray(JE[:, j].todense()).ravel()
        ai = np.asarray(JI[:, j].todense()).ravel()
        scale = max(1.0, np.abs(ae).max(initial=0.0), np.abs(ai).max(initial=0.0))
        worst = max(worst, np.abs(ae - de).max() / scale, np.abs(ai - di).max() / scale)
    return worst


def test_jacobian_matches_finite_differences_toy():
    case, profs = toy3(T=3)  # multi-hour so ramp rows participate
    inst = model.assemble(case, profs, _cfg())
    rng = np.random.default_rng(5)
    x = inst.initial_point()
    for k in range(3):
        xp = x + 1e-3 * rng.standard_normal(x.size)
        worst = _fd_check(inst, xp, inst.m_eq, inst.n_var, seed=k)
        assert worst < 1e-6


def test_extract_solution_reports_peaks_and_totals():
    case, profs = toy3(T=2)
    inst = model.assemble(case, profs, _cfg())
    x = inst.initial_point()
    L = inst.layout
    x[L.idx("ph1", 0)] = np.array([0.3, 0.8])
    x[L.idx("ph2", 0)] = np.array([0.3, 0.8])
    x[L.idx("ph1", 1)] = np.array([0.5, 0.2])
    x[L.idx("ph2", 1)] = np.array([0.5, 0.2])
    bundle = inst.extract_solution(x)
    peaks = bundle.allocation_peak_mw()
    assert peaks[2] == pytest.approx(50.0)
    assert peaks[3] == pytest.approx(80.0)
    energy = bundle.allocation_energy_mwh()
    assert energy[2] == pytest.approx((0.3 + 0.5) * 100.0)
    assert energy[3] == pytest.approx((0.8 + 0.2) * 100.0)
    hourly = bundle.hourly_p2h_mw()
    assert hourly[0] == (1, pytest.approx(110.0))
    assert hourly[1] == (2, pytest.approx(70.0))
    assert bundle.harvest_kg == pytest.approx(
        (0.3 + 0.8 + 0.5 + 0.2) * 100.0 * 13.9, rel=1e-9
    )
