"""Hand-built miniature networks used across the test suite.

All three have closed-form or brute-force checkable behaviour:

* ``toy2``       -- one machine feeding one hydrogen plant over a single
                    reactive line; the harvest optimum has an analytic form.
* ``toy3``       -- three buses with wind, two hydrogen plants and rated
                    lines; small enough for exhaustive sanity checks.
* ``nose2``      -- the textbook two-bus maximum-power-transfer case whose
                    PV-curve nose sits at an analytically known loading.
"""

from __future__ import annotations

import math

from h2margin.records import (
    BranchRecord,
    BusRecord,
    ElectrolyzerRecord,
    GeneratorRecord,
    HourlyProfile,
    NetworkCase,
    WindFarmRecord,
)


def _machine(bus, pmax, pgset, slack=False):
    mb = pmax * 100.0  # machine MVA rating equal to capacity in MW
    return GeneratorRecord(
        bus=bus,
        p_min=0.0,
        p_max=pmax,
        ramp_up=pmax,
        ramp_down=pmax,
        pg_set=pgset,
        vg_set=1.0,
        emf=2.574,
        xs=1.912 * 100.0 / mb,
        ig_max=1.0 * mb / 100.0,
        delta_max=math.pi / 2,
        machine_base=mb,
        is_slack=slack,
    )


def toy2():
    """Two buses, single slack machine feeding one hydrogen plant.

    With the source held at V1 = 1.0, a purely reactive line x = 0.25 and the
    load bus floored at V2 >= 0.9, the maximum deliverable active power is
    P = V1*V2*sin(delta)/x with the angle limited by the voltage floor, so the
    optimal electrolyzer intake has the closed form
    ``0.9*sqrt(1-0.81)/0.25 - (1+lm)*0.5`` for demand 0.5 pu grown by ``lm``.
    """
    buses = [
        BusRecord(bus=1, pd=0.0, qd=0.0, v_min=0.9, v_max=1.0),
        BusRecord(bus=2, pd=0.5, qd=0.0, v_min=0.9, v_max=1.0),
    ]
    branches = [BranchRecord(1, 2, 0.0, 0.25, 0.0)]
    gens = [
        GeneratorRecord(
            bus=1,
            p_min=0.0,
            p_max=3.0,
            ramp_up=3.0,
            ramp_down=3.0,
            pg_set=0.5,
            vg_set=1.0,
            emf=2.574,
            xs=1.912 / 3.0,
            ig_max=3.0,
            delta_max=math.pi / 2,
            machine_base=300.0,
            is_slack=True,
        )
    ]
    h2 = [ElectrolyzerRecord(bus=2, p_min=0.0, p_max=2.5)]
    profs = [HourlyProfile(hour=1, demand_p=50.0, demand_q=0.0, wind_available=0.0)]
    case = NetworkCase(
        name="toy2",
        base_mva=100.0,
        buses=buses,
        branches=branches,
        generators=gens,
        electrolyzers=h2,
    )
    return case, profs


def toy3(T=2):
    """Three buses, two machines, one wind farm, two hydrogen plants."""
    buses = [
        BusRecord(bus=1, pd=0.0, qd=0.0, v_min=0.94, v_max=1.06),
        BusRecord(bus=2, pd=0.4, qd=0.12, v_min=0.94, v_max=1.06),
        BusRecord(bus=3, pd=0.5, qd=0.18, v_min=0.94, v_max=1.06),
    ]
    branches = [
        BranchRecord(1, 2, 0.010, 0.10, 0.02, s_max=2.0),
        BranchRecord(2, 3, 0.010, 0.08, 0.02, s_max=1.5),
        BranchRecord(1, 3, 0.015, 0.12, 0.02, s_max=1.5),
    ]
    gens = [_machine(1, 3.0, 1.0, slack=True), _machine(2, 2.0, 0.8)]
    wind = [WindFarmRecord(bus=2, p_max=1.0)]
    h2 = [
        ElectrolyzerRecord(bus=2, p_min=0.05, p_max=1.0),
        ElectrolyzerRecord(bus=3, p_min=0.05, p_max=1.5),
    ]
    profs = [
        HourlyProfile(hour=1, demand_p=90.0, demand_q=30.0, wind_available=60.0),
        HourlyProfile(hour=2, demand_p=110.0, demand_q=36.0, wind_available=100.0),
        HourlyProfile(hour=3, demand_p=100.0, demand_q=33.0, wind_available=80.0),
        HourlyProfile(hour=4, demand_p=95.0, demand_q=31.0, wind_available=90.0),
    ]
    case = NetworkCase(
        name="toy3",
        base_mva=100.0,
        buses=buses,
        branches=branches,
        generators=gens,
        wind_farms=wind,
        electrolyzers=h2,
    )
    return case, profs[:T]


def nose2():
    """Two-bus maximum-power-transfer case with an analytic nose point.

    Source at E = 1.0 behind a lossless line x = 0.25 feeding P0 = 1.0 at
    unity power factor: the deliverable maximum is E^2/(2x) = 2.0, so the
    continuation parameter at the nose is (2.0 - 1.0)/1.0 = 1.0.
    """
    buses = [
        BusRecord(bus=1, pd=0.0, qd=0.0, v_min=0.0, v_max=2.0),
        BusRecord(bus=2, pd=1.0, qd=0.0, v_min=0.0, v_max=2.0, k_p=1.0),
    ]
    branches = [BranchRecord(1, 2, 0.0, 0.25, 0.0)]
    gens = [
        GeneratorRecord(
            bus=1,
            p_min=0.0,
            p_max=50.0,
            ramp_up=50.0,
            ramp_down=50.0,
            pg_set=1.0,
            vg_set=1.0,
            emf=50.0,
            xs=1e-3,
            ig_max=50.0,
            delta_max=math.pi / 2,
            machine_base=5000.0,
            is_slack=True,
        )
    ]
    case = NetworkCase(
        name="nose2",
        base_mva=100.0,
        buses=buses,
        branches=branches,
        generators=gens,
    )
    return case
