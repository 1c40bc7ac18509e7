"""Case and profile file parsing, serialization and error reporting."""

import math

import pytest

from h2margin import caseio
from h2margin.records import CaseError

from toynets import toy3

MINIMAL = """\
format 1
name mini
base_mva 100
bus: id pd_mw qd_mvar v_min v_max k_p k_q k_g
1 0 0 0.95 1.05 1 1 1
2 80 20 0.95 1.05 1 1 1
branch: from to r_pu x_pu b_pu s_max_mva tap
1 2 0.01 0.1 0.02 150 0
gen: bus p_min_mw p_max_mw ramp_up_mw ramp_dn_mw pg_set_mw vg_set emf_pu xs_pu ig_pu delta_max_deg machine_mva slack
1 0 300 300 300 100 1.0 2.574 1.912 1.0 90 300 1
wind: bus p_max_mw q_min_mvar q_max_mvar
2 50 0 0
p2h: bus p_min_mw p_max_mw q_min_mvar q_max_mvar eta_kg_per_mwh
2 0 60 0 0 13.9
"""


def test_parse_minimal_case():
    case = caseio.parse_case(MINIMAL)
    assert case.name == "mini"
    assert case.base_mva == 100.0
    assert case.n_bus == 2
    assert len(case.branches) == 1
    assert len(case.generators) == 1
    assert len(case.wind_farms) == 1
    assert len(case.electrolyzers) == 1
    # MW columns land as per-unit quantities
    assert case.buses[1].pd == pytest.approx(0.8)
    assert case.branches[0].s_max == pytest.approx(1.5)
    assert case.generators[0].p_max == pytest.approx(3.0)
    assert case.generators[0].delta_max == pytest.approx(math.pi / 2)
    assert case.electrolyzers[0].eta == pytest.approx(13.9)


def test_round_trip_preserves_case(ieee39):
    again = caseio.parse_case(caseio.dump_case(ieee39))
    assert again.n_bus == ieee39.n_bus
    assert len(again.branches) == len(ieee39.branches)
    for a, b in zip(again.buses, ieee39.buses):
        assert a.bus == b.bus
        assert a.pd == pytest.approx(b.pd, rel=1e-12, abs=1e-15)
        assert a.v_max == pytest.approx(b.v_max, rel=1e-12)
    for a, b in zip(again.branches, ieee39.branches):
        assert (a.from_bus, a.to_bus) == (b.from_bus, b.to_bus)
        assert a.x == pytest.approx(b.x, rel=1e-12)
        assert a.s_max == pytest.approx(b.s_max, rel=1e-12)
    for a, b in zip(again.generators, ieee39.generators):
        assert a.bus == b.bus
        assert a.p_max == pytest.approx(b.p_max, rel=1e-12)
        assert a.emf == pytest.approx(b.emf, rel=1e-12)
        assert a.xs == pytest.approx(b.xs, rel=1e-12)
        assert a.ig_max == pytest.approx(b.ig_max, rel=1e-12)
    for a, b in zip(again.electrolyzers, ieee39.electrolyzers):
        assert a.bus == b.bus
        assert a.p_max == pytest.approx(b.p_max, rel=1e-12)
        assert a.eta == pytest.approx(b.eta, rel=1e-12)


def test_round_trip_toy_case(tmp_path):
    case, _ = toy3()
    p = tmp_path / "toy3.case"
    caseio.save_case(case, p)
    again = caseio.load_case(p)
    assert caseio.dump_case(again) == caseio.dump_case(case)


def test_ieee39_headline_numbers(ieee39):
    assert ieee39.n_bus == 39
    assert len(ieee39.branches) == 46
    assert len(ieee39.generators) == 10
    pd, qd = ieee39.demand_vectors()
    assert pd.sum() * ieee39.base_mva == pytest.approx(6254.2, abs=0.5)


def test_profiles_round_trip(tmp_path, profiles24):
    p = tmp_path / "profiles.csv"
    caseio.save_profiles(profiles24, p)
    again = caseio.load_profiles(p)
    assert len(again) == 24
    for a, b in zip(again, profiles24):
        assert a.hour == b.hour
        assert a.demand_p == pytest.approx(b.demand_p, rel=1e-12)
        assert a.wind_available == pytest.approx(b.wind_available, rel=1e-12)


def _expect_error(text, line_no, fragment):
    with pytest.raises(CaseError) as err:
        caseio.parse_case(text, source="bad.case")
    msg = str(err.value)
    assert f"bad.case:{line_no}:" in msg
    assert fragment in msg


def test_error_reports_line_of_bad_number():
    broken = MINIMAL.replace("1 2 0.01 0.1 0.02 150 0", "1 2 0.01 oops 0.02 150 0")
    _expect_error(broken, 8, "oops")


def test_error_reports_data_before_header():
    _expect_error("format 1\nname x\nbase_mva 100\n1 2 3\n", 4, "before any table header")


def test_error_on_wrong_column_list():
    broken = MINIMAL.replace(
        "branch: from to r_pu x_pu b_pu s_max_mva tap", "branch: from to r_pu x_pu b_pu rating tap"
    )
    _expect_error(broken, 7, "unexpected branch columns")


def test_error_on_unsupported_version():
    _expect_error(MINIMAL.replace("format 1", "format 9"), 1, "unsupported format version")


def test_error_on_missing_format():
    with pytest.raises(CaseError, match="missing 'format'"):
        caseio.parse_case("name x\nbase_mva 100\n")


def test_error_on_nonpositive_machine_base():
    broken = MINIMAL.replace(
        "1 0 300 300 300 100 1.0 2.574 1.912 1.0 90 300 1",
        "1 0 300 300 300 100 1.0 2.574 1.912 1.0 90 0 1",
    )
    _expect_error(broken, 10, "machine_mva must be positive")


def test_validation_rejects_duplicate_bus():
    broken = MINIMAL.replace(
        "2 80 20 0.95 1.05 1 1 1", "1 80 20 0.95 1.05 1 1 1"
    )
    with pytest.raises(CaseError):
        caseio.parse_case(broken)


def test_validation_rejects_branch_to_unknown_bus():
    broken = MINIMAL.replace("1 2 0.01 0.1 0.02 150 0", "1 7 0.01 0.1 0.02 150 0")
    with pytest.raises(CaseError):
        caseio.parse_case(broken)
