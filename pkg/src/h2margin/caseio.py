"""Case and profile file I/O.

Case schema (structured text, format version 1)
------------------------------------------------
A case file is line oriented; ``#`` starts a comment, blank lines are
ignored.  It opens with three scalar directives::

    format 1
    name <identifier>
    base_mva <float>

followed by whitespace-separated tables.  Each table starts with a header
line naming its columns (the header doubles as documentation and is checked
on parse)::

    bus: id pd_mw qd_mvar v_min v_max k_p k_q k_g
    branch: from to r_pu x_pu b_pu s_max_mva tap
    gen: bus p_min_mw p_max_mw ramp_up_mw ramp_dn_mw pg_set_mw vg_set emf_pu xs_pu ig_pu delta_max_deg machine_mva slack
    wind: bus p_max_mw q_min_mvar q_max_mvar
    p2h: bus p_min_mw p_max_mw q_min_mvar q_max_mvar eta_kg_per_mwh

Conventions:

* power columns are MW/MVAr; they are converted to pu on ``base_mva`` when
  the file is loaded,
* branch impedances are pu on the system base; ``s_max_mva = 0`` means
  "unlimited" and is mapped to a 10 GVA placeholder rating,
* ``tap`` is the off-nominal turns ratio at the *from* side (1 = nominal),
* generator machine constants (``emf_pu``, ``xs_pu``, ``ig_pu``) are pu on
  the generator's own ``machine_mva`` base and are rebased to the system
  base at load time; ``delta_max_deg`` is the rotor-angle limit,
* ``slack`` is 0/1; exactly one generator must set it,
* the ``wind`` and ``p2h`` tables may be empty or absent.

Profile files are delimited text with the header
``hour,demand_p_MW,demand_q_MVAr,wind_available_MW`` (``wind_available_MW``
is *per farm*).  Comment lines starting with ``#`` are permitted.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .records import (
    BranchRecord,
    BusRecord,
    CaseError,
    ElectrolyzerRecord,
    GeneratorRecord,
    HourlyProfile,
    NetworkCase,
    WindFarmRecord,
    scale_machine_constants,
    validate_profiles,
)

FORMAT_VERSION = 1
UNLIMITED_RATING_MVA = 10000.0

_HEADERS = {
    "bus": "id pd_mw qd_mvar v_min v_max k_p k_q k_g",
    "branch": "from to r_pu x_pu b_pu s_max_mva tap",
    "gen": (
        "bus p_min_mw p_max_mw ramp_up_mw ramp_dn_mw pg_set_mw vg_set "
        "emf_pu xs_pu ig_pu delta_max_deg machine_mva slack"
    ),
    "wind": "bus p_max_mw q_min_mvar q_max_mvar",
    "p2h": "bus p_min_mw p_max_mw q_min_mvar q_max_mvar eta_kg_per_mwh",
}


class CaseFormatError(CaseError):
    """Parse failure; the message carries the file path and line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


def _floats(tokens, path, line_no, expect):
    if len(tokens) != expect:
        raise CaseFormatError(path, line_no, f"expected {expect} columns, got {len(tokens)}")
    out = []
    for tok in tokens:
        try:
            out.append(float(tok))
        except ValueError:
            raise CaseFormatError(path, line_no, f"not a number: {tok!r}") from None
    return out


def load_case(path) -> NetworkCase:
    """Parse and validate a case file."""
    path = Path(path)
    text = path.read_text()
    return parse_case(text, source=str(path))


def parse_case(text: str, source: str = "<string>") -> NetworkCase:
    name = None
    base_mva = None
    version = None
    section = None
    buses: list[BusRecord] = []
    raw_branches: list[tuple[int, list[float]]] = []
    raw_gens: list[tuple[int, list[float]]] = []
    raw_wind: list[tuple[int, list[float]]] = []
    raw_p2h: list[tuple[int, list[float]]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(":")
        if head in _HEADERS and rest:
            if " ".join(rest.split()) != _HEADERS[head]:
                raise CaseFormatError(
                    source, line_no, f"unexpected {head} columns; expected {_HEADERS[head]!r}"
                )
            section = head
            continue
        tokens = line.split()
        key = tokens[0]
        if key == "format":
            version = int(tokens[1])
            if version != FORMAT_VERSION:
                raise CaseFormatError(source, line_no, f"unsupported format version {version}")
            continue
        if key == "name":
            name = tokens[1]
            continue
        if key == "base_mva":
            base_mva = _floats(tokens[1:], source, line_no, 1)[0]
            continue
        if section is None:
            raise CaseFormatError(source, line_no, f"data before any table header: {line!r}")
        ncol = len(_HEADERS[section].split())
        vals = _floats(tokens, source, line_no, ncol)
        if section == "bus":
            buses.append(
                BusRecord(
                    bus=int(vals[0]),
                    pd=vals[1],
                    qd=vals[2],
                    v_min=vals[3],
                    v_max=vals[4],
                    k_p=vals[5],
                    k_q=vals[6],
                    k_g=vals[7],
                )
            )
        elif section == "branch":
            raw_branches.append((line_no, vals))
        elif section == "gen":
            raw_gens.append((line_no, vals))
        elif section == "wind":
            raw_wind.append((line_no, vals))
        elif section == "p2h":
            raw_p2h.append((line_no, vals))

    if version is None:
        raise CaseFormatError(source, 1, "missing 'format' directive")
    if name is None or base_mva is None:
        raise CaseFormatError(source, 1, "missing 'name' or 'base_mva' directive")

    sb = base_mva
    buses = [
        BusRecord(
            bus=b.bus, pd=b.pd / sb, qd=b.qd / sb, v_min=b.v_min, v_max=b.v_max,
            k_p=b.k_p, k_q=b.k_q, k_g=b.k_g,
        )
        for b in buses
    ]
    branches = []
    for _ln, v in raw_branches:
        rating = v[5] if v[5] > 0.0 else UNLIMITED_RATING_MVA
        branches.append(
            BranchRecord(
                from_bus=int(v[0]), to_bus=int(v[1]), r=v[2], x=v[3], b_charging=v[4],
                s_max=rating / sb, tap=v[6] if v[6] > 0 else 1.0,
            )
        )
    generators = []
    for ln, v in raw_gens:
        if v[11] <= 0:
            raise CaseFormatError(source, ln, "machine_mva must be positive")
        emf, xs, ig = scale_machine_constants(v[7], v[8], v[9], v[11], sb)
        generators.append(
            GeneratorRecord(
                bus=int(v[0]), p_min=v[1] / sb, p_max=v[2] / sb,
                ramp_up=v[3] / sb, ramp_down=v[4] / sb,
                pg_set=v[5] / sb, vg_set=v[6],
                emf=emf, xs=xs, ig_max=ig,
                delta_max=math.radians(v[10]), machine_base=v[11],
                is_slack=bool(int(v[12])),
            )
        )
    wind = [
        WindFarmRecord(bus=int(v[0]), p_max=v[1] / sb, q_min=v[2] / sb, q_max=v[3] / sb)
        for _ln, v in raw_wind
    ]
    p2h = [
        ElectrolyzerRecord(
            bus=int(v[0]), p_min=v[1] / sb, p_max=v[2] / sb,
            q_min=v[3] / sb, q_max=v[4] / sb, eta=v[5],
        )
        for _ln, v in raw_p2h
    ]

    case = NetworkCase(
        name=name, base_mva=base_mva, buses=buses, branches=branches,
        generators=generators, wind_farms=wind, electrolyzers=p2h,
    )
    case.validate()
    return case


def save_case(case: NetworkCase, path) -> None:
    """Write ``case`` in the format-1 schema; ``load_case`` inverts this."""
    Path(path).write_text(dump_case(case))


def dump_case(case: NetworkCase) -> str:
    sb = case.base_mva
    out = io.StringIO()
    w = out.write
    w(f"# {case.name} -- h2margin case file\n")
    w(f"format {FORMAT_VERSION}\n")
    w(f"name {case.name}\n")
    w(f"base_mva {case.base_mva!r}\n\n")

    w(f"bus: {_HEADERS['bus']}\n")
    for b in case.buses:
        w(
            f"{b.bus} {b.pd * sb!r} {b.qd * sb!r} {b.v_min!r} {b.v_max!r} "
            f"{b.k_p!r} {b.k_q!r} {b.k_g!r}\n"
        )
    w(f"\nbranch: {_HEADERS['branch']}\n")
    for br in case.branches:
        w(
            f"{br.from_bus} {br.to_bus} {br.r!r} {br.x!r} {br.b_charging!r} "
            f"{br.s_max * sb!r} {br.tap!r}\n"
        )
    w(f"\ngen: {_HEADERS['gen']}\n")
    for g in case.generators:
        emf_m, xs_m, ig_m = scale_machine_constants(g.emf, g.xs, g.ig_max, sb, g.machine_base)
        w(
            f"{g.bus} {g.p_min * sb!r} {g.p_max * sb!r} {g.ramp_up * sb!r} "
            f"{g.ramp_down * sb!r} {g.pg_set * sb!r} {g.vg_set!r} "
            f"{emf_m!r} {xs_m!r} {ig_m!r} {math.degrees(g.delta_max)!r} "
            f"{g.machine_base!r} {int(g.is_slack)}\n"
        )
    if case.wind_farms:
        w(f"\nwind: {_HEADERS['wind']}\n")
        for f in case.wind_farms:
            w(f"{f.bus} {f.p_max * sb!r} {f.q_min * sb!r} {f.q_max * sb!r}\n")
    if case.electrolyzers:
        w(f"\np2h: {_HEADERS['p2h']}\n")
        for e in case.electrolyzers:
            w(
                f"{e.bus} {e.p_min * sb!r} {e.p_max * sb!r} {e.q_min * sb!r} "
                f"{e.q_max * sb!r} {e.eta!r}\n"
            )
    return out.getvalue()


PROFILE_COLUMNS = ["hour", "demand_p_MW", "demand_q_MVAr", "wind_available_MW"]


def load_profiles(path) -> list[HourlyProfile]:
    """Parse an hourly profile file (see module docstring for the schema)."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        filtered = (ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#"))
        reader = csv.reader(filtered)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != PROFILE_COLUMNS:
            raise CaseError(
                f"{path}: profile header must be {','.join(PROFILE_COLUMNS)!r}, got {header}"
            )
        for rec in reader:
            if len(rec) != 4:
                raise CaseError(f"{path}: profile rows need 4 columns, got {rec}")
            rows.append(
                HourlyProfile(
                    hour=int(rec[0]),
                    demand_p=float(rec[1]),
                    demand_q=float(rec[2]),
                    wind_available=float(rec[3]),
                )
            )
    validate_profiles(rows)
    return rows


def save_profiles(profiles: list[HourlyProfile], path) -> None:
    lines = [",".join(PROFILE_COLUMNS)]
    for p in profiles:
        lines.append(f"{p.hour},{p.demand_p!r},{p.demand_q!r},{p.wind_available!r}")
    Path(path).write_text("\n".join(lines) + "\n")


__all__ = [
    "load_case",
    "parse_case",
    "save_case",
    "dump_case",
    "load_profiles",
    "save_profiles",
    "CaseFormatError",
    "FORMAT_VERSION",
    "UNLIMITED_RATING_MVA",
    "PROFILE_COLUMNS",
]
