"""Network data model.

All electrical quantities on the records are stored in per-unit on the
system MVA base.  Machine constants (EMF, synchronous reactance, stator
current limit) are given on each machine's own MVA base in the case file and
converted to the system base at load time:

* reactance scales with ``base_mva / machine_base``,
* current limits scale with ``machine_base / base_mva``,
* the internal EMF is a voltage ratio and needs no conversion.

Demand baselines and generator/wind/electrolyzer ratings appear in MW/MVAr
in case files (see :mod:`h2margin.caseio`) and in pu here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class CaseError(ValueError):
    """Malformed or inconsistent case/profile data."""


@dataclass(frozen=True)
class BusRecord:
    bus: int
    pd: float  # baseline active demand, pu
    qd: float  # baseline reactive demand, pu
    v_min: float
    v_max: float
    k_p: float = 1.0  # active-demand growth factor toward the stressed point
    k_q: float = 1.0  # reactive-demand growth factor
    k_g: float = 1.0  # generation growth factor for generators at this bus


@dataclass(frozen=True)
class BranchRecord:
    from_bus: int
    to_bus: int
    r: float  # series resistance, pu
    x: float  # series reactance, pu
    b_charging: float = 0.0  # total line-charging susceptance, pu
    s_max: float = 0.0  # apparent-power rating, pu (0 in files means unlimited)
    tap: float = 1.0  # off-nominal turns ratio at the from side

    @property
    def series_admittance(self) -> complex:
        return 1.0 / complex(self.r, self.x)


@dataclass(frozen=True)
class GeneratorRecord:
    bus: int
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    pg_set: float  # baseline dispatch, pu (power-flow oracle default)
    vg_set: float  # baseline voltage setpoint (power-flow oracle default)
    emf: float  # internal EMF magnitude, pu voltage
    xs: float  # synchronous reactance, pu on the system base
    ig_max: float  # stator current limit, pu on the system base
    delta_max: float  # rotor-angle limit, rad
    machine_base: float  # machine MVA rating the file constants referred to
    is_slack: bool = False

    @property
    def big_m1(self) -> float:
        """Big-M constant for the reactive-ceiling selection rows."""
        return 2.0 * self.p_max

    @property
    def big_m2(self) -> float:
        """Big-M constant for the stressed-point redispatch rows."""
        return 2.0 * self.p_max


@dataclass(frozen=True)
class WindFarmRecord:
    bus: int
    p_max: float  # nameplate capacity, pu
    q_min: float = 0.0
    q_max: float = 0.0


@dataclass(frozen=True)
class ElectrolyzerRecord:
    bus: int
    p_min: float
    p_max: float
    q_min: float = 0.0
    q_max: float = 0.0
    eta: float = 13.90  # hydrogen yield, kg per MWh of electrical input


@dataclass(frozen=True)
class HourlyProfile:
    hour: int
    demand_p: float  # system-total active demand, MW
    demand_q: float  # system-total reactive demand, MVAr
    wind_available: float  # available output per wind farm, MW


@dataclass
class NetworkCase:
    name: str
    base_mva: float
    buses: list[BusRecord]
    branches: list[BranchRecord]
    generators: list[GeneratorRecord]
    wind_farms: list[WindFarmRecord] = field(default_factory=list)
    electrolyzers: list[ElectrolyzerRecord] = field(default_factory=list)

    # ------------------------------------------------------------------
    def __post_init__(self) -> None:
        self._index = {b.bus: i for i, b in enumerate(self.buses)}

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def bus_index(self, bus: int) -> int:
        try:
            return self._index[bus]
        except KeyError:
            raise CaseError(f"unknown bus id {bus}") from None

    def bus_indices(self, ids) -> np.ndarray:
        return np.array([self.bus_index(b) for b in ids], dtype=np.int64)

    @property
    def slack_index(self) -> int:
        for i, g in enumerate(self.generators):
            if g.is_slack:
                return i
        raise CaseError("case has no slack generator")

    @property
    def generator_buses(self) -> list[int]:
        return [g.bus for g in self.generators]

    def load_buses(self) -> list[int]:
        """Buses without a generator, in id order (default P2H candidates)."""
        gen = set(self.generator_buses)
        return [b.bus for b in self.buses if b.bus not in gen]

    def copy(self) -> "NetworkCase":
        return NetworkCase(
            name=self.name,
            base_mva=self.base_mva,
            buses=list(self.buses),
            branches=list(self.branches),
            generators=list(self.generators),
            wind_farms=list(self.wind_farms),
            electrolyzers=list(self.electrolyzers),
        )

    def with_electrolyzers(self, units: list[ElectrolyzerRecord]) -> "NetworkCase":
        case = self.copy()
        case.electrolyzers = units
        return case

    # ------------------------------------------------------------------
    def validate(self) -> None:
        """Raise :class:`CaseError` on structural problems."""
        if self.base_mva <= 0:
            raise CaseError("base_mva must be positive")
        if not self.buses:
            raise CaseError("case has no buses")
        ids = [b.bus for b in self.buses]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise CaseError(f"duplicate bus ids {dup}")
        for b in self.buses:
            if not (0.0 < b.v_min < b.v_max):
                raise CaseError(f"bus {b.bus}: need 0 < v_min < v_max")
        for br in self.branches:
            if br.from_bus == br.to_bus:
                raise CaseError(f"branch {br.from_bus}-{br.to_bus}: self loop")
            for end in (br.from_bus, br.to_bus):
                if end not in self._index:
                    raise CaseError(f"branch {br.from_bus}-{br.to_bus}: unknown bus {end}")
            if br.x == 0.0 and br.r == 0.0:
                raise CaseError(f"branch {br.from_bus}-{br.to_bus}: zero impedance")
            if br.tap <= 0.0:
                raise CaseError(f"branch {br.from_bus}-{br.to_bus}: tap must be positive")
            if br.s_max < 0.0:
                raise CaseError(f"branch {br.from_bus}-{br.to_bus}: negative rating")
        if not self.generators:
            raise CaseError("case has no generators")
        gbuses = self.generator_buses
        if len(set(gbuses)) != len(gbuses):
            raise CaseError("multiple generators on one bus are not supported")
        slack = [g for g in self.generators if g.is_slack]
        if len(slack) != 1:
            raise CaseError(f"expected exactly one slack generator, found {len(slack)}")
        for g in self.generators:
            if g.bus not in self._index:
                raise CaseError(f"generator at unknown bus {g.bus}")
            if not (0.0 <= g.p_min <= g.p_max):
                raise CaseError(f"generator {g.bus}: need 0 <= p_min <= p_max")
            if g.xs <= 0 or g.emf <= 0 or g.ig_max <= 0 or g.machine_base <= 0:
                raise CaseError(f"generator {g.bus}: machine constants must be positive")
            if not (0.0 < g.delta_max <= math.pi / 2):
                raise CaseError(f"generator {g.bus}: delta_max outside (0, pi/2]")
            if g.ramp_up < 0 or g.ramp_down < 0:
                raise CaseError(f"generator {g.bus}: negative ramp limit")
        for w in self.wind_farms:
            if w.bus not in self._index:
                raise CaseError(f"wind farm at unknown bus {w.bus}")
            if w.p_max < 0:
                raise CaseError(f"wind farm {w.bus}: negative capacity")
        for e in self.electrolyzers:
            if e.bus not in self._index:
                raise CaseError(f"electrolyzer at unknown bus {e.bus}")
            if not (0.0 <= e.p_min <= e.p_max):
                raise CaseError(f"electrolyzer {e.bus}: need 0 <= p_min <= p_max")
            if e.eta <= 0:
                raise CaseError(f"electrolyzer {e.bus}: yield must be positive")
        self._check_connected()

    def _check_connected(self) -> None:
        n = self.n_bus
        adj: list[list[int]] = [[] for _ in range(n)]
        for br in self.branches:
            i, j = self.bus_index(br.from_bus), self.bus_index(br.to_bus)
            adj[i].append(j)
            adj[j].append(i)
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in adj[i]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        if not seen.all():
            missing = [self.buses[i].bus for i in np.flatnonzero(~seen)]
            raise CaseError(f"disconnected network: buses {missing} unreachable")

    # ------------------------------------------------------------------
    def demand_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        pd = np.array([b.pd for b in self.buses])
        qd = np.array([b.qd for b in self.buses])
        return pd, qd


def scale_machine_constants(
    emf: float, xs: float, ig: float, machine_base: float, base_mva: float
) -> tuple[float, float, float]:
    """Convert machine-base constants to the system base."""
    ratio = base_mva / machine_base
    return emf, xs * ratio, ig / ratio


def nodal_demand(case: NetworkCase, profile: HourlyProfile) -> tuple[np.ndarray, np.ndarray]:
    """Per-bus demand (pu) for one hour.

    The hourly system totals are distributed over the buses proportionally
    to the baseline demand pattern of the case.
    """
    pd0, qd0 = case.demand_vectors()
    sp, sq = pd0.sum(), qd0.sum()
    if profile.demand_p != 0.0 and sp == 0.0:
        raise CaseError("zero baseline active demand cannot carry a nonzero profile")
    if profile.demand_q != 0.0 and sq == 0.0:
        raise CaseError("zero baseline reactive demand cannot carry a nonzero profile")
    pd = pd0 * (profile.demand_p / case.base_mva / sp) if sp != 0.0 else pd0 * 0.0
    qd = qd0 * (profile.demand_q / case.base_mva / sq) if sq != 0.0 else qd0 * 0.0
    return pd, qd


def validate_profiles(profiles: list[HourlyProfile]) -> None:
    if not profiles:
        raise CaseError("empty profile set")
    hours = [p.hour for p in profiles]
    if hours != list(range(1, len(hours) + 1)):
        raise CaseError(f"profile hours must be contiguous starting at 1, got {hours}")
    for p in profiles:
        if p.demand_p < 0 or p.wind_available < 0:
            raise CaseError(f"hour {p.hour}: negative demand or wind availability")


__all__ = [
    "BusRecord",
    "BranchRecord",
    "GeneratorRecord",
    "WindFarmRecord",
    "ElectrolyzerRecord",
    "HourlyProfile",
    "NetworkCase",
    "CaseError",
    "nodal_demand",
    "scale_machine_constants",
    "validate_profiles",
    "replace",
]
