"""Two-point hydrogen-harvest scenario assembly.

For every hour the model carries two linked AC operating points:

* the **operating point** (``c1``): the dispatch actually scheduled, and
* the **security limit point** (``c2``): the same system after demand grows by
  the required loading margin ``lam`` (``PD -> (1 + k_p lam) PD``), generation
  follows ``PG -> min((1 + k_g lam) PG, Pmax)``, and wind / hydrogen-plant
  injections stay fixed.

The link enforces that the scheduled dispatch keeps a certified voltage
margin: at ``c2`` every generator's reactive output must stay inside its
capability envelope (armature and field circles, under-excitation floor), a
big-M selector builds the envelope ceiling ``min(armature, field)``, and a
complementarity pair lets a generator bus voltage sag (ceiling reached) or
rise (floor reached) exactly when its reactive reserve is exhausted --
mirroring how tracking generators behave in the continuation oracle.

The objective maximises hydrogen mass produced by the plants over the horizon
(internally minimised as the negated, normalised sum of plant intakes).

All constraints expose exact first derivatives and exact Hessians through a
fixed sparse pattern assembled once per instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .admittance import build_admittance
from .records import NetworkCase, nodal_demand

_UNRATED = 0.99 * 10000.0


class ModelError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    """Knobs of one harvest study."""

    margin: float  # required loading margin (the value `lam` is pinned to)
    alpha: float = 0.3  # hourly wind-penetration cap: sum PW <= alpha * sum PD
    eta_ref: float = 13.90  # kg of hydrogen per MWh at reference efficiency
    curtailable_wind: bool = False  # stressed point may shed wind
    curtailable_p2h: bool = False  # stressed point may shed hydrogen load
    mode: str = "allocation"  # allocation (siting study) or dispatch


_HOUR_FIELDS = (
    ("vm1", "n"), ("va1", "n"), ("vm2", "n"), ("va2", "n"),
    ("pg1", "ng"), ("qg1", "ng"), ("pg2", "ng"), ("qg2", "ng"),
    ("pw1", "nw"), ("pw2", "nw"), ("ph1", "nh"), ("ph2", "nh"),
    ("ql1", "ng"), ("ql2", "ng"), ("qcap", "ng"),
    ("ysel", "ng"), ("zsel", "ng"), ("vsag", "ng"), ("vrise", "ng"),
)


class VarLayout:
    """Flat variable vector: hour-major blocks plus the trailing margin."""

    def __init__(self, n: int, ng: int, nw: int, nh: int, T: int):
        self.n, self.ng, self.nw, self.nh, self.T = n, ng, nw, nh, T
        sizes = {"n": n, "ng": ng, "nw": nw, "nh": nh}
        self.offsets: dict[str, int] = {}
        off = 0
        for name, key in _HOUR_FIELDS:
            self.offsets[name] = off
            off += sizes[key]
        self.per_hour = off
        self.n_var = T * off + 1
        self.lam = self.n_var - 1
        self._sizes = {name: sizes[key] for name, key in _HOUR_FIELDS}
        self._cache: dict[tuple[str, int], np.ndarray] = {}

    def idx(self, name: str, t: int) -> np.ndarray:
        key = (name, t)
        got = self._cache.get(key)
        if got is None:
            start = t * self.per_hour + self.offsets[name]
            got = np.arange(start, start + self._sizes[name], dtype=np.int64)
            self._cache[key] = got
        return got


class _CooPattern:
    """Fixed COO pattern with static values and named dynamic segments."""

    def __init__(self):
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self.segs: dict[tuple, slice] = {}
        self._nnz = 0

    def static(self, rows, cols, vals):
        r = np.asarray(rows, dtype=np.int64)
        self._rows.append(r)
        self._cols.append(np.asarray(cols, dtype=np.int64))
        self._vals.append(np.asarray(vals, dtype=float))
        self._nnz += r.size

    def dynamic(self, key, rows, cols):
        r = np.asarray(rows, dtype=np.int64)
        self._rows.append(r)
        self._cols.append(np.asarray(cols, dtype=np.int64))
        self._vals.append(np.zeros(r.size))
        self.segs[key] = slice(self._nnz, self._nnz + r.size)
        self._nnz += r.size

    def finalize(self, shape):
        self.rows = np.concatenate(self._rows) if self._rows else np.zeros(0, np.int64)
        self.cols = np.concatenate(self._cols) if self._cols else np.zeros(0, np.int64)
        self.template = np.concatenate(self._vals) if self._vals else np.zeros(0)
        self.shape = shape
        del self._rows, self._cols, self._vals

    def matrix(self, data):
        return sp.coo_matrix((data, (self.rows, self.cols)), shape=self.shape).tocsr()


def _cat(*parts):
    return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])


class ModelInstance:
    """Assembled scenario: residuals, Jacobians, Hessian, catalog, extraction."""

    def __init__(self, case: NetworkCase, profiles, config: ScenarioConfig):
        if not case.electrolyzers:
            raise ModelError(
                "the case defines no hydrogen plants; add units or candidate "
                "buses before building a harvest scenario"
            )
        if not profiles:
            raise ModelError("at least one hourly profile is required")
        case.validate()
        self.case = case
        self.config = config
        self.profiles = list(profiles)
        self.convex = False
        self.eps_compl = 1e-2  # complementarity relaxation, tightened by the solver

        n = case.n_bus
        gens = case.generators
        ng = len(gens)
        nw = len(case.wind_farms)
        nh = len(case.electrolyzers)
        T = len(self.profiles)
        self.layout = VarLayout(n, ng, nw, nh, T)
        L = self.layout

        self.Y = build_admittance(case)
        Y = self.Y
        od = Y.rows != Y.cols
        self._od_r = Y.rows[od]
        self._od_c = Y.cols[od]
        self._od_g = Y.gdata[od]
        self._od_b = Y.bdata[od]
        self._diag_g = Y.gdata[Y.diag]
        self._diag_b = Y.bdata[Y.diag]

        self.gbus = case.bus_indices(case.generator_buses)
        self.wbus = case.bus_indices([w.bus for w in case.wind_farms])
        self.hbus = case.bus_indices([u.bus for u in case.electrolyzers])
        self.slack_g = case.slack_index
        self.slack_bus = int(self.gbus[self.slack_g])
        self.nonslack = np.array(
            [g for g in range(ng) if g != self.slack_g], dtype=np.int64
        )

        self.ig = np.array([g.ig_max for g in gens])
        self.xs = np.array([g.xs for g in gens])
        self.emf = np.array([g.emf for g in gens])
        self.cot = np.array(
            [math.cos(g.delta_max) / math.sin(g.delta_max) for g in gens]
        )
        self.pgmax = np.array([g.p_max for g in gens])
        self.pgmin = np.array([g.p_min for g in gens])
        self.m1 = np.array([g.big_m1 for g in gens])
        self.m2 = np.array([g.big_m2 for g in gens])
        self.ramp_up = np.array([g.ramp_up for g in gens])
        self.ramp_dn = np.array([g.ramp_down for g in gens])
        self.kg = np.array([case.buses[case.bus_index(g.bus)].k_g for g in gens])
        self.kp = np.array([b.k_p for b in case.buses])
        self.kq = np.array([b.k_q for b in case.buses])
        self.vmin = np.array([b.v_min for b in case.buses])
        self.vmax = np.array([b.v_max for b in case.buses])

        self.pd1 = np.zeros((T, n))
        self.qd1 = np.zeros((T, n))
        for t, prof in enumerate(self.profiles):
            self.pd1[t], self.qd1[t] = nodal_demand(case, prof)

        avail = np.array([p.wind_available for p in self.profiles])
        top = avail.max() if avail.size and avail.max() > 0 else 1.0
        farm_cap = np.array([w.p_max for w in case.wind_farms])
        self.pw_cap = np.outer(avail / top, farm_cap)  # (T, nw)

        self.ph_max = np.array([u.p_max for u in case.electrolyzers])
        self.ph_min = np.array([u.p_min for u in case.electrolyzers])
        self.eta = np.array([u.eta for u in case.electrolyzers])

        # monitored branch ends (both directions of every rated branch)
        mon_i, mon_j, yii, yij, smax = [], [], [], [], []
        for e, br in enumerate(case.branches):
            if br.s_max <= 0.0 or br.s_max >= _UNRATED / case.base_mva:
                continue  # zero or sentinel rating means unlimited
            f, t_ = int(Y.f_idx[e]), int(Y.t_idx[e])
            mon_i += [f, t_]
            mon_j += [t_, f]
            yii += [Y.yff[e], Y.ytt[e]]
            yij += [Y.yft[e], Y.ytf[e]]
            smax += [br.s_max, br.s_max]
        self.mon_i = np.array(mon_i, dtype=np.int64)
        self.mon_j = np.array(mon_j, dtype=np.int64)
        self.mon_gii = np.real(np.array(yii)) if yii else np.zeros(0)
        self.mon_bii = np.imag(np.array(yii)) if yii else np.zeros(0)
        self.mon_gij = np.real(np.array(yij)) if yij else np.zeros(0)
        self.mon_bij = np.imag(np.array(yij)) if yij else np.zeros(0)
        self.smax2 = np.array(smax) ** 2 if smax else np.zeros(0)
        self.nm = self.mon_i.size

        self._build_rows()
        self._build_bounds()
        self._build_objective()
        self._build_jacobians()
        self._build_hessian_pattern()

    # ------------------------------------------------------------------
    # row bookkeeping

    def _families(self):
        L = self.layout
        T, n, ng, nw, nh, nm = L.T, L.n, L.ng, L.nw, L.nh, self.nm
        nns = self.nonslack.size
        eq = [
            ("active-balance-op", "balance", T * n),
            ("reactive-balance-op", "balance", T * n),
            ("active-balance-stressed", "balance", T * n),
            ("reactive-balance-stressed", "balance", T * n),
            ("angle-reference-op", "reference", T),
            ("angle-reference-stressed", "reference", T),
            ("armature-circle-stressed", "circle", T * ng),
            ("field-circle-stressed", "circle", T * ng),
            ("gen-voltage-link", "coupling", T * ng),
        ]
        if not self.config.curtailable_p2h:
            eq.append(("p2h-hold", "coupling", T * nh))
        if not self.config.curtailable_wind:
            eq.append(("wind-hold", "coupling", T * nw))
        eq.append(("margin-pin", "coupling", 1))
        ineq = [
            ("armature-circle-op", "capability", T * ng),
            ("field-circle-op", "capability", T * ng),
            ("underexcitation-op", "capability", T * ng),
            ("underexcitation-stressed", "capability", T * ng),
            ("ceiling-below-armature", "capability", T * ng),
            ("ceiling-below-field", "capability", T * ng),
            ("ceiling-select-armature", "selector-bigM", T * ng),
            ("ceiling-select-field", "selector-bigM", T * ng),
            ("reactive-below-ceiling", "capability", T * ng),
            ("stressed-pg-below-scaled", "selector-bigM", T * nns),
            ("stressed-pg-select-scaled", "selector-bigM", T * nns),
            ("stressed-pg-select-max", "selector-bigM", T * nns),
            ("ceiling-slackness", "complementarity", T * ng),
            ("floor-slackness", "complementarity", T * ng),
        ]
        if L.ng >= 2:
            ineq.append(("spinning-reserve", "reserve", T * ng))
        if nw:
            ineq.append(("wind-penetration", "policy", T))
        if T >= 2:
            ineq += [
                ("ramp-up-op", "ramp", (T - 1) * ng),
                ("ramp-down-op", "ramp", (T - 1) * ng),
                ("ramp-up-stressed", "ramp", (T - 1) * ng),
                ("ramp-down-stressed", "ramp", (T - 1) * ng),
            ]
        if nm:
            ineq += [
                ("branch-rating-op", "rating", T * nm),
                ("branch-rating-stressed", "rating", T * nm),
            ]
        if self.config.curtailable_p2h:
            ineq.append(("p2h-shed", "coupling", T * nh))
        if self.config.curtailable_wind:
            ineq.append(("wind-shed", "coupling", T * nw))
        return eq, ineq

    def _build_rows(self):
        eq, ineq = self._families()
        self.eq_off, self.ineq_off = {}, {}
        off = 0
        for name, kind, count in eq:
            self.eq_off[name] = off
            off += count
        self.m_eq = off
        off = 0
        for name, kind, count in ineq:
            self.ineq_off[name] = off
            off += count
        self.m_in = off
        self._eq_families = eq
        self._ineq_families = ineq

    def catalog(self):
        """Row census: every family with its class and count (binary selector
        relaxations included for completeness even though the solver handles
        them by penalty, not as residual rows)."""
        out = []
        for name, kind, count in self._eq_families:
            out.append({"family": name, "kind": kind, "rows": count, "side": "eq"})
        for name, kind, count in self._ineq_families:
            out.append({"family": name, "kind": kind, "rows": count, "side": "ineq"})
        T, ng = self.layout.T, self.layout.ng
        out.append(
            {"family": "circle-selector-binary", "kind": "binary", "rows": T * ng,
             "side": "relaxed"}
        )
        out.append(
            {"family": "pg-cap-selector-binary", "kind": "binary",
             "rows": T * self.nonslack.size, "side": "relaxed"}
        )
        return out

    # ------------------------------------------------------------------
    # bounds and objective

    def _build_bounds(self):
        L = self.layout
        lb = np.full(L.n_var, -np.inf)
        ub = np.full(L.n_var, np.inf)
        for t in range(L.T):
            for vmn in ("vm1", "vm2"):
                lb[L.idx(vmn, t)] = self.vmin
                ub[L.idx(vmn, t)] = self.vmax
            for pgn in ("pg1", "pg2"):
                lb[L.idx(pgn, t)] = self.pgmin
                ub[L.idx(pgn, t)] = self.pgmax
            for qgn in ("qg1", "qg2"):
                lb[L.idx(qgn, t)] = -self.m1
                ub[L.idx(qgn, t)] = self.m1
            for pwn in ("pw1", "pw2"):
                lb[L.idx(pwn, t)] = 0.0
                ub[L.idx(pwn, t)] = self.pw_cap[t]
            for phn in ("ph1", "ph2"):
                lb[L.idx(phn, t)] = self.ph_min
                ub[L.idx(phn, t)] = self.ph_max
            vg = self.gbus
            lb[L.idx("ql1", t)] = 0.0
            ub[L.idx("ql1", t)] = self.ig * self.vmax[vg]
            lb[L.idx("ql2", t)] = -self.vmax[vg] ** 2 / self.xs
            ub[L.idx("ql2", t)] = self.emf * self.vmax[vg] / self.xs
            lb[L.idx("qcap", t)] = -self.m1
            ub[L.idx("qcap", t)] = self.m1
            for bname in ("ysel", "zsel"):
                lb[L.idx(bname, t)] = 0.0
                ub[L.idx(bname, t)] = 1.0
            band = self.vmax[vg] - self.vmin[vg]
            for vn in ("vsag", "vrise"):
                lb[L.idx(vn, t)] = 0.0
                ub[L.idx(vn, t)] = band
        lb[L.lam] = min(0.0, self.config.margin) - 1.0
        ub[L.lam] = max(10.0, 2.0 * self.config.margin + 1.0)
        self.lb, self.ub = lb, ub

    def _build_objective(self):
        L = self.layout
        c = np.zeros(L.n_var)
        for t in range(L.T):
            c[L.idx("ph1", t)] = -self.eta / self.config.eta_ref
        self._obj_c = c
        self.binary_indices = np.concatenate(
            [L.idx("ysel", t) for t in range(L.T)]
            + [L.idx("zsel", t) for t in range(L.T)]
        )

    @property
    def n_var(self):
        return self.layout.n_var

    def objective(self, x):
        return float(self._obj_c @ x), self._obj_c

    def harvest_kg(self, x) -> float:
        """Total hydrogen mass over the horizon (kg, 1-hour periods)."""
        f, _ = self.objective(x)
        return -f * self.config.eta_ref * self.case.base_mva

    # ------------------------------------------------------------------
    # residuals

    def _inj(self, vm, va):
        from .kernels import polar_injections

        Y = self.Y
        return polar_injections(Y.rows, Y.cols, Y.gdata, Y.bdata, vm, va)

    def eq_residual(self, x):
        L = self.layout
        r = np.zeros(self.m_eq)
        lam = x[L.lam]
        off = self.eq_off
        for t in range(L.T):
            vm1, va1 = x[L.idx("vm1", t)], x[L.idx("va1", t)]
            vm2, va2 = x[L.idx("vm2", t)], x[L.idx("va2", t)]
            p1, q1 = self._inj(vm1, va1)
            p2, q2 = self._inj(vm2, va2)
            for (name, vm, pq, dem, pg, qg, pw, ph, scale) in (
                ("op", vm1, (p1, q1), (self.pd1[t], self.qd1[t]),
                 x[L.idx("pg1", t)], x[L.idx("qg1", t)],
                 x[L.idx("pw1", t)], x[L.idx("ph1", t)], 0.0),
                ("stressed", vm2, (p2, q2), (self.pd1[t], self.qd1[t]),
                 x[L.idx("pg2", t)], x[L.idx("qg2", t)],
                 x[L.idx("pw2", t)], x[L.idx("ph2", t)], lam),
            ):
                pd = dem[0] * (1.0 + self.kp * scale) if scale else dem[0]
                qd = dem[1] * (1.0 + self.kq * scale) if scale else dem[1]
                rp = -pd - pq[0]
                rq = -qd - pq[1]
                np.add.at(rp, self.gbus, pg)
                np.add.at(rq, self.gbus, qg)
                np.add.at(rp, self.wbus, pw)
                np.add.at(rp, self.hbus, -ph)
                r[off[f"active-balance-{name}"] + t * L.n:][: L.n] = rp
                r[off[f"reactive-balance-{name}"] + t * L.n:][: L.n] = rq
            r[off["angle-reference-op"] + t] = va1[self.slack_bus]
            r[off["angle-reference-stressed"] + t] = va2[self.slack_bus]

            pg2 = x[L.idx("pg2", t)]
            ql1 = x[L.idx("ql1", t)]
            ql2 = x[L.idx("ql2", t)]
            vg2 = vm2[self.gbus]
            r[off["armature-circle-stressed"] + t * L.ng:][: L.ng] = (
                ql1**2 + pg2**2 - (self.ig * vg2) ** 2
            )
            u = ql2 + vg2**2 / self.xs
            r[off["field-circle-stressed"] + t * L.ng:][: L.ng] = (
                u**2 + pg2**2 - (self.emf / self.xs * vg2) ** 2
            )
            r[off["gen-voltage-link"] + t * L.ng:][: L.ng] = (
                vg2 - vm1[self.gbus]
                - x[L.idx("vrise", t)] + x[L.idx("vsag", t)]
            )
            if not self.config.curtailable_p2h:
                r[off["p2h-hold"] + t * L.nh:][: L.nh] = (
                    x[L.idx("ph2", t)] - x[L.idx("ph1", t)]
                )
            if not self.config.curtailable_wind:
                r[off["wind-hold"] + t * L.nw:][: L.nw] = (
                    x[L.idx("pw2", t)] - x[L.idx("pw1", t)]
                )
        r[off["margin-pin"]] = lam - self.config.margin
        return r

    def ineq_residual(self, x):
        L = self.layout
        g = np.zeros(self.m_in)
        lam = x[L.lam]
        off = self.ineq_off
        ns = self.nonslack
        for t in range(L.T):
            vm1 = x[L.idx("vm1", t)]
            vm2 = x[L.idx("vm2", t)]
            vg1 = vm1[self.gbus]
            vg2 = vm2[self.gbus]
            pg1, qg1 = x[L.idx("pg1", t)], x[L.idx("qg1", t)]
            pg2, qg2 = x[L.idx("pg2", t)], x[L.idx("qg2", t)]
            ql1, ql2 = x[L.idx("ql1", t)], x[L.idx("ql2", t)]
            qcap = x[L.idx("qcap", t)]
            y, z = x[L.idx("ysel", t)], x[L.idx("zsel", t)]
            vsag, vrise = x[L.idx("vsag", t)], x[L.idx("vrise", t)]

            def put(name, vals, width=L.ng):
                g[off[name] + t * width:][:width] = vals

            put("armature-circle-op", pg1**2 + qg1**2 - (self.ig * vg1) ** 2)
            u1 = qg1 + vg1**2 / self.xs
            put("field-circle-op", pg1**2 + u1**2 - (self.emf / self.xs * vg1) ** 2)
            put("underexcitation-op", pg1 * self.cot - vg1**2 / self.xs - qg1)
            put("underexcitation-stressed", pg2 * self.cot - vg2**2 / self.xs - qg2)
            put("ceiling-below-armature", qcap - ql1)
            put("ceiling-below-field", qcap - ql2)
            put("ceiling-select-armature", ql1 - self.m1 * y - qcap)
            put("ceiling-select-field", ql2 - self.m1 * (1.0 - y) - qcap)
            put("reactive-below-ceiling", qg2 - qcap)
            scaled = (1.0 + self.kg[ns] * lam) * pg1[ns]
            put("stressed-pg-below-scaled", pg2[ns] - scaled, ns.size)
            put("stressed-pg-select-scaled",
                scaled - self.m2[ns] * z[ns] - pg2[ns], ns.size)
            put("stressed-pg-select-max",
                self.pgmax[ns] - self.m2[ns] * (1.0 - z[ns]) - pg2[ns], ns.size)
            put("ceiling-slackness", (qcap - qg2) * vsag - self.eps_compl)
            put("floor-slackness",
                (qg2 - pg2 * self.cot + vg2**2 / self.xs) * vrise - self.eps_compl)
            if L.ng >= 2:
                total = pg1.sum()
                put("spinning-reserve", total - (self.pgmax.sum() - self.pgmax))
            if L.nw:
                g[off["wind-penetration"] + t] = (
                    x[L.idx("pw1", t)].sum()
                    - self.config.alpha * self.pd1[t].sum()
                )
            if self.config.curtailable_p2h:
                put("p2h-shed", x[L.idx("ph2", t)] - x[L.idx("ph1", t)], L.nh)
            if self.config.curtailable_wind:
                put("wind-shed", x[L.idx("pw2", t)] - x[L.idx("pw1", t)], L.nw)
            if self.nm:
                for name, vm, va in (
                    ("branch-rating-op", vm1, x[L.idx("va1", t)]),
                    ("branch-rating-stressed", vm2, x[L.idx("va2", t)]),
                ):
                    pf, qf = self._mon_flow(vm, va)
                    g[off[name] + t * self.nm:][: self.nm] = (
                        pf**2 + qf**2 - self.smax2
                    )
        for t in range(1, L.T):
            pg1a = x[L.idx("pg1", t - 1)]
            pg1b = x[L.idx("pg1", t)]
            pg2a = x[L.idx("pg2", t - 1)]
            pg2b = x[L.idx("pg2", t)]
            s = (t - 1) * L.ng
            g[off["ramp-up-op"] + s:][: L.ng] = pg1b - pg1a - self.ramp_up
            g[off["ramp-down-op"] + s:][: L.ng] = pg1a - pg1b - self.ramp_dn
            g[off["ramp-up-stressed"] + s:][: L.ng] = pg2b - pg2a - self.ramp_up
            g[off["ramp-down-stressed"] + s:][: L.ng] = pg2a - pg2b - self.ramp_dn
        return g

    def _mon_flow(self, vm, va):
        vi = vm[self.mon_i]
        vj = vm[self.mon_j]
        th = va[self.mon_i] - va[self.mon_j]
        c, s = np.cos(th), np.sin(th)
        a = self.mon_gij * c + self.mon_bij * s
        f = self.mon_gij * s - self.mon_bij * c
        pf = vi**2 * self.mon_gii + vi * vj * a
        qf = -(vi**2) * self.mon_bii + vi * vj * f
        return pf, qf

    # ------------------------------------------------------------------
    # Jacobians

    def _build_jacobians(self):
        L = self.layout
        Y = self.Y
        JE = _CooPattern()
        JI = _CooPattern()
        off = self.eq_off
        ioff = self.ineq_off
        ns = self.nonslack
        ones = np.ones
        for t in range(L.T):
            vm1 = L.idx("vm1", t)
            va1 = L.idx("va1", t)
            vm2 = L.idx("vm2", t)
            va2 = L.idx("va2", t)
            pg1 = L.idx("pg1", t)
            qg1 = L.idx("qg1", t)
            pg2 = L.idx("pg2", t)
            qg2 = L.idx("qg2", t)
            pw1 = L.idx("pw1", t)
            pw2 = L.idx("pw2", t)
            ph1 = L.idx("ph1", t)
            ph2 = L.idx("ph2", t)
            ql1 = L.idx("ql1", t)
            ql2 = L.idx("ql2", t)
            qcap = L.idx("qcap", t)
            ysel = L.idx("ysel", t)
            zsel = L.idx("zsel", t)
            vsag = L.idx("vsag", t)
            vrise = L.idx("vrise", t)
            vg1 = vm1[self.gbus]
            vg2 = vm2[self.gbus]

            for name, (vmc, vac, pgc, qgc, pwc, phc) in (
                ("op", (vm1, va1, pg1, qg1, pw1, ph1)),
                ("stressed", (vm2, va2, pg2, qg2, pw2, ph2)),
            ):
                rp = off[f"active-balance-{name}"] + t * L.n
                rq = off[f"reactive-balance-{name}"] + t * L.n
                JE.static(rp + self.gbus, pgc, ones(L.ng))
                JE.static(rq + self.gbus, qgc, ones(L.ng))
                if L.nw:
                    JE.static(rp + self.wbus, pwc, ones(L.nw))
                JE.static(rp + self.hbus, phc, -ones(L.nh))
                JE.dynamic((f"p-va-{name}", t), rp + Y.rows, vac[Y.cols])
                JE.dynamic((f"p-vm-{name}", t), rp + Y.rows, vmc[Y.cols])
                JE.dynamic((f"q-va-{name}", t), rq + Y.rows, vac[Y.cols])
                JE.dynamic((f"q-vm-{name}", t), rq + Y.rows, vmc[Y.cols])
                if name == "stressed":
                    allb = np.arange(L.n, dtype=np.int64)
                    JE.static(rp + allb, np.full(L.n, L.lam),
                              -self.kp * self.pd1[t])
                    JE.static(rq + allb, np.full(L.n, L.lam),
                              -self.kq * self.qd1[t])
            JE.static([off["angle-reference-op"] + t], [va1[self.slack_bus]], [1.0])
            JE.static(
                [off["angle-reference-stressed"] + t], [va2[self.slack_bus]], [1.0]
            )

            gr = np.arange(L.ng, dtype=np.int64)
            arm = off["armature-circle-stressed"] + t * L.ng + gr
            JE.dynamic(("arm-ql1", t), arm, ql1)
            JE.dynamic(("arm-pg2", t), arm, pg2)
            JE.dynamic(("arm-vm2", t), arm, vg2)
            fld = off["field-circle-stressed"] + t * L.ng + gr
            JE.dynamic(("fld-ql2", t), fld, ql2)
            JE.dynamic(("fld-pg2", t), fld, pg2)
            JE.dynamic(("fld-vm2", t), fld, vg2)

            vl = off["gen-voltage-link"] + t * L.ng + gr
            JE.static(vl, vg2, ones(L.ng))
            JE.static(vl, vg1, -ones(L.ng))
            JE.static(vl, vrise, -ones(L.ng))
            JE.static(vl, vsag, ones(L.ng))
            if not self.config.curtailable_p2h:
                hr = off["p2h-hold"] + t * L.nh + np.arange(L.nh, dtype=np.int64)
                JE.static(hr, ph2, ones(L.nh))
                JE.static(hr, ph1, -ones(L.nh))
            if not self.config.curtailable_wind and L.nw:
                wr = off["wind-hold"] + t * L.nw + np.arange(L.nw, dtype=np.int64)
                JE.static(wr, pw2, ones(L.nw))
                JE.static(wr, pw1, -ones(L.nw))

            # ---- inequalities
            ca = ioff["armature-circle-op"] + t * L.ng + gr
            JI.dynamic(("carm-pg1", t), ca, pg1)
            JI.dynamic(("carm-qg1", t), ca, qg1)
            JI.dynamic(("carm-vm1", t), ca, vg1)
            cf = ioff["field-circle-op"] + t * L.ng + gr
            JI.dynamic(("cfld-pg1", t), cf, pg1)
            JI.dynamic(("cfld-qg1", t), cf, qg1)
            JI.dynamic(("cfld-vm1", t), cf, vg1)
            for name, pgc, qgc, vmc, key in (
                ("underexcitation-op", pg1, qg1, vg1, "uex1"),
                ("underexcitation-stressed", pg2, qg2, vg2, "uex2"),
            ):
                ru = ioff[name] + t * L.ng + gr
                JI.static(ru, pgc, self.cot)
                JI.static(ru, qgc, -ones(L.ng))
                JI.dynamic((key, t), ru, vmc)
            r = ioff["ceiling-below-armature"] + t * L.ng + gr
            JI.static(r, qcap, ones(L.ng))
            JI.static(r, ql1, -ones(L.ng))
            r = ioff["ceiling-below-field"] + t * L.ng + gr
            JI.static(r, qcap, ones(L.ng))
            JI.static(r, ql2, -ones(L.ng))
            r = ioff["ceiling-select-armature"] + t * L.ng + gr
            JI.static(r, ql1, ones(L.ng))
            JI.static(r, ysel, -self.m1)
            JI.static(r, qcap, -ones(L.ng))
            r = ioff["ceiling-select-field"] + t * L.ng + gr
            JI.static(r, ql2, ones(L.ng))
            JI.static(r, ysel, self.m1)
            JI.static(r, qcap, -ones(L.ng))
            r = ioff["reactive-below-ceiling"] + t * L.ng + gr
            JI.static(r, qg2, ones(L.ng))
            JI.static(r, qcap, -ones(L.ng))

            nr = np.arange(ns.size, dtype=np.int64)
            r = ioff["stressed-pg-below-scaled"] + t * ns.size + nr
            JI.static(r, pg2[ns], ones(ns.size))
            JI.dynamic(("pgma-pg1", t), r, pg1[ns])
            JI.dynamic(("pgma-lam", t), r, np.full(ns.size, L.lam))
            r = ioff["stressed-pg-select-scaled"] + t * ns.size + nr
            JI.static(r, pg2[ns], -ones(ns.size))
            JI.static(r, zsel[ns], -self.m2[ns])
            JI.dynamic(("pgmb-pg1", t), r, pg1[ns])
            JI.dynamic(("pgmb-lam", t), r, np.full(ns.size, L.lam))
            r = ioff["stressed-pg-select-max"] + t * ns.size + nr
            JI.static(r, pg2[ns], -ones(ns.size))
            JI.static(r, zsel[ns], self.m2[ns])

            r = ioff["ceiling-slackness"] + t * L.ng + gr
            JI.dynamic(("csl-qcap", t), r, qcap)
            JI.dynamic(("csl-qg2", t), r, qg2)
            JI.dynamic(("csl-vsag", t), r, vsag)
            r = ioff["floor-slackness"] + t * L.ng + gr
            JI.dynamic(("fsl-qg2", t), r, qg2)
            JI.dynamic(("fsl-pg2", t), r, pg2)
            JI.dynamic(("fsl-vm2", t), r, vg2)
            JI.dynamic(("fsl-vrise", t), r, vrise)

            if L.ng >= 2:
                r = ioff["spinning-reserve"] + t * L.ng
                rows = np.repeat(r + gr, L.ng)
                cols = np.tile(pg1, L.ng)
                JI.static(rows, cols, np.ones(L.ng * L.ng))
            if L.nw:
                r = ioff["wind-penetration"] + t
                JI.static(np.full(L.nw, r), pw1, ones(L.nw))
            if self.config.curtailable_p2h:
                hr = ioff["p2h-shed"] + t * L.nh + np.arange(L.nh, dtype=np.int64)
                JI.static(hr, ph2, ones(L.nh))
                JI.static(hr, ph1, -ones(L.nh))
            if self.config.curtailable_wind and L.nw:
                wr = ioff["wind-shed"] + t * L.nw + np.arange(L.nw, dtype=np.int64)
                JI.static(wr, pw2, ones(L.nw))
                JI.static(wr, pw1, -ones(L.nw))
            if self.nm:
                mr = np.arange(self.nm, dtype=np.int64)
                for name, vmc, vac, key in (
                    ("branch-rating-op", vm1, va1, "br1"),
                    ("branch-rating-stressed", vm2, va2, "br2"),
                ):
                    r = ioff[name] + t * self.nm + mr
                    JI.dynamic((f"{key}-vi", t), r, vmc[self.mon_i])
                    JI.dynamic((f"{key}-vj", t), r, vmc[self.mon_j])
                    JI.dynamic((f"{key}-ai", t), r, vac[self.mon_i])
                    JI.dynamic((f"{key}-aj", t), r, vac[self.mon_j])
        for t in range(1, L.T):
            gr = np.arange(L.ng, dtype=np.int64)
            s = (t - 1) * L.ng
            for name, cb, ca_, sign in (
                ("ramp-up-op", L.idx("pg1", t), L.idx("pg1", t - 1), 1.0),
                ("ramp-down-op", L.idx("pg1", t), L.idx("pg1", t - 1), -1.0),
                ("ramp-up-stressed", L.idx("pg2", t), L.idx("pg2", t - 1), 1.0),
                ("ramp-down-stressed", L.idx("pg2", t), L.idx("pg2", t - 1), -1.0),
            ):
                r = ioff[name] + s + gr
                JI.static(r, cb, sign * ones(L.ng))
                JI.static(r, ca_, -sign * ones(L.ng))
        JE.static([self.eq_off["margin-pin"]], [L.lam], [1.0])
        JE.finalize((self.m_eq, L.n_var))
        JI.finalize((self.m_in, L.n_var))
        self._JE, self._JI = JE, JI

    def jacobians(self, x):
        from .kernels import polar_flow_terms

        L = self.layout
        Y = self.Y
        lam = x[L.lam]
        de = self._JE.template.copy()
        di = self._JI.template.copy()
        es, isg = self._JE.segs, self._JI.segs
        ns = self.nonslack
        for t in range(L.T):
            for name, vmn, van in (("op", "vm1", "va1"), ("stressed", "vm2", "va2")):
                vm = x[L.idx(vmn, t)]
                va = x[L.idx(van, t)]
                _, _, dpa, dpv, dqa, dqv = polar_flow_terms(
                    Y.rows, Y.cols, Y.diag, Y.gdata, Y.bdata, vm, va
                )
                de[es[(f"p-va-{name}", t)]] = -dpa
                de[es[(f"p-vm-{name}", t)]] = -dpv
                de[es[(f"q-va-{name}", t)]] = -dqa
                de[es[(f"q-vm-{name}", t)]] = -dqv
            vm1 = x[L.idx("vm1", t)]
            vm2 = x[L.idx("vm2", t)]
            vg1 = vm1[self.gbus]
            vg2 = vm2[self.gbus]
            pg1 = x[L.idx("pg1", t)]
            qg1 = x[L.idx("qg1", t)]
            pg2 = x[L.idx("pg2", t)]
            qg2 = x[L.idx("qg2", t)]
            ql1 = x[L.idx("ql1", t)]
            ql2 = x[L.idx("ql2", t)]
            qcap = x[L.idx("qcap", t)]
            vsag = x[L.idx("vsag", t)]
            vrise = x[L.idx("vrise", t)]

            de[es[("arm-ql1", t)]] = 2.0 * ql1
            de[es[("arm-pg2", t)]] = 2.0 * pg2
            de[es[("arm-vm2", t)]] = -2.0 * self.ig**2 * vg2
            u2 = ql2 + vg2**2 / self.xs
            de[es[("fld-ql2", t)]] = 2.0 * u2
            de[es[("fld-pg2", t)]] = 2.0 * pg2
            de[es[("fld-vm2", t)]] = (
                4.0 * u2 * vg2 / self.xs - 2.0 * (self.emf / self.xs) ** 2 * vg2
            )

            di[isg[("carm-pg1", t)]] = 2.0 * pg1
            di[isg[("carm-qg1", t)]] = 2.0 * qg1
            di[isg[("carm-vm1", t)]] = -2.0 * self.ig**2 * vg1
            u1 = qg1 + vg1**2 / self.xs
            di[isg[("cfld-pg1", t)]] = 2.0 * pg1
            di[isg[("cfld-qg1", t)]] = 2.0 * u1
            di[isg[("cfld-vm1", t)]] = (
                4.0 * u1 * vg1 / self.xs - 2.0 * (self.emf / self.xs) ** 2 * vg1
            )
            di[isg[("uex1", t)]] = -2.0 * vg1 / self.xs
            di[isg[("uex2", t)]] = -2.0 * vg2 / self.xs

            di[isg[("pgma-pg1", t)]] = -(1.0 + self.kg[ns] * lam)
            di[isg[("pgma-lam", t)]] = -self.kg[ns] * pg1[ns]
            di[isg[("pgmb-pg1", t)]] = 1.0 + self.kg[ns] * lam
            di[isg[("pgmb-lam", t)]] = self.kg[ns] * pg1[ns]

            di[isg[("csl-qcap", t)]] = vsag
            di[isg[("csl-qg2", t)]] = -vsag
            di[isg[("csl-vsag", t)]] = qcap - qg2
            di[isg[("fsl-qg2", t)]] = vrise
            di[isg[("fsl-pg2", t)]] = -self.cot * vrise
            di[isg[("fsl-vm2", t)]] = 2.0 * vg2 / self.xs * vrise
            di[isg[("fsl-vrise", t)]] = qg2 - pg2 * self.cot + vg2**2 / self.xs

            if self.nm:
                for key, vmn, van in (("br1", "vm1", "va1"), ("br2", "vm2", "va2")):
                    vm = x[L.idx(vmn, t)]
                    va = x[L.idx(van, t)]
                    vi = vm[self.mon_i]
                    vj = vm[self.mon_j]
                    th = va[self.mon_i] - va[self.mon_j]
                    c, s = np.cos(th), np.sin(th)
                    a = self.mon_gij * c + self.mon_bij * s
                    f = self.mon_gij * s - self.mon_bij * c
                    pf = vi**2 * self.mon_gii + vi * vj * a
                    qf = -(vi**2) * self.mon_bii + vi * vj * f
                    dp_vi = 2 * vi * self.mon_gii + vj * a
                    dp_vj = vi * a
                    dp_ai = -vi * vj * f
                    dq_vi = -2 * vi * self.mon_bii + vj * f
                    dq_vj = vi * f
                    dq_ai = vi * vj * a
                    di[isg[(f"{key}-vi", t)]] = 2 * pf * dp_vi + 2 * qf * dq_vi
                    di[isg[(f"{key}-vj", t)]] = 2 * pf * dp_vj + 2 * qf * dq_vj
                    di[isg[(f"{key}-ai", t)]] = 2 * pf * dp_ai + 2 * qf * dq_ai
                    di[isg[(f"{key}-aj", t)]] = -(2 * pf * dp_ai + 2 * qf * dq_ai)
        return self._JE.matrix(de), self._JI.matrix(di)

    # ------------------------------------------------------------------
    # Hessian of the constraint Lagrangian

    def _build_hessian_pattern(self):
        L = self.layout
        H = _CooPattern()
        gr = np.arange(L.ng, dtype=np.int64)
        ns = self.nonslack
        r_od, c_od = self._od_r, self._od_c
        for t in range(L.T):
            for name, vmn, van in (("op", "vm1", "va1"), ("stressed", "vm2", "va2")):
                vmi = L.idx(vmn, t)
                vai = L.idx(van, t)
                vb, vk = vmi[r_od], vmi[c_od]
                ab, ak = vai[r_od], vai[c_od]
                H.dynamic((f"bal-vbvk-{name}", t), _ii(vb, vk), _ii(vk, vb))
                H.dynamic((f"bal-vbab-{name}", t), _ii(vb, ab), _ii(ab, vb))
                H.dynamic((f"bal-vbak-{name}", t), _ii(vb, ak), _ii(ak, vb))
                H.dynamic((f"bal-vkab-{name}", t), _ii(vk, ab), _ii(ab, vk))
                H.dynamic((f"bal-vkak-{name}", t), _ii(vk, ak), _ii(ak, vk))
                H.dynamic((f"bal-abab-{name}", t), ab, ab)
                H.dynamic((f"bal-akak-{name}", t), ak, ak)
                H.dynamic((f"bal-abak-{name}", t), _ii(ab, ak), _ii(ak, ab))
                H.dynamic((f"bal-diag-{name}", t), vmi, vmi)

            vg1 = L.idx("vm1", t)[self.gbus]
            vg2 = L.idx("vm2", t)[self.gbus]
            pg1 = L.idx("pg1", t)
            qg1 = L.idx("qg1", t)
            pg2 = L.idx("pg2", t)
            qg2 = L.idx("qg2", t)
            ql1 = L.idx("ql1", t)
            ql2 = L.idx("ql2", t)
            qcap = L.idx("qcap", t)
            vsag = L.idx("vsag", t)
            vrise = L.idx("vrise", t)

            H.dynamic(("h-arm", t), _cat3(ql1, pg2, vg2), _cat3(ql1, pg2, vg2))
            H.dynamic(("h-fld-diag", t), _cat3(ql2, pg2, vg2), _cat3(ql2, pg2, vg2))
            H.dynamic(("h-fld-x", t), _ii(ql2, vg2), _ii(vg2, ql2))
            H.dynamic(("h-carm", t), _cat3(pg1, qg1, vg1), _cat3(pg1, qg1, vg1))
            H.dynamic(("h-cfld-diag", t), _cat3(pg1, qg1, vg1), _cat3(pg1, qg1, vg1))
            H.dynamic(("h-cfld-x", t), _ii(qg1, vg1), _ii(vg1, qg1))
            H.dynamic(("h-uex1", t), vg1, vg1)
            H.dynamic(("h-uex2", t), vg2, vg2)
            H.dynamic(("h-pgma", t), _ii(pg1[ns], np.full(ns.size, L.lam)),
                      _ii(np.full(ns.size, L.lam), pg1[ns]))
            H.dynamic(("h-pgmb", t), _ii(pg1[ns], np.full(ns.size, L.lam)),
                      _ii(np.full(ns.size, L.lam), pg1[ns]))
            H.dynamic(("h-csl-a", t), _ii(qcap, vsag), _ii(vsag, qcap))
            H.dynamic(("h-csl-b", t), _ii(qg2, vsag), _ii(vsag, qg2))
            H.dynamic(("h-fsl-a", t), _ii(qg2, vrise), _ii(vrise, qg2))
            H.dynamic(("h-fsl-b", t), _ii(pg2, vrise), _ii(vrise, pg2))
            H.dynamic(("h-fsl-c", t), _ii(vg2, vrise), _ii(vrise, vg2))
            H.dynamic(("h-fsl-d", t), vg2, vg2)

            if self.nm:
                for key, vmn, van in (("br1", "vm1", "va1"), ("br2", "vm2", "va2")):
                    vmi = L.idx(vmn, t)
                    vai = L.idx(van, t)
                    vi = vmi[self.mon_i]
                    vj = vmi[self.mon_j]
                    ai = vai[self.mon_i]
                    aj = vai[self.mon_j]
                    cols4 = (vi, vj, ai, aj)
                    rows_all, cols_all = [], []
                    for p in range(4):
                        for q in range(4):
                            rows_all.append(cols4[p])
                            cols_all.append(cols4[q])
                    H.dynamic((f"h-{key}", t),
                              np.concatenate(rows_all), np.concatenate(cols_all))
        H.finalize((L.n_var, L.n_var))
        self._H = H

    def hessian(self, x, y_eq, y_in, obj_weight=1.0):
        """Sparse symmetric Hessian of y_eq . c_E(x) + y_in . c_I(x);
        obj_weight is accepted for protocol compatibility but the
        objective is linear, so its Hessian is zero."""
        L = self.layout
        H = self._H
        data = H.template.copy()
        segs = H.segs
        lam = x[L.lam]
        eoff = self.eq_off
        ioff = self.ineq_off
        ns = self.nonslack
        r_od, c_od = self._od_r, self._od_c
        G, B = self._od_g, self._od_b
        for t in range(L.T):
            for name, vmn, van in (("op", "vm1", "va1"), ("stressed", "vm2", "va2")):
                vm = x[L.idx(vmn, t)]
                va = x[L.idx(van, t)]
                aP = -y_eq[eoff[f"active-balance-{name}"] + t * L.n:][: L.n]
                aQ = -y_eq[eoff[f"reactive-balance-{name}"] + t * L.n:][: L.n]
                vb = vm[r_od]
                vk = vm[c_od]
                th = va[r_od] - va[c_od]
                c, s = np.cos(th), np.sin(th)
                A = G * c + B * s
                F = G * s - B * c
                wb = aP[r_od]
                wq = aQ[r_od]
                phi = wb * A + wq * F
                psi = -wb * F + wq * A
                vvphi = vb * vk * phi
                data[segs[(f"bal-vbvk-{name}", t)]] = _dd(phi, phi)
                data[segs[(f"bal-vbab-{name}", t)]] = _dd(vk * psi, vk * psi)
                data[segs[(f"bal-vbak-{name}", t)]] = _dd(-vk * psi, -vk * psi)
                data[segs[(f"bal-vkab-{name}", t)]] = _dd(vb * psi, vb * psi)
                data[segs[(f"bal-vkak-{name}", t)]] = _dd(-vb * psi, -vb * psi)
                data[segs[(f"bal-abab-{name}", t)]] = -vvphi
                data[segs[(f"bal-akak-{name}", t)]] = -vvphi
                data[segs[(f"bal-abak-{name}", t)]] = _dd(vvphi, vvphi)
                data[segs[(f"bal-diag-{name}", t)]] = 2.0 * (
                    aP * self._diag_g - aQ * self._diag_b
                )
            vm1 = x[L.idx("vm1", t)]
            vm2 = x[L.idx("vm2", t)]
            vg1 = vm1[self.gbus]
            vg2 = vm2[self.gbus]
            qg1 = x[L.idx("qg1", t)]
            ql2 = x[L.idx("ql2", t)]
            vrise = x[L.idx("vrise", t)]

            w = y_eq[eoff["armature-circle-stressed"] + t * L.ng:][: L.ng]
            data[segs[("h-arm", t)]] = _cat(
                2 * w, 2 * w, -2 * w * self.ig**2
            )
            w = y_eq[eoff["field-circle-stressed"] + t * L.ng:][: L.ng]
            u2 = ql2 + vg2**2 / self.xs
            data[segs[("h-fld-diag", t)]] = _cat(
                2 * w, 2 * w,
                w * (4 * u2 / self.xs + 8 * vg2**2 / self.xs**2
                     - 2 * (self.emf / self.xs) ** 2),
            )
            data[segs[("h-fld-x", t)]] = _dd(
                w * 4 * vg2 / self.xs, w * 4 * vg2 / self.xs
            )
            w = y_in[ioff["armature-circle-op"] + t * L.ng:][: L.ng]
            data[segs[("h-carm", t)]] = _cat(2 * w, 2 * w, -2 * w * self.ig**2)
            w = y_in[ioff["field-circle-op"] + t * L.ng:][: L.ng]
            u1 = qg1 + vg1**2 / self.xs
            data[segs[("h-cfld-diag", t)]] = _cat(
                2 * w, 2 * w,
                w * (4 * u1 / self.xs + 8 * vg1**2 / self.xs**2
                     - 2 * (self.emf / self.xs) ** 2),
            )
            data[segs[("h-cfld-x", t)]] = _dd(
                w * 4 * vg1 / self.xs, w * 4 * vg1 / self.xs
            )
            w = y_in[ioff["underexcitation-op"] + t * L.ng:][: L.ng]
            data[segs[("h-uex1", t)]] = -2 * w / self.xs
            w = y_in[ioff["underexcitation-stressed"] + t * L.ng:][: L.ng]
            data[segs[("h-uex2", t)]] = -2 * w / self.xs

            wa = y_in[ioff["stressed-pg-below-scaled"] + t * ns.size:][: ns.size]
            data[segs[("h-pgma", t)]] = _dd(
                -wa * self.kg[ns], -wa * self.kg[ns]
            )
            wb_ = y_in[ioff["stressed-pg-select-scaled"] + t * ns.size:][: ns.size]
            data[segs[("h-pgmb", t)]] = _dd(wb_ * self.kg[ns], wb_ * self.kg[ns])

            w = y_in[ioff["ceiling-slackness"] + t * L.ng:][: L.ng]
            data[segs[("h-csl-a", t)]] = _dd(w, w)
            data[segs[("h-csl-b", t)]] = _dd(-w, -w)
            w = y_in[ioff["floor-slackness"] + t * L.ng:][: L.ng]
            data[segs[("h-fsl-a", t)]] = _dd(w, w)
            data[segs[("h-fsl-b", t)]] = _dd(-w * self.cot, -w * self.cot)
            data[segs[("h-fsl-c", t)]] = _dd(
                2 * w * vg2 / self.xs, 2 * w * vg2 / self.xs
            )
            data[segs[("h-fsl-d", t)]] = 2 * w * vrise / self.xs

            if self.nm:
                for key, vmn, van, rname in (
                    ("br1", "vm1", "va1", "branch-rating-op"),
                    ("br2", "vm2", "va2", "branch-rating-stressed"),
                ):
                    w = y_in[ioff[rname] + t * self.nm:][: self.nm]
                    vm = x[L.idx(vmn, t)]
                    va = x[L.idx(van, t)]
                    data[segs[(f"h-{key}", t)]] = self._branch_hess_entries(vm, va, w)
        return H.matrix(data)

    def _branch_hess_entries(self, vm, va, w):
        vi = vm[self.mon_i]
        vj = vm[self.mon_j]
        th = va[self.mon_i] - va[self.mon_j]
        c, s = np.cos(th), np.sin(th)
        a = self.mon_gij * c + self.mon_bij * s
        f = self.mon_gij * s - self.mon_bij * c
        gii, bii = self.mon_gii, self.mon_bii
        pf = vi**2 * gii + vi * vj * a
        qf = -(vi**2) * bii + vi * vj * f
        dp = (2 * vi * gii + vj * a, vi * a, -vi * vj * f, vi * vj * f)
        dq = (-2 * vi * bii + vj * f, vi * f, vi * vj * a, -vi * vj * a)
        # curvature of P and Q over (vi, vj, ai, aj); zeros where flat
        zero = np.zeros_like(vi)
        hp = {
            (0, 0): 2 * gii, (0, 1): a, (0, 2): -vj * f, (0, 3): vj * f,
            (1, 1): zero, (1, 2): -vi * f, (1, 3): vi * f,
            (2, 2): -vi * vj * a, (2, 3): vi * vj * a, (3, 3): -vi * vj * a,
        }
        hq = {
            (0, 0): -2 * bii, (0, 1): f, (0, 2): vj * a, (0, 3): -vj * a,
            (1, 1): zero, (1, 2): vi * a, (1, 3): -vi * a,
            (2, 2): -vi * vj * f, (2, 3): vi * vj * f, (3, 3): -vi * vj * f,
        }
        out = []
        for p in range(4):
            for q in range(4):
                key = (p, q) if p <= q else (q, p)
                curv = hp[key] * pf + hq[key] * qf
                out.append(w * 2.0 * (dp[p] * dp[q] + dq[p] * dq[q] + curv))
        return np.concatenate(out)

    # ------------------------------------------------------------------
    # starting points

    def initial_point(self, strategy: str = "powerflow") -> np.ndarray:
        if strategy == "flat":
            return self._flat_start()
        if strategy == "powerflow":
            return self._powerflow_start()
        raise ModelError(f"unknown start strategy: {strategy!r}")

    def _flat_start(self) -> np.ndarray:
        L = self.layout
        x = np.zeros(L.n_var)
        vmid = 0.5 * (self.vmin + self.vmax)
        lm = self.config.margin
        for t in range(L.T):
            x[L.idx("vm1", t)] = vmid
            x[L.idx("vm2", t)] = vmid
            pg = np.clip([g.pg_set for g in self.case.generators],
                         self.pgmin, self.pgmax)
            x[L.idx("pg1", t)] = pg
            pg2 = np.minimum((1.0 + self.kg * lm) * pg, self.pgmax)
            pg2[self.slack_g] = pg[self.slack_g]
            x[L.idx("pg2", t)] = pg2
            x[L.idx("pw1", t)] = 0.5 * self.pw_cap[t]
            x[L.idx("pw2", t)] = 0.5 * self.pw_cap[t]
            x[L.idx("ph1", t)] = self.ph_min
            x[L.idx("ph2", t)] = self.ph_min
            self._fill_envelope_aux(x, t)
        x[L.lam] = lm
        return x

    def _powerflow_start(self) -> np.ndarray:
        from .powerflow import Dispatch, newton_solve

        L = self.layout
        lm = self.config.margin
        x = self._flat_start()
        vg_set = np.clip(
            [g.vg_set for g in self.case.generators],
            self.vmin[self.gbus] + 1e-3, self.vmax[self.gbus] - 1e-3,
        )
        pg_ref = np.clip(
            [g.pg_set for g in self.case.generators], self.pgmin, self.pgmax
        )
        share = pg_ref / max(pg_ref.sum(), 1e-9)
        for t in range(L.T):
            pw = self.pw_cap[t].copy()
            total_pd = self.pd1[t].sum()
            if pw.sum() > self.config.alpha * total_pd and pw.sum() > 0:
                pw *= self.config.alpha * total_pd / pw.sum()
            target = max(total_pd * 1.01 - pw.sum(), 0.0)
            pg = np.minimum(share * target, 0.98 * self.pgmax)
            d1 = Dispatch(
                pg=pg, vg=vg_set,
                pd=self.pd1[t].copy(), qd=self.qd1[t].copy(),
                pw=pw, qw=np.zeros(L.nw),
                ph=self.ph_min.copy(), qh=np.zeros(L.nh),
            )
            pt1, rep1 = newton_solve(self.case, d1, self.Y, enforce_q_limits=False)
            if not rep1.converged:
                continue  # keep flat values for this hour
            x[L.idx("vm1", t)] = np.clip(
                pt1.vm, self.vmin + 1e-4, self.vmax - 1e-4
            )
            x[L.idx("va1", t)] = pt1.va
            x[L.idx("pg1", t)] = np.clip(pt1.pg, self.pgmin, 0.999 * self.pgmax)
            x[L.idx("qg1", t)] = np.clip(pt1.qg, -self.m1 + 1e-3, self.m1 - 1e-3)
            x[L.idx("pw1", t)] = pw
            x[L.idx("pw2", t)] = pw
            d2 = Dispatch(
                pg=np.minimum((1.0 + self.kg * lm) * pt1.pg, self.pgmax),
                vg=pt1.vm[self.gbus],
                pd=(1.0 + self.kp * lm) * self.pd1[t],
                qd=(1.0 + self.kq * lm) * self.qd1[t],
                pw=pw, qw=np.zeros(L.nw),
                ph=self.ph_min.copy(), qh=np.zeros(L.nh),
            )
            pt2, rep2 = newton_solve(
                self.case, d2, self.Y, enforce_q_limits=False,
                vm0=pt1.vm.copy(), va0=pt1.va.copy(),
            )
            if not rep2.converged:
                pt2 = pt1
            x[L.idx("vm2", t)] = np.clip(
                pt2.vm, self.vmin + 1e-4, self.vmax - 1e-4
            )
            x[L.idx("va2", t)] = pt2.va
            x[L.idx("pg2", t)] = np.clip(pt2.pg, self.pgmin, 0.999 * self.pgmax)
            x[L.idx("qg2", t)] = np.clip(pt2.qg, -self.m1 + 1e-3, self.m1 - 1e-3)
            self._fill_envelope_aux(x, t)
        x[L.lam] = lm
        return x

    def _fill_envelope_aux(self, x, t):
        """Derive circle auxiliaries, selector seeds and voltage splits from
        the operating-point variables already placed in ``x``."""
        L = self.layout
        lm = self.config.margin
        vg1 = x[L.idx("vm1", t)][self.gbus]
        vg2 = x[L.idx("vm2", t)][self.gbus]
        pg1 = x[L.idx("pg1", t)]
        pg2 = x[L.idx("pg2", t)]
        ql1 = np.sqrt(np.maximum((self.ig * vg2) ** 2 - pg2**2, 1e-4))
        ql2 = (
            np.sqrt(np.maximum((self.emf / self.xs * vg2) ** 2 - pg2**2, 1e-4))
            - vg2**2 / self.xs
        )
        x[L.idx("ql1", t)] = ql1
        x[L.idx("ql2", t)] = ql2
        x[L.idx("qcap", t)] = np.minimum(ql1, ql2)
        x[L.idx("ysel", t)] = np.where(ql1 <= ql2, 0.15, 0.85)
        scaled = (1.0 + self.kg * lm) * pg1
        x[L.idx("zsel", t)] = np.where(scaled <= self.pgmax, 0.15, 0.85)
        dv = vg2 - vg1
        x[L.idx("vsag", t)] = np.maximum(-dv, 0.0) + 1e-4
        x[L.idx("vrise", t)] = np.maximum(dv, 0.0) + 1e-4

    # ------------------------------------------------------------------
    # solution extraction

    def extract_solution(self, x) -> "SolutionBundle":
        from .powerflow import OperatingPoint, mismatch

        L = self.layout
        hours = []
        for t in range(L.T):
            pts = {}
            for cls, vmn, van, pgn, qgn, pwn, phn in (
                ("cop", "vm1", "va1", "pg1", "qg1", "pw1", "ph1"),
                ("slp", "vm2", "va2", "pg2", "qg2", "pw2", "ph2"),
            ):
                pts[cls] = OperatingPoint(
                    vm=x[L.idx(vmn, t)].copy(),
                    va=x[L.idx(van, t)].copy(),
                    pg=x[L.idx(pgn, t)].copy(),
                    qg=x[L.idx(qgn, t)].copy(),
                    pw=x[L.idx(pwn, t)].copy(),
                    qw=np.zeros(L.nw),
                    ph=x[L.idx(phn, t)].copy(),
                    qh=np.zeros(L.nh),
                    hour=self.profiles[t].hour,
                    point_class=cls,
                )
            lam = x[L.lam]
            dp1, dq1 = mismatch(self.case, pts["cop"], self.pd1[t], self.qd1[t], self.Y)
            dp2, dq2 = mismatch(
                self.case, pts["slp"],
                (1.0 + self.kp * lam) * self.pd1[t],
                (1.0 + self.kq * lam) * self.qd1[t],
                self.Y,
            )
            hours.append(
                HourSolution(
                    hour=self.profiles[t].hour,
                    cop=pts["cop"],
                    slp=pts["slp"],
                    p2h_mw=float(x[L.idx("ph1", t)].sum() * self.case.base_mva),
                    wind_mw=float(x[L.idx("pw1", t)].sum() * self.case.base_mva),
                    kg=float(
                        (self.eta * x[L.idx("ph1", t)]).sum() * self.case.base_mva
                    ),
                    mismatch_cop=float(max(np.abs(dp1).max(), np.abs(dq1).max())),
                    mismatch_slp=float(max(np.abs(dp2).max(), np.abs(dq2).max())),
                    ceiling=x[L.idx("qcap", t)].copy(),
                    circle_selector=x[L.idx("ysel", t)].copy(),
                    cap_selector=x[L.idx("zsel", t)].copy(),
                    v_sag=x[L.idx("vsag", t)].copy(),
                    v_rise=x[L.idx("vrise", t)].copy(),
                )
            )
        return SolutionBundle(
            margin=float(x[L.lam]),
            harvest_kg=self.harvest_kg(x),
            hours=hours,
            p2h_buses=[u.bus for u in self.case.electrolyzers],
            base_mva=self.case.base_mva,
        )


def _ii(a, b):
    return np.concatenate([np.asarray(a, np.int64), np.asarray(b, np.int64)])


def _dd(a, b):
    return np.concatenate([np.asarray(a, float), np.asarray(b, float)])


def _cat3(a, b, c):
    return np.concatenate(
        [np.asarray(a, np.int64), np.asarray(b, np.int64), np.asarray(c, np.int64)]
    )


@dataclass
class HourSolution:
    hour: int
    cop: object
    slp: object
    p2h_mw: float
    wind_mw: float
    kg: float
    mismatch_cop: float
    mismatch_slp: float
    ceiling: np.ndarray
    circle_selector: np.ndarray
    cap_selector: np.ndarray
    v_sag: np.ndarray
    v_rise: np.ndarray


@dataclass
class SolutionBundle:
    margin: float
    harvest_kg: float
    hours: list
    p2h_buses: list
    base_mva: float = 100.0

    def allocation_energy_mwh(self) -> dict[int, float]:
        """Hydrogen-plant energy absorbed per bus over the horizon (MWh)."""
        acc = np.zeros(len(self.p2h_buses))
        for h in self.hours:
            acc += h.cop.ph
        mwh = acc * self.base_mva
        return {b: float(v) for b, v in zip(self.p2h_buses, mwh)}

    def allocation_peak_mw(self) -> dict[int, float]:
        """Largest hourly hydrogen-plant intake per bus (MW)."""
        peak = np.zeros(len(self.p2h_buses))
        for h in self.hours:
            peak = np.maximum(peak, h.cop.ph)
        mw = peak * self.base_mva
        return {b: float(v) for b, v in zip(self.p2h_buses, mw)}

    def hourly_p2h_mw(self) -> list[tuple[int, float]]:
        return [(h.hour, h.p2h_mw) for h in self.hours]


def assemble(case: NetworkCase, profiles, config: ScenarioConfig) -> ModelInstance:
    """Build a solvable scenario for ``case`` over ``profiles``."""
    return ModelInstance(case, profiles, config)


__all__ = [
    "ScenarioConfig",
    "VarLayout",
    "ModelInstance",
    "ModelError",
    "SolutionBundle",
    "HourSolution",
    "assemble",
]
