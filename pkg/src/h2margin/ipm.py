"""Primal-dual interior-point solver with a filter line search.

Solves instances exposing the protocol used by the scenario model::

    n_var, lb, ub                         box bounds (+-inf allowed)
    objective(x)    -> (f, grad)
    eq_residual(x)  -> c_E(x)      (target 0)
    ineq_residual(x)-> c_I(x)      (target <= 0)
    jacobians(x)    -> (J_E, J_I)  sparse
    hessian(x, y_eq, y_in, obj_weight=1.0) -> sparse symmetric Lagrangian part
    binary_indices  (optional)     columns required to end at {0, 1}
    eps_compl       (optional)     complementarity relaxation the solver drives
    convex          (optional)     certifies global optimality when converged

Inequalities receive slacks (c_I + s = 0, s > 0); bounds are handled with a
primal log barrier.  Binary columns are driven to integrality by a quadratic
penalty ``rho * sum (b - b^2)^2`` whose weight grows geometrically, after
which the binaries are rounded, frozen, and the continuous problem is
re-polished.  Steps come from a regularised symmetric KKT system; a
Wachter-Biegler-style filter accepts or rejects trial points, and a
least-squares restoration phase rescues the iteration when no step is
acceptable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass
class SolverOptions:
    tol: float = 1e-6
    mu_init: float = 0.1
    mu_min: float = 1e-9
    stage_mu_floor: float = 1e-5  # barrier depth for intermediate penalty stages
    max_iter: int = 800  # global Newton-iteration budget
    stage_iter: int = 160  # budget per penalty stage
    rho_init: float = 10.0
    rho_max: float = 1e8
    eps_compl_init: float = 1e-2
    # Final relaxation sits below the 1e-6 slackness-product budget so that
    # products parking exactly on the relaxed boundary still clear it.
    eps_compl_final: float = 8e-7
    binary_tol: float = 1e-5
    round_frac_tol: float = 1e-2  # b*(1-b) level at which rounding is safe
    round_threshold: float = 0.5
    delta_c: float = 1e-8
    # tiny inward shift of every inequality; gives opposing big-M row pairs
    # an interior so their multipliers stay bounded once selectors are fixed
    ineq_relax: float = 1e-8
    alpha_min: float = 1e-11
    verbose: bool = False


@dataclass
class SolveReport:
    status: str
    objective: float
    x: np.ndarray
    y_eq: np.ndarray
    y_in: np.ndarray
    iterations: int
    mu: float
    rho: float
    kkt: dict
    binaries_rounded: bool
    violation: float = 0.0  # worst unscaled constraint violation
    integrality_gap: float = 0.0  # max distance of a selector from {0, 1}
    wall_time: float = 0.0
    message: str = ""
    history: list = field(default_factory=list)


class _Problem:
    """Instance wrapper applying row/objective scaling computed at x0 and a
    tiny inward inequality relaxation."""

    def __init__(self, inst, x0, ineq_relax=0.0):
        self.inst = inst
        self.relax = ineq_relax
        f0, g0 = inst.objective(x0)
        self.obj_scale = 1.0 / max(1.0, np.abs(g0).max() if g0.size else 1.0)
        JE, JI = inst.jacobians(x0)
        self.re = self._row_scale(JE)
        self.ri = self._row_scale(JI)
        self._De = sp.diags(self.re)
        self._Di = sp.diags(self.ri)

    @staticmethod
    def _row_scale(J):
        if J.shape[0] == 0:
            return np.ones(0)
        m = np.abs(J).max(axis=1).toarray().ravel()
        return 1.0 / np.maximum(1.0, m)

    def objective(self, x):
        f, g = self.inst.objective(x)
        return self.obj_scale * f, self.obj_scale * g

    def cE(self, x):
        return self.re * self.inst.eq_residual(x)

    def cI(self, x):
        return self.ri * self.inst.ineq_residual(x) - self.relax

    def jacobians(self, x):
        JE, JI = self.inst.jacobians(x)
        return self._De @ JE, self._Di @ JI

    def hessian(self, x, y_eq, y_in):
        return self.inst.hessian(
            x, self.re * y_eq, self.ri * y_in, obj_weight=self.obj_scale
        )


def _finite(a):
    return np.isfinite(a)


class _Barrier:
    """One barrier/penalty configuration solved by filter line search."""

    def __init__(self, prob, inst, opts, free, rho, bin_idx):
        self.p = prob
        self.inst = inst
        self.o = opts
        self.free = free
        self.rho = rho
        self.bin = bin_idx
        self.lb = inst.lb
        self.ub = inst.ub
        self.has_l = _finite(self.lb) & free
        self.has_u = _finite(self.ub) & free
        self.n = inst.n_var

    # penalty terms over binary columns
    def _pen(self, x):
        if self.bin.size == 0 or self.rho == 0.0:
            return 0.0
        b = x[self.bin]
        return self.rho * np.sum((b - b * b) ** 2)

    def _pen_grad(self, x):
        g = np.zeros(self.n)
        if self.bin.size and self.rho:
            b = x[self.bin]
            g[self.bin] = self.rho * 2.0 * (b - b * b) * (1.0 - 2.0 * b)
        return g

    def _pen_hess_diag(self, x):
        d = np.zeros(self.n)
        if self.bin.size and self.rho:
            b = x[self.bin]
            d[self.bin] = self.rho * 2.0 * ((1.0 - 2.0 * b) ** 2 - 2.0 * (b - b * b))
        return d

    def _dl(self, x):
        d = np.full(self.n, np.inf)
        d[self.has_l] = x[self.has_l] - self.lb[self.has_l]
        return d

    def _du(self, x):
        d = np.full(self.n, np.inf)
        d[self.has_u] = self.ub[self.has_u] - x[self.has_u]
        return d

    def phi(self, x, s, mu):
        f, _ = self.p.objective(x)
        dl, du = self._dl(x), self._du(x)
        if np.any(dl[self.has_l] <= 0) or np.any(du[self.has_u] <= 0) or np.any(s <= 0):
            return np.inf
        val = f + self._pen(x) - mu * (
            np.log(dl[self.has_l]).sum()
            + np.log(du[self.has_u]).sum()
            + (np.log(s).sum() if s.size else 0.0)
        )
        return val

    def theta(self, x, s):
        return np.abs(self.p.cE(x)).sum() + np.abs(self.p.cI(x) + s).sum()

    def grad_phi(self, x, s, mu):
        _, g = self.p.objective(x)
        g = g + self._pen_grad(x)
        dl, du = self._dl(x), self._du(x)
        gx = g.copy()
        gx[self.has_l] -= mu / dl[self.has_l]
        gx[self.has_u] += mu / du[self.has_u]
        gs = -mu / s if s.size else np.zeros(0)
        return gx, gs

    def kkt_error(self, x, s, y_eq, y_in, zl, zu, mu):
        _, g = self.p.objective(x)
        JE, JI = self.p.jacobians(x)
        dl, du = self._dl(x), self._du(x)
        r_d = g + self._pen_grad(x) + JE.T @ y_eq + JI.T @ y_in
        r_d[self.has_l] -= zl[self.has_l]
        r_d[self.has_u] += zu[self.has_u]
        r_d[~self.free] = 0.0
        cE = self.p.cE(x)
        cI = self.p.cI(x)
        comp = np.abs(s * y_in - mu).max() if s.size else 0.0
        if self.has_l.any():
            comp = max(comp, np.abs(dl[self.has_l] * zl[self.has_l] - mu).max())
        if self.has_u.any():
            comp = max(comp, np.abs(du[self.has_u] * zu[self.has_u] - mu).max())
        return max(
            np.abs(r_d).max() if r_d.size else 0.0,
            np.abs(cE).max() if cE.size else 0.0,
            np.abs(cI + s).max() if cI.size else 0.0,
            comp,
        )


def _fraction_to_boundary(v, dv, tau):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-tau * v[neg] / dv[neg])))


def solve(instance, x0=None, options: SolverOptions | None = None) -> SolveReport:
    """Drive the penalty/complementarity homotopy and return the best point."""
    t_start = time.perf_counter()
    o = options or SolverOptions()
    if x0 is None:
        x0 = instance.initial_point()
    x = np.asarray(x0, dtype=float).copy()
    lb, ub = instance.lb, instance.ub
    span = np.where(
        np.isfinite(lb) & np.isfinite(ub), ub - lb, 1.0
    )
    pad = 1e-2 * np.minimum(1.0, span)
    x = np.where(np.isfinite(lb), np.maximum(x, lb + pad), x)
    x = np.where(np.isfinite(ub), np.minimum(x, ub - pad), x)

    bin_idx = np.asarray(getattr(instance, "binary_indices", np.zeros(0, np.int64)),
                         dtype=np.int64)
    has_eps = hasattr(instance, "eps_compl")
    prob = _Problem(instance, x, ineq_relax=o.ineq_relax)

    free = np.ones(instance.n_var, dtype=bool)
    s = None
    y_eq = np.zeros(len(prob.re))
    y_in = None
    total_iters = 0
    history: list = []
    mu = o.mu_init

    rho = o.rho_init if bin_idx.size else 0.0
    eps = o.eps_compl_init if has_eps else None
    eps_final = o.eps_compl_final
    stage = 0
    status = ""
    message = ""

    zl = np.zeros(instance.n_var)
    zu = np.zeros(instance.n_var)
    zl[np.isfinite(lb)] = mu / np.maximum(x - lb, 1e-12)[np.isfinite(lb)]
    zu[np.isfinite(ub)] = mu / np.maximum(ub - x, 1e-12)[np.isfinite(ub)]

    def _run(bar, target_mu, cap):
        nonlocal x, s, y_eq, y_in, zl, zu, mu, total_iters, status, message
        budget = o.max_iter - total_iters
        if budget <= 0:
            status = "iteration-limit"
            message = "newton iteration budget exhausted"
            return False
        res = _barrier_solve(bar, x, s, y_eq, y_in, zl, zu, mu, target_mu, o,
                             max_iters=cap, budget=budget, history=history)
        x, s, y_eq, y_in, zl, zu, mu, iters, inner = res
        total_iters += iters
        if inner == "infeasible":
            status = "infeasible"
            message = "restoration could not reduce constraint violation"
            return False
        return True

    # penalty homotopy: raise rho until every selector sits close enough to
    # an integer for rounding to be a negligible perturbation
    while True:
        if has_eps:
            instance.eps_compl = max(eps, eps_final)
        bar = _Barrier(prob, instance, o, free, rho, bin_idx)
        if s is None:
            g0 = prob.cI(x)
            s = np.maximum(-g0, 1e-2)
            y_in = mu / s if s.size else np.zeros(0)
        final_stage = (not bin_idx.size) and (
            not has_eps or eps <= 1.01 * eps_final
        )
        if not _run(bar, o.mu_min if final_stage else o.stage_mu_floor,
                    o.stage_iter):
            break
        frac = np.max(x[bin_idx] * (1.0 - x[bin_idx])) if bin_idx.size else 0.0
        if o.verbose:
            print(f"[ipm] stage {stage}: rho={rho:.1e}"
                  f" eps={eps if has_eps else 0} frac={frac:.2e} mu={mu:.1e}"
                  f" iters={total_iters}")
        if bin_idx.size and frac > o.round_frac_tol:
            if rho >= o.rho_max:
                message = "selector relaxation saturated; rounding anyway"
                break
            stage += 1
            rho = min(rho * 10.0, o.rho_max)
            mu = max(mu, 1e-3)  # penalty landscape changed, re-center
            if has_eps:
                eps = max(eps * 0.1, eps_final)
            continue
        if not bin_idx.size and has_eps and eps > 1.01 * eps_final:
            stage += 1
            eps = max(eps * 0.1, eps_final)
            mu = max(mu, 10.0 * o.stage_mu_floor)
            continue
        break

    rounded = False
    if bin_idx.size and status != "infeasible":
        # freeze selector variables at their rounded values, then finish the
        # relaxation schedule and polish on the smooth fixed-selector problem
        x[bin_idx] = np.where(x[bin_idx] >= o.round_threshold, 1.0, 0.0)
        free = free.copy()
        free[bin_idx] = False
        rounded = True
        bar = _Barrier(prob, instance, o, free, 0.0, np.zeros(0, np.int64))
        g0 = prob.cI(x)
        s = np.maximum(np.maximum(-g0, 0.5 * s), 1e-8)
        ok = True
        while has_eps and eps > 1.01 * eps_final and ok:
            eps = max(eps * 0.1, eps_final)
            instance.eps_compl = eps
            mu = max(mu, 10.0 * o.stage_mu_floor)
            ok = _run(bar, o.stage_mu_floor, o.stage_iter)
            if o.verbose and ok:
                print(f"[ipm] relax eps={eps:.1e} mu={mu:.1e}"
                      f" iters={total_iters}")
        if ok:
            if has_eps:
                instance.eps_compl = eps_final
            mu = max(mu, 1e-4)
            _run(bar, o.mu_min, 2 * o.stage_iter)

    # project onto the unscaled feasible manifold: row scaling lets a
    # scaled-converged point hide per-row violations of up to 1/row_scale,
    # and certification downstream works in natural units
    if status != "infeasible" and _max_violation(instance, x) > 0.05 * o.tol:
        x = _feas_polish(instance, x, free, o.tol)
        g0 = prob.cI(x)
        if g0.size:
            s = np.maximum(-g0, 1e-12)

    # certify against the final barrier subproblem at the final mu
    bar = _Barrier(prob, instance, o, free, 0.0, np.zeros(0, np.int64))
    err_f = bar.kkt_error(x, s, y_eq, y_in, zl, zu, mu)
    theta = bar.theta(x, s)
    viol = _max_violation(instance, x)
    if status != "infeasible":
        converged = (
            err_f <= max(o.tol, 12.0 * mu)
            and mu <= max(10.0 * o.mu_min, 1e-2 * o.tol)
            and theta <= 1e2 * o.tol
            and viol <= o.tol
        )
        if converged:
            status = "optimal" if getattr(instance, "convex", False) else "locally-optimal"
        elif theta > 1e-4 or viol > 1e-4:
            status = "infeasible"
        else:
            status = "iteration-limit"

    f, _ = instance.objective(x)
    kkt = kkt_residual(instance, x, y_eq * prob.re, y_in * prob.ri,
                       free_mask=free)
    gap = float(np.abs(x[bin_idx] - np.round(x[bin_idx])).max()) if bin_idx.size else 0.0
    return SolveReport(
        status=status,
        objective=f,
        x=x,
        y_eq=y_eq * prob.re,
        y_in=y_in * prob.ri,
        iterations=total_iters,
        mu=mu,
        rho=rho,
        kkt=kkt,
        binaries_rounded=rounded,
        violation=viol,
        integrality_gap=gap,
        wall_time=time.perf_counter() - t_start,
        message=message,
        history=history,
    )


def _max_violation(instance, x) -> float:
    """Worst unscaled constraint violation (equalities and inequalities)."""
    v = 0.0
    r_eq = instance.eq_residual(x)
    if r_eq.size:
        v = float(np.abs(r_eq).max())
    r_in = instance.ineq_residual(x)
    if r_in.size:
        v = max(v, float(r_in.max()))
    return max(v, 0.0)


def _feas_polish(instance, x, free, tol, rounds=8):
    """Gauss-Newton projection of the final iterate onto the unscaled feasible
    set; frozen selector columns do not move.

    Only equality rows and inequality rows violated by more than half the
    tolerance enter the least-squares system: rows merely brushing their
    boundary (relaxed complementarity products park there by construction)
    are numerically degenerate and already within tolerance, and including
    them destroys the conditioning of the projection.  The line search
    accepts only a strict decrease of the worst violation."""
    lb, ub = instance.lb, instance.ub
    free_idx = np.flatnonzero(free)
    if not free_idx.size:
        return x
    thresh = 0.5 * tol
    v0 = _max_violation(instance, x)
    for _ in range(rounds):
        if v0 <= 0.9 * tol:
            break
        JE, JI = instance.jacobians(x)
        blocks, rhs = [], []
        r_eq = instance.eq_residual(x)
        if r_eq.size:
            # Weight equality rows so a truncated least-squares solve spends
            # its accuracy budget on them rather than trading them away.
            blocks.append(JE * 30.0)
            rhs.append(r_eq * 30.0)
        r_in = instance.ineq_residual(x)
        viol = r_in > thresh if r_in.size else np.zeros(0, bool)
        if np.any(viol):
            blocks.append(JI[viol])
            rhs.append(r_in[viol] + 0.1 * tol)
        if not blocks:
            break
        J_all = sp.vstack(blocks).tocsc()
        r = np.concatenate(rhs)
        # Active-set passes: a least-squares step that pushes a variable
        # through its bound cannot simply be clipped (the truncation lands
        # as fresh equality residual), so such variables are pinned and the
        # step is recomputed in the remaining space.
        cols = free_idx
        step = None
        for _pass in range(4):
            J = J_all[:, cols]
            dx = spla.lsqr(
                J, -r, damp=1e-8, atol=1e-12, btol=1e-12, iter_lim=8 * J.shape[1]
            )[0]
            if not np.all(np.isfinite(dx)):
                break
            cand = np.zeros_like(x)
            cand[cols] = dx
            xt = x + cand
            crossed = (xt[cols] < lb[cols]) | (xt[cols] > ub[cols])
            if not np.any(crossed):
                step = cand
                break
            cols = cols[~crossed]
            if not cols.size:
                break
        if step is None:
            break
        alpha, improved = 1.0, False
        for _ls in range(25):
            xt = np.clip(x + alpha * step, lb, ub)
            vt = _max_violation(instance, xt)
            if vt < v0:
                x, v0, improved = xt, vt, True
                break
            alpha *= 0.5
        if not improved:
            break
    return x


def _barrier_solve(bar, x, s, y_eq, y_in, zl, zu, mu, mu_target, o,
                   max_iters, budget, history):
    """Filter line-search loop for a fixed penalty configuration.

    Bound multipliers ``zl``/``zu`` are explicit iterates (condensed out of
    the KKT system, stepped by their own linearised update) so the dual
    residual can cancel to machine precision even when a strong bound dual
    forces the primal distance-to-bound below floating-point resolution."""
    n = bar.n
    free_idx = np.flatnonzero(bar.free)
    kappa_eps, kappa_mu, theta_mu = 10.0, 0.2, 1.5
    kappa_sigma = 1e10
    gamma_t, gamma_p, eta_p = 1e-5, 1e-5, 1e-4
    s_theta, s_phi = 1.1, 2.3
    delta_last = 0.0
    flt: list[tuple[float, float]] = []
    theta0 = bar.theta(x, s)
    theta_cap = 1e4 * max(1.0, theta0)
    it = 0
    rest_rounds = 0
    while it < min(max_iters, budget):
        err_mu = bar.kkt_error(x, s, y_eq, y_in, zl, zu, mu)
        if err_mu <= kappa_eps * mu:
            if mu <= mu_target * 1.001:
                return x, s, y_eq, y_in, zl, zu, mu, it, "converged"
            mu = max(mu_target, min(kappa_mu * mu, mu**theta_mu))
            flt.clear()
            continue

        it += 1
        f, g = bar.p.objective(x)
        JE, JI = bar.p.jacobians(x)
        cE = bar.p.cE(x)
        cI = bar.p.cI(x)
        dl, du = bar._dl(x), bar._du(x)
        sigma = np.where(bar.has_l, zl / dl, 0.0) + np.where(
            bar.has_u, zu / du, 0.0
        )
        # condensed dual residual: bound duals eliminated at their centred
        # values mu/d, their deviation is restored through the z update below
        r_bar = (
            g + bar._pen_grad(x)
            + JE.T @ y_eq + (JI.T @ y_in if s.size else 0.0)
        )
        r_bar[bar.has_l] -= mu / dl[bar.has_l]
        r_bar[bar.has_u] += mu / du[bar.has_u]
        W = bar.p.hessian(x, y_eq, y_in)
        pen_diag = bar._pen_hess_diag(x)

        mf = len(free_idx)
        me, mi = cE.size, cI.size
        JEf = JE[:, free_idx] if me else sp.csr_matrix((0, mf))
        JIf = JI[:, free_idx] if mi else sp.csr_matrix((0, mf))
        Wf = W[free_idx][:, free_idx]
        diagf = sigma[free_idx] + pen_diag[free_idx]
        rhs = np.concatenate([
            -r_bar[free_idx],
            -cE,
            -(cI + mu / y_in) if mi else np.zeros(0),
        ])
        delta = 0.0
        dxf = dye = dyi = None
        for _attempt in range(16):
            K = sp.bmat(
                [
                    [Wf + sp.diags(diagf + delta), JEf.T if me else None,
                     JIf.T if mi else None],
                    [JEf if me else None,
                     -o.delta_c * sp.eye(me) if me else None, None],
                    [JIf if mi else None, None,
                     -sp.diags(s / y_in) if mi else None],
                ],
                format="csc",
            )
            try:
                lu = spla.splu(K)
                d = lu.solve(rhs)
            except RuntimeError:
                d = None
            if d is not None and np.all(np.isfinite(d)):
                dxf = d[:mf]
                dye = d[mf:mf + me]
                dyi = d[mf + me:]
                nrm2 = dxf @ dxf
                curv = dxf @ (Wf @ dxf) + ((diagf + delta) * dxf**2).sum()
                if nrm2 == 0.0 or curv > 1e-11 * nrm2:
                    break
                dxf = None
            if delta == 0.0:
                delta = max(1e-8, delta_last / 3.0)
            else:
                delta *= 10.0
            if delta > 1e12:
                break
        if dxf is None:
            return x, s, y_eq, y_in, zl, zu, mu, it, "infeasible"
        delta_last = delta

        dx = np.zeros(n)
        dx[free_idx] = dxf
        ds = (-(cI + s) - JIf @ dxf) if mi else np.zeros(0)
        dzl = np.where(bar.has_l, mu / dl - zl - (zl / dl) * dx, 0.0)
        dzu = np.where(bar.has_u, mu / du - zu + (zu / du) * dx, 0.0)

        tau = max(0.99, 1.0 - mu)
        a_max = 1.0
        if bar.has_l.any():
            a_max = min(a_max, _fraction_to_boundary(
                dl[bar.has_l], dx[bar.has_l], tau))
        if bar.has_u.any():
            a_max = min(a_max, _fraction_to_boundary(
                du[bar.has_u], -dx[bar.has_u], tau))
        a_dual = 1.0
        if bar.has_l.any():
            a_dual = min(a_dual, _fraction_to_boundary(
                zl[bar.has_l], dzl[bar.has_l], tau))
        if bar.has_u.any():
            a_dual = min(a_dual, _fraction_to_boundary(
                zu[bar.has_u], dzu[bar.has_u], tau))
        if mi:
            a_max = min(a_max, _fraction_to_boundary(s, ds, tau))
            a_dual = min(a_dual, _fraction_to_boundary(y_in, dyi, tau))

        phi0 = bar.phi(x, s, mu)
        theta_k = bar.theta(x, s)
        gx, gs = bar.grad_phi(x, s, mu)
        dphi = gx @ dx + (gs @ ds if mi else 0.0)

        alpha = a_max
        accepted = False
        while alpha >= o.alpha_min:
            xt = x + alpha * dx
            st = s + alpha * ds if mi else s
            phit = bar.phi(xt, st, mu)
            if not np.isfinite(phit):
                alpha *= 0.5
                continue
            thetat = bar.theta(xt, st)
            if thetat > theta_cap:
                alpha *= 0.5
                continue
            dominated = any(
                thetat >= (1 - gamma_t) * tf and phit >= pf - gamma_p * tf
                for tf, pf in flt
            )
            if dominated:
                alpha *= 0.5
                continue
            switching = (
                dphi < 0
                and alpha * (-dphi) ** s_phi > (theta_k ** s_theta)
            )
            if theta_k <= 1e-10 or switching:
                if phit <= phi0 + eta_p * alpha * dphi:
                    accepted = True
                    break
            if thetat <= (1 - gamma_t) * theta_k or phit <= phi0 - gamma_p * theta_k:
                if not switching:
                    flt.append((theta_k, phi0))
                accepted = True
                break
            alpha *= 0.5

        if not accepted:
            # feasibility restoration: damped Gauss-Newton on the violation
            rest_rounds += 1
            if rest_rounds > 6:
                return x, s, y_eq, y_in, zl, zu, mu, it, "infeasible"
            ok, x, s = _restore(bar, x, s, mu)
            if not ok:
                return x, s, y_eq, y_in, zl, zu, mu, it, "infeasible"
            y_in = np.maximum(mu / np.maximum(s, 1e-12), 1e-12) if mi else y_in
            zl, zu = _z_safeguard(bar, x, zl, zu, mu, kappa_sigma)
            flt.clear()
            continue

        x = x + alpha * dx
        if mi:
            s = s + alpha * ds
            y_in = y_in + a_dual * dyi
            y_in = np.maximum(y_in, 1e-14)
        y_eq = y_eq + alpha * dye
        zl = zl + a_dual * dzl
        zu = zu + a_dual * dzu
        zl, zu = _z_safeguard(bar, x, zl, zu, mu, kappa_sigma)
        history.append(
            {"mu": mu, "theta": float(theta_k), "phi": float(phi0),
             "alpha": float(alpha), "delta": float(delta),
             "err": float(err_mu), "dx": float(np.abs(dx).max()),
             "dphi": float(dphi)}
        )
        if len(history) > 4000:
            del history[:2000]
    return x, s, y_eq, y_in, zl, zu, mu, it, "budget"


def _z_safeguard(bar, x, zl, zu, mu, kappa):
    """Keep bound duals inside IPOPT's kappa-sigma box around mu/d."""
    dl, du = bar._dl(x), bar._du(x)
    zl = zl.copy()
    zu = zu.copy()
    ml = bar.has_l
    mu_ = bar.has_u
    zl[ml] = np.clip(zl[ml], mu / (kappa * dl[ml]), kappa * mu / dl[ml])
    zu[mu_] = np.clip(zu[mu_], mu / (kappa * du[mu_]), kappa * mu / du[mu_])
    return zl, zu


def _restore(bar, x, s, mu):
    """Reduce ||(c_E, c_I + s)|| by damped Gauss-Newton steps over the free
    coordinates, then refresh the slacks.  Keeps every bound strictly."""
    free_idx = np.flatnonzero(bar.free)
    for _ in range(8):
        cE = bar.p.cE(x)
        cI = bar.p.cI(x)
        r = np.concatenate([cE, cI + s])
        theta = np.abs(r).sum()
        if theta <= 1e-12:
            return True, x, s
        JE, JI = bar.p.jacobians(x)
        J = sp.vstack([JE, JI]).tocsr() if cI.size else JE
        res = spla.lsqr(J[:, free_idx], -r, damp=1e-4, iter_lim=200)
        dx = np.zeros(bar.n)
        dx[free_idx] = res[0]
        if not np.all(np.isfinite(dx)):
            return False, x, s
        alpha = 1.0
        improved = False
        for _ in range(20):
            xt = x + alpha * dx
            xt = np.where(bar.has_l, np.maximum(xt, bar.lb + 1e-10), xt)
            xt = np.where(bar.has_u, np.minimum(xt, bar.ub - 1e-10), xt)
            cEt = bar.p.cE(xt)
            cIt = bar.p.cI(xt)
            st = np.maximum(-cIt, np.minimum(s, 1e-2)) if cI.size else s
            st = np.maximum(st, 1e-10) if cI.size else s
            tt = np.abs(cEt).sum() + (np.abs(cIt + st).sum() if cI.size else 0.0)
            if tt < (1 - 1e-4) * theta:
                x, s = xt, st
                improved = True
                break
            alpha *= 0.5
        if not improved:
            return theta < 1e-5, x, s
    return True, x, s


def kkt_residual(instance, x, y_eq, y_in, free_mask=None) -> dict:
    """Unscaled first-order measures at (x, y).

    Stationarity is projected on the box: a coordinate pressing against a
    bound drops out when the implied bound dual is complementary, i.e. when
    ``gradient x distance-to-bound`` is small.  ``free_mask`` excludes
    columns a caller froze (rounded selector variables)."""
    f, g = instance.objective(x)
    JE, JI = instance.jacobians(x)
    r = g + JE.T @ y_eq + JI.T @ y_in
    lb, ub = instance.lb, instance.ub
    dl = np.where(np.isfinite(lb), x - lb, 1.0)
    du = np.where(np.isfinite(ub), ub - x, 1.0)
    near_l = np.isfinite(lb) & (dl <= 1e-3)
    near_u = np.isfinite(ub) & (du <= 1e-3)
    at_l = near_l & (np.abs(r) * dl <= 1e-6 * (1.0 + np.abs(r)))
    at_u = near_u & (np.abs(r) * du <= 1e-6 * (1.0 + np.abs(r)))
    proj = r.copy()
    proj[at_l & (r > 0)] = 0.0
    proj[at_u & (r < 0)] = 0.0
    if free_mask is not None:
        proj[~free_mask] = 0.0
    cE = instance.eq_residual(x)
    cI = instance.ineq_residual(x)
    comp = 0.0
    if cI.size:
        comp = float(np.abs(np.maximum(y_in, 0.0) * np.minimum(cI, 0.0)).max())
    return {
        "stationarity": float(np.abs(proj).max()) if proj.size else 0.0,
        "primal_eq": float(np.abs(cE).max()) if cE.size else 0.0,
        "primal_ineq": float(np.maximum(cI, 0.0).max()) if cI.size else 0.0,
        "complementarity": comp,
        "objective": float(f),
    }


def multi_start(instance, n_starts=3, seed=0,
                options: SolverOptions | None = None,
                extra_starts=None) -> SolveReport:
    """Deterministic multi-start: the instance's own start plus seeded
    perturbations (and any caller-supplied vectors); best objective wins."""
    rng = np.random.default_rng(seed)
    starts = [instance.initial_point()]
    if extra_starts:
        starts += [np.asarray(v, dtype=float) for v in extra_starts]
    base = starts[0]
    lb, ub = instance.lb, instance.ub
    scale = np.where(
        np.isfinite(lb) & np.isfinite(ub), 0.05 * (ub - lb),
        0.05 * np.maximum(1.0, np.abs(base)),
    )
    total = n_starts + (len(extra_starts) if extra_starts else 0)
    while len(starts) < total:
        starts.append(base + scale * rng.standard_normal(base.size))
    best = None
    for x0 in starts[:total]:
        rep = solve(instance, x0=x0, options=options)
        if best is None:
            best = rep
            continue
        rank = {"optimal": 0, "locally-optimal": 0, "iteration-limit": 1,
                "infeasible": 2}
        rb, rn = rank.get(best.status, 3), rank.get(rep.status, 3)
        if rn < rb or (rn == rb and rep.objective < best.objective):
            best = rep
    return best


__all__ = ["SolverOptions", "SolveReport", "solve", "kkt_residual", "multi_start"]
