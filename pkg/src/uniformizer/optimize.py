"""Newton solvers for the two convex energies.

The conformal energy is scale invariant (when the target angles satisfy
the Gauss-Bonnet condition), so its Newton system is solved in a gauge:
one vertex is pinned for the linear solve and the iterate is re-centered
to zero mean.  The punctured energy is minimized under per-vertex lower
bounds (horocycle distances to the distinguished vertex) by a primal
active-set projected Newton method.
"""

import logging
import math
import time
import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import delaunay as _delaunay
from . import energy as _energy
from .errors import (
    GaussBonnetViolated,
    WrongGenus,
    IterLimit,
    LineSearchFailure,
    TriangleInequalityViolated,
)
from .penner import ConeAngleTarget

log = logging.getLogger(__name__)

CONVERGED = "Converged"
ITER_LIMIT = "IterLimit"
LINE_SEARCH_FAILURE = "LineSearchFailure"

ZERO_MEAN = "zero-mean"


class SolveOptions:
    """Parameters shared by both solvers."""

    def __init__(self, gradient_tolerance=1e-10, max_iterations=500,
                 shrink=0.5, sufficient_decrease=1e-4, gauge=ZERO_MEAN,
                 pin_vertex=0):
        if gradient_tolerance <= 0 or max_iterations <= 0:
            raise ValueError("tolerances and iteration limits must be > 0")
        if not 0.0 < shrink < 1.0:
            raise ValueError("shrink factor must be in (0, 1)")
        self.gradient_tolerance = gradient_tolerance
        self.max_iterations = max_iterations
        self.shrink = shrink
        self.sufficient_decrease = sufficient_decrease
        self.gauge = gauge
        self.pin_vertex = pin_vertex


class SolveReport:
    def __init__(self, u_final, iterations, flips_total, active_set,
                 kkt_residuals, status, energy=None, theta_tilde=None,
                 shifted_hessian=False, seconds=0.0):
        self.u_final = u_final
        self.iterations = iterations
        self.flips_total = flips_total
        self.active_set = active_set
        self.kkt_residuals = kkt_residuals
        self.status = status
        self.energy = energy
        self.theta_tilde = theta_tilde
        self.shifted_hessian = shifted_hessian
        self.seconds = seconds


def _solve_spd(hessian, rhs):
    """Solve H x = rhs for a (near) SPD sparse matrix; returns
    (x, shifted) where shifted flags a Tikhonov fallback."""
    n = hessian.shape[0]
    with warnings.catch_warnings():
        # Singular systems are handled by the fallbacks below.
        warnings.simplefilter("ignore", spla.MatrixRankWarning)
        try:
            x = spla.spsolve(sp.csc_matrix(hessian), rhs)
            if np.all(np.isfinite(x)):
                return x, False
        except Exception:
            pass
        shift = 1e-10 * (hessian.diagonal().sum() / max(n, 1) + 1.0)
        x = spla.spsolve(sp.csc_matrix(hessian + shift * sp.eye(n)), rhs)
    if not np.all(np.isfinite(x)):
        # Hessian is structurally singular (e.g. no triangles left in
        # the subcomplex); fall back to a plain gradient step.
        x = np.array(rhs, dtype=float)
        return x, True
    # Keep the fallback step from exploding when the shift is the only
    # thing making the system solvable.
    norm_x = np.linalg.norm(x)
    norm_g = np.linalg.norm(rhs)
    if norm_x > 1e6 * max(norm_g, 1.0):
        x *= 1e6 * max(norm_g, 1.0) / norm_x
    return x, True


def gauss_bonnet_defect(metric, target):
    """Sum of target angles minus 2 pi (2g - 2 + n)."""
    tri = metric.triangulation
    expected = 2.0 * math.pi * (2 * tri.genus - 2 + tri.num_vertices)
    return float(np.sum(target.theta)) - expected


def minimize_conformal_energy(metric, target, opts=None, u0=None):
    """Newton minimization of the conformal energy over u.

    Requires the Gauss-Bonnet condition, which makes the energy
    invariant under adding a constant to u; the returned u is
    gauge-normalized (zero mean by default).
    """
    opts = opts or SolveOptions()
    tri = metric.triangulation
    n = tri.num_vertices
    defect = gauss_bonnet_defect(metric, target)
    if abs(defect) > 1e-8:
        raise GaussBonnetViolated("angle sum misses Gauss-Bonnet by %g"
                                  % defect)
    t0 = time.perf_counter()

    u = np.zeros(n) if u0 is None else np.array(u0, dtype=float)
    # Scale invariance sanity check before iterating.
    e0 = _energy.conformal_energy_value(metric, target, u)
    e1 = _energy.conformal_energy_value(metric, target, u + 0.37)
    if abs(e1 - e0) > 1e-10 * max(1.0, abs(e0)):
        raise GaussBonnetViolated(
            "energy not scale invariant (drift %g); inconsistent target"
            % (e1 - e0))

    return _newton_conformal(metric, target, u, opts, t0)


def _newton_conformal(metric, target, u, opts, t0):
    n = len(u)
    pin = opts.pin_vertex
    keep = [v for v in range(n) if v != pin]
    flips_total = 0
    shifted_any = False
    ev = _energy.conformal_energy(metric, target, u)
    flips_total += len(ev.delaunay.flips)

    for it in range(opts.max_iterations + 1):
        gnorm = float(np.max(np.abs(ev.gradient))) if n else 0.0
        if gnorm <= opts.gradient_tolerance:
            u = _apply_gauge(u, opts)
            return SolveReport(u, it, flips_total, [], {"grad_inf": gnorm},
                               CONVERGED, energy=ev.value,
                               theta_tilde=ev.theta_tilde,
                               shifted_hessian=shifted_any,
                               seconds=time.perf_counter() - t0)
        if it == opts.max_iterations:
            break

        h_red = ev.hessian[keep][:, keep]
        g_red = ev.gradient[keep]
        s_red, shifted = _solve_spd(h_red, -g_red)
        shifted_any = shifted_any or shifted
        step = np.zeros(n)
        step[keep] = s_red
        step -= step.mean()

        slope = float(ev.gradient @ step)
        if slope >= 0:
            step = -ev.gradient + np.mean(ev.gradient)
            slope = float(ev.gradient @ step)
            if slope >= 0:
                raise LineSearchFailure(
                    "no descent direction at iteration %d" % it,
                    report=SolveReport(u, it, flips_total, [],
                                       {"grad_inf": gnorm},
                                       LINE_SEARCH_FAILURE))

        alpha = 1.0
        f0 = ev.value
        # Skip the sufficient-decrease test once the predicted decrease
        # is below the rounding noise of the recomputed energy value.
        noise = 1e-11 * (1.0 + abs(f0))
        if -slope <= noise:
            trial = u + step
        else:
            while True:
                trial = u + alpha * step
                try:
                    f_trial = _energy.conformal_energy_value(metric, target,
                                                             trial)
                except (OverflowError, TriangleInequalityViolated):
                    f_trial = math.inf
                if f_trial <= f0 + opts.sufficient_decrease * alpha * slope:
                    break
                alpha *= opts.shrink
                if alpha < 1e-14:
                    raise LineSearchFailure(
                        "line search stalled at iteration %d" % it,
                        report=SolveReport(u, it, flips_total, [],
                                           {"grad_inf": gnorm},
                                           LINE_SEARCH_FAILURE))
        u = trial
        ev = _energy.conformal_energy(metric, target, u)
        flips_total += len(ev.delaunay.flips)

    raise IterLimit(
        "no convergence in %d iterations" % opts.max_iterations,
        report=SolveReport(u, opts.max_iterations, flips_total, [],
                           {"grad_inf": float(np.max(np.abs(ev.gradient)))},
                           ITER_LIMIT))


def _apply_gauge(u, opts):
    if opts.gauge == ZERO_MEAN:
        return u - u.mean()
    return u - u[opts.pin_vertex]


def minimize_punctured_energy(metric, v_inf, opts=None, u0=None):
    """Projected Newton minimization of the punctured energy under the
    lower bounds u_v >= -delta(v, v_inf).

    The bound keeps the shifted horocycle at v from crossing the fixed
    reference horocycle at v_inf: their distance delta(v, v_inf) + u_v
    must stay nonnegative.  The scaling relation makes the energy
    strictly increasing along the all-ones direction, so the bounds pin
    the solution: at least one constraint is active at the minimum.
    """
    opts = opts or SolveOptions(gradient_tolerance=1e-9)
    tri = metric.triangulation
    if tri.genus != 0 or tri.num_vertices < 3:
        raise WrongGenus("need genus 0 with at least 3 vertices, got "
                         "genus %d, %d vertices"
                         % (tri.genus, tri.num_vertices))
    t0 = time.perf_counter()

    deltas = _delaunay.horocycle_distances_to(metric, v_inf)
    n = tri.num_vertices
    free = [v for v in range(n) if v != v_inf]
    bounds = np.array([-deltas[v] for v in free])

    u = np.zeros(n)
    if u0 is None:
        u[free] = bounds
    else:
        u0 = np.asarray(u0, dtype=float)
        u[free] = np.maximum(u0[free], bounds)
    u[v_inf] = np.inf

    eps_act = 1e-10
    tol = opts.gradient_tolerance
    flips_total = 0
    shifted_any = False
    ev = _energy.punctured_energy(metric, v_inf, u)
    flips_total += len(ev.delaunay.flips)

    for it in range(opts.max_iterations + 1):
        g = ev.gradient
        uf = u[free]
        at_bound = uf - bounds <= eps_act * np.maximum(1.0, np.abs(bounds))
        active = at_bound & (g >= 0)
        stat = 0.0
        if np.any(~active):
            stat = float(np.max(np.abs(g[~active])))
        comp = float(max(0.0, np.max(-g[active]))) if np.any(active) else 0.0
        feas = float(max(0.0, np.max(bounds - uf)))
        resid = max(stat, comp, feas)
        if resid <= tol:
            act_verts = sorted(free[i] for i in np.nonzero(at_bound)[0])
            return SolveReport(
                u, it, flips_total, act_verts,
                {"stationarity": stat, "complementarity": comp,
                 "feasibility": feas},
                CONVERGED, energy=ev.value, theta_tilde=ev.theta_tilde,
                shifted_hessian=shifted_any,
                seconds=time.perf_counter() - t0)
        if it == opts.max_iterations:
            break

        fidx = np.nonzero(~active)[0]
        if len(fidx) == 0:
            raise LineSearchFailure(
                "all variables active but KKT residual %g" % resid,
                report=SolveReport(u, it, flips_total, [],
                                   {"residual": resid},
                                   LINE_SEARCH_FAILURE))
        h_ff = ev.hessian[fidx][:, fidx]
        s_f, shifted = _solve_spd(h_ff, -g[fidx])
        shifted_any = shifted_any or shifted
        step = np.zeros(len(free))
        step[fidx] = s_f

        slope = float(g @ step)
        if slope >= 0:
            step = np.where(active, 0.0, -g)
            slope = float(g @ step)
            if slope >= 0:
                raise LineSearchFailure(
                    "no descent direction at iteration %d" % it,
                    report=SolveReport(u, it, flips_total, [],
                                       {"residual": resid},
                                       LINE_SEARCH_FAILURE))

        # Ratio test: largest feasible step towards the bounds.
        alpha_max = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(step < 0, (bounds - uf) / step, np.inf)
        ratios[~np.isfinite(ratios)] = np.inf
        ratios[ratios <= 0] = np.inf
        alpha_max = min(1.0, float(np.min(ratios)))

        alpha = alpha_max
        f0 = ev.value
        # Near the optimum the predicted decrease drops below the
        # rounding noise of the energy value (which is recomputed
        # through a long flip sequence), so the sufficient-decrease test
        # becomes meaningless; take the projected Newton step as is.
        noise = 1e-11 * (1.0 + abs(f0))
        if -slope * alpha_max <= noise:
            trial = u.copy()
            trial[free] = np.maximum(uf + alpha_max * step, bounds)
        else:
            while True:
                trial = u.copy()
                trial[free] = np.maximum(uf + alpha * step, bounds)
                try:
                    f_trial = _energy.punctured_energy_value(metric, v_inf,
                                                             trial)
                except (OverflowError, TriangleInequalityViolated):
                    f_trial = math.inf
                if f_trial <= f0 + opts.sufficient_decrease * alpha * slope:
                    break
                alpha *= opts.shrink
                if alpha < 1e-14:
                    raise LineSearchFailure(
                        "line search stalled at iteration %d" % it,
                        report=SolveReport(u, it, flips_total, [],
                                           {"residual": resid},
                                           LINE_SEARCH_FAILURE))
        u = trial
        ev = _energy.punctured_energy(metric, v_inf, u)
        flips_total += len(ev.delaunay.flips)

    raise IterLimit(
        "no convergence in %d iterations" % opts.max_iterations,
        report=SolveReport(u, opts.max_iterations, flips_total, [],
                           {"residual": resid}, ITER_LIMIT))


class KKTReport:
    def __init__(self, passed, stationarity, feasibility, complementarity,
                 active_set, gradient):
        self.passed = passed
        self.stationarity = stationarity
        self.feasibility = feasibility
        self.complementarity = complementarity
        self.active_set = active_set
        self.gradient = gradient


def kkt_check(metric, problem, u, tolerance=1e-8):
    """Independent optimality verification.

    problem is either a ConeAngleTarget (unconstrained, stationarity of
    the conformal energy) or a vertex id (bounds-constrained punctured
    problem, with bounds recomputed from scratch).
    """
    if isinstance(problem, ConeAngleTarget):
        ev = _energy.conformal_energy(metric, problem, u)
        stat = float(np.max(np.abs(ev.gradient)))
        return KKTReport(stat <= tolerance, stat, 0.0, 0.0, [],
                         ev.gradient)

    v_inf = int(problem)
    deltas = _delaunay.horocycle_distances_to(metric, v_inf)
    tri = metric.triangulation
    free = [v for v in range(tri.num_vertices) if v != v_inf]
    bounds = np.array([-deltas[v] for v in free])
    ev = _energy.punctured_energy(metric, v_inf, u)
    g = ev.gradient
    uf = np.asarray(u, dtype=float)[free]
    feas = float(max(0.0, np.max(bounds - uf)))
    at_bound = uf - bounds <= tolerance * np.maximum(1.0, np.abs(bounds))
    stat = float(np.max(np.abs(g[~at_bound]))) if np.any(~at_bound) else 0.0
    comp = float(max(0.0, np.max(-g[at_bound]))) if np.any(at_bound) else 0.0
    active_set = sorted(free[i] for i in np.nonzero(at_bound)[0])
    passed = (feas <= tolerance and stat <= tolerance
              and comp <= tolerance and len(active_set) > 0)
    return KKTReport(passed, stat, feas, comp, active_set, g)
