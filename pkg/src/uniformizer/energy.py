"""Variational energies for discrete uniformization.

Three levels:

* triangle_potential: the convex function of the three half-lambdas of a
  single triangle whose gradient consists of the euclidean angles.
* fixed_triangulation_energy: its sum over a fixed triangulation, plus
  the linear edge term and the horocycle-length terms weighted by the
  target cone angles.
* conformal_energy / punctured_energy: the same energy evaluated on the
  (adjusted) Delaunay retriangulation, as a function of the per-vertex
  scale factors u.  These are C^2 and convex; gradients measure angle
  defects and Hessians are cotangent Laplacians.
"""

import math

import numpy as np
import scipy.sparse as sp
from scipy.special import zeta

from . import delaunay as _delaunay
from . import mesh_core
from .errors import TriangleInequalityViolated, NotNeutral
from .penner import (
    DecoratedMetric,
    PartialDecoration,
    fiber_shift,
    horocycle_length,
    ptolemy_update,
)

# Series coefficients for the Lobachevsky function on (-pi/2, pi/2]:
#   L(x) = x - x log|2x| + sum_k  zeta(2k) / (k (2k+1) pi^(2k)) x^(2k+1)
_LOB_K = 30
_LOB_COEF = np.array([zeta(2 * k) / (k * (2 * k + 1) * math.pi ** (2 * k))
                      for k in range(1, _LOB_K + 1)])


def lobachevsky(theta):
    """Milnor's Lobachevsky function, -integral of log|2 sin t|.

    Pi-periodic and odd; evaluated by reducing the argument to
    (-pi/2, pi/2] and summing the classical power series, accurate to
    about 1e-15 absolute.
    """
    x = theta - math.pi * round(theta / math.pi)
    if x == 0.0:
        return 0.0
    x2 = x * x
    s = 0.0
    for c in _LOB_COEF[::-1]:
        s = s * x2 + c
    return x - x * math.log(abs(2.0 * x)) + s * x2 * x


def euclidean_angles(l1, l2, l3):
    """Angles opposite the sides of a euclidean triangle, via the
    half-angle arctangent (stable near degenerate triangles).

    Returns (a1, a2, a3) with a_i opposite l_i and a1 + a2 + a3 = pi.
    """
    s = 0.5 * (l1 + l2 + l3)
    d1, d2, d3 = s - l1, s - l2, s - l3
    if d1 <= 0 or d2 <= 0 or d3 <= 0:
        raise TriangleInequalityViolated(
            "sides (%g, %g, %g) violate the triangle inequality"
            % (l1, l2, l3))
    a1 = 2.0 * math.atan2(math.sqrt(d2 * d3), math.sqrt(s * d1))
    a2 = 2.0 * math.atan2(math.sqrt(d3 * d1), math.sqrt(s * d2))
    a3 = 2.0 * math.atan2(math.sqrt(d1 * d2), math.sqrt(s * d3))
    return a1, a2, a3


def triangle_potential(x1, x2, x3):
    """Per-triangle convex potential of the half-lambdas.

    For sides exp(x_i) with angles a_i opposite them:

        value    = sum a_i x_i + sum L(a_i)
        gradient = (a1, a2, a3)
        hessian  = sum_i cot(a_i) (dx_j - dx_k)^2

    The domain requires strict triangle inequalities for exp(x_i);
    the scaling relation value(x + h) = value(x) + pi*h holds exactly.
    """
    a1, a2, a3 = euclidean_angles(math.exp(x1), math.exp(x2), math.exp(x3))
    value = (a1 * x1 + a2 * x2 + a3 * x3
             + lobachevsky(a1) + lobachevsky(a2) + lobachevsky(a3))
    grad = np.array([a1, a2, a3])
    c1, c2, c3 = (1.0 / math.tan(a1), 1.0 / math.tan(a2), 1.0 / math.tan(a3))
    hess = np.array([
        [c2 + c3, -c3, -c2],
        [-c3, c3 + c1, -c1],
        [-c2, -c1, c1 + c2],
    ])
    return value, grad, hess


def fixed_triangulation_energy(metric, target):
    """Energy of a decorated metric on its own (fixed) triangulation.

    Sum over triangles of twice the triangle potential at the
    half-lambdas, minus pi times the lambda total, minus the target
    angles times the log horocycle lengths.  Requires every triangle to
    satisfy the triangle inequalities in ell = exp(lambda/2).
    """
    tri = metric.triangulation
    total = 0.0
    for t in range(tri.num_triangles):
        l1, l2, l3 = metric.triangle_lambdas(t)
        value, _, _ = triangle_potential(l1 / 2.0, l2 / 2.0, l3 / 2.0)
        total += 2.0 * value
    total -= math.pi * float(np.sum(metric.lam))
    theta = target.theta
    for v in range(tri.num_vertices):
        if theta[v] != 0.0:
            total -= theta[v] * math.log(horocycle_length(metric, v))
    return total


class EnergyEvaluation:
    """Value, gradient, and sparse Hessian of an energy at a point.

    gradient and hessian are indexed by free_vertices (all vertices for
    the conformal energy, all but the distinguished vertex for the
    punctured energy).  theta_tilde holds the realized angle sums.
    """

    def __init__(self, value, gradient, hessian, delaunay_result,
                 theta_tilde, free_vertices):
        self.value = value
        self.gradient = gradient
        self.hessian = hessian
        self.delaunay = delaunay_result
        self.theta_tilde = theta_tilde
        self.free_vertices = free_vertices


def _angles_by_triangle(tri, lam, triangles):
    """dict t -> (a0, a1, a2) with a_s the angle opposite side s,
    computed from the shifted lambdas lam (indexed by edge)."""
    out = {}
    for t in triangles:
        se = tri.side_edge
        l0, l1, l2 = lam[se[3 * t]], lam[se[3 * t + 1]], lam[se[3 * t + 2]]
        out[t] = euclidean_angles(math.exp(l0 / 2.0), math.exp(l1 / 2.0),
                                  math.exp(l2 / 2.0))
    return out


def _cotangent_hessian(n_free, entries):
    """Assemble the matrix of second partials from (i, j, w) entries.

    The second derivative is the quadratic form
    1/4 sum w_e (du_i - du_j)^2 evaluated on (x, x) twice, so the
    per-edge matrix block is w/2 [[1, -1], [-1, 1]].
    """
    rows, cols, vals = [], [], []
    for i, j, w in entries:
        if i == j or i < 0 or j < 0:
            continue
        q = 0.5 * w
        rows += [i, j, i, j]
        cols += [i, j, j, i]
        vals += [q, q, -q, -q]
    return sp.csr_matrix(sp.coo_matrix((vals, (rows, cols)),
                                       shape=(n_free, n_free)))


def conformal_energy(metric, target, u):
    """Energy of the conformally shifted metric on its Delaunay
    retriangulation, as a function of the log scale factors u.

    Returns an EnergyEvaluation over all vertices: the gradient at v is
    target angle minus realized angle sum, and the Hessian is the
    cotangent Laplacian of the Delaunay triangulation (kernel: constant
    vectors).
    """
    tri = metric.triangulation
    u = np.asarray(u, dtype=float)
    shifted = fiber_shift(metric, u)
    result = _delaunay.make_delaunay(shifted)
    met = result.metric
    rtri = met.triangulation

    value = fixed_triangulation_energy(met, target)

    angles = _angles_by_triangle(rtri, met.lam, range(rtri.num_triangles))
    theta_tilde = np.zeros(rtri.num_vertices)
    cv = rtri.corner_vertex
    for t in range(rtri.num_triangles):
        for i in range(3):
            # The angle at corner i is opposite side (i+1) % 3.
            theta_tilde[cv[3 * t + i]] += angles[t][(i + 1) % 3]
    gradient = target.theta - theta_tilde

    entries = []
    for e, (k1, k2) in enumerate(rtri.edge_sides):
        w = 0.0
        for k in (k1, k2):
            t, s = divmod(k, 3)
            w += 1.0 / math.tan(angles[t][s])
        v1, v2 = rtri.edge_verts[e]
        entries.append((v1, v2, w))
    hessian = _cotangent_hessian(rtri.num_vertices, entries)

    return EnergyEvaluation(value, gradient, hessian, result, theta_tilde,
                            list(range(rtri.num_vertices)))


def conformal_energy_value(metric, target, u):
    """Value-only fast path for line searches."""
    shifted = fiber_shift(metric, u)
    result = _delaunay.make_delaunay(shifted)
    return fixed_triangulation_energy(result.metric, target)


def punctured_energy(metric, v_inf, u):
    """Limit energy with the horocycle at v_inf removed.

    u is indexed by all vertices; the entry at v_inf is ignored.  The
    evaluation runs the adjusted flip algorithm with u = +inf at v_inf,
    then sums over the subcomplex avoiding v_inf.  Gradient and Hessian
    are indexed by the free vertices (all but v_inf, in id order).
    """
    tri = metric.triangulation
    u = np.asarray(u, dtype=float)
    n = tri.num_vertices
    free = [v for v in range(n) if v != v_inf]
    findex = {v: i for i, v in enumerate(free)}

    u_ext = u.copy()
    u_ext[v_inf] = np.inf
    result = _delaunay.make_delaunay(metric, PartialDecoration(u_ext),
                                     mode=_delaunay.ADJUSTED)
    rtri = result.metric.triangulation
    lam_base = result.metric.lam
    sub = mesh_core.subcomplex_avoiding(rtri, v_inf)
    tset = set(sub.kept_triangles)

    # Shifted lambdas on the kept edges (finite: both ends decorated).
    lam_shift = {}
    for e in sub.kept_edges:
        a, b = rtri.edge_verts[e]
        lam_shift[e] = lam_base[e] + u_ext[a] + u_ext[b]

    value = 0.0
    se = rtri.side_edge
    angles = {}
    for t in sub.kept_triangles:
        l0, l1, l2 = (lam_shift[se[3 * t]], lam_shift[se[3 * t + 1]],
                      lam_shift[se[3 * t + 2]])
        val, _, _ = triangle_potential(l0 / 2.0, l1 / 2.0, l2 / 2.0)
        value += 2.0 * val
        angles[t] = euclidean_angles(math.exp(l0 / 2.0), math.exp(l1 / 2.0),
                                     math.exp(l2 / 2.0))
    value -= math.pi * sum(lam_shift.values())
    for v in free:
        value -= 2.0 * math.pi * (math.log(horocycle_length(metric, v))
                                  - u_ext[v])

    theta_tilde = np.zeros(n)
    cv = rtri.corner_vertex
    for t in sub.kept_triangles:
        for i in range(3):
            theta_tilde[cv[3 * t + i]] += angles[t][(i + 1) % 3]

    gradient = np.zeros(len(free))
    for v in free:
        deg1, deg2 = mesh_core.vertex_degrees(rtri, sub, v)
        gradient[findex[v]] = (-theta_tilde[v]
                               + math.pi * (deg2 - deg1 + 2))

    entries = []
    for e in sub.kept_edges:
        w = 0.0
        for k in rtri.edge_sides[e]:
            t, s = divmod(k, 3)
            if t in tset:
                w += 1.0 / math.tan(angles[t][s])
        v1, v2 = rtri.edge_verts[e]
        entries.append((findex[v1], findex[v2], w))
    hessian = _cotangent_hessian(len(free), entries)

    return EnergyEvaluation(value, gradient, hessian, result, theta_tilde,
                            free)


def punctured_energy_value(metric, v_inf, u):
    """Value-only fast path for line searches."""
    tri = metric.triangulation
    u_ext = np.asarray(u, dtype=float).copy()
    u_ext[v_inf] = np.inf
    result = _delaunay.make_delaunay(metric, PartialDecoration(u_ext),
                                     mode=_delaunay.ADJUSTED)
    rtri = result.metric.triangulation
    lam_base = result.metric.lam
    sub = mesh_core.subcomplex_avoiding(rtri, v_inf)
    se = rtri.side_edge
    lam_shift = {}
    for e in sub.kept_edges:
        a, b = rtri.edge_verts[e]
        lam_shift[e] = lam_base[e] + u_ext[a] + u_ext[b]
    value = 0.0
    for t in sub.kept_triangles:
        l0, l1, l2 = (lam_shift[se[3 * t]], lam_shift[se[3 * t + 1]],
                      lam_shift[se[3 * t + 2]])
        val, _, _ = triangle_potential(l0 / 2.0, l1 / 2.0, l2 / 2.0)
        value += 2.0 * val
    value -= math.pi * sum(lam_shift.values())
    for v in range(tri.num_vertices):
        if v != v_inf:
            value -= 2.0 * math.pi * (math.log(horocycle_length(metric, v))
                                      - u_ext[v])
    return value


class CrossflipReport:
    def __init__(self, edge, margin, value_dev, grad_dev, hess_dev,
                 third_dev):
        self.edge = edge
        self.margin = margin
        self.value_dev = value_dev
        self.grad_dev = grad_dev
        self.hess_dev = hess_dev
        self.third_dev = third_dev


def crossflip_c2_check(metric, target, e, margin_tol=1e-8,
                       grad_step=1e-5, hess_step=1e-4, third_step=1e-2):
    """Compare the fixed-triangulation energy across a flip of a
    cocircular edge.

    Both charts describe the same surface near a cocircular edge, and
    the energy is C^2 there: values, gradients, and Hessians (in lambda,
    pulled back through the Ptolemy transition) must agree.  Third
    derivatives generally differ; their finite-difference deviation is
    reported but not judged.
    """
    tri1 = metric.triangulation
    margin = _delaunay.delaunay_margin(metric, None, e)
    (inc_q, inc_p, opp_r, opp_rp), _ = _delaunay._margin_terms(
        tri1, metric.lam, e)
    scale = inc_q + inc_p + opp_r + opp_rp
    if abs(margin) > margin_tol * scale:
        raise NotNeutral("edge %d has margin %g, not cocircular"
                         % (e, margin))

    tri2 = mesh_core.flip_edge(tri1, e)
    (ka, kb, kc, kd), _ = _delaunay._quad(tri1, e)
    se = tri1.side_edge
    ea, eb, ec, ed = se[ka], se[kb], se[kc], se[kd]

    def transition(lam):
        out = lam.copy()
        out[e] = ptolemy_update(lam[ea], lam[eb], lam[ec], lam[ed], lam[e])
        return out

    def f1(lam):
        return fixed_triangulation_energy(DecoratedMetric(tri1, lam), target)

    def f2(lam):
        return fixed_triangulation_energy(DecoratedMetric(tri2,
                                                          transition(lam)),
                                          target)

    lam0 = metric.lam
    ne = len(lam0)
    value_dev = abs(f1(lam0) - f2(lam0))

    def fd_grad(f, h):
        g = np.zeros(ne)
        for i in range(ne):
            d = np.zeros(ne)
            d[i] = h
            g[i] = (f(lam0 + d) - f(lam0 - d)) / (2.0 * h)
        return g

    grad_dev = float(np.max(np.abs(fd_grad(f1, grad_step)
                                   - fd_grad(f2, grad_step))))

    def fd_hess(f, h):
        hess = np.zeros((ne, ne))
        for i in range(ne):
            for j in range(i, ne):
                di = np.zeros(ne)
                dj = np.zeros(ne)
                di[i] = h
                dj[j] = h
                val = (f(lam0 + di + dj) - f(lam0 + di - dj)
                       - f(lam0 - di + dj) + f(lam0 - di - dj)) / (4 * h * h)
                hess[i, j] = hess[j, i] = val
        return hess

    hess_dev = float(np.max(np.abs(fd_hess(f1, hess_step)
                                   - fd_hess(f2, hess_step))))

    # Third derivative along the flipped edge's own coordinate.
    h = third_step
    d = np.zeros(ne)
    d[e] = 1.0

    def fd_third(f):
        return (-f(lam0 - 2 * h * d) + 2 * f(lam0 - h * d)
                - 2 * f(lam0 + h * d) + f(lam0 + 2 * h * d)) / (2 * h ** 3)

    third_dev = abs(fd_third(f1) - fd_third(f2))

    return CrossflipReport(e, margin, value_dev, grad_dev, hess_dev,
                           third_dev)
