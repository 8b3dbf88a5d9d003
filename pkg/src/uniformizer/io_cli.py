"""File formats and the command line interface.

The canonical text format (SurfaceFile) stores the gluing list, so it
can encode self-glued tori and multi-edges that vertex-indexed face
lists cannot.  Grammar (blank lines and '#' comments are ignored):

    uniformizer-surface 1
    triangles <T>
    glue <t1> <s1> <t2> <s2>     (one line per edge)
    lambda                        (or: lengths)
    <value>                       (one line per edge, in glue order)
    theta                         (optional; one line per vertex)
    <value>
    labels                        (optional; one line per vertex)
    <string>

Edges are indexed by the order of the glue lines; lengths are converted
on ingestion via lambda = 2 log(length).  Numbers are emitted with 17
significant digits so that emit -> ingest -> emit is bitwise stable.
"""

import argparse
import logging
import math
import sys
import time

import numpy as np

from . import delaunay as _delaunay
from . import energy as _energy
from . import mesh_core
from . import optimize as _optimize
from . import realize as _realize
from .errors import (
    UniformizerError,
    SolverFailure,
    FormatError,
    NonTriangleFace,
    OpenMesh,
    ZeroLengthEdge,
)
from .penner import ConeAngleTarget, DecoratedMetric

log = logging.getLogger(__name__)

FORMAT_LINE = "uniformizer-surface 1"


class SurfaceFile:
    """Parsed contents of the canonical text format."""

    def __init__(self, triangulation, metric, theta=None, labels=None):
        self.triangulation = triangulation
        self.metric = metric
        self.theta = theta
        self.labels = labels


def _fmt(x):
    return "%.17g" % x


def write_surface(path, metric, theta=None, labels=None):
    tri = metric.triangulation
    lines = [FORMAT_LINE, "triangles %d" % tri.num_triangles]
    for k1, k2 in tri.edge_sides:
        t1, s1 = divmod(k1, 3)
        t2, s2 = divmod(k2, 3)
        lines.append("glue %d %d %d %d" % (t1, s1, t2, s2))
    lines.append("lambda")
    lines += [_fmt(x) for x in metric.lam]
    if theta is not None:
        lines.append("theta")
        lines += [_fmt(x) for x in np.asarray(theta, dtype=float)]
    if labels is not None:
        lines.append("labels")
        lines += [str(s) for s in labels]
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def read_surface(path):
    with open(path) as fh:
        raw = fh.read()
    lines = [ln.strip() for ln in raw.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != FORMAT_LINE:
        raise FormatError("missing format line %r" % FORMAT_LINE)
    pos = 1

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise FormatError("unexpected end of file")
        ln = lines[pos]
        pos += 1
        return ln

    header = take().split()
    if len(header) != 2 or header[0] != "triangles":
        raise FormatError("expected 'triangles <T>'")
    ntri = int(header[1])

    gluing = []
    while pos < len(lines) and lines[pos].startswith("glue "):
        parts = take().split()
        if len(parts) != 5:
            raise FormatError("malformed glue line %r" % " ".join(parts))
        t1, s1, t2, s2 = map(int, parts[1:])
        gluing.append(((t1, s1), (t2, s2)))
    tri = mesh_core.build_from_gluings(gluing)
    if tri.num_triangles != ntri:
        raise FormatError("triangle count %d does not match gluing list"
                          % ntri)
    # Edge i of the file is the edge the i-th glue line describes; the
    # derived tables may number edges differently, so remap per-edge
    # value lists through the gluing list.
    edge_of_line = [tri.side_edge[3 * t1 + s1]
                    for ((t1, s1), _) in gluing]
    if sorted(edge_of_line) != list(range(tri.num_edges)):
        raise FormatError("glue lines do not enumerate the edges")

    lam = None
    theta = None
    labels = None
    while pos < len(lines):
        section = take()
        if section in ("lambda", "lengths"):
            if lam is not None:
                raise FormatError("both lambda and lengths given")
            vals = [float(take()) for _ in range(tri.num_edges)]
            if section == "lengths":
                if any(v <= 0 for v in vals):
                    raise FormatError("lengths must be strictly positive")
                vals = [2.0 * math.log(v) for v in vals]
            lam = np.zeros(tri.num_edges)
            lam[edge_of_line] = vals
        elif section == "theta":
            theta = np.array([float(take())
                              for _ in range(tri.num_vertices)])
        elif section == "labels":
            labels = [take() for _ in range(tri.num_vertices)]
        else:
            raise FormatError("unknown section %r" % section)
    if lam is None:
        raise FormatError("no lambda or lengths section")
    return SurfaceFile(tri, DecoratedMetric(tri, lam), theta, labels)


def write_report(path, entries):
    """key: value lines, numbers with 17 significant digits."""
    lines = []
    for key, value in entries:
        if isinstance(value, float):
            value = _fmt(value)
        lines.append("%s: %s" % (key, value))
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def ingest_obj(path):
    """Closed triangle mesh -> (Triangulation, DecoratedMetric) with
    lambda = 2 log(edge length)."""
    verts = []
    faces = []
    with open(path) as fh:
        for ln in fh:
            parts = ln.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append(np.array([float(x) for x in parts[1:4]]))
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise NonTriangleFace("face with %d vertices" % len(idx))
                faces.append(tuple(i - 1 for i in idx))
    if not faces:
        raise OpenMesh("no faces in %s" % path)
    try:
        tri, labels = mesh_core.build_from_faces(faces)
    except UniformizerError as exc:
        raise OpenMesh(str(exc))

    lam = np.zeros(tri.num_edges)
    for e, (k1, _) in enumerate(tri.edge_sides):
        t, s = divmod(k1, 3)
        a = labels[tri.corner_vertex[k1]]
        b = labels[tri.corner_vertex[3 * t + (s + 1) % 3]]
        length = float(np.linalg.norm(verts[a] - verts[b]))
        if length <= 0:
            raise ZeroLengthEdge("edge between obj vertices %d and %d"
                                 % (a + 1, b + 1))
        lam[e] = 2.0 * math.log(length)
    return tri, DecoratedMetric(tri, lam)


def emit_obj(path, realization):
    """Write a realization's vertices and faces as an ASCII OBJ."""
    order = sorted(realization.vertex_positions)
    index = {v: i + 1 for i, v in enumerate(order)}
    lines = []
    for v in order:
        p = np.asarray(realization.vertex_positions[v], dtype=float)
        if np.iscomplexobj(realization.vertex_positions[v]) or p.shape == ():
            z = complex(realization.vertex_positions[v])
            p = np.array([z.real, z.imag, 0.0])
        elif p.shape == (2,):
            p = np.array([p[0], p[1], 0.0])
        lines.append("v %s %s %s" % (_fmt(p[0]), _fmt(p[1]), _fmt(p[2])))
    for face in realization.faces:
        lines.append("f " + " ".join(str(index[v]) for v in face))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _load_input(path):
    if path.endswith(".obj"):
        tri, metric = ingest_obj(path)
        return SurfaceFile(tri, metric)
    return read_surface(path)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="uniformizer",
                     description="Discrete uniformization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate input and report "
                                     "Delaunay and Gauss-Bonnet status")
    p.add_argument("input")

    p = sub.add_parser("delaunay", help="run the flip algorithm")
    p.add_argument("input")
    p.add_argument("--adjusted", action="store_true")
    p.add_argument("--undecorated", default="",
                   help="comma separated vertex ids with missing "
                        "horocycles")
    p.add_argument("--out", default=None)

    p = sub.add_parser("distance", help="horocycle distance between "
                                        "two vertices")
    p.add_argument("input")
    p.add_argument("--from", dest="v_from", type=int, required=True)
    p.add_argument("--to", dest="v_to", type=int, required=True)

    p = sub.add_parser("uniformize-sphere",
                       help="inscribed polyhedron / two-sided polygon")
    p.add_argument("input")
    p.add_argument("--vinf", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--out-obj", default=None)
    p.add_argument("--report", default=None)

    p = sub.add_parser("uniformize-torus", help="flat torus modulus")
    p.add_argument("input")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)

    p = sub.add_parser("prescribe-angles",
                       help="flat metric with prescribed cone angles")
    p.add_argument("input")
    p.add_argument("--theta", required=True,
                   help="'uniform' or a file with one angle per vertex")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)

    p = sub.add_parser("energy", help="print energy value and gradient")
    p.add_argument("input")
    p.add_argument("--u", required=True,
                   help="file with one u value per vertex")
    p.add_argument("--vinf", type=int, default=None)
    return parser


def _report_lines(report):
    entries = [("status", report.status),
               ("iterations", report.iterations),
               ("flips", report.flips_total),
               ("energy", report.energy),
               ("seconds", report.seconds)]
    for key, value in sorted(report.kkt_residuals.items()):
        entries.append(("kkt_" + key, float(value)))
    if report.active_set:
        entries.append(("active_set",
                        ",".join(str(v) for v in report.active_set)))
    finite = [x for x in np.atleast_1d(report.u_final)
              if math.isfinite(x)]
    entries.append(("u_final", " ".join(_fmt(x) for x in finite)))
    return entries


def _cmd_check(args):
    sf = _load_input(args.input)
    tri = sf.triangulation
    met = sf.metric
    chk = _delaunay.check_delaunay(met)
    theta_sum = 0.0
    for v in range(tri.num_vertices):
        pass
    # Gauss-Bonnet report against all-2pi targets.
    chi = tri.euler_characteristic
    target = ConeAngleTarget.uniform(tri.num_vertices)
    ev = _energy.conformal_energy(met, target, np.zeros(tri.num_vertices))
    defect = float(np.sum(2.0 * math.pi - ev.theta_tilde))
    print("triangles: %d  edges: %d  vertices: %d  genus: %d"
          % (tri.num_triangles, tri.num_edges, tri.num_vertices, tri.genus))
    print("delaunay: %s  violations: %d  nonessential: %d"
          % ("ok" if chk.ok else "violated", len(chk.violations),
             len(chk.nonessential)))
    print("sum defect = %.6e (chi=%d)" % (defect - 2 * math.pi * chi, chi))
    return 0


def _cmd_delaunay(args):
    sf = _load_input(args.input)
    tri = sf.triangulation
    from .penner import PartialDecoration
    if args.undecorated:
        missing = [int(x) for x in args.undecorated.split(",")]
        finite = [v for v in range(tri.num_vertices) if v not in missing]
        u = PartialDecoration.all_infinite_except(tri.num_vertices, finite)
    else:
        u = PartialDecoration.zeros(tri.num_vertices)
    mode = _delaunay.ADJUSTED if args.adjusted else _delaunay.PLAIN
    result = _delaunay.make_delaunay(sf.metric, u, mode=mode)
    print("flips: %d  nonessential: %d"
          % (len(result.flips), len(result.nonessential_edges)))
    for e, before, after in result.flips:
        print("flip %d %s %s" % (e, _fmt(before), _fmt(after)))
    if args.out:
        write_surface(args.out, result.metric, theta=sf.theta)
    return 0


def _cmd_distance(args):
    sf = _load_input(args.input)
    value = _delaunay.horocycle_distance(sf.metric, args.v_from, args.v_to)
    print(_fmt(value))
    return 0


def _cmd_uniformize_sphere(args):
    sf = _load_input(args.input)
    opts = _optimize.SolveOptions(gradient_tolerance=args.tol,
                                  max_iterations=args.max_iter)
    realization = _realize.uniformize_sphere(sf.metric, args.vinf, opts)
    print("kind: %s" % realization.kind)
    for key, value in sorted(realization.diagnostics.items()):
        print("%s: %s" % (key, value))
    if args.out_obj:
        emit_obj(args.out_obj, realization)
    if args.report:
        write_report(args.report,
                     [("kind", realization.kind)]
                     + _report_lines(realization.report))
    return 0


def _cmd_uniformize_torus(args):
    sf = _load_input(args.input)
    opts = _optimize.SolveOptions(gradient_tolerance=args.tol,
                                  max_iterations=args.max_iter)
    realization = _realize.uniformize_torus(sf.metric, opts)
    v1, v2 = realization.lattice
    print("tau: %s %s" % (_fmt(realization.tau.real),
                          _fmt(realization.tau.imag)))
    print("lattice: %s %s %s %s" % (_fmt(v1.real), _fmt(v1.imag),
                                    _fmt(v2.real), _fmt(v2.imag)))
    if args.out:
        write_surface(args.out, realization.metric)
    if args.report:
        write_report(args.report,
                     [("tau_re", realization.tau.real),
                      ("tau_im", realization.tau.imag)]
                     + _report_lines(realization.report))
    return 0


def _cmd_prescribe_angles(args):
    sf = _load_input(args.input)
    tri = sf.triangulation
    if args.theta == "uniform":
        total = 2.0 * math.pi * (2 * tri.genus - 2 + tri.num_vertices)
        theta = np.full(tri.num_vertices, total / tri.num_vertices)
    else:
        with open(args.theta) as fh:
            theta = np.array([float(ln) for ln in fh.read().split()])
    target = ConeAngleTarget(theta)
    opts = _optimize.SolveOptions(gradient_tolerance=args.tol,
                                  max_iterations=args.max_iter)
    realization = _realize.prescribe_cone_angles(sf.metric, target, opts)
    print("max angle error: %s"
          % _fmt(realization.diagnostics["max_angle_error"]))
    if args.out:
        write_surface(args.out, realization.metric,
                      theta=realization.theta_tilde)
    if args.report:
        write_report(args.report, _report_lines(realization.report))
    return 0


def _cmd_energy(args):
    sf = _load_input(args.input)
    tri = sf.triangulation
    with open(args.u) as fh:
        u = np.array([float(x) for x in fh.read().split()])
    if len(u) != tri.num_vertices:
        raise FormatError("u file has %d values, need %d"
                          % (len(u), tri.num_vertices))
    if args.vinf is None:
        target = (ConeAngleTarget(sf.theta) if sf.theta is not None
                  else ConeAngleTarget.uniform(tri.num_vertices))
        ev = _energy.conformal_energy(sf.metric, target, u)
    else:
        ev = _energy.punctured_energy(sf.metric, args.vinf, u)
    print("value: %s" % _fmt(ev.value))
    print("gradient: " + " ".join(_fmt(g) for g in ev.gradient))
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "delaunay": _cmd_delaunay,
    "distance": _cmd_distance,
    "uniformize-sphere": _cmd_uniformize_sphere,
    "uniformize-torus": _cmd_uniformize_torus,
    "prescribe-angles": _cmd_prescribe_angles,
    "energy": _cmd_energy,
}


def cli_dispatch(argv):
    """Run one subcommand; returns the process exit code.

    0 success, 1 usage error, 2 validation error, 3 solver failure.
    """
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except SolverFailure as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return 3
    except (UniformizerError, OSError, ValueError) as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 2


def main():
    logging.basicConfig(level=logging.WARNING)
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
