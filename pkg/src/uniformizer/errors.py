"""Exception hierarchy shared by all modules."""


class UniformizerError(Exception):
    """Base class for all errors raised by this package."""


# --- combinatorics ---------------------------------------------------------

class UnmatchedSide(UniformizerError):
    """A triangle side is missing from the gluing list or listed twice."""


class NonOrientable(UniformizerError):
    """A side is glued to itself, which would reverse orientation."""


class EulerMismatch(UniformizerError):
    """Computed genus disagrees with the caller's genus hint."""


class DegenerateFlip(UniformizerError):
    """Both sides of the edge lie in the same triangle; no quadrilateral."""


class UnknownVertex(UniformizerError):
    """Vertex id out of range or not kept in the given subcomplex."""


# --- Penner algebra --------------------------------------------------------

class IncompatibleShear(UniformizerError):
    """Shear coordinates do not sum to zero around every vertex."""


# --- Delaunay --------------------------------------------------------------

class DegenerateQuad(UniformizerError):
    """Local Delaunay condition undefined: both sides of the edge in one triangle."""


class FlipLimitExceeded(UniformizerError):
    """Flip count exceeded the safety cap; input is likely pathological."""


class SameVertex(UniformizerError):
    """Horocycle distance requested between a vertex and itself."""


# --- energies --------------------------------------------------------------

class TriangleInequalityViolated(UniformizerError):
    """Side lengths do not satisfy the strict triangle inequalities."""


class NotNeutral(UniformizerError):
    """Edge is not cocircular; both triangulations are not simultaneously Delaunay."""


# --- optimization ----------------------------------------------------------

class GaussBonnetViolated(UniformizerError):
    """Target cone angles do not satisfy the Gauss-Bonnet condition."""


class WrongGenus(UniformizerError):
    """Operation requires a surface of a different genus."""


class SolverFailure(UniformizerError):
    """Optimization did not converge. Carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IterLimit(SolverFailure):
    """Maximum iteration count reached before convergence."""


class LineSearchFailure(SolverFailure):
    """Backtracking line search failed to make progress."""


# --- realization -----------------------------------------------------------

class NotRealizable(UniformizerError):
    """Delaunay output fails the realizability conditions (optimizer failure upstream)."""


class LayoutInconsistent(UniformizerError):
    """Planar layout did not close up within tolerance."""


class ConvexityViolated(UniformizerError):
    """Reconstructed polyhedron is not convex within tolerance."""


class WrongKind(UniformizerError):
    """Realization routine called on the wrong realizability class."""


# --- input files -----------------------------------------------------------

class NonTriangleFace(UniformizerError):
    """Mesh file contains a non-triangular face."""


class OpenMesh(UniformizerError):
    """Mesh file is not a closed surface."""


class ZeroLengthEdge(UniformizerError):
    """Mesh file contains an edge of zero length."""


class FormatError(UniformizerError):
    """Malformed surface or report file."""
