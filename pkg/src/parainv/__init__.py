"""Invariance of convex bodies for linear parabolic systems.

Decides, from the coefficient matrices alone, whether a convex body is
invariant for ``u_t = sum A_jk u_{x_j x_k} + sum A_j u_{x_j}``, and checks
the answer against numerical solutions on a periodic box.
"""

from .bodies import (
    Ball,
    HalfSpace,
    HPolytope,
    PolyhedralAngle,
    PolyhedralCone,
    PolyhedralCylinder,
    SmoothCone,
    SphericalCylinder,
    body_from_dict,
    cone_normal_matrix,
    membership,
    normal_set,
    violation,
)
from .coefficients import CoefficientField
from .config import ProblemConfig, load_config, parse_config
from .criterion import (
    Status,
    Verdict,
    check_cone,
    check_cylinder,
    check_polyhedral_angle,
    check_spherical_cylinder,
    check_theorem,
    cross_validate,
    layer_criterion,
)
from .errors import DivergenceError, GeometryError, InputError, NumericError, StabilityError
from .linalg import eigen_align, is_scalar, matrix_exponential, rows_structure, similarity_diagonalize
from .parabolicity import petrovskii_margin, symbol_matrix

__version__ = "0.1.0"
