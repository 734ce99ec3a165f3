"""Shared coefficient systems and bodies for the test-suite."""

import numpy as np

from parainv.bodies import (
    Ball,
    HalfSpace,
    PolyhedralAngle,
    PolyhedralCone,
    PolyhedralCylinder,
    SmoothCone,
    SphericalCylinder,
)
from parainv.coefficients import CoefficientField
from parainv.errors import GeometryError


def single(M, first=None):
    """n = 1 system with A_11 = M (and optional A_1)."""
    M = np.asarray(M, dtype=float)
    A1 = None if first is None else np.asarray(first, dtype=float)[None]
    return CoefficientField.constant(M[None, None], A1)


def diagonal_2d(M11, M22, M12=None, first=None):
    """n = 2 system; A_12 = A_21 = M12 (zero if omitted)."""
    M11 = np.asarray(M11, dtype=float)
    m = M11.shape[0]
    A2 = np.zeros((2, 2, m, m))
    A2[0, 0], A2[1, 1] = M11, M22
    if M12 is not None:
        A2[0, 1] = A2[1, 0] = M12
    return CoefficientField.constant(A2, first)


def heat(n, m):
    A2 = np.zeros((n, n, m, m))
    for j in range(n):
        A2[j, j] = np.eye(m)
    return CoefficientField.constant(A2)


def cross_coupled():
    return diagonal_2d(np.diag([1.0, 2.0]), np.diag([1.0, 2.0]), 0.1 * np.eye(2))


def random_parabolic_like(rng, n, m, make_matrix):
    """System whose matrices come from ``make_matrix``; diagonal A_jj get +3 I for a margin."""
    A2 = np.zeros((n, n, m, m))
    for j in range(n):
        A2[j, j] = make_matrix() + 3.0 * np.eye(m)
        for k in range(j + 1, n):
            A2[j, k] = A2[k, j] = 0.3 * make_matrix()
    A1 = np.stack([make_matrix() for _ in range(n)])
    return CoefficientField.constant(A2, A1)


def upper_triangular_half_plane():
    return single([[1.0, 0.3], [0.0, 2.0]]), PolyhedralAngle(2, [2], [0.0])


def lower_triangular_half_plane(a21=0.5):
    return single([[1.0, 0.0], [a21, 2.0]]), PolyhedralAngle(2, [2], [0.0])


def orthant(m):
    return PolyhedralCone(np.zeros(m), -np.eye(m))


def simplex_cone(m, seed=0):
    """A fixed ``p = m + 1`` facet cone."""
    return random_cone(np.random.default_rng(seed), m, m + 1)


def rotated_wedge():
    """``p = m = 2`` cone that is not an orthant."""
    th = np.pi / 6
    normals = np.array([[-1.0, 0.0], [np.sin(th), -np.cos(th)]])
    return PolyhedralCone(np.zeros(2), normals)


def random_cone(rng, m, p=None):
    """Random cone with ``p`` facets (default ``m``) around a random axis."""
    p = m if p is None else p
    if m == 2 and p > 2:
        raise ValueError("a cone in R^2 has at most two facets")
    for _ in range(10_000):
        axis = rng.standard_normal(m)
        axis /= np.linalg.norm(axis)
        N = rng.standard_normal((p, m))
        N -= np.outer(N @ axis, axis)
        N /= np.linalg.norm(N, axis=1, keepdims=True)
        N = N - rng.uniform(0.2, 1.0, (p, 1)) * axis
        N /= np.linalg.norm(N, axis=1, keepdims=True)
        try:
            return PolyhedralCone(rng.standard_normal(m), N)
        except GeometryError:
            continue
    raise RuntimeError("no valid cone found")  # pragma: no cover


def strip():
    return PolyhedralCylinder(2, [2], [-1.0], [1.0])


def ball(m, radius=1.0):
    return Ball(np.zeros(m), radius)


def smooth_cone():
    return SmoothCone(np.zeros(3), np.ones(3), np.pi / 6)


def half_space(nu, a):
    return HalfSpace(nu, a)


def spherical_cylinder_last_two(radius=1.0):
    return SphericalCylinder(3, [2, 3], radius)


FAMILIES = ("polyhedral_angle", "polyhedral_cylinder", "spherical_cylinder", "orthant_cone", "simplex_cone")


def _structured(rng, m, family, rows):
    """Random matrix satisfying the structural condition of ``family``."""
    M = 0.5 * rng.standard_normal((m, m))
    idx = np.asarray(rows) - 1
    if family in ("polyhedral_angle", "polyhedral_cylinder", "spherical_cylinder"):
        for i in idx:
            diag = M[i, i]
            M[i] = 0.0
            M[i, i] = diag
        if family == "spherical_cylinder":
            M[idx, idx] = M[idx[0], idx[0]]
    elif family == "orthant_cone":
        M = np.diag(np.diag(M))
    else:
        M = M[0, 0] * np.eye(m)
    return M


def _break(rng, M, family, rows):
    """Perturb one entry so the structural condition fails."""
    M = M.copy()
    m = len(M)
    idx = list(np.asarray(rows) - 1)
    eps = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 0.5)
    if family == "simplex_cone" or (family == "spherical_cylinder" and len(idx) > 1 and rng.uniform() < 0.5):
        i = int(rng.choice(idx)) if family == "spherical_cylinder" else int(rng.integers(m))
        M[i, i] += eps
        return M
    i = int(rng.choice(idx)) if idx else int(rng.integers(m))
    j = int(rng.choice([c for c in range(m) if c != i]))
    M[i, j] += eps
    return M


def random_case(rng, family, n=None, m=None):
    """Random constant system plus body of ``family``; about half the cases violate the structure."""
    n = int(rng.integers(1, 3)) if n is None else n
    # a cone in R^2 has at most two facets, so p = m + 1 needs m >= 3
    lo = 3 if family in ("spherical_cylinder", "simplex_cone") else 2
    m = int(rng.integers(lo, 5)) if m is None else m
    if family in ("polyhedral_angle", "polyhedral_cylinder", "spherical_cylinder"):
        k = int(rng.integers(1, m + 1))
        rows = sorted(int(r) for r in rng.choice(np.arange(1, m + 1), size=k, replace=False))
    else:
        rows = list(range(1, m + 1))

    if family == "polyhedral_angle":
        body = PolyhedralAngle(m, rows, rng.uniform(-1, 1, len(rows)))
    elif family == "polyhedral_cylinder":
        lo_b = rng.uniform(-1, 0, len(rows))
        body = PolyhedralCylinder(m, rows, lo_b, lo_b + rng.uniform(0.5, 2, len(rows)))
    elif family == "spherical_cylinder":
        body = SphericalCylinder(m, rows, rng.uniform(0.5, 2))
    elif family == "orthant_cone":
        body = PolyhedralCone(rng.uniform(-1, 1, m), -np.eye(m))
    else:
        body = random_cone(rng, m, m + 1)

    count = n * (n + 1) // 2 + n
    mats = [_structured(rng, m, family, rows) for _ in range(count)]
    if rng.uniform() < 0.5:
        which = int(rng.integers(count))
        mats[which] = _break(rng, mats[which], family, rows)
    A2 = np.zeros((n, n, m, m))
    it = iter(mats)
    for j in range(n):
        for k in range(j, n):
            M = next(it)
            A2[j, k] = A2[k, j] = M + (3.0 * np.eye(m) if j == k else 0.0)
    A1 = np.stack([next(it) for _ in range(n)])
    return CoefficientField.constant(A2, A1), body
