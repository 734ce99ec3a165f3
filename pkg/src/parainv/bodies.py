"""Convex body families, their outward normal sets, and violation functionals.

Coordinate index sets (``indices``) are 1-based, matching how the polyhedral
angles, cylinders and spherical cylinders are usually written down
(e.g. the half-plane ``u_2 >= alpha_2`` has ``indices=[2]``).

Every body exposes ``violation(u)``, a continuous convex function that is
``<= 0`` exactly on the body. It is vectorised over the leading axes of
``u`` so whole solution grids can be monitored at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import GeometryError, InputError
from .linalg import SINGULAR_DET
from .parabolicity import fibonacci_sphere

UNIT_TOL = 1e-12
# LP slack below which a facet or interior is considered degenerate.
_LP_EPS = 1e-9


def _unit_rows(normals, m=None, name="normal") -> np.ndarray:
    V = np.atleast_2d(np.asarray(normals, dtype=float))
    if m is not None and V.shape[1] != m:
        raise InputError(f"{name}s must have {m} components, got {V.shape[1]}")
    if not np.all(np.isfinite(V)):
        raise InputError(f"{name}s have non-finite entries")
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms == 0.0):
        raise GeometryError(f"zero {name} vector")
    return V / norms[:, None]


def _indices(indices, m) -> tuple:
    idx = tuple(int(i) for i in indices)
    if not idx:
        raise InputError("index set must be nonempty")
    if len(set(idx)) != len(idx):
        raise InputError(f"repeated indices in {list(idx)}")
    if min(idx) < 1 or max(idx) > m:
        raise InputError(f"indices {list(idx)} out of range 1..{m}")
    return idx


def sphere_directions(k: int, count: int) -> np.ndarray:
    """``count`` unit vectors in R^k: ``+-1`` alternating, uniform angles, or a lattice."""
    if count < 1:
        return np.zeros((0, k))
    if k == 1:
        return np.where(np.arange(count) % 2 == 0, 1.0, -1.0)[:, None]
    if k == 2:
        th = 2.0 * np.pi * np.arange(count) / count + np.pi / count
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    return fibonacci_sphere(count, k)


@dataclass(frozen=True)
class NormalSet:
    """Exact outward normals of flat faces plus sampled normals of curved parts."""

    exact: np.ndarray
    sampled: np.ndarray

    @property
    def vectors(self) -> np.ndarray:
        return np.concatenate([self.exact, self.sampled], axis=0)

    def __len__(self):
        return len(self.exact) + len(self.sampled)


class ConvexBody:
    kind = "body"
    m: int

    def violation(self, u) -> np.ndarray:
        raise NotImplementedError

    def contains(self, u, tol: float = 0.0):
        return self.violation(u) <= tol

    def normal_set(self, smooth_samples: int = 64) -> NormalSet:
        raise NotImplementedError

    def boundary_pairs(self, smooth_samples: int = 64) -> list:
        """``(nu, a)`` pairs: a boundary point ``a`` where ``nu`` is the outward normal."""
        raise NotImplementedError

    def interior_point(self) -> np.ndarray:
        raise NotImplementedError

    def project(self, u) -> np.ndarray:
        """Nearest point of the body (only curved families implement this)."""
        raise NotImplementedError(f"{self.kind} has no closed-form projection")

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _u(self, u):
        U = np.asarray(u, dtype=float)
        if U.shape[-1:] != (self.m,):
            raise InputError(f"points must have trailing dimension {self.m}, got shape {U.shape}")
        return U


def _polyhedral_faces(normals, points, m):
    """Relative-interior point of every facet, or GeometryError if a constraint is redundant.

    Also returns an interior point. All through small LPs of the form
    ``max s  s.t.  nu_j . u + s <= nu_j . a_j``.
    """
    p = len(normals)
    b = np.einsum("ij,ij->i", normals, points)
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A = np.hstack([normals, np.ones((p, 1))])
    bounds = [(None, None)] * m + [(None, 1.0)]
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0 or -res.fun <= _LP_EPS:
        raise GeometryError("body has empty interior")
    interior = res.x[:m]

    faces = []
    for i in range(p):
        keep = np.arange(p) != i
        res = linprog(c, A_ub=A[keep], b_ub=b[keep],
                      A_eq=np.append(normals[i], 0.0)[None, :], b_eq=[b[i]],
                      bounds=bounds, method="highs")
        if p > 1 and (res.status != 0 or -res.fun <= _LP_EPS):
            raise GeometryError(f"constraint {i + 1} is not a facet (redundant or duplicated normal)")
        faces.append(res.x[:m] if p > 1 else points[i].copy())
    return interior, faces


class HalfSpace(ConvexBody):
    """``{u : (u - a) . nu <= 0}``."""

    kind = "half_space"

    def __init__(self, normal, point):
        self.normal = _unit_rows(normal)[0]
        self.m = len(self.normal)
        self.point = np.asarray(point, dtype=float).reshape(self.m)

    def violation(self, u):
        return (self._u(u) - self.point) @ self.normal

    def normal_set(self, smooth_samples=64):
        return NormalSet(self.normal[None, :].copy(), np.zeros((0, self.m)))

    def boundary_pairs(self, smooth_samples=64):
        return [(self.normal.copy(), self.point.copy())]

    def interior_point(self):
        return self.point - self.normal

    def to_dict(self):
        return {"type": self.kind, "normal": self.normal.tolist(), "point": self.point.tolist()}


class HPolytope(ConvexBody):
    """Intersection of half-spaces ``(u - a_i) . nu_i <= 0``; every constraint must be a facet."""

    kind = "hpolytope"

    def __init__(self, normals, points):
        self.normals = _unit_rows(normals)
        self.m = self.normals.shape[1]
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.points.shape != self.normals.shape:
            raise InputError(f"points shape {self.points.shape} does not match normals {self.normals.shape}")
        self._interior, self._faces = _polyhedral_faces(self.normals, self.points, self.m)

    def violation(self, u):
        U = self._u(u)
        return np.max(U @ self.normals.T - np.einsum("ij,ij->i", self.normals, self.points), axis=-1)

    def normal_set(self, smooth_samples=64):
        return NormalSet(self.normals.copy(), np.zeros((0, self.m)))

    def boundary_pairs(self, smooth_samples=64):
        return [(nu.copy(), a.copy()) for nu, a in zip(self.normals, self._faces)]

    def interior_point(self):
        return self._interior.copy()

    def half_spaces(self):
        return [HalfSpace(nu, a) for nu, a in zip(self.normals, self.points)]

    def to_dict(self):
        return {"type": self.kind, "normals": self.normals.tolist(), "points": self.points.tolist()}


class PolyhedralAngle(ConvexBody):
    """``{u : u_i >= alpha_i, i in indices}``; one index gives a half-space, all give an orthant."""

    kind = "polyhedral_angle"

    def __init__(self, m, indices, lower):
        self.m = int(m)
        self.indices = _indices(indices, self.m)
        self.lower = np.asarray(lower, dtype=float).reshape(len(self.indices))
        self._idx = np.asarray(self.indices) - 1

    def violation(self, u):
        return np.max(self.lower - self._u(u)[..., self._idx], axis=-1)

    def normal_set(self, smooth_samples=64):
        N = np.zeros((len(self._idx), self.m))
        N[np.arange(len(self._idx)), self._idx] = -1.0
        return NormalSet(N, np.zeros((0, self.m)))

    def interior_point(self):
        x = np.zeros(self.m)
        x[self._idx] = self.lower + 1.0
        return x

    def boundary_pairs(self, smooth_samples=64):
        out = []
        for nu, i, lo in zip(self.normal_set().exact, self._idx, self.lower):
            a = self.interior_point()
            a[i] = lo
            out.append((nu, a))
        return out

    def to_dict(self):
        return {"type": self.kind, "m": self.m, "indices": list(self.indices), "lower": self.lower.tolist()}


class PolyhedralCylinder(ConvexBody):
    """``{u : alpha_i <= u_i <= beta_i, i in indices}``: layers, strips, boxes."""

    kind = "polyhedral_cylinder"

    def __init__(self, m, indices, lower, upper):
        self.m = int(m)
        self.indices = _indices(indices, self.m)
        k = len(self.indices)
        self.lower = np.asarray(lower, dtype=float).reshape(k)
        self.upper = np.asarray(upper, dtype=float).reshape(k)
        if not np.all(self.lower < self.upper):
            raise GeometryError("polyhedral cylinder needs lower < upper in every bounded coordinate")
        self._idx = np.asarray(self.indices) - 1

    def violation(self, u):
        ui = self._u(u)[..., self._idx]
        return np.maximum(np.max(self.lower - ui, axis=-1), np.max(ui - self.upper, axis=-1))

    def normal_set(self, smooth_samples=64):
        k = len(self._idx)
        N = np.zeros((2 * k, self.m))
        N[np.arange(k), self._idx] = -1.0
        N[k + np.arange(k), self._idx] = 1.0
        return NormalSet(N, np.zeros((0, self.m)))

    def interior_point(self):
        x = np.zeros(self.m)
        x[self._idx] = 0.5 * (self.lower + self.upper)
        return x

    def boundary_pairs(self, smooth_samples=64):
        out = []
        N = self.normal_set().exact
        k = len(self._idx)
        for j in range(2 * k):
            a = self.interior_point()
            i = self._idx[j % k]
            a[i] = self.lower[j % k] if j < k else self.upper[j % k]
            out.append((N[j], a))
        return out

    def to_dict(self):
        return {"type": self.kind, "m": self.m, "indices": list(self.indices),
                "lower": self.lower.tolist(), "upper": self.upper.tolist()}


class SphericalCylinder(ConvexBody):
    """``{u : sum_{i in K} u_i^2 <= R^2}``; a ball when K covers every coordinate."""

    kind = "spherical_cylinder"

    def __init__(self, m, indices, radius):
        self.m = int(m)
        self.indices = _indices(indices, self.m)
        self.radius = float(radius)
        if not self.radius > 0:
            raise GeometryError("radius must be positive")
        self._idx = np.asarray(self.indices) - 1

    def violation(self, u):
        return np.linalg.norm(self._u(u)[..., self._idx], axis=-1) - self.radius

    def _embed(self, omega):
        N = np.zeros((len(omega), self.m))
        N[:, self._idx] = omega
        return N

    def normal_set(self, smooth_samples=64):
        return NormalSet(np.zeros((0, self.m)), self._embed(sphere_directions(len(self._idx), smooth_samples)))

    def boundary_pairs(self, smooth_samples=64):
        N = self.normal_set(smooth_samples).sampled
        return [(nu, self.radius * nu) for nu in N]

    def interior_point(self):
        return np.zeros(self.m)

    def project(self, u):
        U = np.array(self._u(u), dtype=float)
        r = np.linalg.norm(U[..., self._idx], axis=-1, keepdims=True)
        factor = np.where(r > self.radius, self.radius / np.where(r > 0, r, 1.0), 1.0)
        U[..., self._idx] *= factor
        return U

    def to_dict(self):
        return {"type": self.kind, "m": self.m, "indices": list(self.indices), "radius": self.radius}


class Ball(ConvexBody):
    kind = "ball"

    def __init__(self, center, radius):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.m = len(self.center)
        self.radius = float(radius)
        if not self.radius > 0:
            raise GeometryError("radius must be positive")

    def violation(self, u):
        return np.linalg.norm(self._u(u) - self.center, axis=-1) - self.radius

    def normal_set(self, smooth_samples=64):
        return NormalSet(np.zeros((0, self.m)), sphere_directions(self.m, smooth_samples))

    def boundary_pairs(self, smooth_samples=64):
        return [(nu, self.center + self.radius * nu) for nu in self.normal_set(smooth_samples).sampled]

    def interior_point(self):
        return self.center.copy()

    def project(self, u):
        W = self._u(u) - self.center
        r = np.linalg.norm(W, axis=-1, keepdims=True)
        factor = np.where(r > self.radius, self.radius / np.where(r > 0, r, 1.0), 1.0)
        return self.center + W * factor

    def to_dict(self):
        return {"type": self.kind, "center": self.center.tolist(), "radius": self.radius}


class PolyhedralCone(ConvexBody):
    """``{u : (u - q) . nu_i <= 0}`` with ``p`` genuine facets and nonempty interior."""

    kind = "polyhedral_cone"

    def __init__(self, vertex, normals):
        self.vertex = np.atleast_1d(np.asarray(vertex, dtype=float))
        self.m = len(self.vertex)
        self.normals = _unit_rows(normals, self.m)
        self.p = len(self.normals)
        pts = np.broadcast_to(self.vertex, self.normals.shape)
        self._interior, self._faces = _polyhedral_faces(self.normals, pts, self.m)

    def violation(self, u):
        return np.max((self._u(u) - self.vertex) @ self.normals.T, axis=-1)

    def normal_set(self, smooth_samples=64):
        return NormalSet(self.normals.copy(), np.zeros((0, self.m)))

    def boundary_pairs(self, smooth_samples=64):
        return [(nu.copy(), a.copy()) for nu, a in zip(self.normals, self._faces)]

    def interior_point(self):
        return self._interior.copy()

    def to_dict(self):
        return {"type": self.kind, "vertex": self.vertex.tolist(), "normals": self.normals.tolist()}


class SmoothCone(ConvexBody):
    """Right circular cone ``{u : |w_perp| cos(theta) <= w_par sin(theta)}``, ``w = u - q``.

    Stands in for a convex cone with a smooth guide. Only its (sampled)
    normals and violation are used; the invariance verdict for it rests on
    the scalarity test.
    """

    kind = "smooth_cone"

    def __init__(self, vertex, axis, half_angle):
        self.vertex = np.atleast_1d(np.asarray(vertex, dtype=float))
        self.m = len(self.vertex)
        if self.m < 3:
            raise GeometryError("a cone with a smooth guide needs m >= 3 (in R^2 every cone is polyhedral)")
        self.axis = _unit_rows(axis, self.m, "axis")[0]
        self.half_angle = float(half_angle)
        if not 0.0 < self.half_angle < np.pi / 2:
            raise GeometryError("half_angle must lie in (0, pi/2)")
        # orthonormal basis of axis-perp
        q, _ = np.linalg.qr(np.column_stack([self.axis, np.eye(self.m)]))
        self._perp = q[:, 1:self.m]

    def _split(self, u):
        W = self._u(u) - self.vertex
        par = W @ self.axis
        perp = W - par[..., None] * self.axis
        return par, perp

    def violation(self, u):
        par, perp = self._split(u)
        c, s = np.cos(self.half_angle), np.sin(self.half_angle)
        return np.linalg.norm(perp, axis=-1) * c - par * s

    def _generators(self, smooth_samples):
        omega = sphere_directions(self.m - 1, smooth_samples) @ self._perp.T
        c, s = np.cos(self.half_angle), np.sin(self.half_angle)
        return omega, c * self.axis + s * omega, c * omega - s * self.axis

    def normal_set(self, smooth_samples=64):
        _, _, normals = self._generators(smooth_samples)
        return NormalSet(np.zeros((0, self.m)), normals)

    def boundary_pairs(self, smooth_samples=64):
        _, gens, normals = self._generators(smooth_samples)
        return [(nu, self.vertex + g) for nu, g in zip(normals, gens)]

    def interior_point(self):
        return self.vertex + self.axis

    def project(self, u):
        W = self._u(u) - self.vertex
        par = W @ self.axis
        perp = W - par[..., None] * self.axis
        r = np.linalg.norm(perp, axis=-1)
        c, s = np.cos(self.half_angle), np.sin(self.half_angle)
        inside = r * c - par * s <= 0
        polar = par * c + r * s <= 0
        omega = perp / np.where(r > 0, r, 1.0)[..., None]
        g = c * self.axis + s * omega
        t = np.maximum(par * c + r * s, 0.0)
        proj = t[..., None] * g
        out = np.where(inside[..., None], W, np.where(polar[..., None], 0.0, proj))
        return self.vertex + out

    def to_dict(self):
        return {"type": self.kind, "vertex": self.vertex.tolist(), "axis": self.axis.tolist(),
                "half_angle": self.half_angle}


# ---------------------------------------------------------------------------

def normal_set(body: ConvexBody, smooth_samples: int = 64) -> NormalSet:
    return body.normal_set(smooth_samples)


def violation(body: ConvexBody, u) -> np.ndarray:
    return body.violation(u)


def membership(body: ConvexBody, u) -> np.ndarray:
    return body.violation(u) <= 0.0


def cone_normal_matrix(cone) -> np.ndarray:
    """``N = [nu_1, ..., nu_m]`` (normals as columns) with ``|det N^T|`` certified.

    Accepts a :class:`PolyhedralCone` with ``p = m`` or an array of ``m``
    normals (one per row). A near-singular matrix means the normals cannot
    come from ``m`` distinct facets of a convex cone with nonempty interior.
    """
    normals = cone.normals if isinstance(cone, PolyhedralCone) else _unit_rows(cone)
    p, m = normals.shape
    if p != m:
        raise InputError(f"cone_normal_matrix needs p = m normals, got p={p}, m={m}")
    N = normals.T.copy()
    if abs(np.linalg.det(N.T)) <= SINGULAR_DET:
        raise GeometryError("cone normals are linearly dependent (|det| <= 1e-10)")
    return N


def check_cone_subsets(cone: PolyhedralCone) -> None:
    """For ``p >= m``: every ``m`` of the facet normals must be independent."""
    if cone.p < cone.m:
        return
    for sub in combinations(range(cone.p), cone.m):
        cone_normal_matrix(cone.normals[list(sub)])


_KINDS = {
    "half_space": lambda d: HalfSpace(d["normal"], d["point"]),
    "hpolytope": lambda d: HPolytope(d["normals"], d["points"]),
    "polyhedral_angle": lambda d: PolyhedralAngle(d["m"], d["indices"], d["lower"]),
    "polyhedral_cylinder": lambda d: PolyhedralCylinder(d["m"], d["indices"], d["lower"], d["upper"]),
    "spherical_cylinder": lambda d: SphericalCylinder(d["m"], d["indices"], d["radius"]),
    "ball": lambda d: Ball(d["center"], d["radius"]),
    "polyhedral_cone": lambda d: PolyhedralCone(d["vertex"], d["normals"]),
    "smooth_cone": lambda d: SmoothCone(d["vertex"], d["axis"], d["half_angle"]),
}

BODY_KINDS = tuple(_KINDS)


def body_from_dict(d: dict, m: Optional[int] = None) -> ConvexBody:
    """Build a body from its config description (``{"type": ..., ...}``)."""
    if not isinstance(d, dict) or "type" not in d:
        raise InputError("body description needs a 'type' key")
    kind = d["type"]
    if kind not in _KINDS:
        raise InputError(f"unknown body type {kind!r}; expected one of {sorted(_KINDS)}")
    d = dict(d)
    if m is not None:
        d.setdefault("m", m)
    try:
        body = _KINDS[kind](d)
    except KeyError as exc:
        raise InputError(f"body of type {kind!r} is missing key {exc.args[0]!r}") from None
    if m is not None and body.m != m:
        raise InputError(f"body lives in R^{body.m} but the system has m={m}")
    return body
