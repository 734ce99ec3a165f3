"""Invariance verdicts from eigenvector alignment of the outward normals.

The generic path (:func:`check_theorem`) tests every outward normal of the
body against every transposed coefficient matrix. The structural shortcuts
(:func:`check_polyhedral_angle`, :func:`check_cylinder`,
:func:`check_spherical_cylinder`, :func:`check_cone`) decide the same
question from the entries of the matrices alone and are meant to agree with
the generic path; :func:`cross_validate` compares the two.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bodies import (
    Ball,
    ConvexBody,
    HPolytope,
    PolyhedralAngle,
    PolyhedralCone,
    PolyhedralCylinder,
    SmoothCone,
    SphericalCylinder,
    check_cone_subsets,
    cone_normal_matrix,
)
from .coefficients import CoefficientField, matrix_label
from .errors import InputError
from .linalg import DEFAULT_TOL, AlignmentResult, alignment_threshold, eigen_align, is_scalar, \
    rows_structure, similarity_diagonalize
from .parabolicity import petrovskii_margin


class Status(str, enum.Enum):
    INVARIANT = "Invariant"
    NOT_INVARIANT = "NotInvariant"
    SUFFICIENT_HOLDS = "SufficientHolds"
    NECESSARY_VIOLATED = "NecessaryViolated"
    INCONCLUSIVE = "Inconclusive"

    @property
    def positive(self) -> bool:
        return self in (Status.INVARIANT, Status.SUFFICIENT_HOLDS)


@dataclass
class Witness:
    matrix: tuple
    x: np.ndarray
    t: float
    normal: np.ndarray
    alignment: AlignmentResult

    def to_dict(self):
        return {
            "matrix": matrix_label(self.matrix),
            "x": [float(v) for v in np.atleast_1d(self.x)],
            "t": float(self.t),
            "normal": [float(v) for v in self.normal],
            "alignment": self.alignment.to_dict(),
        }


@dataclass
class Verdict:
    status: Status
    witnesses: list = field(default_factory=list)
    structural_path: Optional[str] = None
    max_residual: dict = field(default_factory=dict)
    tol: float = DEFAULT_TOL
    samples: list = field(default_factory=list)
    n_normals: int = 0
    details: dict = field(default_factory=dict)
    # Inconclusive verdicts keep the t = 0 pass alongside the t > 0 failure.
    t0_aligned: Optional[bool] = None

    def to_dict(self):
        return {
            "status": self.status.value,
            "structural_path": self.structural_path,
            "tolerance": float(self.tol),
            "max_residual": {matrix_label(k): float(v) for k, v in self.max_residual.items()},
            "witnesses": [w.to_dict() for w in self.witnesses],
            "sampling": {
                "points": [{"x": [float(v) for v in np.atleast_1d(x)], "t": float(t)} for x, t in self.samples],
                "normals": int(self.n_normals),
            },
            "t0_aligned": self.t0_aligned,
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _samples(system: CoefficientField, samples):
    if samples is None:
        if not system.is_constant:
            raise InputError("variable coefficients need an explicit (x, t) sample grid")
        return [(np.zeros(system.n), 0.0)]
    out = [(np.asarray(x, dtype=float).reshape(system.n), float(t)) for x, t in samples]
    if not out:
        raise InputError("sample grid is empty")
    return out


def _warn_if_not_parabolic(system, samples):
    rep = petrovskii_margin(system, samples, resolution=256, refine=False)
    if not rep.parabolic:
        warnings.warn(f"system is not Petrovskii-parabolic on the samples (margin {rep.margin:.3g}); "
                      "verdicts are computed anyway", RuntimeWarning, stacklevel=3)


def _scan(system, normals, samples, tol):
    """Align every normal with every matrix at every sample point.

    Returns (max residual per matrix, failures at t == 0, failures at t > 0),
    failures in deterministic (sample, matrix, normal) order.
    """
    max_res = {}
    fail0, fail_t = [], []
    for x, t in samples:
        for ident, M in system.matrices(x, t):
            for nu in normals:
                res = eigen_align(M, nu, tol)
                max_res[ident] = max(max_res.get(ident, 0.0), res.residual)
                if not res.aligned:
                    (fail0 if t == 0.0 else fail_t).append(Witness(ident, x, t, np.array(nu), res))
    return max_res, fail0, fail_t


def check_theorem(system: CoefficientField, body: ConvexBody, samples: Optional[Sequence] = None,
                  tol: float = DEFAULT_TOL, smooth_samples: int = 64,
                  check_parabolicity: bool = True) -> Verdict:
    """Generic eigenvector-alignment verdict over the body's normal set.

    Time-independent coefficients give the exact dichotomy
    Invariant / NotInvariant. Time-dependent coefficients give
    SufficientHolds when everything aligns, NecessaryViolated when some
    normal fails at ``t = 0``, and Inconclusive when the only failures
    occur for ``t > 0``.
    """
    pts = _samples(system, samples)
    if check_parabolicity:
        _warn_if_not_parabolic(system, pts)
    ns = body.normal_set(smooth_samples)
    normals = ns.vectors
    max_res, fail0, fail_t = _scan(system, normals, pts, tol)
    common = dict(max_residual=max_res, tol=tol, samples=pts, n_normals=len(normals), structural_path="generic")

    if not system.time_dependent:
        failures = fail0 + fail_t
        if failures:
            return Verdict(Status.NOT_INVARIANT, failures, **common)
        return Verdict(Status.INVARIANT, [], **common)

    if fail0:
        return Verdict(Status.NECESSARY_VIOLATED, fail0 + fail_t, t0_aligned=False, **common)
    if fail_t:
        has_t0 = any(t == 0.0 for _, t in pts)
        return Verdict(Status.INCONCLUSIVE, fail_t, t0_aligned=True if has_t0 else None, **common)
    return Verdict(Status.SUFFICIENT_HOLDS, [], t0_aligned=True, **common)


def layer_criterion(system: CoefficientField, body: ConvexBody, samples: Optional[Sequence] = None,
                    tol: float = DEFAULT_TOL, smooth_samples: int = 64) -> Verdict:
    """Invariance in every layer ``(tau, T]`` at once: alignment at every sampled ``(x, t)``."""
    pts = _samples(system, samples)
    normals = body.normal_set(smooth_samples).vectors
    max_res, fail0, fail_t = _scan(system, normals, pts, tol)
    failures = fail0 + fail_t
    status = Status.NOT_INVARIANT if failures else Status.INVARIANT
    return Verdict(status, failures, structural_path="layer", max_residual=max_res, tol=tol,
                   samples=pts, n_normals=len(normals))


def _require_constant_in_t(system, name):
    if system.time_dependent:
        raise InputError(f"{name} applies to time-independent coefficients; use check_theorem or layer_criterion")


def _rows_verdict(system, rows, samples, tol, path, equal_diagonal):
    _require_constant_in_t(system, path)
    pts = _samples(system, samples)
    m = system.m
    idx = sorted(set(int(r) for r in rows))
    witnesses = []
    max_res = {}
    for x, t in pts:
        for ident, M in system.matrices(x, t):
            scale = alignment_threshold(M, tol)
            rs = rows_structure(M, idx, scale)
            # spread 2*scale keeps the 45-degree witness residual |d_i - d_j|/2 above threshold
            eq = rows_structure(M, idx, 2.0 * scale).equal_diagonal
            off = rs.offdiag_zero
            for i in idx:
                row = M[i - 1].copy()
                row[i - 1] = 0.0
                max_res[ident] = max(max_res.get(ident, 0.0), float(np.linalg.norm(row)))
            if not off:
                for i in idx:
                    row = M[i - 1].copy()
                    row[i - 1] = 0.0
                    if np.max(np.abs(row)) > scale:
                        nu = np.zeros(m)
                        nu[i - 1] = -1.0
                        witnesses.append(Witness(ident, x, t, nu, eigen_align(M, nu, tol)))
                        break
            elif equal_diagonal and not eq:
                d = np.array([M[i - 1, i - 1] for i in idx])
                lo, hi = idx[int(np.argmin(d))], idx[int(np.argmax(d))]
                nu = np.zeros(m)
                nu[[lo - 1, hi - 1]] = 2 ** -0.5
                witnesses.append(Witness(ident, x, t, nu, eigen_align(M, nu, tol)))
    status = Status.NOT_INVARIANT if witnesses else Status.INVARIANT
    return Verdict(status, witnesses, structural_path=path, max_residual=max_res, tol=tol, samples=pts)


def check_polyhedral_angle(system: CoefficientField, rows, samples=None, tol: float = DEFAULT_TOL) -> Verdict:
    """Invariant iff every off-diagonal entry in the constrained rows vanishes."""
    return _rows_verdict(system, rows, samples, tol, "polyhedral_angle", equal_diagonal=False)


def check_cylinder(system: CoefficientField, rows, samples=None, tol: float = DEFAULT_TOL) -> Verdict:
    """Same structural test as the polyhedral angle (both faces share the normal line)."""
    return _rows_verdict(system, rows, samples, tol, "polyhedral_cylinder", equal_diagonal=False)


def check_spherical_cylinder(system: CoefficientField, K, samples=None, tol: float = DEFAULT_TOL) -> Verdict:
    """Rows in ``K`` have zero off-diagonals and, within each matrix, equal diagonal entries."""
    return _rows_verdict(system, K, samples, tol, "spherical_cylinder", equal_diagonal=True)


def check_cone(system: CoefficientField, cone, samples=None, tol: float = DEFAULT_TOL) -> Verdict:
    """Cone criterion: simultaneous diagonalisation for ``p = m``, scalarity for ``p > m`` or a smooth guide."""
    _require_constant_in_t(system, "check_cone")
    pts = _samples(system, samples)
    witnesses = []
    max_res = {}
    details = {}
    if isinstance(cone, PolyhedralCone):
        if cone.p < cone.m:
            raise InputError("check_cone needs p >= m facets; use check_theorem for wedges")
        if cone.p == cone.m:
            path = "cone_diagonal"
            N = cone_normal_matrix(cone)
        else:
            path = "cone_scalar"
            check_cone_subsets(cone)
            N = None
        probe = cone.normals
    elif isinstance(cone, SmoothCone):
        path = "cone_scalar"
        N = None
        probe = cone.normal_set(64).sampled
    else:
        raise InputError(f"check_cone expects a polyhedral or smooth cone, got {type(cone).__name__}")

    diagonals = {}
    for x, t in pts:
        for ident, M in system.matrices(x, t):
            if N is not None:
                D = similarity_diagonalize(M, N, tol)
                ok = D is not None
                if ok:
                    diagonals[matrix_label(ident)] = np.diag(D).tolist()
            else:
                lam = is_scalar(M, tol)
                ok = lam is not None
                if ok:
                    diagonals[matrix_label(ident)] = lam
            results = [eigen_align(M, nu, tol) for nu in probe]
            max_res[ident] = max([max_res.get(ident, 0.0)] + [r.residual for r in results])
            if not ok:
                i = int(np.argmax([r.residual for r in results]))
                witnesses.append(Witness(ident, x, t, np.array(probe[i]), results[i]))
    details["diagonal" if N is not None else "scalar"] = diagonals
    status = Status.NOT_INVARIANT if witnesses else Status.INVARIANT
    return Verdict(status, witnesses, structural_path=path, max_residual=max_res, tol=tol,
                   samples=pts, details=details)


def structural_check(system: CoefficientField, body: ConvexBody, samples=None,
                     tol: float = DEFAULT_TOL) -> Optional[Verdict]:
    """The shortcut matching ``body``'s family, or ``None`` when there is none."""
    if isinstance(body, PolyhedralAngle):
        return check_polyhedral_angle(system, body.indices, samples, tol)
    if isinstance(body, PolyhedralCylinder):
        return check_cylinder(system, body.indices, samples, tol)
    if isinstance(body, SphericalCylinder):
        return check_spherical_cylinder(system, body.indices, samples, tol)
    if isinstance(body, Ball):
        return check_spherical_cylinder(system, range(1, body.m + 1), samples, tol)
    if isinstance(body, SmoothCone) or (isinstance(body, PolyhedralCone) and body.p >= body.m):
        return check_cone(system, body, samples, tol)
    if isinstance(body, HPolytope):
        # intersection of half-spaces: invariant when every half-space is
        verdicts = [check_theorem(system, h, samples, tol, check_parabolicity=False) for h in body.half_spaces()]
        witnesses = [w for v in verdicts for w in v.witnesses]
        status = Status.NOT_INVARIANT if witnesses else Status.INVARIANT
        return Verdict(status, witnesses, structural_path="half_space_intersection", tol=tol,
                       samples=_samples(system, samples), n_normals=len(body.normals))
    return None


@dataclass
class CrossCheck:
    generic: Verdict
    structural: Optional[Verdict]

    @property
    def agree(self) -> bool:
        if self.structural is None:
            return True
        return self.generic.status.positive == self.structural.status.positive


def cross_validate(system: CoefficientField, body: ConvexBody, samples=None, tol: float = DEFAULT_TOL,
                   smooth_samples: int = 64, check_parabolicity: bool = True) -> CrossCheck:
    """Run the generic verdict and the matching second path.

    Time-dependent systems are paired with :func:`layer_criterion`
    (the shortcuts assume time-independent coefficients).
    """
    generic = check_theorem(system, body, samples, tol, smooth_samples, check_parabolicity)
    if system.time_dependent:
        other = layer_criterion(system, body, samples, tol, smooth_samples)
    else:
        other = structural_check(system, body, samples, tol)
    return CrossCheck(generic, other)
