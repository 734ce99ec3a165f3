"""Principal symbol and a sampled estimate of the Petrovskii parabolicity margin.

The system is parabolic in Petrovskii's sense with margin ``delta`` when every
eigenvalue of ``M(sigma) = sum_jk A_jk sigma_j sigma_k`` has real part at least
``delta |sigma|^2``. By homogeneity only unit ``sigma`` need be examined.
The estimate here minimises over a finite sphere sample plus a local
refinement, so it is a falsifiable estimate, not a certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .coefficients import CoefficientField
from .errors import InputError, NumericError


def symbol_matrix(A2, sigma) -> np.ndarray:
    """``M(sigma) = sum_{j,k} A_jk sigma_j sigma_k``.

    ``A2`` has shape ``(n, n, m, m)``; ``sigma`` may be a single ``n``-vector
    or a stack ``(..., n)``, giving ``(..., m, m)``.
    """
    A2 = np.asarray(A2, dtype=float)
    s = np.asarray(sigma, dtype=float)
    if A2.ndim != 4 or A2.shape[0] != A2.shape[1]:
        raise InputError(f"A2 must have shape (n, n, m, m), got {A2.shape}")
    if s.shape[-1:] != (A2.shape[0],):
        raise InputError(f"sigma must have trailing dimension {A2.shape[0]}, got shape {s.shape}")
    return np.einsum("...j,...k,jkab->...ab", s, s, A2)


def first_order_symbol(A1, sigma) -> np.ndarray:
    """``B(sigma) = sum_j A_j sigma_j``."""
    A1 = np.asarray(A1, dtype=float)
    s = np.asarray(sigma, dtype=float)
    return np.einsum("...j,jab->...ab", s, A1)


def fibonacci_sphere(count: int, n: int) -> np.ndarray:
    """Roughly uniform points on the unit sphere in R^n.

    Exact Fibonacci lattice for n = 3; for n > 3 a fixed-seed Gaussian sample,
    which is enough for a minimum search followed by local refinement.
    """
    if n == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        phi = np.pi * (1.0 + 5.0 ** 0.5) * i
        r = np.sqrt(1.0 - z * z)
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    g = np.random.default_rng(12345).standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def default_resolution(n: int) -> int:
    if n == 1:
        return 2
    if n == 2:
        return 4096
    return 2048


def sphere_samples(n: int, resolution: Optional[int] = None) -> np.ndarray:
    """Unit directions for margin estimation: ``{+-1}``, uniform angles, or a Fibonacci lattice."""
    if n < 1:
        raise InputError("n must be positive")
    if n == 1:
        return np.array([[1.0], [-1.0]])
    res = default_resolution(n) if resolution is None else int(resolution)
    if res < 1:
        raise InputError("sampling resolution must be positive")
    if n == 2:
        theta = 2.0 * np.pi * np.arange(res) / res
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    return fibonacci_sphere(res, n)


def min_real_eig(M) -> np.ndarray:
    """Smallest real part of the eigenvalues, for one matrix or a stack."""
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue iteration failed: {exc}") from None
    return np.min(ev.real, axis=-1)


@dataclass
class ParabolicityReport:
    margin: float
    parabolic: bool
    witness_x: np.ndarray
    witness_t: float
    witness_sigma: np.ndarray
    resolution: int
    n_points: int
    refined: bool
    sampled_margin: float = field(default=np.nan)

    def to_dict(self):
        return {
            "margin": float(self.margin),
            "parabolic": bool(self.parabolic),
            "witness": {
                "x": [float(v) for v in np.atleast_1d(self.witness_x)],
                "t": float(self.witness_t),
                "sigma": [float(v) for v in self.witness_sigma],
            },
            "sampling": {
                "sigma_resolution": int(self.resolution),
                "points": int(self.n_points),
                "refined": bool(self.refined),
                "sampled_margin": float(self.sampled_margin),
            },
        }


def _refine(A2, sigma0, n):
    """Local minimisation of min Re eig(M(sigma)) on the unit sphere near ``sigma0``."""

    def f_vec(v):
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return np.inf
        return float(min_real_eig(symbol_matrix(A2, v / nv)))

    if n == 2:
        theta0 = np.arctan2(sigma0[1], sigma0[0])
        h = 2.0 * np.pi / 256

        def f(theta):
            return f_vec(np.array([np.cos(theta), np.sin(theta)]))

        res = optimize.minimize_scalar(f, bounds=(theta0 - h, theta0 + h), method="bounded",
                                       options={"xatol": 1e-12})
        s = np.array([np.cos(res.x), np.sin(res.x)])
        return float(res.fun), s
    res = optimize.minimize(f_vec, sigma0, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
    s = res.x / np.linalg.norm(res.x)
    return float(res.fun), s


def petrovskii_margin(system: CoefficientField, points: Optional[Sequence] = None,
                      resolution: Optional[int] = None, refine: bool = True) -> ParabolicityReport:
    """Estimate ``delta = min_{x,t,|sigma|=1} min_i Re eig M(x,t,sigma)``.

    ``points`` is a sequence of ``(x, t)`` pairs; constant systems collapse to
    a single point and may omit it.
    """
    n = system.n
    if points is None:
        if not system.is_constant:
            raise InputError("variable coefficients need an explicit (x, t) sample set")
        points = [(np.zeros(n), 0.0)]
    points = [(np.asarray(x, dtype=float).reshape(n), float(t)) for x, t in points]
    if not points:
        raise InputError("sampling set is empty")
    if system.is_constant:
        points = points[:1]

    sig = sphere_samples(n, resolution)
    best = (np.inf, None, None, None)
    for x, t in points:
        A2 = system.second_order(x, t)
        vals = min_real_eig(symbol_matrix(A2, sig))
        if not np.all(np.isfinite(vals)):
            bad = sig[np.argmin(np.isfinite(vals))]
            raise NumericError(f"non-finite symbol eigenvalues at sigma={bad.tolist()}")
        i = int(np.argmin(vals))
        if vals[i] < best[0]:
            best = (float(vals[i]), x, t, sig[i].copy())

    sampled, x, t, s = best
    margin = sampled
    if refine and n >= 2:
        A2 = system.second_order(x, t)
        val, s_ref = _refine(A2, s, n)
        if val < margin:
            margin, s = val, s_ref

    return ParabolicityReport(
        margin=margin,
        parabolic=margin > 0.0,
        witness_x=x,
        witness_t=t,
        witness_sigma=s,
        resolution=len(sig),
        n_points=len(points),
        refined=bool(refine and n >= 2),
        sampled_margin=sampled,
    )


def spectral_radius_bound(system: CoefficientField, points: Optional[Sequence] = None,
                          resolution: Optional[int] = None) -> float:
    """``max |eig M(sigma)|`` over unit sigma samples and coefficient samples."""
    n = system.n
    sig = sphere_samples(n, resolution)
    if points is None:
        points = [(np.zeros(n), 0.0)]
    lam = 0.0
    for x, t in points:
        A2 = system.second_order(np.asarray(x, dtype=float), t)
        ev = np.linalg.eigvals(symbol_matrix(A2, sig))
        lam = max(lam, float(np.max(np.abs(ev))))
    return lam
