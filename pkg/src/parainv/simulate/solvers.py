"""Periodic-box solvers for ``u_t = sum_jk A_jk u_{x_j x_k} + sum_j A_j u_{x_j}``.

Two independent routes:

* :func:`step_explicit` -- forward Euler with second-order central
  differences, for constant or grid-sampled coefficients;
* :func:`spectral_run` -- exact-in-time Fourier propagation
  ``u^(t, s) = exp(t (-M(s) + i B(s))) u^(0, s)`` for constant coefficients.

Fields are arrays of shape ``(N,)*n + (m,)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..coefficients import CoefficientField
from ..errors import DivergenceError, InputError, StabilityError
from ..linalg import matrix_exponential
from ..parabolicity import first_order_symbol, spectral_radius_bound, symbol_matrix

SCHEMES = ("explicit-central", "spectral-exact")


@dataclass(frozen=True)
class Grid:
    n: int
    N: int
    L: tuple

    @classmethod
    def make(cls, n: int, N: int, L=2.0 * np.pi) -> "Grid":
        if n < 1 or N < 4:
            raise InputError("grid needs n >= 1 and at least 4 points per axis")
        Ls = tuple(float(v) for v in np.broadcast_to(np.asarray(L, dtype=float), (n,)))
        if any(v <= 0 for v in Ls):
            raise InputError("box length must be positive")
        return cls(int(n), int(N), Ls)

    @property
    def dx(self) -> np.ndarray:
        return np.asarray(self.L) / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    def coordinates(self) -> np.ndarray:
        """Grid points, shape ``(N,)*n + (n,)``."""
        axes = [np.arange(self.N) * d for d in self.dx]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def periodic_difference(self, X, y) -> np.ndarray:
        """Minimal-image ``X - y`` on the torus."""
        L = np.asarray(self.L)
        d = np.asarray(X) - np.asarray(y, dtype=float)
        return d - L * np.round(d / L)

    def frequencies(self) -> np.ndarray:
        """Angular wavenumbers of the discrete Fourier modes, shape ``(N,)*n + (n,)``."""
        axes = [2.0 * np.pi * np.fft.fftfreq(self.N, d=d) for d in self.dx]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


@dataclass
class SimConfig:
    L: float = 2.0 * np.pi
    N: int = 64
    dt: Optional[float] = None
    T: float = 0.5
    scheme: str = "explicit-central"
    monitor_stride: int = 1
    # dt = safety * gate when dt is not given
    safety: float = 0.9

    def __post_init__(self):
        if not self.T > 0:
            raise InputError("horizon T must be positive")
        if self.scheme not in SCHEMES:
            raise InputError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.monitor_stride < 1:
            raise InputError("monitor_stride must be >= 1")
        if self.dt is not None and not self.dt > 0:
            raise InputError("dt must be positive")

    def grid(self, n: int) -> Grid:
        return Grid.make(n, self.N, self.L)


def _coefficient_samples(system: CoefficientField, grid: Grid, times: Sequence[float]):
    if system.is_constant:
        return [(np.zeros(system.n), 0.0)]
    X = grid.coordinates().reshape(-1, grid.n)
    # a coarse subsample keeps the gate cheap on fine grids
    stride = max(1, len(X) // 256)
    return [(x, t) for t in times for x in X[::stride]]


def stability_limit(system: CoefficientField, grid: Grid, T: float = 0.0) -> tuple[float, float]:
    """Return ``(dt_max, Lambda)`` with ``dt_max = min dx^2 / (2 n Lambda)``.

    ``Lambda`` bounds the spectral radius of ``M(sigma)`` over unit ``sigma``
    and the coefficient samples.
    """
    pts = _coefficient_samples(system, grid, sorted({0.0, float(T)}))
    res = None if system.is_constant else 64
    lam = spectral_radius_bound(system, pts, resolution=res)
    if lam <= 0.0:
        return np.inf, lam
    dx2 = float(np.min(grid.dx)) ** 2
    return dx2 / (2 * grid.n * lam), lam


def resolve_dt(system: CoefficientField, config: SimConfig, grid: Grid) -> tuple[float, int, float]:
    """Pick/validate the time step. Returns ``(dt, steps, dt_max)``; ``dt * steps == T``."""
    dt_max, lam = stability_limit(system, grid, config.T)
    if config.dt is None:
        target = config.safety * dt_max if np.isfinite(dt_max) else config.T
        steps = max(1, int(np.ceil(config.T / target)))
    else:
        if config.dt > dt_max:
            raise StabilityError(
                f"dt={config.dt:.3e} exceeds the stability gate dx^2/(2 n Lambda)={dt_max:.3e} "
                f"(Lambda={lam:.4g}, dx={float(np.min(grid.dx)):.4g}); use dt <= {dt_max:.3e}",
                config.dt, dt_max)
        steps = max(1, int(np.ceil(config.T / config.dt - 1e-9)))
    return config.T / steps, steps, dt_max


def _apply(A, v):
    """Apply (possibly point-dependent) m x m matrices to a field."""
    if A.ndim == 2:
        return v @ A.T
    return np.einsum("...ab,...b->...a", A, v)


def _rhs(u, A2, A1, dx):
    n = len(dx)
    out = np.zeros_like(u)
    shifted = {}
    for j in range(n):
        up = np.roll(u, -1, axis=j)
        um = np.roll(u, 1, axis=j)
        shifted[j] = (up, um)
        out += _apply(A2[..., j, j, :, :], (up - 2.0 * u + um) / dx[j] ** 2)
        A = A1[..., j, :, :]
        if np.any(A):
            out += _apply(A, (up - um) / (2.0 * dx[j]))
    for j in range(n):
        up, um = shifted[j]
        for k in range(j + 1, n):
            A = A2[..., j, k, :, :]
            if not np.any(A):
                continue
            mixed = (np.roll(up, -1, axis=k) - np.roll(up, 1, axis=k)
                     - np.roll(um, -1, axis=k) + np.roll(um, 1, axis=k)) / (4.0 * dx[j] * dx[k])
            # A_jk and A_kj contribute identical terms
            out += _apply(2.0 * A, mixed)
    return out


def grid_coefficients(system: CoefficientField, grid: Grid, t: float):
    if system.is_constant:
        return system.second_order(), system.first_order()
    X = grid.coordinates()
    return system.second_order(X, t), system.first_order(X, t)


def step_explicit(u, system: CoefficientField, dt: float, grid: Grid, t: float = 0.0,
                  coefficients=None) -> np.ndarray:
    """One forward-Euler step with central differences on the periodic grid.

    Variable coefficients are sampled at the grid points at time ``t`` and
    frozen for the step. Pass ``coefficients=(A2, A1)`` to reuse a sample.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape + (system.m,):
        raise InputError(f"field has shape {u.shape}, expected {grid.shape + (system.m,)}")
    A2, A1 = coefficients if coefficients is not None else grid_coefficients(system, grid, t)
    with np.errstate(over="ignore", invalid="ignore"):
        new = u + dt * _rhs(u, A2, A1, grid.dx)
    if not np.all(np.isfinite(new)):
        dt_max, lam = stability_limit(system, grid, t)
        raise DivergenceError(f"explicit step diverged at t={t:.4g} (dt={dt:.3e}, gate dt_max={dt_max:.3e}, "
                              f"Lambda={lam:.4g})")
    return new


def evolve_explicit(psi, system: CoefficientField, grid: Grid, dt: float, steps: int, t0: float = 0.0):
    """Run ``steps`` explicit steps and return the final field."""
    u = np.array(psi, dtype=float)
    coeffs = grid_coefficients(system, grid, t0) if not system.time_dependent else None
    for s in range(steps):
        t = t0 + s * dt
        c = coeffs if coeffs is not None else grid_coefficients(system, grid, t)
        u = step_explicit(u, system, dt, grid, t, c)
    return u


def _require_constant(system, name):
    if not system.is_constant:
        raise InputError(f"{name} needs constant coefficients")


def propagator(system: CoefficientField, sigma, t: float) -> np.ndarray:
    """Fourier symbol ``G^(t, sigma) = exp(t (-M(sigma) + i B(sigma)))``; stacks over ``sigma``."""
    _require_constant(system, "propagator")
    s = np.asarray(sigma, dtype=float)
    gen = -symbol_matrix(system.second_order(), s) + 1j * first_order_symbol(system.first_order(), s)
    return matrix_exponential(t * gen)


def spectral_run(system: CoefficientField, psi, t: float, grid: Grid) -> np.ndarray:
    """Exact-in-time constant-coefficient solution at time ``t``."""
    _require_constant(system, "spectral_run")
    u0 = np.asarray(psi, dtype=float)
    if u0.shape != grid.shape + (system.m,):
        raise InputError(f"field has shape {u0.shape}, expected {grid.shape + (system.m,)}")
    if t == 0.0:
        return u0.copy()
    axes = tuple(range(grid.n))
    uh = np.fft.fftn(u0, axes=axes)
    G = propagator(system, grid.frequencies(), t)
    uh = np.einsum("...ab,...b->...a", G, uh)
    return np.fft.ifftn(uh, axes=axes).real


def propagator_alignment(system: CoefficientField, nu, t: float, sigmas) -> float:
    """Max over ``sigmas`` of the residual of ``G^(t, sigma)^H nu`` orthogonal to ``nu``."""
    _require_constant(system, "propagator_alignment")
    v = np.asarray(nu, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise InputError("nu must be a unit vector")
    G = propagator(system, np.atleast_2d(sigmas), t)
    w = np.einsum("...ba,b->...a", G.conj(), v)  # G^H nu
    proj = (w @ v)[..., None] * v
    return float(np.max(np.linalg.norm(w - proj, axis=-1)))
