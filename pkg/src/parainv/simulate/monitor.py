"""Monitoring discrete solutions against a convex body."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..bodies import ConvexBody
from ..coefficients import CoefficientField
from ..errors import InputError
from .solvers import Grid, SimConfig, grid_coefficients, resolve_dt, spectral_run, step_explicit

# slack for "psi lies in the body" on the grid; boundary data carries rounding noise
MEMBERSHIP_SLACK = 1e-12


def field_scale(psi) -> float:
    """Largest per-component oscillation ``max - min`` of a field; 0 for constants."""
    u = np.asarray(psi, dtype=float)
    flat = u.reshape(-1, u.shape[-1])
    return float(np.max(np.ptp(flat, axis=0)))


def solver_tolerance(dx: float, dt: float, scale: float) -> float:
    """Discretisation allowance ``10 (dx^2 + dt) scale`` for leaving the body."""
    return 10.0 * (dx * dx + dt) * scale


@dataclass
class MonitorResult:
    times: np.ndarray
    max_violation: np.ndarray
    field: np.ndarray
    dt: float
    steps: int
    dt_max: float
    dx: float
    scale: float
    tolerance: float
    initial_violation: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def summary(self) -> float:
        return float(np.max(self.max_violation))

    def first_exit_time(self, threshold: float) -> Optional[float]:
        hit = np.nonzero(self.max_violation > threshold)[0]
        return float(self.times[hit[0]]) if len(hit) else None

    def to_dict(self):
        return {
            "max_violation": self.summary,
            "initial_violation": float(self.initial_violation),
            "solver_tolerance": float(self.tolerance),
            "field_scale": float(self.scale),
            "dt": float(self.dt),
            "steps": int(self.steps),
            "dx": float(self.dx),
            "stability_gate": {"dt_max": float(self.dt_max)},
        }


def run_monitored(system: CoefficientField, psi, body: ConvexBody, config: SimConfig,
                  check_initial: bool = True, stop_above: Optional[float] = None) -> MonitorResult:
    """Evolve ``psi`` and record ``max_x violation(body, u(x, t))`` every ``monitor_stride`` steps.

    With ``stop_above`` set, integration stops at the first monitored time
    whose violation exceeds it (used by the falsifier).
    """
    grid = config.grid(system.n)
    u = np.array(psi, dtype=float)
    if u.shape != grid.shape + (system.m,):
        raise InputError(f"initial field has shape {u.shape}, expected {grid.shape + (system.m,)}")
    if body.m != system.m:
        raise InputError(f"body dimension {body.m} != system m={system.m}")
    v0 = float(np.max(body.violation(u)))
    scale = field_scale(u)
    if check_initial and v0 > MEMBERSHIP_SLACK * (1.0 + np.max(np.abs(u))):
        raise InputError(f"initial field leaves the body on the grid (max violation {v0:.3e})")

    dt, steps, dt_max = resolve_dt(system, config, grid)
    dx = float(np.max(grid.dx))
    times = [0.0]
    trace = [v0]
    stride = config.monitor_stride

    if config.scheme == "spectral-exact":
        psi0 = u
        marks = list(range(stride, steps + 1, stride))
        if not marks or marks[-1] != steps:
            marks.append(steps)
        for s in marks:
            u = spectral_run(system, psi0, s * dt, grid)
            times.append(s * dt)
            trace.append(float(np.max(body.violation(u))))
            if stop_above is not None and trace[-1] > stop_above:
                break
    else:
        coeffs = grid_coefficients(system, grid, 0.0) if not system.time_dependent else None
        for s in range(steps):
            t = s * dt
            c = coeffs if coeffs is not None else grid_coefficients(system, grid, t)
            u = step_explicit(u, system, dt, grid, t, c)
            if (s + 1) % stride == 0 or s + 1 == steps:
                times.append((s + 1) * dt)
                trace.append(float(np.max(body.violation(u))))
                if stop_above is not None and trace[-1] > stop_above:
                    break

    return MonitorResult(
        times=np.asarray(times), max_violation=np.asarray(trace), field=u, dt=dt, steps=steps,
        dt_max=dt_max, dx=dx, scale=scale, tolerance=solver_tolerance(dx, dt, scale),
        initial_violation=v0,
    )


def smooth_periodic_field(grid: Grid, m: int, rng: np.random.Generator, modes: int = 3) -> np.ndarray:
    """Random trigonometric polynomial with ``|k| <= modes`` per axis, zero mean, max-abs 1."""
    X = grid.coordinates()
    u = np.zeros(grid.shape + (m,))
    L = np.asarray(grid.L)
    for _ in range(2 * modes):
        k = rng.integers(-modes, modes + 1, size=grid.n)
        if not np.any(k):
            continue
        phase = 2.0 * np.pi * (X / L) @ k
        amp = rng.standard_normal(m) / (1.0 + np.sum(k * k))
        u += np.sin(phase + rng.uniform(0, 2 * np.pi))[..., None] * amp
    peak = np.max(np.abs(u))
    return u / peak if peak > 0 else u


def random_inbody_field(body: ConvexBody, grid: Grid, rng: np.random.Generator, modes: int = 3,
                        margin: float = 1e-3) -> np.ndarray:
    """Smooth periodic field inside ``body``, scaled to nearly touch the boundary.

    Built as ``c + s w`` with ``c`` an interior point and ``w`` a random
    trigonometric polynomial; ``s`` is the largest scale (by bisection) whose
    grid values stay in the body.
    """
    c = body.interior_point()
    w = smooth_periodic_field(grid, body.m, rng, modes)
    if not np.any(w):
        return np.broadcast_to(c, grid.shape + (body.m,)).copy()
    # random extra offset direction so fields are not all centred on the same point
    w = w + 0.3 * rng.standard_normal(body.m)

    def worst(s):
        return float(np.max(body.violation(c + s * w)))

    lo, hi = 0.0, 1.0
    while worst(hi) <= 0.0 and hi < 64.0:
        lo, hi = hi, 2.0 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if worst(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return c + lo * (1.0 - margin) * w
