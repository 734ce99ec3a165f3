"""Counterexample initial data and a seeded search for solutions that leave a body.

The initial data are tangential bumps at a boundary point ``a`` with normal
``nu``::

    psi(x) = a + (sum_jk alpha_jk d_j d_k + sum_j beta_j d_j) zeta_r(d) tau,   d = x - y,

with ``tau`` orthogonal to ``nu``. At ``x = y`` the normal component of
``u - a`` starts to grow at the rate
``sum_jk (alpha_jk + alpha_kj) (tau, A_jk^T nu) + sum_j beta_j (tau, A_j^T nu)``,
which is nonzero exactly when ``nu`` is not an eigenvector of some ``A^T``.
The search picks ``tau``, ``alpha`` and ``beta`` to make that rate positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..bodies import ConvexBody
from ..coefficients import CoefficientField
from ..criterion import Status, Verdict, check_theorem
from ..errors import InputError
from .monitor import MEMBERSHIP_SLACK, MonitorResult, field_scale, run_monitored, solver_tolerance
from .solvers import Grid, SimConfig, resolve_dt

# witnesses must leave the body by this multiple of the solver tolerance
EXIT_FACTOR = 10.0


def _smooth_step(s):
    """C-infinity step: 1 for s <= 0, 0 for s >= 1."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(s < 1.0, np.exp(-1.0 / np.where(s < 1.0, 1.0 - s, 1.0)), 0.0)
        g = np.where(s > 0.0, np.exp(-1.0 / np.where(s > 0.0, s, 1.0)), 0.0)
    return f / (f + g)


def bump(d, r: float) -> np.ndarray:
    """Radial cutoff: 1 for ``|d| <= r/2``, 0 for ``|d| >= r``, smooth and monotone between."""
    rho = np.linalg.norm(np.asarray(d, dtype=float), axis=-1)
    return _smooth_step((rho - 0.5 * r) / (0.5 * r))


def counterexample_init(grid: Grid, a, nu, tau, alpha, beta, y, r: float,
                        body: Optional[ConvexBody] = None) -> np.ndarray:
    """Tangential bump data around ``y`` (see module docstring).

    ``alpha`` is ``n x n``, ``beta`` has length ``n``. Differences ``x - y``
    are taken on the torus, so ``r`` must be below half the box length.
    """
    a = np.asarray(a, dtype=float)
    nu = np.asarray(nu, dtype=float)
    tau = np.asarray(tau, dtype=float)
    m = len(a)
    if nu.shape != (m,) or tau.shape != (m,):
        raise InputError("a, nu and tau must have the same length")
    if abs(tau @ nu) > 1e-12:
        raise InputError(f"tau is not orthogonal to nu (tau . nu = {tau @ nu:.3e})")
    alpha = np.asarray(alpha, dtype=float).reshape(grid.n, grid.n)
    beta = np.asarray(beta, dtype=float).reshape(grid.n)
    y = np.asarray(y, dtype=float).reshape(grid.n)
    if not 0.0 < r < 0.5 * min(grid.L):
        raise InputError(f"bump radius r={r} must lie in (0, L/2)")
    if body is not None:
        if abs(float(body.violation(a))) > 1e-9 * (1.0 + np.linalg.norm(a)):
            raise InputError("a is not on the boundary of the body")

    d = grid.periodic_difference(grid.coordinates(), y)
    poly = np.einsum("...j,jk,...k->...", d, alpha, d) + d @ beta
    return a + (poly * bump(d, r))[..., None] * tau


@dataclass
class FalsifyWitness:
    psi: np.ndarray
    result: MonitorResult
    exit_time: float
    exit_margin: float
    threshold: float
    candidate: int
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "candidate": int(self.candidate),
            "exit_time": float(self.exit_time),
            "max_violation": self.result.summary,
            "exit_margin": float(self.exit_margin),
            "threshold": float(self.threshold),
            "params": {k: np.asarray(v).tolist() for k, v in self.params.items()},
            "simulation": self.result.to_dict(),
        }


def _tangent_basis(nu):
    q, _ = np.linalg.qr(np.column_stack([nu, np.eye(len(nu))]))
    return q[:, 1:len(nu)].T


def _residuals(system, nu, y):
    """Off-normal parts of ``A^T nu`` for every coefficient matrix at ``(y, 0)``."""
    out = {}
    for ident, M in system.matrices(y, 0.0):
        w = M.T @ nu
        out[ident] = w - (w @ nu) * nu
    return out


def _fit_to_body(body, raw, a, scale_fn):
    """Shrink or project raw tangential data until it lies in the body on the grid."""
    try:
        return body.project(raw)
    except NotImplementedError:
        pass
    psi = raw
    for _ in range(40):
        if np.max(body.violation(psi)) <= MEMBERSHIP_SLACK * (1.0 + np.max(np.abs(psi))):
            return psi
        psi = scale_fn(psi, 0.5)
    return None


def falsify(system: CoefficientField, body: ConvexBody, config: SimConfig, budget: int = 200,
            seed: int = 0, verdict: Optional[Verdict] = None, samples=None,
            smooth_samples: int = 64) -> Optional[FalsifyWitness]:
    """Search for initial data in ``body`` whose discrete solution leaves it.

    Requires a NotInvariant / NecessaryViolated verdict (computed when not
    supplied). Returns the first candidate whose violation exceeds
    ``EXIT_FACTOR`` times the solver tolerance, or ``None`` when the budget is
    exhausted. Candidates are generated from ``seed`` deterministically.
    """
    if verdict is None:
        verdict = check_theorem(system, body, samples, smooth_samples=smooth_samples,
                                check_parabolicity=False)
    if verdict.status not in (Status.NOT_INVARIANT, Status.NECESSARY_VIOLATED):
        raise InputError(f"falsify needs a NotInvariant/NecessaryViolated verdict, got {verdict.status.value}")
    if body.m != system.m:
        raise InputError("body and system dimensions differ")

    if system.m < 2:
        raise InputError("m = 1: every normal is an eigenvector, nothing to falsify")
    grid = config.grid(system.n)
    n, m = system.n, system.m
    rng = np.random.default_rng(seed)
    Lmin = min(grid.L)
    y = np.asarray(grid.L) / 2.0

    pairs = body.boundary_pairs(smooth_samples)
    if not pairs:
        raise InputError("body has no boundary points with a normal")
    # witness normals first, deduplicated, then the rest
    preferred = []
    for w in verdict.witnesses:
        for i, (nu, _) in enumerate(pairs):
            if np.allclose(nu, w.normal, atol=1e-12) and i not in preferred:
                preferred.append(i)
    if not preferred:
        preferred = list(range(len(pairs)))

    dt, _, _ = resolve_dt(system, config, grid)
    dx = float(np.max(grid.dx))
    radii = (Lmin / 3.0, Lmin / 4.0, Lmin / 6.0)
    for cand in range(budget):
        if cand % 4 == 3:
            idx = int(rng.integers(len(pairs)))
        else:
            idx = preferred[(cand - cand // 4) % len(preferred)]
        nu, a = pairs[idx]
        res = _residuals(system, nu, y)
        basis = _tangent_basis(nu)

        if cand % 2 == 0:
            combined = sum(res.values())
            if np.linalg.norm(combined) < 1e-14:
                combined = max(res.values(), key=np.linalg.norm)
            tau = combined if np.linalg.norm(combined) > 1e-14 else basis[0]
            tau = tau + 0.1 * (cand // 2 > 0) * (rng.standard_normal(m - 1) @ basis)
        else:
            tau = rng.standard_normal(m - 1) @ basis
        tau = tau - (tau @ nu) * nu
        tau /= np.linalg.norm(tau)

        alpha = np.zeros((n, n))
        beta = np.zeros(n)
        # the bump rim has the opposite curvature to its centre, so both signs are tried
        sign = 1.0 if (cand // 2) % 2 == 0 else -1.0
        w2 = sign * rng.uniform(0.3, 1.0)
        w1 = rng.uniform(0.0, 1.0)
        for ident, r_vec in res.items():
            c = float(tau @ r_vec)
            if len(ident) == 2:
                j, k = ident[0] - 1, ident[1] - 1
                alpha[j, k] = alpha[k, j] = w2 * c
            else:
                beta[ident[0] - 1] = w1 * c
        if not np.any(alpha) and not np.any(beta):
            continue

        r = radii[cand % len(radii)]
        raw_unit = counterexample_init(grid, np.zeros(m), nu, tau, alpha, beta, y, r)
        peak = np.max(np.abs(raw_unit))
        if peak == 0.0:
            continue
        # small amplitudes keep the curvature loss of projected data on round bodies negligible
        amp = rng.uniform(0.005, 0.05) * _local_size(body, a)
        alpha_s, beta_s = alpha * amp / peak, beta * amp / peak
        raw = counterexample_init(grid, a, nu, tau, alpha_s, beta_s, y, r)
        psi = _fit_to_body(body, raw, a, lambda p, f: a + f * (p - a))
        if psi is None:
            continue

        threshold = EXIT_FACTOR * solver_tolerance(dx, dt, field_scale(psi))
        probe = run_monitored(system, psi, body, config, stop_above=threshold)
        if probe.summary > threshold:
            # full-horizon rerun so the reported trace is complete
            result = run_monitored(system, psi, body, config)
            return FalsifyWitness(
                psi=psi, result=result, exit_time=result.first_exit_time(threshold),
                exit_margin=result.summary - threshold, threshold=threshold, candidate=cand,
                params={"a": a, "nu": nu, "tau": tau, "alpha": alpha_s, "beta": beta_s, "y": y, "r": r},
            )
    return None


def _local_size(body, a):
    """Distance scale for the bump amplitude at ``a`` (radius for curved bodies, 1 otherwise)."""
    return float(getattr(body, "radius", 1.0))
