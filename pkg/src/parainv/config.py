"""Problem descriptions read from a single JSON document.

Example::

    {
      "n": 1, "m": 2,
      "coefficients": {"second_order": {"1,1": [[1, 0.3], [0, 2]]},
                       "first_order": {"1": [[0, 0], [0, "t"]]}},
      "body": {"type": "polyhedral_angle", "indices": [2], "lower": [0]},
      "sampling": {"x": [[0.0]], "t": [0.0, 0.5]},
      "simulation": {"L": 1.0, "N": 128, "T": 0.02},
      "initial": {"type": "random_inbody"},
      "seed": 0
    }

Second-order matrices are keyed ``"j,k"`` (1-based) and every pair with
``j <= k`` must be present; a ``"k,j"`` entry may be given too but must
equal its mirror. Matrix entries are numbers or expressions over
``x1..xn`` and ``t``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Optional

import numpy as np

from .bodies import ConvexBody, body_from_dict
from .coefficients import CoefficientField, matrix_function
from .errors import InputError
from .linalg import DEFAULT_TOL
from .schemas import validate_config
from .simulate.monitor import random_inbody_field
from .simulate.solvers import Grid, SimConfig

DEFAULT_SEED = 0
DEFAULT_BUDGET = 200


def _pair_key(key: str, n: int):
    try:
        parts = tuple(int(p) for p in key.split(","))
    except ValueError:
        raise InputError(f"bad coefficient key {key!r}; expected 'j,k' or 'j'") from None
    if any(p < 1 or p > n for p in parts):
        raise InputError(f"coefficient key {key!r} out of range 1..{n}")
    return parts


def build_system(coeffs: dict, n: int, m: int) -> CoefficientField:
    second = coeffs["second_order"]
    first = coeffs.get("first_order", {})
    fns2 = {}
    for key, entries in second.items():
        jk = _pair_key(key, n)
        if len(jk) != 2:
            raise InputError(f"second-order key {key!r} must have the form 'j,k'")
        fns2[jk] = (key, matrix_function(entries, n, m))
    for j in range(1, n + 1):
        for k in range(j, n + 1):
            if (j, k) not in fns2:
                raise InputError(f"missing second-order matrix '{j},{k}'")
    for (j, k), (key, _) in fns2.items():
        if j > k and second[key] != second[f"{k},{j}"]:
            raise InputError(f"second-order matrices '{j},{k}' and '{k},{j}' differ (A_jk = A_kj required)")
    fns1 = {}
    for key, entries in first.items():
        j = _pair_key(key, n)
        if len(j) != 1:
            raise InputError(f"first-order key {key!r} must be a single index")
        fns1[j[0]] = matrix_function(entries, n, m)

    parts = [f for _, f in fns2.values()] + list(fns1.values())
    constant = all(c for _, c, _ in parts)
    uses_t = any(u for _, _, u in parts)

    def second_fn(x, t):
        X = np.asarray(x, dtype=float)
        out = np.zeros(X.shape[:-1] + (n, n, m, m))
        for j in range(1, n + 1):
            for k in range(j, n + 1):
                val = fns2[(j, k)][1][0](X, t)
                out[..., j - 1, k - 1, :, :] = val
                out[..., k - 1, j - 1, :, :] = val
        return out

    def first_fn(x, t):
        X = np.asarray(x, dtype=float)
        out = np.zeros(X.shape[:-1] + (n, m, m))
        for j, (fn, _, _) in fns1.items():
            out[..., j - 1, :, :] = fn(X, t)
        return out

    if constant:
        x0 = np.zeros(n)
        return CoefficientField.constant(second_fn(x0, 0.0), first_fn(x0, 0.0))
    return CoefficientField.variable(n, m, second_fn, first_fn, time_dependent=uses_t)


@dataclass
class ProblemConfig:
    raw_text: str
    data: dict
    n: int
    m: int
    system: CoefficientField
    body: Optional[ConvexBody]
    tol: float = DEFAULT_TOL
    samples: list = field(default_factory=list)
    sigma_resolution: Optional[int] = None
    smooth_samples: int = 64
    sim: SimConfig = field(default_factory=SimConfig)
    initial: Optional[dict] = None
    budget: int = DEFAULT_BUDGET
    seed: int = DEFAULT_SEED

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.raw_text.encode("utf-8")).hexdigest()

    def require_body(self) -> ConvexBody:
        if self.body is None:
            raise InputError("config has no 'body'")
        return self.body

    def initial_field(self) -> np.ndarray:
        """Initial data on the simulation grid from the ``initial`` section."""
        if self.initial is None:
            raise InputError("config has no 'initial' section")
        grid = self.sim.grid(self.n)
        spec = self.initial
        kind = spec["type"]
        if kind == "constant":
            value = np.asarray(spec.get("value"), dtype=float)
            if value.shape != (self.m,):
                raise InputError(f"initial.value must have {self.m} entries")
            return np.broadcast_to(value, grid.shape + (self.m,)).copy()
        if kind == "fourier":
            return _fourier_field(spec, grid, self.m)
        rng = np.random.default_rng(self.seed)
        return random_inbody_field(self.require_body(), grid, rng, modes=int(spec.get("modes", 3)),
                                   margin=float(spec.get("margin", 1e-3)))


def _fourier_field(spec, grid: Grid, m: int) -> np.ndarray:
    """``offset + sum amplitude * cos(2 pi k . x / L + phase)``."""
    X = grid.coordinates()
    L = np.asarray(grid.L)
    offset = np.asarray(spec.get("offset", np.zeros(m)), dtype=float)
    if offset.shape != (m,):
        raise InputError(f"initial.offset must have {m} entries")
    u = np.broadcast_to(offset, grid.shape + (m,)).copy()
    for mode in spec.get("modes", []):
        k = np.asarray(mode["k"], dtype=float)
        amp = np.asarray(mode["amplitude"], dtype=float)
        if k.shape != (grid.n,) or amp.shape != (m,):
            raise InputError(f"fourier mode needs k with {grid.n} and amplitude with {m} entries")
        u += np.cos(2.0 * np.pi * (X / L) @ k + float(mode.get("phase", 0.0)))[..., None] * amp
    return u


def parse_config(text: str, seed: Optional[int] = None, tol: Optional[float] = None) -> ProblemConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from None
    validate_config(data)
    n, m = data["n"], data["m"]
    system = build_system(data["coefficients"], n, m)
    body = body_from_dict(data["body"], m) if "body" in data else None

    sampling = data.get("sampling", {})
    xs = sampling.get("x", [[0.0] * n])
    ts = sampling.get("t", [0.0])
    for x in xs:
        if len(x) != n:
            raise InputError(f"sampling point {x} does not have n={n} coordinates")
    samples = [(np.asarray(x, dtype=float), float(t)) for t, x in product(ts, xs)]

    sim = SimConfig(**data.get("simulation", {}))
    return ProblemConfig(
        raw_text=text,
        data=data,
        n=n,
        m=m,
        system=system,
        body=body,
        tol=float(tol if tol is not None else data.get("tolerance", DEFAULT_TOL)),
        samples=samples,
        sigma_resolution=sampling.get("sigma_resolution"),
        smooth_samples=int(sampling.get("smooth_samples", 64)),
        sim=sim,
        initial=data.get("initial"),
        budget=int(data.get("falsify", {}).get("budget", DEFAULT_BUDGET)),
        seed=int(seed if seed is not None else data.get("seed", DEFAULT_SEED)),
    )


def load_config(path, seed: Optional[int] = None, tol: Optional[float] = None) -> ProblemConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, seed=seed, tol=tol)
