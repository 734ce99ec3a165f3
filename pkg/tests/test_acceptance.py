"""Acceptance gate. Each test prints one ``PASS``/``FAIL`` line and asserts it.

Run alone with ``pytest -m acceptance tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from parainv.bodies import PolyhedralAngle, PolyhedralCone, SphericalCylinder, cone_normal_matrix
from parainv.coefficients import CoefficientField
from parainv.criterion import Status, check_cone, check_theorem, cross_validate
from parainv.errors import GeometryError
from parainv.linalg import SINGULAR_DET, normal_matrix_det, similarity_diagonalize
from parainv.parabolicity import petrovskii_margin, symbol_matrix
from parainv.simulate import (
    Grid,
    SimConfig,
    evolve_explicit,
    falsify,
    propagator_alignment,
    random_inbody_field,
    resolve_dt,
    run_monitored,
    solver_tolerance,
    spectral_run,
)
from systems import (
    FAMILIES,
    ball,
    cross_coupled,
    diagonal_2d,
    heat,
    lower_triangular_half_plane,
    orthant,
    random_case,
    random_cone,
    random_parabolic_like,
    rotated_wedge,
    simplex_cone,
    single,
    smooth_cone,
    spherical_cylinder_last_two,
    strip,
    upper_triangular_half_plane,
)

pytestmark = pytest.mark.acceptance


@pytest.fixture
def gate(capsys):
    """``gate(k, ok, detail)`` prints the criterion line past capture, then asserts."""
    def report(k, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
        assert ok, detail
    return report


def _similar(N, D):
    """``(N^T)^{-1} D N^T``."""
    return np.linalg.solve(N.T, D @ N.T)


def test_c1_triangular_half_plane(gate):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    body = PolyhedralAngle(2, [2], rng.uniform(-1, 1, 1))
    ok = True
    worst = 0.0
    # n = 2 with three independent upper-triangular matrices plus drift
    for _ in range(50):
        U = [np.triu(rng.standard_normal((2, 2))) + 3 * np.eye(2) for _ in range(3)]
        first = np.stack([np.triu(rng.standard_normal((2, 2))) for _ in range(2)])
        sys_ = diagonal_2d(U[0], U[1], U[2] - 3 * np.eye(2), first)
        ok &= check_theorem(sys_, body, check_parabolicity=False).status is Status.INVARIANT
    for _ in range(50):
        a21 = rng.choice([-1, 1]) * 10 ** rng.uniform(-3, 1)
        M = np.triu(rng.standard_normal((2, 2))) + 2 * np.eye(2)
        M[1, 0] = a21
        v = check_theorem(single(M), body, check_parabolicity=False)
        ok &= v.status is Status.NOT_INVARIANT
        err = abs(v.witnesses[0].alignment.residual - abs(a21))
        worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    ok &= worst <= 1e-12 and elapsed < 1.0
    gate(1, bool(ok), f"upper-triangular -> Invariant, A21 != 0 -> NotInvariant; "
                      f"max |residual - |A21|| = {worst:.1e}; {elapsed:.2f}s < 1s")


def test_c2_shortcut_generic_agreement(gate):
    t0 = time.perf_counter()
    disagree = []
    statuses = set()
    for family in FAMILIES:
        rng = np.random.default_rng(100 + FAMILIES.index(family))
        for i in range(200):
            sys_, body = random_case(rng, family)
            cc = cross_validate(sys_, body, check_parabolicity=False)
            statuses.add(cc.generic.status)
            if cc.structural is None or not cc.agree:
                disagree.append((family, i))
    elapsed = time.perf_counter() - t0
    ok = not disagree and statuses == {Status.INVARIANT, Status.NOT_INVARIANT} and elapsed < 30.0
    gate(2, ok, f"1000 cases over {len(FAMILIES)} families, {len(disagree)} disagreements; {elapsed:.1f}s < 30s")


def test_c3_cone_roundtrip(gate):
    rng = np.random.default_rng(3)
    worst = 0.0
    ok = True
    for i in range(100):
        m = 2 + i % 3
        cone = random_cone(rng, m)
        N = cone_normal_matrix(cone)
        D = np.diag(rng.uniform(0.5, 3.0, m))
        M = _similar(N, D)
        ok &= check_cone(single(M), cone).status is Status.INVARIANT
        ok &= check_theorem(single(M), cone, check_parabolicity=False).status is Status.INVARIANT
        got = similarity_diagonalize(M, N)
        ok &= got is not None
        if got is not None:
            worst = max(worst, float(np.max(np.abs(got - D))))
    ok &= worst <= 1e-10
    gate(3, bool(ok), f"100 cones m in 2..4 Invariant, max |D_rec - D| = {worst:.1e} <= 1e-10")


def test_c4_cone_normals_nonsingular(gate):
    rng = np.random.default_rng(4)
    dets = []
    for i in range(1000):
        cone = random_cone(rng, 2 + i % 5)
        dets.append(abs(normal_matrix_det(cone_normal_matrix(cone))))
    rejected = 0
    for i in range(50):
        m = 2 + i % 5
        normals = random_cone(rng, m).normals.copy()
        j, k = rng.choice(m, 2, replace=False)
        normals[k] = normals[j]
        try:
            PolyhedralCone(np.zeros(m), normals)
        except GeometryError:
            rejected += 1
    ok = min(dets) > SINGULAR_DET and rejected == 50
    gate(4, ok, f"1000 cones m in 2..6: min |det N*| = {min(dets):.2e} > 1e-10; {rejected}/50 duplicate-normal "
                f"cones rejected")


def _dense_margin(system, count=10_000):
    """Brute-force oracle: min real eigenvalue of M(sigma) on ``count`` circle points."""
    th = np.linspace(0, 2 * np.pi, count, endpoint=False)
    S = np.stack([np.cos(th), np.sin(th)], axis=1)
    M = symbol_matrix(system.second_order(), S)
    return float(np.min(np.linalg.eigvals(M).real))


def test_c5_parabolicity(gate):
    t0 = time.perf_counter()
    ident = petrovskii_margin(heat(2, 3)).margin
    rot = petrovskii_margin(single([[0.0, 1.0], [-1.0, 0.0]]))
    cc = cross_coupled()
    est = petrovskii_margin(cc).margin
    oracle = _dense_margin(cc)
    elapsed = time.perf_counter() - t0
    ok = (abs(ident - 1.0) <= 1e-12 and not rot.parabolic and abs(est - 0.9) <= 1e-3
          and abs(est - oracle) <= 1e-3 and elapsed < 5.0)
    gate(5, ok, f"identity {ident:.15f}; rotation margin {rot.margin:.3g} (non-parabolic); cross-coupled "
                f"{est:.6f} vs oracle {oracle:.6f}; {elapsed:.2f}s < 5s")


def test_c6_constant_data_conserved(gate):
    rng = np.random.default_rng(6)
    exact = 0
    for i in range(20):
        n, m = 1 + i % 2, 2 + i % 3
        sys_ = random_parabolic_like(rng, n, m, lambda: 0.3 * rng.standard_normal((m, m)))
        cfg = SimConfig(N=8 if n == 2 else 16, T=1.0)
        grid = cfg.grid(n)
        dt, _, _ = resolve_dt(sys_, cfg, grid)
        c = rng.standard_normal(m)
        psi = np.broadcast_to(c, grid.shape + (m,)).copy()
        out = evolve_explicit(psi, sys_, grid, dt, 10_000)
        exact += bool(np.array_equal(out, psi))
    gate(6, exact == 20, f"{exact}/20 random systems keep constant data bit-identical over 10^4 steps")


def test_c7_solver_convergence(gate):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    M = np.triu(rng.uniform(-0.5, 0.5, (3, 3))) + np.diag([1.0, 1.5, 2.0])
    sys_ = single(M, first=rng.uniform(-0.5, 0.5, (3, 3)))
    gaps = []
    for N in (64, 128, 256):
        cfg = SimConfig(N=N, T=0.1)
        g = cfg.grid(1)
        x = g.coordinates()[..., 0]
        u = np.stack([np.sin(x) + 0.5 * np.cos(2 * x), np.cos(x), 0.3 * np.sin(3 * x) + 1.0], axis=-1)
        dt, steps, _ = resolve_dt(sys_, cfg, g)
        gaps.append(float(np.max(np.abs(evolve_explicit(u, sys_, g, dt, steps) - spectral_run(sys_, u, 0.1, g)))))
    orders = np.log2(np.array(gaps[:-1]) / np.array(gaps[1:]))
    elapsed = time.perf_counter() - t0
    ok = bool(np.all(orders >= 1.9)) and gaps[-1] <= 1e-4 and elapsed < 10.0
    gate(7, ok, f"orders {np.round(orders, 3).tolist()} >= 1.9; finest gap {gaps[-1]:.2e} <= 1e-4; "
                f"{elapsed:.2f}s < 10s")


def _x_dependent():
    """Upper-triangular coefficients varying periodically in x; invariant for the half-plane."""
    def second(x, t):
        c = np.cos(x[..., 0])
        A = np.zeros(x.shape[:-1] + (1, 1, 2, 2))
        A[..., 0, 0, 0, 0] = 2 + c
        A[..., 0, 0, 0, 1] = 0.4 * np.sin(x[..., 0])
        A[..., 0, 0, 1, 1] = 1.5 + 0.5 * c
        return A

    def first(x, t):
        A = np.zeros(x.shape[:-1] + (1, 2, 2))
        A[..., 0, 0, 1] = np.cos(2 * x[..., 0])
        A[..., 0, 1, 1] = 0.3
        return A

    return CoefficientField.variable(1, 2, second, first, time_dependent=False)


def invariant_fixtures():
    tri, half = upper_triangular_half_plane()
    cyl = SphericalCylinder(3, [2, 3], 1.0)
    wedge = rotated_wedge()
    N = cone_normal_matrix(wedge)
    xs = [(np.array([x]), 0.0) for x in np.linspace(0, 2 * np.pi, 32, endpoint=False)]
    return [
        ("heat/ball", heat(1, 3), ball(3), None),
        ("upper-triangular/half-plane", tri, half, None),
        ("diagonal/strip", single([[2.0, 0.7], [0.0, 1.0]]), strip(), None),
        ("diagonal/orthant", single(np.diag([1.0, 2.0, 3.0])), orthant(3), None),
        ("scalar/p=m+1 cone", single(3 * np.eye(3)), simplex_cone(3), None),
        ("equal-diagonal/spherical cylinder", single([[1.0, 1.0, 2.0], [0.0, 5.0, 0.0], [0.0, 0.0, 5.0]]), cyl, None),
        ("similar/rotated wedge", single(_similar(N, np.diag([1.0, 2.5]))), wedge, None),
        ("scalar/smooth cone", single(2 * np.eye(3), first=np.eye(3)), smooth_cone(), None),
        ("x-dependent/half-plane", _x_dependent(), half, xs),
    ]


def test_c8_invariance_corroboration(gate):
    t0 = time.perf_counter()
    worst = -np.inf
    lines = []
    ok = True
    for name, sys_, body, samples in invariant_fixtures():
        ok &= check_theorem(sys_, body, samples, check_parabolicity=False).status is Status.INVARIANT
        cfg = SimConfig(N=32, T=0.5, monitor_stride=4)
        grid = cfg.grid(sys_.n)
        rng = np.random.default_rng(8)
        ratio = -np.inf
        for _ in range(100):
            psi = random_inbody_field(body, grid, rng)
            res = run_monitored(sys_, psi, body, cfg)
            assert res.tolerance == solver_tolerance(res.dx, res.dt, res.scale)
            ratio = max(ratio, res.summary / res.tolerance)
        worst = max(worst, ratio)
        lines.append(f"{name} {ratio:.2g}")
    elapsed = time.perf_counter() - t0
    ok &= worst <= 1.0 and elapsed < 60.0
    gate(8, bool(ok), f"9 Invariant fixtures x 100 fields, max violation / tolerance = {worst:.3g} <= 1 "
                      f"({'; '.join(lines)}); {elapsed:.1f}s < 60s")


def test_c9_falsification(gate):
    t0 = time.perf_counter()
    cfg = SimConfig(L=1.0, N=128, T=0.02, monitor_stride=5)
    cases = [
        ("triangular", *lower_triangular_half_plane(0.5)),
        ("p>m cone", single(np.diag([1.0, 2.0, 3.0])), simplex_cone(3)),
        ("spherical cylinder", single(np.diag([1.0, 2.0, 3.0])), spherical_cylinder_last_two(1.0)),
    ]
    found = []
    for name, sys_, body in cases:
        v = check_theorem(sys_, body, check_parabolicity=False)
        assert v.status is Status.NOT_INVARIANT
        w = falsify(sys_, body, cfg, budget=200, seed=0, verdict=v)
        # exit_margin = max violation - 10 x solver tolerance
        hit = (w is not None and w.result.summary > w.threshold and w.exit_margin > 0
               and w.threshold == pytest.approx(10 * w.result.tolerance))
        again = falsify(sys_, body, cfg, budget=200, seed=0, verdict=v)
        hit = hit and again is not None and np.array_equal(again.psi, w.psi)
        found.append(f"{name} {'candidate ' + str(w.candidate) + f' violation/threshold {w.result.summary / w.threshold:.2f}' if hit else 'none'}")
        if not hit:
            break
    elapsed = time.perf_counter() - t0
    ok = len(found) == 3 and all("none" not in f for f in found) and elapsed < 120.0
    gate(9, ok, f"witnesses beyond 10x solver tolerance: {'; '.join(found)}; {elapsed:.1f}s < 120s")


def test_c10_propagator_alignment(gate):
    rng = np.random.default_rng(10)
    sig1 = np.linspace(-4.0, 4.0, 256)[:, None]
    th = rng.uniform(0, 2 * np.pi, 256)
    sig2 = rng.uniform(0.0, 4.0, (256, 1)) * np.stack([np.cos(th), np.sin(th)], axis=1)
    wedge = rotated_wedge()
    N = cone_normal_matrix(wedge)
    tri, _ = upper_triangular_half_plane()
    aligned = [
        (tri, [np.array([0.0, -1.0])], sig1),
        (diagonal_2d(np.diag([1.0, 2.0]), np.diag([2.0, 0.5]), np.diag([0.1, -0.2]), first=rng.standard_normal((2, 2))[:, :, None] * np.eye(2)),
         list(-np.eye(2)), sig2),
        (single(_similar(N, np.diag([1.0, 2.5])), first=_similar(N, np.diag([0.3, -0.7]))), list(wedge.normals), sig1),
    ]
    worst_aligned = 0.0
    for sys_, normals, sig in aligned:
        for nu in normals:
            for t in (0.1, 1.0):
                worst_aligned = max(worst_aligned, propagator_alignment(sys_, nu, t, sig))
    low, _ = lower_triangular_half_plane(0.5)
    perturbed = min(propagator_alignment(low, [0.0, -1.0], t, sig1) for t in (0.1, 1.0))
    ok = worst_aligned <= 1e-9 and perturbed > 1e-3
    gate(10, ok, f"aligned max residual {worst_aligned:.1e} <= 1e-9; A21 = 0.5 residual {perturbed:.3g} > 1e-3")
