"""
Test script for the Rao distance solver

Christoffel symbols against hand-derived values, geodesic integration,
shooting against the 1-D line integral and the closed forms, and sampled
metric axioms.
"""

import itertools
import math

import numpy as np

from differential import DomainError
from geodesic import (
    BoundaryExitError,
    EuclideanMetricField,
    ShootingError,
    SolverConfig,
    christoffel,
    closed_form_distance,
    create_solver,
    geodesic_shoot,
    rao_distance,
    rao_distance_1d,
    rao_distance_matrix,
    solve_geodesic,
)
from stat_manifold import ParamPoint, TangentVector, get_family

# Coarser integration keeps the many-pair tests quick; accuracy stays well below their tolerances
FAST = create_solver(ode_steps=32)
POOL = create_solver(ode_steps=24)


def test_christoffel_symbols():
    print("\n" + "=" * 60)
    print("TEST 1: Christoffel Symbols")
    print("=" * 60)

    flat = EuclideanMetricField(dim=3)
    assert np.all(christoffel(flat, [0.3, -1.0, 2.0]) == 0.0)
    print("  ✓ flat metric has zero Christoffel symbols")

    pois = get_family('poisson')
    for lam in (0.5, 1.0, 3.0):
        gamma = christoffel(pois, ParamPoint([lam]))
        assert gamma.shape == (1, 1, 1)
        assert abs(gamma[0, 0, 0] + 1 / (2 * lam)) < 1e-6, (lam, gamma)
    print("  ✓ Poisson: Gamma = -1/(2 lambda)")

    # Normal (mu, sigma): Gamma^mu_{mu sigma} = -1/sigma, Gamma^sigma_{mu mu} = 1/(2 sigma),
    # Gamma^sigma_{sigma sigma} = -1/sigma, all others zero
    norm = get_family('normal')
    rng = np.random.default_rng(2)
    for mu, sigma in zip(rng.uniform(-2, 2, 5), rng.uniform(1.0, 3.0, 5)):
        gamma = christoffel(norm, [mu, sigma])
        expected = np.zeros((2, 2, 2))
        expected[0, 0, 1] = expected[0, 1, 0] = -1 / sigma
        expected[1, 0, 0] = 1 / (2 * sigma)
        expected[1, 1, 1] = -1 / sigma
        assert np.max(np.abs(gamma - expected)) < 1e-6
        assert np.array_equal(gamma, np.transpose(gamma, (0, 2, 1)))
    print("  ✓ Normal: analytic symbols, symmetric in the lower indices")

    multi = get_family('multinomial_reduced', 2)
    for p in rng.dirichlet([3, 3, 3], 4):
        gamma = christoffel(multi, p[:2])
        assert np.allclose(gamma, np.transpose(gamma, (0, 2, 1)), atol=1e-12)


def test_geodesic_integration():
    print("\n" + "=" * 60)
    print("TEST 2: Geodesic Integration")
    print("=" * 60)

    pois = get_family('poisson')
    still = geodesic_shoot(pois, ParamPoint([2.0]), TangentVector([0.0]), 1.0)
    assert still.length == 0.0
    assert all(np.array_equal(p.theta, [2.0]) for p in still.points)
    print("  ✓ zero velocity gives a stationary path")

    flat = EuclideanMetricField(dim=2)
    p0, v0 = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    line = geodesic_shoot(flat, p0, v0, 2.0)
    for t, p in zip(line.times, line.points):
        assert np.allclose(p.theta, p0 + t * v0, atol=1e-12)
    assert abs(line.length - 2.0 * np.linalg.norm(v0)) < 1e-12
    print("  ✓ flat metric gives the straight line p0 + t v0")

    # Poisson geodesic from lambda = 1: sqrt(lambda) is linear in t, speed is constant
    path = geodesic_shoot(pois, ParamPoint([1.0]), TangentVector([1.5]), 1.0)
    print(f"  Poisson speed variation: {path.speed_variation:.2e}")
    assert path.speed_variation < 1e-5
    assert abs(path.end[0] - (1 + 0.75) ** 2) < 1e-6
    assert abs(path.length - 1.5) < 1e-6

    # Two-parameter geodesics from the shooting solver keep a constant speed too
    cases = [
        ('normal', get_family('normal'), [0.0, 1.0], [1.0, 2.0]),
        ('multinomial_reduced', get_family('multinomial_reduced', 2), [0.2, 0.3], [0.5, 0.3]),
    ]
    for name, fam, a, b in cases:
        result = solve_geodesic(fam, a, b)
        assert result.path is not None
        print(f"  {name} speed variation: {result.path.speed_variation:.2e}")
        assert result.path.speed_variation < 1e-4
        assert abs(result.path.length - result.length) < 1e-12 * max(1.0, result.length)


def test_boundary_exit():
    print("\n" + "=" * 60)
    print("TEST 3: Boundary Exit")
    print("=" * 60)

    # sqrt(lambda) = 1 - 2.5 t reaches zero at t = 0.4
    try:
        geodesic_shoot(get_family('poisson'), [1.0], [-5.0], 1.0)
    except BoundaryExitError as e:
        print(f"  ✓ exit after fraction {e.fraction:.3f} at {e.point}")
        assert 0.0 < e.fraction < 0.45
        assert e.point is not None
    else:
        raise AssertionError("geodesic should leave lambda > 0")

    try:
        geodesic_shoot(get_family('bernoulli'), [1.0], [0.1], 1.0)
    except DomainError:
        print("  ✓ start outside the region rejected")
    else:
        raise AssertionError("p = 1 is not an interior start")


def test_known_distances():
    print("\n" + "=" * 60)
    print("TEST 4: Known Distances")
    print("=" * 60)

    pois = get_family('poisson')
    d = rao_distance(pois, ParamPoint([1.0]), ParamPoint([4.0]))
    print(f"  Poisson d(1, 4) = {d:.10f}")
    assert abs(d - 2.0) < 1e-4
    assert abs(rao_distance_1d(pois, [1.0], [4.0]) - 2.0) < 1e-8

    bern = get_family('bernoulli')
    expected = 2 * (math.asin(math.sqrt(0.75)) - math.asin(math.sqrt(0.25)))
    assert abs(rao_distance_1d(bern, [0.25], [0.75]) - expected) < 1e-8
    assert rao_distance_1d(bern, [0.5], [0.5]) == 0.0

    multi = get_family('multinomial', 2)
    a, b = [0.9, 0.1], [0.1, 0.9]
    expected = 2 * math.acos(2 * math.sqrt(0.09))
    d_shoot = rao_distance(multi, a, b)
    print(f"  multinomial n=2: shooting {d_shoot:.8f}, closed form {expected:.8f}")
    assert abs(d_shoot - expected) < 1e-4
    assert abs(rao_distance_1d(multi, a, b) - expected) < 1e-8
    assert abs(closed_form_distance(multi, a, b) - expected) < 1e-12

    multi3 = get_family('multinomial', 3)
    a, b = [0.2, 0.3, 0.5], [0.5, 0.3, 0.2]
    d_shoot = rao_distance(multi3, a, b)
    d_closed = closed_form_distance(multi3, a, b)
    print(f"  multinomial n=3: shooting {d_shoot:.8f}, closed form {d_closed:.8f}")
    assert abs(d_shoot - d_closed) < 1e-4

    norm = get_family('normal')
    d_shoot = rao_distance(norm, [0.0, 1.0], [1.0, 2.0])
    d_closed = closed_form_distance(norm, [0.0, 1.0], [1.0, 2.0])
    print(f"  normal: shooting {d_shoot:.8f}, closed form {d_closed:.8f}")
    assert abs(d_shoot - d_closed) < 1e-4

    try:
        rao_distance_1d(norm, [0.0, 1.0], [1.0, 2.0])
    except DomainError:
        print("  ✓ line integral needs a one-parameter family")
    else:
        raise AssertionError("normal has two parameters")


def test_one_dimensional_oracle():
    """Shooting agrees with the line integral on 20 Bernoulli and 20 Poisson pairs."""
    print("\n" + "=" * 60)
    print("TEST 5: Shooting vs 1-D Line Integral")
    print("=" * 60)

    rng = np.random.default_rng(19)
    cases = [('bernoulli', rng.uniform(0.05, 0.95, (20, 2))),
             ('poisson', rng.uniform(0.3, 9.0, (20, 2)))]
    for name, pairs in cases:
        fam = get_family(name)
        worst = 0.0
        for a, b in pairs:
            d_shoot = rao_distance(fam, [a], [b], FAST)
            d_line = rao_distance_1d(fam, [a], [b])
            worst = max(worst, abs(d_shoot - d_line))
            assert abs(d_line - closed_form_distance(fam, [a], [b])) < 1e-8
        print(f"  {name}: worst |shooting - line integral| = {worst:.2e}")
        assert worst < 1e-4


def test_identity_and_symmetry():
    print("\n" + "=" * 60)
    print("TEST 6: Identity and Symmetry")
    print("=" * 60)

    cfg = SolverConfig(ode_steps=64, shoot_tol=1e-6)
    rng = np.random.default_rng(23)
    cases = [
        ('bernoulli', [[p] for p in rng.uniform(0.1, 0.9, 6)]),
        ('poisson', [[lam] for lam in rng.uniform(0.5, 6.0, 6)]),
        ('normal', [[mu, s] for mu, s in zip(rng.uniform(-2, 2, 6), rng.uniform(1.0, 2.0, 6))]),
    ]
    for name, points in cases:
        fam = get_family(name)
        assert rao_distance(fam, points[0], points[0], cfg) == 0.0
        result = solve_geodesic(fam, points[0], points[0], cfg)
        assert result.iterations == 0 and result.path is None
        worst = 0.0
        for a, b in zip(points[0::2], points[1::2]):
            worst = max(worst, abs(rao_distance(fam, a, b, cfg) - rao_distance(fam, b, a, cfg)))
        print(f"  {name}: worst asymmetry {worst:.2e}")
        assert worst <= 2 * cfg.shoot_tol


def test_triangle_inequality():
    """d(a, c) <= d(a, b) + d(b, c) + 1e-3 over every triple of an 8-point pool (56 triples)."""
    print("\n" + "=" * 60)
    print("TEST 7: Triangle Inequality")
    print("=" * 60)

    rng = np.random.default_rng(31)
    pools = {
        'bernoulli': [[p] for p in rng.uniform(0.1, 0.9, 8)],
        'poisson': [[lam] for lam in rng.uniform(0.5, 6.0, 8)],
        'normal': [[mu, s] for mu, s in zip(rng.uniform(-2, 2, 8), rng.uniform(0.5, 2.0, 8))],
        'multinomial': [list(p) for p in rng.dirichlet([3.0, 3.0, 3.0], 8)],
    }
    for name, points in pools.items():
        fam = get_family(name, len(points[0]))
        D = rao_distance_matrix(fam, points, POOL)
        assert np.array_equal(D, D.T) and np.all(np.diag(D) == 0.0)
        triples = list(itertools.combinations(range(len(points)), 3))
        assert len(triples) >= 50
        worst = -math.inf
        for i, j, k in triples:
            for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                worst = max(worst, D[a, c] - D[a, b] - D[b, c])
        print(f"  {name}: {len(triples)} triples, worst excess {worst:.2e}")
        assert worst <= 1e-3


def test_shooting_failure_and_config():
    print("\n" + "=" * 60)
    print("TEST 8: Shooting Failure and Solver Config")
    print("=" * 60)

    cfg = SolverConfig(max_shoot_iters=1, shoot_tol=1e-12)
    try:
        solve_geodesic(get_family('poisson'), [1.0], [4.0], cfg)
    except ShootingError as e:
        print(f"  ✓ {e}")
        assert 0.0 < e.best_residual < math.inf
    else:
        raise AssertionError("one Newton step cannot reach 1e-12")

    for kwargs in ({'ode_steps': 8}, {'shoot_tol': 0.0}, {'max_shoot_iters': 0}, {'fd_step_metric': -1.0}):
        try:
            SolverConfig(**kwargs)
        except DomainError:
            pass
        else:
            raise AssertionError(f"{kwargs} should be rejected")

    assert SolverConfig().metric_step(np.array([3.0, 4.0])) == 1e-4 * 6.0
    assert SolverConfig(fd_step_metric=1e-3).metric_step(np.array([3.0])) == 1e-3

    try:
        rao_distance(get_family('bernoulli'), [1.0], [0.5])
    except DomainError:
        print("  ✓ p = 1 rejected")
    else:
        raise AssertionError("p = 1 is outside the Bernoulli region")


def main():
    """Run all tests."""
    print("=" * 60)
    print("RAO DISTANCE SOLVER TEST SUITE")
    print("=" * 60)

    test_christoffel_symbols()
    test_geodesic_integration()
    test_boundary_exit()
    test_known_distances()
    test_one_dimensional_oracle()
    test_identity_and_symmetry()
    test_triangle_inequality()
    test_shooting_failure_and_config()

    print("\n" + "=" * 60)
    print("ALL TESTS COMPLETED")
    print("=" * 60)


if __name__ == "__main__":
    main()
