"""
Test script for the finite-difference engine

Jacobians of polynomial maps against hand-derived partials, directional
derivatives, Cauchy-Riemann residuals and holomorphy checks.
"""

import cmath
import math

import numpy as np

from differential import (
    ComplexMap,
    DomainError,
    EvaluationError,
    FiniteDiffConfig,
    RealMap,
    Scheme,
    cauchy_riemann_residual,
    complex_derivative,
    directional_derivative,
    disc_samples,
    is_holomorphic_on,
    jacobian,
)


def cubic_map():
    # f(x, y) = (x^3 + 2 x y^2, x^2 y - y^3 + 3)
    return RealMap(lambda p: [p[0] ** 3 + 2 * p[0] * p[1] ** 2, p[0] ** 2 * p[1] - p[1] ** 3 + 3],
                   arity_in=2, arity_out=2, name="cubic")


def cubic_jacobian(x, y):
    return np.array([[3 * x ** 2 + 2 * y ** 2, 4 * x * y],
                     [2 * x * y, x ** 2 - 3 * y ** 2]])


def test_polynomial_jacobian():
    """Jacobian of a cubic map matches its symbolic partials within 1e-6."""
    print("\n" + "=" * 60)
    print("TEST 1: Polynomial Jacobian")
    print("=" * 60)

    f = cubic_map()
    rng = np.random.default_rng(7)
    worst = 0.0
    for a in rng.uniform(-2, 2, size=(25, 2)):
        J = jacobian(f, a)
        assert J.shape == (2, 2)
        worst = max(worst, float(np.max(np.abs(J.entries - cubic_jacobian(*a)))))
    print(f"  Worst entry error over 25 points: {worst:.2e}")
    assert worst < 1e-6

    # Linear and quadratic maps from R^3
    g = RealMap(lambda p: [2 * p[0] - p[2], p[1] ** 2 + p[0] * p[2], 5.0],
                arity_in=3, arity_out=3)
    J = jacobian(g, [1.0, -2.0, 0.5]).entries
    expected = np.array([[2, 0, -1], [0.5, -4, 1], [0, 0, 0]])
    assert np.allclose(J, expected, atol=1e-8)


def test_richardson_and_forward():
    """Forward differences are first order; Richardson levels recover accuracy."""
    print("\n" + "=" * 60)
    print("TEST 2: Schemes and Richardson Extrapolation")
    print("=" * 60)

    f = RealMap(lambda p: [math.sin(p[0]) * math.exp(p[0])], arity_in=1, arity_out=1)
    x = 0.7
    exact = math.exp(x) * (math.sin(x) + math.cos(x))

    forward = jacobian(f, [x], FiniteDiffConfig(step=1e-3, scheme=Scheme.FORWARD)).entries[0, 0]
    forward_r = jacobian(f, [x], FiniteDiffConfig(step=1e-3, scheme=Scheme.FORWARD,
                                                  richardson_levels=2)).entries[0, 0]
    central = jacobian(f, [x], FiniteDiffConfig(step=1e-3)).entries[0, 0]
    central_r = jacobian(f, [x], FiniteDiffConfig(step=1e-3, richardson_levels=2)).entries[0, 0]

    print(f"  forward error:       {abs(forward - exact):.2e}")
    print(f"  forward+Richardson:  {abs(forward_r - exact):.2e}")
    print(f"  central error:       {abs(central - exact):.2e}")
    print(f"  central+Richardson:  {abs(central_r - exact):.2e}")
    assert abs(forward - exact) > abs(central - exact)
    assert abs(forward_r - exact) < abs(forward - exact) / 100
    assert abs(central_r - exact) < 1e-10
    assert FiniteDiffConfig(scheme=Scheme.FORWARD).order == 1
    assert FiniteDiffConfig().order == 2


def test_config_validation():
    print("\n" + "=" * 60)
    print("TEST 3: FiniteDiffConfig Validation")
    print("=" * 60)

    for kwargs in ({'step': 0.0}, {'step': -1e-3}, {'step': math.inf},
                   {'scheme': 'backward'}, {'richardson_levels': 9}):
        try:
            FiniteDiffConfig(**kwargs)
        except DomainError as e:
            print(f"  ✓ {kwargs}: {e}")
        else:
            raise AssertionError(f"{kwargs} should be rejected")


def test_directional_derivative():
    """Directional derivative equals J v and rejects the zero direction."""
    print("\n" + "=" * 60)
    print("TEST 4: Directional Derivative")
    print("=" * 60)

    f = cubic_map()
    a, v = np.array([0.4, -1.1]), np.array([3.0, 2.0])
    d = directional_derivative(f, a, v)
    assert np.allclose(d, cubic_jacobian(*a) @ v, atol=1e-6)
    print(f"  D_v f = {d}")

    try:
        directional_derivative(f, a, [0.0, 0.0])
    except DomainError:
        print("  ✓ zero direction rejected")
    else:
        raise AssertionError("zero direction should be rejected")


def test_evaluation_errors():
    """Non-finite values and wrong arities are reported with the offending point."""
    print("\n" + "=" * 60)
    print("TEST 5: Evaluation Errors")
    print("=" * 60)

    log_map = RealMap(lambda p: [math.log(p[0])], arity_in=1, arity_out=1, name="log")
    try:
        log_map([-1.0])
    except EvaluationError as e:
        assert e.point is not None and e.point[0] == -1.0
        print(f"  ✓ {e}")
    else:
        raise AssertionError("log(-1) should fail")

    inv = RealMap(lambda p: [np.float64(1.0) / p[0]], arity_in=1, arity_out=1)
    with np.errstate(divide='ignore'):
        try:
            inv([0.0])
        except EvaluationError:
            print("  ✓ infinite value rejected")
        else:
            raise AssertionError("1/0 should be rejected")

    try:
        cubic_map()([1.0, 2.0, 3.0])
    except DomainError:
        print("  ✓ arity mismatch rejected")
    else:
        raise AssertionError("arity mismatch should be rejected")


def test_cauchy_riemann_convergence():
    """CR residual of a holomorphic map shrinks at least quadratically as h halves."""
    print("\n" + "=" * 60)
    print("TEST 6: Cauchy-Riemann Residual Convergence")
    print("=" * 60)

    f = ComplexMap(cmath.exp, name="exp")
    z = 0.3 + 0.2j
    residuals = []
    for h in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
        r1, r2 = cauchy_riemann_residual(f, z, FiniteDiffConfig(step=h))
        residuals.append(math.hypot(r1, r2))
    orders = [math.log2(residuals[k] / residuals[k + 1]) for k in range(len(residuals) - 1)]
    print(f"  residuals: {[f'{r:.2e}' for r in residuals]}")
    print(f"  observed orders: {[f'{o:.3f}' for o in orders]}")
    assert all(o >= 1.9 for o in orders)


def test_complex_derivative():
    print("\n" + "=" * 60)
    print("TEST 7: Complex Derivative")
    print("=" * 60)

    square = ComplexMap(lambda z: z * z, name="square")
    d = complex_derivative(square, 1 + 1j)
    print(f"  (z^2)' at 1+i = {d.value:.8f} (residual {d.residual:.1e})")
    assert abs(d.value - (2 + 2j)) < 1e-8
    assert d.holomorphic

    analytic = ComplexMap(lambda z: z * z, derivative=lambda z: 2 * z)
    assert complex_derivative(analytic, 0.5j).value == 1j

    conj = ComplexMap(lambda z: z.conjugate(), name="conjugate")
    d = complex_derivative(conj, 0.2 - 0.7j)
    assert not d.holomorphic
    assert abs(d.residual - 2.0) < 1e-8
    r1, r2 = cauchy_riemann_residual(conj, 0.2 - 0.7j)
    assert abs(r1 - 2.0) < 1e-8 and abs(r2) < 1e-8


def test_holomorphy_on_samples():
    print("\n" + "=" * 60)
    print("TEST 8: Holomorphy on a Sample Set")
    print("=" * 60)

    samples = disc_samples(0.5 + 0.5j, 1.0, 40, seed=3)
    assert all(abs(z - (0.5 + 0.5j)) < 1.0 for z in samples)

    report = is_holomorphic_on(ComplexMap(cmath.exp), samples)
    print(f"  exp: holomorphic={report.holomorphic}, worst residual {report.worst_residual:.1e}")
    assert report and report.samples == 40

    report = is_holomorphic_on(ComplexMap(lambda z: z.conjugate()), samples)
    assert not report
    assert report.worst_point in samples

    try:
        is_holomorphic_on(ComplexMap(cmath.exp), [])
    except DomainError:
        print("  ✓ empty sample set rejected")
    else:
        raise AssertionError("empty sample set should be rejected")

    reciprocal = ComplexMap(lambda z: 1 / z, excluded=(0j,))
    assert not reciprocal.contains(0j)
    try:
        complex_derivative(reciprocal, 0j)
    except DomainError:
        print("  ✓ pole of 1/z is outside the domain")
    else:
        raise AssertionError("0 should be outside the domain of 1/z")

    disc = ComplexMap(cmath.log, center=1.0, radius=1.0)
    assert disc.contains(1.5 + 0.2j) and not disc.contains(-0.5)


def main():
    """Run all tests."""
    print("=" * 60)
    print("FINITE-DIFFERENCE ENGINE TEST SUITE")
    print("=" * 60)

    test_polynomial_jacobian()
    test_richardson_and_forward()
    test_config_validation()
    test_directional_derivative()
    test_evaluation_errors()
    test_cauchy_riemann_convergence()
    test_complex_derivative()
    test_holomorphy_on_samples()

    print("\n" + "=" * 60)
    print("ALL TESTS COMPLETED")
    print("=" * 60)


if __name__ == "__main__":
    main()
