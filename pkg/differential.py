"""
Finite-Difference Derivative Engine

Jacobians and directional derivatives of real maps R^n -> R^m, plus
Cauchy-Riemann residuals, complex derivatives and sampled holomorphy
checks for complex maps.

Every other module in the toolkit differentiates through here: score
functions in stat_manifold, metric derivatives in geodesic, image-arc
tangents in conformal.

Example usage:
    f = RealMap(lambda p: [p[0] * p[1], p[1]], arity_in=2, arity_out=2)
    J = jacobian(f, [1.0, 2.0])
    print(J.entries)
"""

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

EPS = np.finfo(float).eps
CBRT_EPS = EPS ** (1 / 3)  # optimum relative step for second-order central differences
MAX_RICHARDSON_LEVELS = 4
DEFAULT_CR_TOL = 1e-6


class DomainError(ValueError):
    """An operation was called outside its precondition."""


class EvaluationError(ValueError):
    """A user function failed or returned a non-finite value."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class Scheme:
    """Finite-difference schemes."""
    CENTRAL = "central"
    FORWARD = "forward"


@dataclass(frozen=True)
class FiniteDiffConfig:
    """Configuration for finite differences."""

    # Step size; None means CBRT_EPS * max(1, |a|) at the evaluation point
    step: Optional[float] = None
    scheme: str = Scheme.CENTRAL
    # Number of Richardson extrapolation levels (0 = plain difference)
    richardson_levels: int = 0

    def __post_init__(self):
        if self.step is not None and not (self.step > 0 and math.isfinite(self.step)):
            raise DomainError(f"Finite-difference step must be positive, got {self.step}")
        if self.scheme not in (Scheme.CENTRAL, Scheme.FORWARD):
            raise DomainError(f"Unknown scheme: {self.scheme}")
        if not 0 <= self.richardson_levels <= MAX_RICHARDSON_LEVELS:
            raise DomainError(
                f"richardson_levels must be in [0, {MAX_RICHARDSON_LEVELS}], "
                f"got {self.richardson_levels}"
            )

    def step_at(self, a) -> float:
        """Step size to use around point a."""
        if self.step is not None:
            return self.step
        scale = float(np.max(np.abs(a))) if np.size(a) else 0.0
        return CBRT_EPS * max(1.0, scale)

    @property
    def order(self) -> int:
        """Truncation order of the basic scheme."""
        return 2 if self.scheme == Scheme.CENTRAL else 1


DEFAULT_CONFIG = FiniteDiffConfig()


@dataclass(frozen=True)
class RealMap:
    """A function R^n -> R^m with declared arities."""

    eval: Callable
    arity_in: int
    arity_out: int
    name: str = ""

    def __post_init__(self):
        if self.arity_in < 1 or self.arity_out < 1:
            raise DomainError(
                f"Arities must be positive, got in={self.arity_in} out={self.arity_out}"
            )

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.arity_in:
            raise DomainError(f"{self.label} expects {self.arity_in} inputs, got {x.size}")
        try:
            y = np.asarray(self.eval(x), dtype=float).reshape(-1)
        except (ArithmeticError, ValueError) as e:
            raise EvaluationError(f"{self.label} failed at {x.tolist()}: {e}", point=x) from e
        if y.size != self.arity_out:
            raise DomainError(f"{self.label} must return {self.arity_out} values, got {y.size}")
        if not np.all(np.isfinite(y)):
            raise EvaluationError(f"{self.label} is not finite at {x.tolist()}", point=x)
        return y

    @property
    def label(self) -> str:
        return self.name or f"map R^{self.arity_in} -> R^{self.arity_out}"


@dataclass(frozen=True)
class ComplexMap:
    """
    A complex function on a (possibly punctured) open disc.

    The disc is B_radius(center); points listed in `excluded` are removed
    from it (poles). An analytic derivative may be supplied; otherwise it is
    obtained by finite differences.
    """

    eval: Callable[[complex], complex]
    center: complex = 0j
    radius: float = math.inf
    name: str = ""
    derivative: Optional[Callable[[complex], complex]] = None
    excluded: Tuple[complex, ...] = ()

    def contains(self, z: complex) -> bool:
        """True if z lies in the open disc and away from excluded points."""
        if not cmath.isfinite(z) or abs(z - self.center) >= self.radius:
            return False
        return all(abs(z - p) > 1e-12 for p in self.excluded)

    def __call__(self, z: complex) -> complex:
        try:
            w = complex(self.eval(complex(z)))
        except (ArithmeticError, ValueError) as e:
            raise EvaluationError(f"{self.label} failed at {z}: {e}", point=z) from e
        if not cmath.isfinite(w):
            raise EvaluationError(f"{self.label} is not finite at {z}", point=z)
        return w

    def as_real_map(self) -> RealMap:
        """The same map viewed as (x, y) -> (u, v)."""
        def uv(p):
            w = self(complex(p[0], p[1]))
            return [w.real, w.imag]
        return RealMap(uv, arity_in=2, arity_out=2, name=self.label)

    @property
    def label(self) -> str:
        return self.name or "complex map"


@dataclass
class JacobianMatrix:
    """m x n matrix of partials, entry (i, j) = D_j f_i(a)."""
    entries: np.ndarray
    point: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape


@dataclass
class ComplexDerivative:
    """Result of complex_derivative."""
    value: complex
    holomorphic: bool
    residual: float  # max |CR residual| at the point
    point: complex


@dataclass
class HolomorphyReport:
    """Result of is_holomorphic_on."""
    holomorphic: bool
    worst_point: complex
    worst_residual: float
    tol: float
    samples: int
    residuals: List[float] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.holomorphic


def _difference(g: Callable, h: float, scheme: str):
    """Basic difference quotient of g(s) at s = 0 with step h."""
    if scheme == Scheme.CENTRAL:
        return (g(h) - g(-h)) / (2 * h)
    return (g(h) - g(0.0)) / h


def _extrapolated(g: Callable, h: float, cfg: FiniteDiffConfig):
    """
    Derivative of g at 0 with optional Richardson extrapolation.

    Builds quotients at h, h/2, ..., h/2^L and eliminates the leading error
    terms level by level (Neville tableau).
    """
    levels = cfg.richardson_levels
    table = [_difference(g, h / 2 ** k, cfg.scheme) for k in range(levels + 1)]
    # Central differences have only even powers of h in the error expansion
    step_power = 2 if cfg.scheme == Scheme.CENTRAL else 1
    for i in range(1, levels + 1):
        factor = 2 ** (step_power * i)
        table = [
            table[j + 1] + (table[j + 1] - table[j]) / (factor - 1)
            for j in range(len(table) - 1)
        ]
    return table[0]


def _as_point(a, n: int) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size != n:
        raise DomainError(f"Point has {a.size} coordinates, map expects {n}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"Point is not finite: {a.tolist()}")
    return a


def jacobian(f: RealMap, a, cfg: FiniteDiffConfig = DEFAULT_CONFIG) -> JacobianMatrix:
    """
    Finite-difference Jacobian of f at a.

    Args:
        f: Map R^n -> R^m
        a: Evaluation point (length n)
        cfg: Step, scheme and Richardson settings

    Returns:
        JacobianMatrix with m x n entries

    Raises:
        EvaluationError: f is non-finite at some stencil point
    """
    a = _as_point(a, f.arity_in)
    h = cfg.step_at(a)
    columns = []
    for j in range(f.arity_in):
        e_j = np.zeros(f.arity_in)
        e_j[j] = 1.0
        columns.append(_extrapolated(lambda s: f(a + s * e_j), h, cfg))
    return JacobianMatrix(entries=np.column_stack(columns), point=a)


def directional_derivative(f: RealMap, a, v, cfg: FiniteDiffConfig = DEFAULT_CONFIG) -> np.ndarray:
    """
    Derivative of f at a in direction v, i.e. lim (f(a + hv) - f(a)) / h.

    The step is scaled by |v| so the stencil points stay at distance ~h from a.

    Raises:
        DomainError: v is the zero vector
    """
    a = _as_point(a, f.arity_in)
    v = _as_point(v, f.arity_in)
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        raise DomainError("Direction vector must be non-zero")
    h = cfg.step_at(a) / norm_v
    return _extrapolated(lambda s: f(a + s * v), h, cfg)


def _complex_partials(f: ComplexMap, z: complex, cfg: FiniteDiffConfig) -> Tuple[complex, complex]:
    """(df/dx, df/dy) at z, each a complex number u_* + i v_*."""
    if not f.contains(z):
        raise DomainError(f"{z} is outside the domain of {f.label}")
    h = cfg.step_at([z.real, z.imag])
    f_x = _extrapolated(lambda s: f(z + s), h, cfg)
    f_y = _extrapolated(lambda s: f(z + 1j * s), h, cfg)
    return complex(f_x), complex(f_y)


def cauchy_riemann_residual(f: ComplexMap, z: complex,
                            cfg: FiniteDiffConfig = DEFAULT_CONFIG) -> Tuple[float, float]:
    """
    Cauchy-Riemann residuals at z.

    Returns:
        (r1, r2) with r1 = u_x - v_y and r2 = v_x + u_y; both vanish iff the
        Cauchy-Riemann equations hold.
    """
    f_x, f_y = _complex_partials(f, complex(z), cfg)
    r1 = f_x.real - f_y.imag
    r2 = f_x.imag + f_y.real
    return r1, r2


def complex_derivative(f: ComplexMap, z: complex, cfg: FiniteDiffConfig = DEFAULT_CONFIG,
                       tol: float = DEFAULT_CR_TOL) -> ComplexDerivative:
    """
    Complex derivative Df(z) = u_x + i v_x.

    The value is flagged non-holomorphic when a Cauchy-Riemann residual
    exceeds tol; it is still returned so callers can inspect it.
    """
    z = complex(z)
    f_x, f_y = _complex_partials(f, z, cfg)
    residual = max(abs(f_x.real - f_y.imag), abs(f_x.imag + f_y.real))
    value = f.derivative(z) if f.derivative is not None else f_x
    return ComplexDerivative(
        value=complex(value),
        holomorphic=residual <= tol,
        residual=residual,
        point=z,
    )


def is_holomorphic_on(f: ComplexMap, samples: Sequence[complex], tol: float = DEFAULT_CR_TOL,
                      cfg: FiniteDiffConfig = DEFAULT_CONFIG) -> HolomorphyReport:
    """
    Certify holomorphy on a finite sample set.

    Raises:
        DomainError: empty sample set or a sample outside the domain
    """
    samples = [complex(z) for z in samples]
    if not samples:
        raise DomainError("Holomorphy check needs at least one sample point")

    residuals = []
    for z in samples:
        r1, r2 = cauchy_riemann_residual(f, z, cfg)
        residuals.append(math.hypot(r1, r2))

    worst = int(np.argmax(residuals))
    return HolomorphyReport(
        holomorphic=residuals[worst] <= tol,
        worst_point=samples[worst],
        worst_residual=residuals[worst],
        tol=tol,
        samples=len(samples),
        residuals=residuals,
    )


def disc_samples(center: complex, radius: float, count: int, seed: int = 0) -> List[complex]:
    """Uniform random points strictly inside a disc."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0.0, 0.99, count))
    phi = rng.uniform(-np.pi, np.pi, count)
    return [complex(center) + complex(rk * np.cos(pk), rk * np.sin(pk)) for rk, pk in zip(r, phi)]
