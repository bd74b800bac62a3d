"""
Conformal Maps, Arc Angles and Arc Lengths

Arcs z(t), a <= t <= b, in the complex plane; their inclination angles;
image arcs under a complex map; the check that a holomorphic map with
non-vanishing derivative preserves the angle between two intersecting
arcs; and arc lengths under a reparametrization t = psi(tau):

    L = integral over [alpha, beta] of |z'(psi(tau))| psi'(tau) d tau

Example usage:
    square = BUILTIN_MAPS['square']
    horizontal = Arc.from_spec("line 0 1 2 1")
    vertical = Arc.from_spec("line 1 0 1 2")
    report = angle_preservation_check(square, horizontal, vertical, 0.5)
    print(report.source_angle, report.image_angle, report.passed)
"""

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from differential import (
    DEFAULT_CONFIG,
    ComplexMap,
    DomainError,
    EvaluationError,
    FiniteDiffConfig,
    complex_derivative,
    directional_derivative,
)
from stat_manifold import DEFAULT_QUADRATURE, QuadratureConfig, adaptive_quad

# Arc tangents without an analytic derivative use this fraction of (b - a) as step
FD_FRACTION = 1e-6
DERIV_MATCH_TOL = 1e-5
SINGULAR_TANGENT = 1e-12
CRITICAL_DERIVATIVE = 1e-10
INTERSECTION_TOL = 1e-9
ENDPOINT_TOL = 1e-9
MONOTONE_SAMPLES = 256
COMMON_GRID = 64
DEFAULT_ANGLE_TOL = 1e-6
# Arcs passing closer than this, scaled by 1 + |p|, to an excluded point p cross it
POLE_CLEARANCE = 1e-8


class SingularTangentError(ValueError):
    """z'(t) vanishes, so the inclination angle is undefined."""

    def __init__(self, message: str, t: float = math.nan):
        super().__init__(message)
        self.t = t


class CriticalPointError(ValueError):
    """f'(z) vanishes at the intersection point; angles are not preserved there."""

    def __init__(self, message: str, z: complex = complex(math.nan), derivative: complex = 0j):
        super().__init__(message)
        self.z = z
        self.derivative = derivative


class ParametrizationMismatchError(DomainError):
    """Parametrizations that should be common disagree."""

    def __init__(self, message: str, pair: Tuple[int, int] = (0, 0)):
        super().__init__(message)
        self.pair = pair


def normalize_angle(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    r = math.remainder(theta, 2 * math.pi)
    return r + 2 * math.pi if r <= -math.pi else r


def angle_difference(theta2: float, theta1: float) -> float:
    """theta2 - theta1 taken mod 2 pi, in (-pi, pi]."""
    return normalize_angle(theta2 - theta1)


@dataclass(frozen=True, eq=False)
class Arc:
    """
    Parametric arc z(t) for a <= t <= b.

    Without deriv, tangents come from central differences with step
    FD_FRACTION * (b - a), switching to second-order one-sided differences
    within one step of an end. breakpoints lists parameters where the
    tangent may jump (polyline corners).
    """

    eval: Callable[[float], complex]
    a: float
    b: float
    deriv: Optional[Callable[[float], complex]] = None
    name: str = ""
    breakpoints: Tuple[float, ...] = ()

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise DomainError(f"Arc needs finite a < b, got [{self.a}, {self.b}]")

    def __call__(self, t: float) -> complex:
        try:
            z = complex(self.eval(float(t)))
        except (ArithmeticError, ValueError) as e:
            raise EvaluationError(f"{self.label} failed at t={t}: {e}", point=t) from e
        if not cmath.isfinite(z):
            raise EvaluationError(f"{self.label} is not finite at t={t}", point=t)
        return z

    @property
    def label(self) -> str:
        return self.name or "arc"

    @property
    def fd_step(self) -> float:
        return FD_FRACTION * (self.b - self.a)

    def fd_derivative(self, t: float) -> complex:
        h = self.fd_step
        if t - h < self.a:
            return (-3 * self(t) + 4 * self(t + h) - self(t + 2 * h)) / (2 * h)
        if t + h > self.b:
            return (3 * self(t) - 4 * self(t - h) + self(t - 2 * h)) / (2 * h)
        return (self(t + h) - self(t - h)) / (2 * h)

    def derivative(self, t: float) -> complex:
        if self.deriv is not None:
            return complex(self.deriv(float(t)))
        return self.fd_derivative(t)

    def grid(self, count: int = MONOTONE_SAMPLES) -> np.ndarray:
        return np.linspace(self.a, self.b, count)

    def validate(self, samples: int = MONOTONE_SAMPLES) -> 'Arc':
        """
        Sampled checks: finite values, continuity, and agreement of deriv with
        finite differences.

        Raises:
            EvaluationError: non-finite value
            DomainError: apparent jump or derivative mismatch
        """
        coarse = np.array([self(t) for t in self.grid(samples)])
        fine = np.array([self(t) for t in self.grid(2 * samples - 1)])
        jump_coarse = float(np.max(np.abs(np.diff(coarse))))
        jump_fine = float(np.max(np.abs(np.diff(fine))))
        scale = 1.0 + float(np.max(np.abs(fine)))
        # Halving the spacing roughly halves the largest increment of a continuous arc
        if jump_fine > 1e-9 * scale and jump_fine > 0.75 * jump_coarse:
            raise DomainError(f"{self.label} looks discontinuous (largest step {jump_fine:.3g} "
                              f"does not shrink under refinement)")

        if self.deriv is not None:
            guard = 2 * self.fd_step
            for t in self.grid(samples):
                if any(abs(t - bp) <= guard for bp in self.breakpoints):
                    continue
                given, numeric = self.derivative(t), self.fd_derivative(t)
                if abs(given - numeric) > DERIV_MATCH_TOL * max(1.0, abs(numeric)):
                    raise DomainError(f"{self.label}: supplied derivative {given} disagrees with "
                                      f"finite difference {numeric} at t={t}")
        return self

    @classmethod
    def line(cls, x0: float, y0: float, x1: float, y1: float) -> 'Arc':
        """Segment from (x0, y0) to (x1, y1) on t in [0, 1]."""
        z0, z1 = complex(x0, y0), complex(x1, y1)
        return cls(lambda t: z0 + t * (z1 - z0), 0.0, 1.0, deriv=lambda t: z1 - z0,
                   name=f"line {x0:g} {y0:g} {x1:g} {y1:g}")

    @classmethod
    def circle(cls, cx: float, cy: float, r: float, t0: float, t1: float) -> 'Arc':
        """c + r e^{it} for t in [t0, t1]."""
        if r < 0:
            raise DomainError(f"Circle radius must be non-negative, got {r}")
        c = complex(cx, cy)
        return cls(lambda t: c + r * cmath.exp(1j * t), t0, t1, deriv=lambda t: 1j * r * cmath.exp(1j * t),
                   name=f"circle {cx:g} {cy:g} {r:g} {t0:g} {t1:g}")

    @classmethod
    def polyline(cls, coords: Sequence[float]) -> 'Arc':
        """Vertices x0 y0 x1 y1 ...; segment k is traversed for t in [k, k + 1]."""
        if len(coords) < 4 or len(coords) % 2:
            raise DomainError(f"polyline needs an even number (>= 4) of coordinates, got {len(coords)}")
        pts = [complex(x, y) for x, y in zip(coords[0::2], coords[1::2])]
        nseg = len(pts) - 1

        def segment(t):
            return min(max(int(math.floor(t)), 0), nseg - 1)

        def eval_(t):
            k = segment(t)
            return pts[k] + (t - k) * (pts[k + 1] - pts[k])

        def deriv(t):
            k = segment(t)
            return pts[k + 1] - pts[k]

        return cls(eval_, 0.0, float(nseg), deriv=deriv, name="polyline",
                   breakpoints=tuple(float(k) for k in range(1, nseg)))

    @classmethod
    def from_spec(cls, spec: str) -> 'Arc':
        """
        Parse 'line x0 y0 x1 y1', 'circle cx cy r t0 t1' or 'polyline x0 y0 x1 y1 ...'.

        Raises:
            DomainError: unknown kind, wrong number of values or non-numeric value
        """
        parts = spec.split()
        if not parts:
            raise DomainError("Empty arc descriptor")
        kind, args = parts[0].lower(), parts[1:]
        try:
            values = [float(v) for v in args]
        except ValueError:
            raise DomainError(f"Arc descriptor '{spec}' has a non-numeric value") from None
        if not all(math.isfinite(v) for v in values):
            raise DomainError(f"Arc descriptor '{spec}' has a non-finite value")

        if kind == 'line':
            if len(values) != 4:
                raise DomainError(f"line needs 4 values (x0 y0 x1 y1), got {len(values)}")
            return cls.line(*values)
        if kind == 'circle':
            if len(values) != 5:
                raise DomainError(f"circle needs 5 values (cx cy r t0 t1), got {len(values)}")
            return cls.circle(*values)
        if kind == 'polyline':
            return cls.polyline(values)
        raise DomainError(f"Unknown arc kind '{kind}'. Choose from: line, circle, polyline")


@dataclass(frozen=True, eq=False)
class Parametrization:
    """t = psi(tau) for alpha <= tau <= beta, with derivative dpsi."""

    psi: Callable[[float], float]
    dpsi: Callable[[float], float]
    alpha: float
    beta: float
    name: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta) and self.alpha < self.beta):
            raise DomainError(f"Parametrization needs finite alpha < beta, got [{self.alpha}, {self.beta}]")

    def validate_for(self, arc: Arc) -> 'Parametrization':
        """
        Check psi(alpha) = a and psi(beta) = b within ENDPOINT_TOL and that psi is
        strictly increasing on MONOTONE_SAMPLES points.
        """
        start, end = self.psi(self.alpha), self.psi(self.beta)
        if abs(start - arc.a) > ENDPOINT_TOL or abs(end - arc.b) > ENDPOINT_TOL:
            raise DomainError(f"{self.name or 'psi'} maps [{self.alpha}, {self.beta}] onto "
                              f"[{start}, {end}], arc domain is [{arc.a}, {arc.b}]")
        values = np.array([self.psi(tau) for tau in np.linspace(self.alpha, self.beta, MONOTONE_SAMPLES)])
        if not np.all(np.isfinite(values)) or not np.all(np.diff(values) > 0):
            raise DomainError(f"{self.name or 'psi'} is not strictly increasing on [{self.alpha}, {self.beta}]")
        return self

    @classmethod
    def identity(cls, a: float, b: float) -> 'Parametrization':
        return cls(lambda tau: tau, lambda tau: 1.0, a, b, name="identity")

    @classmethod
    def affine(cls, alpha: float, beta: float, a: float, b: float) -> 'Parametrization':
        """Increasing affine map of [alpha, beta] onto [a, b]."""
        k = (b - a) / (beta - alpha)
        return cls(lambda tau: a + k * (tau - alpha), lambda tau: k, alpha, beta, name="affine")

    @classmethod
    def quadratic(cls, a: float, b: float) -> 'Parametrization':
        """psi(tau) = a + (b - a) tau^2 on [0, 1]."""
        return cls(lambda tau: a + (b - a) * tau * tau, lambda tau: 2 * (b - a) * tau, 0.0, 1.0, name="quadratic")

    @classmethod
    def cosine(cls, a: float, b: float) -> 'Parametrization':
        """psi(tau) = a + (b - a)(1 - cos tau) / 2 on [0, pi]."""
        return cls(lambda tau: a + (b - a) * (1 - math.cos(tau)) / 2,
                   lambda tau: (b - a) * math.sin(tau) / 2, 0.0, math.pi, name="cosine")


PARAMETRIZATIONS = {
    'identity': Parametrization.identity,
    'quadratic': Parametrization.quadratic,
    'cosine': Parametrization.cosine,
}


def tangent_angle(arc: Arc, t: float) -> float:
    """
    Inclination angle arg z'(t) in (-pi, pi].

    Raises:
        DomainError: t outside [a, b]
        SingularTangentError: |z'(t)| <= SINGULAR_TANGENT
    """
    slack = 1e-12 * (arc.b - arc.a)
    if not arc.a - slack <= t <= arc.b + slack:
        raise DomainError(f"t={t} is outside [{arc.a}, {arc.b}] of {arc.label}")
    dz = arc.derivative(t)
    if abs(dz) <= SINGULAR_TANGENT:
        raise SingularTangentError(f"{arc.label} has a vanishing tangent at t={t}", t=t)
    return normalize_angle(cmath.phase(dz))


def _image_derivative(f: ComplexMap, arc: Arc, t: float, cfg: FiniteDiffConfig) -> complex:
    """d/dt f(z(t)); f'(z) z'(t) when f has an analytic derivative."""
    z, dz = arc(t), arc.derivative(t)
    if f.derivative is not None:
        return complex(f.derivative(z)) * dz
    if dz == 0:
        return 0j
    du, dv = directional_derivative(f.as_real_map(), [z.real, z.imag], [dz.real, dz.imag], cfg)
    return complex(du, dv)


def _first_crossing(grid: np.ndarray, clearance: Callable[[float], float], limit: float) -> Optional[float]:
    """
    Earliest t where clearance(t) drops to limit, found between grid points.

    Every local minimum of the sampled clearance is refined with a bounded
    scalar minimization over its two neighbouring intervals.
    """
    n = len(grid)
    if n < 2:
        return None
    values = np.array([clearance(t) for t in grid])
    first = None
    for k in range(n):
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n - 1)]
        if values[k] > values[max(k - 1, 0)] or values[k] > values[min(k + 1, n - 1)]:
            continue
        mid = grid[k]
        # Minimize in the offset from mid so the bracket tolerance is not scaled by |t|
        res = optimize.minimize_scalar(lambda s: clearance(mid + s), bounds=(lo - mid, hi - mid),
                                       method='bounded', options={'xatol': 1e-14 * (hi - lo)})
        t_min, value = (mid + res.x, res.fun) if res.fun < values[k] else (mid, values[k])
        if value > limit:
            continue
        t = t_min
        if lo < t_min and clearance(lo) > limit:
            t = optimize.brentq(lambda u: clearance(u) - limit, lo, t_min, xtol=1e-15)
        if first is None or t < first:
            first = t
    return first


def image_arc(f: ComplexMap, arc: Arc, cfg: FiniteDiffConfig = DEFAULT_CONFIG,
              samples: int = MONOTONE_SAMPLES) -> Arc:
    """
    The composed arc t -> f(z(t)).

    Besides the sampled points, the arc's closest approach to each excluded
    point of f (and to the edge of f's disc) is located between samples, so
    an arc that steps over a pole is rejected.

    Raises:
        DomainError: some z(t) lies outside f's domain; the message names the
            first such t
    """
    grid = arc.grid(samples)
    for t in grid:
        if not f.contains(arc(t)):
            raise DomainError(f"{arc.label} leaves the domain of {f.label} at t={t:.12g}")

    crossings = []
    for p in f.excluded:
        t = _first_crossing(grid, lambda t, p=p: abs(arc(t) - p), POLE_CLEARANCE * (1.0 + abs(p)))
        if t is not None:
            crossings.append((t, f"passes through the excluded point {p} of {f.label}"))
    if math.isfinite(f.radius):
        t = _first_crossing(grid, lambda t: f.radius - abs(arc(t) - f.center), 0.0)
        if t is not None:
            crossings.append((t, f"leaves the domain of {f.label}"))
    if crossings:
        t, what = min(crossings)
        raise DomainError(f"{arc.label} {what} at t={t:.12g}")

    return Arc(lambda t: f(arc(t)), arc.a, arc.b,
               deriv=lambda t: _image_derivative(f, arc, t, cfg),
               name=f"{f.label}({arc.label})", breakpoints=arc.breakpoints)


@dataclass
class ImageAngle:
    """Tangent angles of an arc and its image at one parameter value."""
    t: float
    point: complex
    derivative: complex      # f'(z(t))
    source_angle: float      # arg z'(t)
    map_angle: float         # arg f'(z(t))
    image_angle: float       # arg of d/dt f(z(t))
    chain_residual: float    # |image - (map + source)| mod 2 pi
    holomorphic: bool

    @property
    def consistent(self) -> bool:
        return self.chain_residual <= DEFAULT_ANGLE_TOL


def image_tangent_angle(f: ComplexMap, arc: Arc, c: float, cfg: FiniteDiffConfig = DEFAULT_CONFIG) -> ImageAngle:
    """
    Angle of the image arc at c, alongside arg f'(z(c)) + arg z'(c).

    Raises:
        DomainError: z(c) outside f's domain
        CriticalPointError: |f'(z(c))| < CRITICAL_DERIVATIVE
        SingularTangentError: z'(c) vanishes
    """
    z = arc(c)
    source = tangent_angle(arc, c)
    fd = complex_derivative(f, z, cfg)
    if abs(fd.value) < CRITICAL_DERIVATIVE:
        raise CriticalPointError(f"{f.label} has a critical point at z={z} (|f'| = {abs(fd.value):.3g}); "
                                 f"angles are not preserved there", z=z, derivative=fd.value)

    dw = _image_derivative(f, arc, c, cfg)
    if abs(dw) <= SINGULAR_TANGENT:
        raise SingularTangentError(f"Image of {arc.label} has a vanishing tangent at t={c}", t=c)
    map_angle = normalize_angle(cmath.phase(fd.value))
    image = normalize_angle(cmath.phase(dw))
    return ImageAngle(
        t=c,
        point=z,
        derivative=fd.value,
        source_angle=source,
        map_angle=map_angle,
        image_angle=image,
        chain_residual=abs(angle_difference(image, map_angle + source)),
        holomorphic=fd.holomorphic,
    )


@dataclass
class AngleReport2D:
    """Angle from the first arc to the second, before and after the map."""
    point: complex
    theta1: float
    theta2: float
    image_theta1: float
    image_theta2: float
    source_angle: float
    image_angle: float
    discrepancy: float
    tol: float
    holomorphic: bool

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tol


def angle_preservation_check(f: ComplexMap, arc1: Arc, arc2: Arc, c: float,
                             tol: float = DEFAULT_ANGLE_TOL,
                             cfg: FiniteDiffConfig = DEFAULT_CONFIG) -> AngleReport2D:
    """
    Compare theta2 - theta1 at z(c) with the angle between the image arcs.

    Raises:
        DomainError: the arcs do not meet at parameter c
        CriticalPointError: f'(z(c)) vanishes
    """
    z1, z2 = arc1(c), arc2(c)
    if abs(z1 - z2) > INTERSECTION_TOL:
        raise DomainError(f"Arcs do not intersect at c={c}: z1={z1}, z2={z2}")
    first = image_tangent_angle(f, arc1, c, cfg)
    second = image_tangent_angle(f, arc2, c, cfg)
    source = angle_difference(second.source_angle, first.source_angle)
    image = angle_difference(second.image_angle, first.image_angle)
    return AngleReport2D(
        point=z1,
        theta1=first.source_angle,
        theta2=second.source_angle,
        image_theta1=first.image_angle,
        image_theta2=second.image_angle,
        source_angle=source,
        image_angle=image,
        discrepancy=abs(angle_difference(image, source)),
        tol=tol,
        holomorphic=first.holomorphic and second.holomorphic,
    )


def arc_length(arc: Arc, rep: Optional[Parametrization] = None,
               q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """
    Length of arc under the reparametrization rep (identity when omitted).

    Tangent jumps at the arc's breakpoints are handed to the integrator as
    break points in tau.

    Raises:
        DomainError: rep does not map increasingly onto [a, b]
        QuadratureError: integral did not converge
    """
    rep = (rep or Parametrization.identity(arc.a, arc.b)).validate_for(arc)

    def speed(tau):
        t = min(max(rep.psi(tau), arc.a), arc.b)
        return abs(arc.derivative(t)) * rep.dpsi(tau)

    points = []
    for bp in arc.breakpoints:
        points.append(optimize.brentq(lambda tau: rep.psi(tau) - bp, rep.alpha, rep.beta, xtol=1e-14))
    return max(adaptive_quad(speed, rep.alpha, rep.beta, q, points=points), 0.0)


def common_parametrization(reps: Sequence[Parametrization]) -> Parametrization:
    """
    The shared reparametrization of several arcs.

    Reps must have the same tau-domain and agree on COMMON_GRID points within
    ENDPOINT_TOL.

    Raises:
        DomainError: empty list
        ParametrizationMismatchError: names the first pair that disagrees
    """
    if not reps:
        raise DomainError("common_parametrization needs at least one parametrization")
    first = reps[0]
    grid = np.linspace(first.alpha, first.beta, COMMON_GRID)
    reference = np.array([first.psi(tau) for tau in grid])
    for j, other in enumerate(reps[1:], start=1):
        if abs(other.alpha - first.alpha) > ENDPOINT_TOL or abs(other.beta - first.beta) > ENDPOINT_TOL:
            raise ParametrizationMismatchError(
                f"Parametrizations 0 and {j} have different domains "
                f"[{first.alpha}, {first.beta}] vs [{other.alpha}, {other.beta}]", pair=(0, j))
        values = np.array([other.psi(tau) for tau in grid])
        gap = float(np.max(np.abs(values - reference)))
        if gap > ENDPOINT_TOL:
            raise ParametrizationMismatchError(
                f"Parametrizations 0 and {j} differ by {gap:.3g}", pair=(0, j))
    return first


def _map(name: str, fn: Callable[[complex], complex], excluded: Tuple[complex, ...] = ()) -> ComplexMap:
    return ComplexMap(eval=fn, name=name, excluded=excluded)


BUILTIN_MAPS: Dict[str, ComplexMap] = {
    'identity': _map('identity', lambda z: z),
    'square': _map('square', lambda z: z * z),
    'exp': _map('exp', cmath.exp),
    'reciprocal': _map('reciprocal', lambda z: 1 / z, excluded=(0j,)),
    'conjugate': _map('conjugate', lambda z: z.conjugate()),
}


def get_map(name: str) -> ComplexMap:
    """Look up a built-in complex map by name."""
    try:
        return BUILTIN_MAPS[name.strip().lower()]
    except KeyError:
        raise DomainError(f"Unknown map '{name}'. Choose from: {', '.join(BUILTIN_MAPS)}") from None


def arc_lengths(arcs: Sequence[Arc], rep: Optional[Parametrization] = None,
                q: QuadratureConfig = DEFAULT_QUADRATURE) -> List[float]:
    """Lengths of several arcs under one common parametrization."""
    return [arc_length(arc, rep, q) for arc in arcs]
