"""
Rao Distance Solver

Geodesics of the Fisher information metric: Christoffel symbols from
central differences of the metric, fixed-step RK4 integration of the
geodesic equation, and a shooting solver for the two-point problem.
Scalar families also get a direct line-element integral that serves as an
independent check on the shooting result.

Distances are the raw line-element integral in natural units; no factor
of 2 or 1/2 is applied.

Example usage:
    fam = get_family('poisson')
    d = rao_distance(fam, ParamPoint([1.0]), ParamPoint([4.0]))
    print(d)                       # ~2.0
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from differential import DomainError, EvaluationError, FiniteDiffConfig, RealMap, jacobian
from stat_manifold import (
    DEFAULT_QUADRATURE,
    ParametricFamily,
    ParamPoint,
    QuadratureConfig,
    TangentVector,
    adaptive_quad,
    fisher_information,
)

MAX_CONDITION = 1e12
# Initial velocities tried, as multiples of the straight chord
START_SCALES = (1.0, 0.5, 2.0, 0.25)
MIN_BACKTRACK = 1.0 / 64


class SingularMetricError(ValueError):
    """Metric is not invertible (or too badly conditioned) at a point."""

    def __init__(self, message: str, condition: float = math.inf):
        super().__init__(message)
        self.condition = condition


class BoundaryExitError(ValueError):
    """Geodesic integration left the family's valid region."""

    def __init__(self, message: str, point=None, fraction: float = 0.0):
        super().__init__(message)
        self.point = point
        self.fraction = fraction


class ShootingError(ValueError):
    """Shooting did not hit the target endpoint."""

    def __init__(self, message: str, best_residual: float = math.inf):
        super().__init__(message)
        self.best_residual = best_residual


@dataclass(frozen=True)
class SolverConfig:
    """Geodesic integration and shooting settings."""

    ode_steps: int = 128
    shoot_tol: float = 1e-8
    max_shoot_iters: int = 50
    # None selects 1e-4 * (1 + |theta|)
    fd_step_metric: Optional[float] = None
    quadrature: QuadratureConfig = DEFAULT_QUADRATURE

    def __post_init__(self):
        if self.ode_steps < 16:
            raise DomainError(f"ode_steps must be >= 16, got {self.ode_steps}")
        if not self.shoot_tol > 0:
            raise DomainError(f"shoot_tol must be positive, got {self.shoot_tol}")
        if self.max_shoot_iters < 1:
            raise DomainError(f"max_shoot_iters must be >= 1, got {self.max_shoot_iters}")
        if self.fd_step_metric is not None and not self.fd_step_metric > 0:
            raise DomainError(f"fd_step_metric must be positive, got {self.fd_step_metric}")

    def metric_step(self, theta: np.ndarray) -> float:
        if self.fd_step_metric is not None:
            return self.fd_step_metric
        return 1e-4 * (1.0 + float(np.linalg.norm(theta)))


DEFAULT_SOLVER = SolverConfig()


def create_solver(ode_steps: int = 128, shoot_tol: float = 1e-8, max_shoot_iters: int = 50,
                  fd_step_metric: Optional[float] = None) -> SolverConfig:
    """Convenience factory for SolverConfig."""
    return SolverConfig(ode_steps=ode_steps, shoot_tol=shoot_tol,
                        max_shoot_iters=max_shoot_iters, fd_step_metric=fd_step_metric)


@dataclass(frozen=True)
class EuclideanMetricField:
    """Flat metric scale * I on all of R^n."""

    dim: int
    scale: float = 1.0
    name: str = "euclidean"

    def metric(self, theta) -> np.ndarray:
        return self.scale * np.eye(self.dim)

    def is_interior(self, theta) -> bool:
        return bool(np.all(np.isfinite(theta)))


@dataclass(frozen=True, eq=False)
class FisherMetricField:
    """Fisher information of a family as a metric field on its parameter region."""

    family: ParametricFamily
    quadrature: QuadratureConfig = DEFAULT_QUADRATURE

    @property
    def dim(self) -> int:
        return self.family.dim

    @property
    def name(self) -> str:
        return self.family.name

    def metric(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if self.family.metric is not None:
            self.family.check(theta)
            return np.asarray(self.family.metric(theta), dtype=float)
        return fisher_information(self.family, ParamPoint(theta), self.quadrature).entries

    def is_interior(self, theta) -> bool:
        return self.family.is_interior(theta)


MetricField = Union[EuclideanMetricField, FisherMetricField]


def _as_field(fam, cfg: SolverConfig) -> MetricField:
    if isinstance(fam, ParametricFamily):
        return FisherMetricField(fam, cfg.quadrature)
    return fam


def _theta(p) -> np.ndarray:
    return p.theta if isinstance(p, ParamPoint) else ParamPoint(p).theta


def _christoffel_and_metric(metric_field: MetricField, theta: np.ndarray, cfg: SolverConfig):
    n = metric_field.dim
    G = metric_field.metric(theta)
    condition = float(np.linalg.cond(G))
    if not math.isfinite(condition) or condition > MAX_CONDITION:
        raise SingularMetricError(
            f"{metric_field.name} metric is singular at {theta.tolist()} (condition {condition:.3g})",
            condition=condition,
        )
    G_inv = np.linalg.inv(G)

    flat = RealMap(lambda th: metric_field.metric(th).ravel(), arity_in=n, arity_out=n * n,
                   name=f"{metric_field.name} metric")
    # dG[i, j, l] = d_l G_ij
    dG = jacobian(flat, theta, FiniteDiffConfig(step=cfg.metric_step(theta))).entries.reshape(n, n, n)

    # term[l, i, j] = d_i G_lj + d_j G_li - d_l G_ij
    term = np.transpose(dG, (0, 2, 1)) + dG - np.transpose(dG, (2, 0, 1))
    gamma = 0.5 * np.einsum('kl,lij->kij', G_inv, term)
    return 0.5 * (gamma + np.transpose(gamma, (0, 2, 1))), G


def christoffel(fam, p, cfg: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
    """
    Christoffel symbols Gamma[k, i, j] of the Fisher metric (or of a metric field) at p.

    Raises:
        SingularMetricError: metric condition number above MAX_CONDITION
        EvaluationError: a metric stencil point left the valid region
    """
    metric_field = _as_field(fam, cfg)
    gamma, _ = _christoffel_and_metric(metric_field, _theta(p), cfg)
    return gamma


@dataclass(eq=False)
class GeodesicPath:
    """Sampled geodesic with its accumulated length."""

    points: List[ParamPoint]
    velocities: List[TangentVector]
    times: np.ndarray
    speeds: np.ndarray
    length: float

    @property
    def start(self) -> np.ndarray:
        return self.points[0].theta

    @property
    def end(self) -> np.ndarray:
        return self.points[-1].theta

    @property
    def speed_variation(self) -> float:
        """(max - min) / mean of the speed; 0 for a stationary path."""
        mean = float(np.mean(self.speeds))
        if mean == 0.0:
            return 0.0
        return float((np.max(self.speeds) - np.min(self.speeds)) / mean)


def _speed(G: np.ndarray, v: np.ndarray) -> float:
    return math.sqrt(max(float(v @ G @ v), 0.0))


def geodesic_shoot(fam, p0, v0, arc_time: float = 1.0, cfg: SolverConfig = DEFAULT_SOLVER) -> GeodesicPath:
    """
    Integrate theta'' + Gamma(theta)(theta', theta') = 0 from p0 with velocity v0.

    Uses cfg.ode_steps fixed RK4 steps over [0, arc_time]; every stage point
    must stay inside the valid region.

    Raises:
        BoundaryExitError: a stage left the region; carries the offending point
            and the completed fraction of arc_time
        SingularMetricError: metric not invertible along the way
    """
    metric_field = _as_field(fam, cfg)
    theta = _theta(p0)
    v = v0.dtheta if isinstance(v0, TangentVector) else TangentVector(v0).dtheta
    if v.size != theta.size or theta.size != metric_field.dim:
        raise DomainError(f"Point, velocity and metric dimensions differ "
                          f"({theta.size}, {v.size}, {metric_field.dim})")
    if not arc_time > 0:
        raise DomainError(f"arc_time must be positive, got {arc_time}")
    if not metric_field.is_interior(theta):
        raise DomainError(f"Start point {theta.tolist()} is not interior to {metric_field.name}")

    steps = cfg.ode_steps
    h = arc_time / steps

    def accel(th, vel, fraction):
        if not metric_field.is_interior(th):
            raise BoundaryExitError(f"Geodesic left the {metric_field.name} region at {th.tolist()}",
                                    point=th, fraction=fraction)
        try:
            gamma, G = _christoffel_and_metric(metric_field, th, cfg)
        except (DomainError, EvaluationError) as e:
            raise BoundaryExitError(f"Geodesic reached the {metric_field.name} boundary near "
                                    f"{th.tolist()}: {e}", point=th, fraction=fraction) from e
        return -np.einsum('kij,i,j->k', gamma, vel, vel), G

    points = [ParamPoint(theta)]
    velocities = [TangentVector(v)]
    speeds = []
    for n in range(steps):
        fraction = n / steps
        a1, G = accel(theta, v, fraction)
        speeds.append(_speed(G, v))
        k1x, k1v = v, a1
        k2x, k2v = v + 0.5 * h * k1v, accel(theta + 0.5 * h * k1x, v + 0.5 * h * k1v, fraction)[0]
        k3x, k3v = v + 0.5 * h * k2v, accel(theta + 0.5 * h * k2x, v + 0.5 * h * k2v, fraction)[0]
        k4x, k4v = v + h * k3v, accel(theta + h * k3x, v + h * k3v, fraction)[0]
        theta = theta + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        points.append(ParamPoint(theta))
        velocities.append(TangentVector(v))

    if not metric_field.is_interior(theta):
        raise BoundaryExitError(f"Geodesic ended outside the {metric_field.name} region at {theta.tolist()}",
                                point=theta, fraction=1.0)
    speeds.append(_speed(metric_field.metric(theta), v))

    times = np.linspace(0.0, arc_time, steps + 1)
    speeds = np.asarray(speeds)
    length = float(integrate.simpson(speeds, x=times))
    return GeodesicPath(points=points, velocities=velocities, times=times, speeds=speeds, length=max(length, 0.0))


@dataclass(eq=False)
class ShootingResult:
    """Outcome of the two-point shooting solve, in the family's geodesic chart."""

    length: float
    path: Optional[GeodesicPath]
    velocity: np.ndarray
    iterations: int
    residual: float
    starts: int = 0
    chart: str = ""


_SHOOT_FAILURES = (BoundaryExitError, SingularMetricError, DomainError, EvaluationError)


def _newton_from(shoot, target: np.ndarray, v: np.ndarray, cfg: SolverConfig):
    """Newton iteration on the initial velocity; returns (path, v, iterations, best residual)."""
    path = shoot(v)
    r = path.end - target
    res = float(np.linalg.norm(r))
    endpoint = RealMap(lambda vel: shoot(vel).end, arity_in=v.size, arity_out=v.size, name="geodesic endpoint")

    iterations = 0
    while iterations < cfg.max_shoot_iters and res > cfg.shoot_tol:
        iterations += 1
        try:
            J = jacobian(endpoint, v).entries
            step = np.linalg.solve(J, -r)
        except (EvaluationError, np.linalg.LinAlgError):
            break

        lam = 1.0
        improved = False
        while lam >= MIN_BACKTRACK:
            trial = v + lam * step
            try:
                trial_path = shoot(trial)
            except _SHOOT_FAILURES:
                lam *= 0.5
                continue
            trial_r = trial_path.end - target
            trial_res = float(np.linalg.norm(trial_r))
            if trial_res < res:
                path, v, r, res = trial_path, trial, trial_r, trial_res
                improved = True
                break
            lam *= 0.5
        if not improved:
            break

    return path, v, iterations, res


def solve_geodesic(fam: ParametricFamily, a, b, cfg: SolverConfig = DEFAULT_SOLVER) -> ShootingResult:
    """
    Shooting solve of the geodesic from a to b over unit time.

    Multinomial families are solved in their reduced chart. Starts from the
    straight chord velocity and retries with the scales in START_SCALES when a
    start exits the region or stalls.

    Raises:
        DomainError: a or b outside the valid region
        ShootingError: no start converged within cfg.max_shoot_iters
    """
    theta_a, theta_b = fam.check(a), fam.check(b)
    chart_fam, to_chart = fam.geodesic_chart()
    x_a, x_b = to_chart(theta_a), to_chart(theta_b)
    if np.array_equal(theta_a, theta_b):
        return ShootingResult(length=0.0, path=None, velocity=np.zeros_like(x_a), iterations=0,
                              residual=0.0, chart=chart_fam.name)

    metric_field = FisherMetricField(chart_fam, cfg.quadrature)

    def shoot(vel):
        return geodesic_shoot(metric_field, x_a, vel, 1.0, cfg)

    chord = x_b - x_a
    best = math.inf
    for attempt, scale in enumerate(START_SCALES, start=1):
        try:
            path, v, iterations, res = _newton_from(shoot, x_b, scale * chord, cfg)
        except _SHOOT_FAILURES:
            continue
        best = min(best, res)
        if res <= cfg.shoot_tol:
            return ShootingResult(length=path.length, path=path, velocity=v, iterations=iterations,
                                  residual=res, starts=attempt, chart=chart_fam.name)

    raise ShootingError(
        f"Shooting from {theta_a.tolist()} to {theta_b.tolist()} on {fam.name} did not converge "
        f"(best residual {best:.3g})",
        best_residual=best,
    )


def rao_distance(fam: ParametricFamily, a, b, cfg: SolverConfig = DEFAULT_SOLVER) -> float:
    """Rao distance between populations a and b (length of the shooting geodesic)."""
    return solve_geodesic(fam, a, b, cfg).length


def rao_distance_1d(fam: ParametricFamily, a, b, q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """
    |integral from a to b of sqrt(F(theta)) d theta| for a one-parameter family.

    Multinomial families with two outcomes are integrated in their reduced chart.

    Raises:
        DomainError: the family (or its chart) has more than one parameter
        QuadratureError: the integrand is not integrable on the range
    """
    theta_a, theta_b = fam.check(a), fam.check(b)
    chart_fam, to_chart = fam.geodesic_chart()
    if chart_fam.dim != 1:
        raise DomainError(f"{fam.name} has {chart_fam.dim} free parameters; the line integral needs 1")
    lo, hi = sorted((float(to_chart(theta_a)[0]), float(to_chart(theta_b)[0])))
    if lo == hi:
        return 0.0

    def sqrt_fisher(t):
        F = fisher_information(chart_fam, ParamPoint([t]), q).entries[0, 0]
        if not F > 0:
            raise DomainError(f"Fisher information of {chart_fam.name} vanishes at {t}")
        return math.sqrt(F)

    return abs(adaptive_quad(sqrt_fisher, lo, hi, q))


def closed_form_distance(fam: ParametricFamily, a, b) -> float:
    """
    Closed-form Rao distance for the built-in families.

    Bernoulli and multinomial use 2 arccos of the Bhattacharyya coefficient,
    Poisson 2|sqrt(l2) - sqrt(l1)|, and the univariate normal the scaled
    hyperbolic half-plane distance.

    Raises:
        DomainError: no closed form for this family
    """
    theta_a, theta_b = fam.check(a), fam.check(b)
    name = fam.name
    if name == 'poisson':
        return 2.0 * abs(math.sqrt(theta_b[0]) - math.sqrt(theta_a[0]))
    if name == 'normal':
        (mu1, s1), (mu2, s2) = theta_a, theta_b
        arg = 1.0 + ((mu1 - mu2) ** 2 / 2.0 + (s1 - s2) ** 2) / (2.0 * s1 * s2)
        return math.sqrt(2.0) * math.acosh(arg)

    if name == 'bernoulli':
        p, q = np.array([theta_a[0], 1 - theta_a[0]]), np.array([theta_b[0], 1 - theta_b[0]])
    elif name == 'multinomial':
        p, q = theta_a, theta_b
    elif name == 'multinomial_reduced':
        p, q = np.append(theta_a, 1 - theta_a.sum()), np.append(theta_b, 1 - theta_b.sum())
    else:
        raise DomainError(f"No closed-form Rao distance for family '{name}'")
    bc = float(np.clip(np.sum(np.sqrt(p * q)), -1.0, 1.0))
    return 2.0 * math.acos(bc)


def rao_distance_matrix(fam: ParametricFamily, points: Sequence, cfg: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
    """Symmetric matrix of pairwise Rao distances with a zero diagonal."""
    thetas = [fam.check(p) for p in points]
    n = len(thetas)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = rao_distance(fam, thetas[i], thetas[j], cfg)
    return D
