"""
Statistical Manifolds: Fisher Information and Burbea-Rao Alpha Metrics

Parametric statistical families, their Fisher information matrices (the
Rao quadratic line element) and the Burbea-Rao alpha-order entropy metric
tensors, including the multinomial rank-n tensor.

Discrete supports are summed exactly (the Poisson series is truncated where
the tail mass drops below 1e-12); continuous supports use adaptive
quadrature from scipy.

Example usage:
    fam = get_family('poisson')
    F = fisher_information(fam, ParamPoint([2.0]))
    print(F.entries)               # [[0.5]]
    print(rao_line_element(F, TangentVector([0.1])))
"""

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special, stats

from differential import DEFAULT_CONFIG, DomainError, EvaluationError, FiniteDiffConfig, RealMap, jacobian

# Parameters closer than this to the edge of the valid region are rejected
BOUNDARY_MARGIN = 1e-9
POISSON_TAIL_MASS = 1e-12
SIMPLEX_TOL = 1e-12
SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-8
# Half-width, in scale units, of the central quadrature window
WINDOW_WIDTH = 8.0


class SupportKind:
    """How a family's expectation is computed."""
    DISCRETE = "discrete"      # exact summation
    CONTINUOUS = "continuous"  # adaptive quadrature


class QuadratureError(ValueError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float = math.nan, abserr: float = math.inf):
        super().__init__(message)
        self.achieved = achieved
        self.abserr = abserr


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for sums and integrals over a support."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    # Discrete infinite supports are cut where the remaining mass is below this
    tail_mass: float = POISSON_TAIL_MASS

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError(f"Quadrature tolerances must be positive "
                              f"(abs_tol={self.abs_tol}, rel_tol={self.rel_tol})")
        if self.max_subdivisions < 1:
            raise DomainError(f"max_subdivisions must be >= 1, got {self.max_subdivisions}")
        if not 0 < self.tail_mass < 1:
            raise DomainError(f"tail_mass must be in (0, 1), got {self.tail_mass}")


DEFAULT_QUADRATURE = QuadratureConfig()


def adaptive_quad(func: Callable[[float], float], lower: float, upper: float,
                  q: QuadratureConfig = DEFAULT_QUADRATURE, points: Optional[Sequence[float]] = None) -> float:
    """
    scipy.integrate.quad with the toolkit's tolerances and failure reporting.

    Raises:
        QuadratureError: subdivision limit reached, divergence suspected, or
            an integrand evaluation failed
    """
    kwargs = dict(epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subdivisions, full_output=1)
    if points is not None and math.isfinite(lower) and math.isfinite(upper):
        inner = sorted(p for p in points if lower < p < upper)
        if inner:
            kwargs['points'] = inner
    try:
        result = integrate.quad(func, lower, upper, **kwargs)
    except (EvaluationError, ArithmeticError) as e:
        raise QuadratureError(f"Integrand failed on [{lower}, {upper}]: {e}") from e

    value, abserr = result[0], result[1]
    if len(result) > 3:
        message = str(result[3])
        # A roundoff warning is accepted when the error estimate is still small
        target = max(q.abs_tol, q.rel_tol * abs(value))
        if "roundoff" not in message or not abserr <= 1e4 * target:
            raise QuadratureError(
                f"Quadrature on [{lower}, {upper}] failed: {message.strip()} "
                f"(estimate {value:.6g}, error {abserr:.2g})",
                achieved=value, abserr=abserr,
            )
    if not math.isfinite(value):
        raise QuadratureError(f"Quadrature on [{lower}, {upper}] is not finite", achieved=value)
    return value


@dataclass(frozen=True, eq=False)
class ParamPoint:
    """A population: parameter vector Theta_n = (theta_1, ..., theta_n)."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if theta.size == 0 or not np.all(np.isfinite(theta)):
            raise DomainError(f"Parameter vector must be non-empty and finite, got {theta.tolist()}")
        object.__setattr__(self, 'theta', theta)

    @property
    def dim(self) -> int:
        return self.theta.size

    def perturbed(self, v: 'TangentVector', scale: float = 1.0) -> 'ParamPoint':
        """The neighbouring population Theta_n + Delta."""
        if v.dim != self.dim:
            raise DomainError(f"Tangent vector has {v.dim} components, point has {self.dim}")
        return ParamPoint(self.theta + scale * v.dtheta)

    def __repr__(self) -> str:
        return f"ParamPoint({self.theta.tolist()})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Parameter displacement (d theta_1, ..., d theta_n)."""

    dtheta: np.ndarray

    def __post_init__(self):
        dtheta = np.asarray(self.dtheta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(dtheta)):
            raise DomainError(f"Tangent vector must be finite, got {dtheta.tolist()}")
        object.__setattr__(self, 'dtheta', dtheta)

    @property
    def dim(self) -> int:
        return self.dtheta.size


@dataclass(eq=False)
class MetricTensor:
    """
    Symmetric metric tensor at a parameter point.

    alpha is None for the Fisher information; otherwise it is the order of
    the Burbea-Rao tensor.
    """

    entries: np.ndarray
    alpha: Optional[float] = None
    point: Optional[np.ndarray] = None
    rank: Optional[int] = None

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def kind(self) -> str:
        return "fisher" if self.alpha is None else f"alpha={self.alpha:g}"

    def is_symmetric(self, tol: float = SYMMETRY_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.T)) <= tol)

    @property
    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.entries)))

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return self.min_eigenvalue >= -tol

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.entries))


@dataclass(frozen=True, eq=False)
class ParametricFamily:
    """
    A named statistical family P(x, Theta).

    density(x, theta) and score(x, theta) broadcast over an array of support
    points; score returns one row per parameter with the partials of
    log P. When score is None it is obtained by finite differences of
    log_density, or of log(density) when no log_density is given.
    """

    name: str
    dim: int
    support_kind: str
    density: Callable
    region_error: Callable[[np.ndarray], Optional[str]]
    score: Optional[Callable] = None
    # log P evaluated directly, finite where the density underflows to 0
    log_density: Optional[Callable] = None
    param_names: Tuple[str, ...] = ()
    # Discrete families: support points for a given theta
    support_points: Optional[Callable] = None
    # Continuous families: static interval plus (center, scale) of the mass
    interval: Tuple[float, float] = (-math.inf, math.inf)
    window: Optional[Callable[[np.ndarray], Tuple[float, float]]] = None
    # Analytic Fisher metric, used as a fast path by geodesic solvers
    metric: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # Coordinates in which geodesics are solved (defaults to the family itself)
    chart: Optional[Callable[[], 'ParametricFamily']] = None
    to_chart: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def check(self, p: Union[ParamPoint, Sequence[float]]) -> np.ndarray:
        """Validated parameter vector; raises DomainError outside the region."""
        theta = p.theta if isinstance(p, ParamPoint) else ParamPoint(p).theta
        if theta.size != self.dim:
            raise DomainError(f"{self.name} has {self.dim} parameters, got {theta.size}")
        problem = self.region_error(theta)
        if problem:
            raise DomainError(f"{self.name}: {problem}")
        return theta

    def is_interior(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        return theta.size == self.dim and np.all(np.isfinite(theta)) and not self.region_error(theta)

    def scores(self, x, theta: np.ndarray, fd_cfg: FiniteDiffConfig = DEFAULT_CONFIG) -> np.ndarray:
        """Partials of log P at the support points x, shape (dim, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.score is not None:
            return np.asarray(self.score(x, theta), dtype=float).reshape(self.dim, x.size)

        log_density = self.log_density or (lambda xs, th: np.log(self.density(xs, th)))
        log_p = RealMap(lambda th: log_density(x, th),
                        arity_in=self.dim, arity_out=x.size, name=f"log {self.name}")
        return jacobian(log_p, theta, fd_cfg).entries.T

    def geodesic_chart(self) -> Tuple['ParametricFamily', Callable[[np.ndarray], np.ndarray]]:
        """Family and coordinate map in which geodesics are integrated."""
        if self.chart is None:
            return self, lambda theta: np.asarray(theta, dtype=float)
        return self.chart(), self.to_chart

    def without_score(self) -> 'ParametricFamily':
        """Same family with the score obtained by finite differences."""
        return replace(self, score=None)


def _support_edges(fam: ParametricFamily, theta: np.ndarray) -> List[float]:
    """Support interval split around the bulk of the mass so quad cannot step over it."""
    lower, upper = fam.interval
    breaks = []
    if fam.window is not None:
        center, scale = fam.window(theta)
        breaks = [center - WINDOW_WIDTH * scale, center, center + WINDOW_WIDTH * scale]
    return [lower] + [b for b in breaks if lower < b < upper] + [upper]


def _integrate_pieces(func: Callable[[float], float], edges: Sequence[float], q: QuadratureConfig) -> float:
    return sum(adaptive_quad(func, lo, hi, q) for lo, hi in zip(edges[:-1], edges[1:]))


def _expect(fam: ParametricFamily, theta: np.ndarray, integrand_power: float,
            q: QuadratureConfig, fd_cfg: FiniteDiffConfig) -> np.ndarray:
    """
    Score outer-product moment  sum/integral of P^w (d_i log P)(d_j log P).

    w = 1 gives the Fisher information, w = alpha the Burbea-Rao tensor,
    w = alpha - 2 the multinomial tensor.
    """
    if fam.support_kind == SupportKind.DISCRETE:
        xs = fam.support_points(theta, q)
        weights = np.asarray(fam.density(xs, theta), dtype=float) ** integrand_power
        s = fam.scores(xs, theta, fd_cfg)
        G = (s * weights) @ s.T
        return 0.5 * (G + G.T)

    edges = _support_edges(fam, theta)
    G = np.zeros((fam.dim, fam.dim))
    for i in range(fam.dim):
        for j in range(i, fam.dim):
            def integrand(x, i=i, j=j):
                density = float(fam.density(x, theta))
                if density == 0.0 and integrand_power > 0:
                    return 0.0
                s = fam.scores(x, theta, fd_cfg)[:, 0]
                return density ** integrand_power * s[i] * s[j]
            G[i, j] = _integrate_pieces(integrand, edges, q)
            G[j, i] = G[i, j]
    return G


def total_mass(fam: ParametricFamily, p: ParamPoint, q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Sum or integral of the density over the support (should be 1)."""
    theta = fam.check(p)
    if fam.support_kind == SupportKind.DISCRETE:
        return float(np.sum(fam.density(fam.support_points(theta, q), theta)))
    return _integrate_pieces(lambda x: float(fam.density(x, theta)), _support_edges(fam, theta), q)


def fisher_information(fam: ParametricFamily, p: ParamPoint, q: QuadratureConfig = DEFAULT_QUADRATURE,
                       fd_cfg: FiniteDiffConfig = DEFAULT_CONFIG) -> MetricTensor:
    """
    Fisher information F_ij = E[(d_i log P)(d_j log P)] at p.

    Raises:
        DomainError: p outside (or within BOUNDARY_MARGIN of) the valid region
        QuadratureError: a continuous expectation did not converge
    """
    theta = fam.check(p)
    return MetricTensor(entries=_expect(fam, theta, 1.0, q, fd_cfg), alpha=None, point=theta)


def burbea_rao_tensor(fam: ParametricFamily, p: ParamPoint, alpha: float,
                      q: QuadratureConfig = DEFAULT_QUADRATURE,
                      fd_cfg: FiniteDiffConfig = DEFAULT_CONFIG) -> MetricTensor:
    """
    Burbea-Rao alpha-order entropy metric G_ij = integral of P^alpha (d_i log P)(d_j log P).

    alpha = 1 reproduces the Fisher information.
    """
    if not math.isfinite(alpha):
        raise DomainError(f"alpha must be finite, got {alpha}")
    theta = fam.check(p)
    return MetricTensor(entries=_expect(fam, theta, alpha, q, fd_cfg), alpha=alpha, point=theta)


def multinomial_alpha_tensor(probs: Union[ParamPoint, Sequence[float]], alpha: float) -> MetricTensor:
    """
    Multinomial alpha tensor G_ij = sum over outcomes of P^(alpha-2) (d_i log P)(d_j log P).

    The sum runs over the n outcomes with all n probabilities as coordinates.
    The numerical rank is attached to the result.

    Raises:
        DomainError: a probability is not strictly positive or the vector does
            not sum to 1 within SIMPLEX_TOL
    """
    theta = probs.theta if isinstance(probs, ParamPoint) else ParamPoint(probs).theta
    if np.any(theta <= 0):
        raise DomainError(f"Multinomial probabilities must be strictly positive, got {theta.tolist()}")
    if abs(theta.sum() - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"Multinomial probabilities must sum to 1, got {theta.sum()!r}")
    fam = multinomial(theta.size)
    G = _expect(fam, theta, alpha - 2.0, DEFAULT_QUADRATURE, DEFAULT_CONFIG)
    return MetricTensor(entries=G, alpha=alpha, point=theta, rank=tensor_rank(G))


def tensor_rank(M: Union[MetricTensor, np.ndarray], tol: float = 1e-10) -> int:
    """Number of singular values above tol times the largest one."""
    entries = M.entries if isinstance(M, MetricTensor) else np.asarray(M, dtype=float)
    sv = np.linalg.svd(entries, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def rao_line_element(F: MetricTensor, v: TangentVector) -> float:
    """Quadratic form sum_ij F_ij dtheta_i dtheta_j."""
    v = v if isinstance(v, TangentVector) else TangentVector(v)
    if v.dim != F.dim:
        raise DomainError(f"Tangent vector has {v.dim} components, metric is {F.dim}x{F.dim}")
    return float(v.dtheta @ F.entries @ v.dtheta)


# The alpha-order line element is the same quadratic form on a Burbea-Rao tensor
alpha_line_element = rao_line_element


# ----------------------------------------------------------------------------
# Built-in families
# ----------------------------------------------------------------------------

def _open_interval_error(value: float, lower: float, upper: float, label: str) -> Optional[str]:
    if lower + BOUNDARY_MARGIN < value < upper - BOUNDARY_MARGIN:
        return None
    return f"{label}={value!r} must lie inside ({lower:g}, {upper:g})"


@lru_cache(maxsize=None)
def bernoulli() -> ParametricFamily:
    return ParametricFamily(
        name='bernoulli',
        dim=1,
        support_kind=SupportKind.DISCRETE,
        density=lambda x, th: th[0] ** x * (1 - th[0]) ** (1 - x),
        score=lambda x, th: [x / th[0] - (1 - x) / (1 - th[0])],
        log_density=lambda x, th: stats.bernoulli.logpmf(x, th[0]),
        region_error=lambda th: _open_interval_error(th[0], 0.0, 1.0, 'p'),
        param_names=('p',),
        support_points=lambda th, q: np.array([0.0, 1.0]),
    )


def _poisson_support(theta: np.ndarray, q: QuadratureConfig) -> np.ndarray:
    lam = theta[0]
    k = np.arange(0, int(lam + 20 * math.sqrt(lam) + 60), dtype=float)
    tail = special.pdtrc(k, lam)  # P(X > k)
    below = np.nonzero(tail < q.tail_mass)[0]
    last = below[0] if below.size else k.size - 1
    return k[:last + 1]


@lru_cache(maxsize=None)
def poisson() -> ParametricFamily:
    return ParametricFamily(
        name='poisson',
        dim=1,
        support_kind=SupportKind.DISCRETE,
        density=lambda x, th: np.exp(x * np.log(th[0]) - th[0] - special.gammaln(x + 1)),
        score=lambda x, th: [x / th[0] - 1.0],
        log_density=lambda x, th: stats.poisson.logpmf(x, th[0]),
        region_error=lambda th: _open_interval_error(th[0], 0.0, math.inf, 'lambda'),
        param_names=('lambda',),
        support_points=_poisson_support,
    )


def _normal_region_error(theta: np.ndarray) -> Optional[str]:
    return _open_interval_error(theta[1], 0.0, math.inf, 'sigma')


@lru_cache(maxsize=None)
def normal() -> ParametricFamily:
    def density(x, th):
        mu, sigma = th
        return np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))

    def score(x, th):
        mu, sigma = th
        return [(x - mu) / sigma ** 2, ((x - mu) ** 2 - sigma ** 2) / sigma ** 3]

    return ParametricFamily(
        name='normal',
        dim=2,
        support_kind=SupportKind.CONTINUOUS,
        density=density,
        score=score,
        log_density=lambda x, th: stats.norm.logpdf(x, loc=th[0], scale=th[1]),
        region_error=_normal_region_error,
        param_names=('mu', 'sigma'),
        window=lambda th: (th[0], th[1]),
        metric=lambda th: np.diag([1.0 / th[1] ** 2, 2.0 / th[1] ** 2]),
    )


def _simplex_error(probs: np.ndarray) -> Optional[str]:
    if np.any(probs <= BOUNDARY_MARGIN):
        return f"probabilities {probs.tolist()} must be strictly positive"
    if abs(probs.sum() - 1.0) > SIMPLEX_TOL:
        return f"probabilities must sum to 1, got {probs.sum()!r}"
    return None


@lru_cache(maxsize=None)
def multinomial(n: int) -> ParametricFamily:
    """Single-draw multinomial on outcomes {0, ..., n-1}, all n probabilities as coordinates."""
    if n < 2:
        raise DomainError(f"multinomial needs at least 2 outcomes, got {n}")

    def density(x, th):
        return th[np.asarray(x, dtype=int)]

    def score(x, th):
        k = np.asarray(x, dtype=int)
        return [(k == i) / th[i] for i in range(n)]

    return ParametricFamily(
        name='multinomial',
        dim=n,
        support_kind=SupportKind.DISCRETE,
        density=density,
        score=score,
        region_error=_simplex_error,
        param_names=tuple(f"p{i + 1}" for i in range(n)),
        support_points=lambda th, q: np.arange(n, dtype=float),
        chart=lambda: multinomial_reduced(n),
        to_chart=lambda th: np.asarray(th, dtype=float)[:-1],
    )


@lru_cache(maxsize=None)
def multinomial_reduced(n: int) -> ParametricFamily:
    """Multinomial with the last probability eliminated: theta = (p_1, ..., p_{n-1})."""
    if n < 2:
        raise DomainError(f"multinomial needs at least 2 outcomes, got {n}")

    def full(th):
        return np.append(th, 1.0 - np.sum(th))

    def density(x, th):
        return full(th)[np.asarray(x, dtype=int)]

    def score(x, th):
        k = np.asarray(x, dtype=int)
        last = 1.0 - np.sum(th)
        return [(k == i) / th[i] - (k == n - 1) / last for i in range(n - 1)]

    def region_error(th):
        probs = full(th)
        if np.any(probs <= BOUNDARY_MARGIN):
            return f"probabilities {probs.tolist()} must be strictly positive"
        return None

    return ParametricFamily(
        name='multinomial_reduced',
        dim=n - 1,
        support_kind=SupportKind.DISCRETE,
        density=density,
        score=score,
        region_error=region_error,
        param_names=tuple(f"p{i + 1}" for i in range(n - 1)),
        support_points=lambda th, q: np.arange(n, dtype=float),
    )


FAMILY_NAMES = ('bernoulli', 'poisson', 'normal', 'multinomial', 'multinomial_reduced')


def get_family(name: str, dim: Optional[int] = None) -> ParametricFamily:
    """
    Look up a built-in family.

    Args:
        name: One of FAMILY_NAMES
        dim: Parameter count; required for the multinomial families (it fixes
            the number of outcomes) and checked for the others

    Raises:
        DomainError: unknown name or inconsistent dimension
    """
    name = name.strip().lower()
    if name == 'multinomial':
        if dim is None:
            raise DomainError("multinomial needs the number of outcomes")
        return multinomial(dim)
    if name == 'multinomial_reduced':
        if dim is None:
            raise DomainError("multinomial_reduced needs the number of free parameters")
        return multinomial_reduced(dim + 1)

    factories = {'bernoulli': bernoulli, 'poisson': poisson, 'normal': normal}
    if name not in factories:
        raise DomainError(f"Unknown family '{name}'. Choose from: {', '.join(FAMILY_NAMES)}")
    fam = factories[name]()
    if dim is not None and dim != fam.dim:
        raise DomainError(f"{name} has {fam.dim} parameter(s), got {dim}")
    return fam
