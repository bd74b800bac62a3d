"""
3D Scene Geometry

A four-point scene: two viewpoints A0 and B0 and two points C0, C1 on an
object, with the third coordinate taken as height. Provides the five
viewing distances, the three view angles, the single-plane feasibility
check, the five per-ray complex-plane embeddings, similarity transforms
and the per-ray arc lengths L(C1) ... L(C5).

Plane ids C1..C5 name the ray planes and are distinct from the point label
C1:

    C1: A0 -> C0    C2: A0 -> C1    C3: A0 -> B0
    C4: B0 -> C0    C5: B0 -> C1

Example usage:
    scene = Scene.from_coords({'A0': (0, 0, 0), 'B0': (0, 0, 1),
                               'C0': (1, 0, 0), 'C1': (0, 1, 0)})
    print(five_distances(scene))
    print(view_angles(scene).alpha)        # pi / 2
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from conformal import Arc, Parametrization, arc_length
from differential import DomainError
from stat_manifold import DEFAULT_QUADRATURE, QuadratureConfig

LABELS = ('A0', 'B0', 'C0', 'C1')
PLANE_IDS = ('C1', 'C2', 'C3', 'C4', 'C5')
PLANE_PAIRS = {
    'C1': ('A0', 'C0'),
    'C2': ('A0', 'C1'),
    'C3': ('A0', 'B0'),
    'C4': ('B0', 'C0'),
    'C5': ('B0', 'C1'),
}
# Distance report field measured along each plane's ray
PLANE_DISTANCE = {'C1': 'a0c0', 'C2': 'a0c1', 'C3': 'b0a0', 'C4': 'b0c0', 'C5': 'b0c1'}
DISTANCE_FIELDS = ('a0c0', 'a0c1', 'b0a0', 'b0c0', 'b0c1')
RAY_EPS = 1e-12
ORTHONORMAL_TOL = 1e-10


class DegenerateRayError(ValueError):
    """A ray pair has coincident endpoints."""

    def __init__(self, message: str, plane_id: str = ""):
        super().__init__(message)
        self.plane_id = plane_id


@dataclass(frozen=True, eq=False)
class ScenePoint:
    label: str
    coords: np.ndarray

    def __post_init__(self):
        if self.label not in LABELS:
            raise DomainError(f"Unknown point label '{self.label}'. Expected one of {', '.join(LABELS)}")
        coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if coords.size != 3 or not np.all(np.isfinite(coords)):
            raise DomainError(f"{self.label} needs 3 finite coordinates, got {coords.tolist()}")
        object.__setattr__(self, 'coords', coords)

    @property
    def height(self) -> float:
        return float(self.coords[2])


@dataclass(frozen=True, eq=False)
class Scene:
    a0: ScenePoint
    b0: ScenePoint
    c0: ScenePoint
    c1: ScenePoint

    def __post_init__(self):
        for label, point in zip(LABELS, self.points):
            if point.label != label:
                raise DomainError(f"Scene slot {label} holds point labelled {point.label}")

    @property
    def points(self) -> Tuple[ScenePoint, ScenePoint, ScenePoint, ScenePoint]:
        return (self.a0, self.b0, self.c0, self.c1)

    def point(self, label: str) -> np.ndarray:
        return self.points[LABELS.index(label)].coords

    @classmethod
    def from_coords(cls, coords: Mapping[str, Sequence[float]]) -> 'Scene':
        missing = [label for label in LABELS if label not in coords]
        if missing:
            raise DomainError(f"Scene is missing point(s): {', '.join(missing)}")
        return cls(*(ScenePoint(label, coords[label]) for label in LABELS))

    def as_dict(self) -> Dict[str, Tuple[float, float, float]]:
        return {p.label: tuple(float(v) for v in p.coords) for p in self.points}


@dataclass
class DistanceReport:
    a0c0: float
    a0c1: float
    b0a0: float
    b0c0: float
    b0c1: float

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in DISTANCE_FIELDS}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in DISTANCE_FIELDS])


@dataclass
class ViewAngleReport:
    """View angles in [0, pi]; an angle is None when one of its rays has zero length."""
    alpha: Optional[float]
    beta1: Optional[float]
    beta2: Optional[float]
    flags: Dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {'alpha': self.alpha, 'beta1': self.beta1, 'beta2': self.beta2}

    @property
    def defined(self) -> bool:
        return not self.flags


@dataclass
class FeasibilityReport:
    feasible: bool
    spread: float
    tol: float
    heights: Dict[str, float]

    @property
    def witness(self) -> bool:
        """True when C0 and C1 differ in height, which alone rules out a common horizontal plane."""
        return self.heights['C0'] != self.heights['C1']


@dataclass
class PlaneEmbedding:
    """Isometric placement of one ray into its own complex plane: P -> 0, Q -> |Q - P|."""
    plane_id: str
    endpoints: Tuple[str, str]
    images: Tuple[complex, complex]

    @property
    def distance(self) -> float:
        return abs(self.images[1] - self.images[0])

    def arc(self) -> Arc:
        """Straight arc z(t) = t * distance for t in [0, 1]."""
        d = self.images[1].real
        return Arc(lambda t: complex(t * d, 0.0), 0.0, 1.0, deriv=lambda t: complex(d, 0.0),
                   name=f"ray {self.plane_id}")


@dataclass
class PlaneAssignment:
    embeddings: Tuple[PlaneEmbedding, ...]

    def __getitem__(self, plane_id: str) -> PlaneEmbedding:
        for emb in self.embeddings:
            if emb.plane_id == plane_id:
                return emb
        raise KeyError(plane_id)

    def arcs(self) -> Dict[str, Arc]:
        return {emb.plane_id: emb.arc() for emb in self.embeddings}


def _distance(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)))


def five_distances(s: Scene) -> DistanceReport:
    """Euclidean distances A0C0, A0C1, B0A0, B0C0, B0C1."""
    return DistanceReport(
        a0c0=_distance(s.a0.coords, s.c0.coords),
        a0c1=_distance(s.a0.coords, s.c1.coords),
        b0a0=_distance(s.b0.coords, s.a0.coords),
        b0c0=_distance(s.b0.coords, s.c0.coords),
        b0c1=_distance(s.b0.coords, s.c1.coords),
    )


def _ray_angle(vertex: ScenePoint, first: ScenePoint, second: ScenePoint) -> Tuple[Optional[float], str]:
    """Unsigned angle at vertex between rays to first and second, or (None, cause)."""
    u = first.coords - vertex.coords
    v = second.coords - vertex.coords
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    for norm, target in ((nu, first), (nv, second)):
        if norm <= RAY_EPS:
            return None, f"ray {vertex.label}{target.label} has zero length"
    cos = float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
    return math.acos(cos), ""


def view_angles(s: Scene) -> ViewAngleReport:
    """
    alpha at A0 between rays A0C1 and A0C0; beta1 at B0 between rays B0C0 and
    B0C1; beta2 at B0 between rays B0A0 and B0C0.
    """
    angles = {
        'alpha': _ray_angle(s.a0, s.c1, s.c0),
        'beta1': _ray_angle(s.b0, s.c0, s.c1),
        'beta2': _ray_angle(s.b0, s.a0, s.c0),
    }
    flags = {name: cause for name, (_, cause) in angles.items() if cause}
    return ViewAngleReport(
        alpha=angles['alpha'][0],
        beta1=angles['beta1'][0],
        beta2=angles['beta2'][0],
        flags=flags,
    )


def single_plane_feasibility(s: Scene, tol: float = 0.0) -> FeasibilityReport:
    """
    Whether all four points fit in one horizontal (constant-height) plane.

    Feasible iff max height - min height <= tol (inclusive).
    """
    if not (math.isfinite(tol) and tol >= 0):
        raise DomainError(f"Height tolerance must be finite and >= 0, got {tol}")
    heights = {p.label: p.height for p in s.points}
    spread = max(heights.values()) - min(heights.values())
    return FeasibilityReport(feasible=spread <= tol, spread=spread, tol=tol, heights=heights)


def plane_embedding(s: Scene, plane_id: str) -> PlaneEmbedding:
    """
    The complex plane of one ray, with P at the origin and Q on the positive real axis.

    Raises:
        DegenerateRayError: the ray's endpoints coincide
        KeyError: unknown plane_id
    """
    p_label, q_label = PLANE_PAIRS[plane_id]
    d = _distance(s.point(p_label), s.point(q_label))
    if d <= RAY_EPS:
        raise DegenerateRayError(f"Plane {plane_id}: {p_label} and {q_label} coincide", plane_id=plane_id)
    return PlaneEmbedding(plane_id, (p_label, q_label), (0j, complex(d, 0.0)))


def plane_assignment(s: Scene) -> PlaneAssignment:
    """
    One complex plane per ray.

    Raises:
        DegenerateRayError: a pair has coincident endpoints; names its plane
    """
    return PlaneAssignment(tuple(plane_embedding(s, plane_id) for plane_id in PLANE_IDS))


def apply_similarity(s: Scene, scale: float = 1.0, rotation=None, translation=None) -> Scene:
    """
    Map every point p -> scale * R p + t.

    Raises:
        DomainError: scale not positive, R not orthonormal within ORTHONORMAL_TOL,
            or wrong shapes
    """
    if not (math.isfinite(scale) and scale > 0):
        raise DomainError(f"Scale must be positive, got {scale}")
    R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
    t = np.zeros(3) if translation is None else np.asarray(translation, dtype=float).reshape(-1)
    if R.shape != (3, 3) or t.shape != (3,):
        raise DomainError(f"Rotation must be 3x3 and translation length 3, got {R.shape} and {t.shape}")
    error = float(np.max(np.abs(R.T @ R - np.eye(3))))
    if error > ORTHONORMAL_TOL:
        raise DomainError(f"Rotation is not orthonormal (max |R^T R - I| = {error:.3g})")
    return Scene(*(ScenePoint(p.label, scale * (R @ p.coords) + t) for p in s.points))


def ray_arc_length(s: Scene, plane_id: str, rep: Optional[Parametrization] = None,
                   q: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """
    L of a single embedded ray.

    Raises:
        DegenerateRayError: the ray's endpoints coincide
    """
    return arc_length(plane_embedding(s, plane_id).arc(), rep, q)


def ray_arc_lengths(s: Scene, reps: Union[None, Parametrization, Sequence[Parametrization]] = None,
                    q: QuadratureConfig = DEFAULT_QUADRATURE) -> Dict[str, float]:
    """
    L(C1) ... L(C5): arc lengths of the embedded rays.

    reps may be None (identity), one parametrization shared by all five
    rays, or five parametrizations in plane order.
    """
    if reps is None or isinstance(reps, Parametrization):
        reps = [reps] * len(PLANE_IDS)
    if len(reps) != len(PLANE_IDS):
        raise DomainError(f"Need {len(PLANE_IDS)} parametrizations, got {len(reps)}")
    return {plane_id: ray_arc_length(s, plane_id, rep, q) for plane_id, rep in zip(PLANE_IDS, reps)}


def distance_ratios(report: DistanceReport) -> Dict[str, float]:
    """The ten ratios between pairs of the five distances."""
    values = report.as_dict()
    ratios = {}
    for first, second in itertools.combinations(DISTANCE_FIELDS, 2):
        if values[second] == 0.0:
            raise DomainError(f"Distance {second} is zero; ratio {first}/{second} is undefined")
        ratios[f"{first}/{second}"] = values[first] / values[second]
    return ratios


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed proper rotation from the QR factorisation of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.normal(size=(3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def scene_rays(s: Scene) -> List[Tuple[str, np.ndarray, np.ndarray]]:
    """(plane id, P, Q) for the five rays."""
    return [(plane_id, s.point(p), s.point(q)) for plane_id, (p, q) in PLANE_PAIRS.items()]
