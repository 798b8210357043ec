"""Test functions, star sets and closed-form transform oracles.

A ``ScalarField`` is a vectorized evaluator tagged with the domain it lives on:

* Euclidean(n): points of shape (N, n)
* AffineGrassmannian(n, j): a ``PlaneBatch`` of j-planes
* Sphere(n): unit vectors of shape (N, n) on S^{n−1}
* Grassmannian(n, r): frames of shape (N, n, r)
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, FrozenSet, Mapping, Optional, Union

import numpy as np

from errors import DomainError, QuadratureError
from grassmann_geometry import (AffineMap, AffinePlane, OrthonormalFrame, PlaneBatch, apply_affine_batch,
                                lift_batch, unlift_batch, uniform_sphere)
from logger import GetLogger
from special_constants import ball_volume, sphere_area
from streams import RandomStream

logger = GetLogger()(name=__name__)


class DomainKind(Enum):
    EUCLIDEAN = 'Euclidean'
    AFFINE_GRASSMANNIAN = 'AffineGrassmannian'
    SPHERE = 'Sphere'
    GRASSMANNIAN = 'Grassmannian'


@dataclass(frozen=True)
class FieldDomain:
    kind: DomainKind
    n: int
    rank: int = 0

    @classmethod
    def euclidean(cls, n: int) -> 'FieldDomain':
        return cls(DomainKind.EUCLIDEAN, n)

    @classmethod
    def affine_grassmannian(cls, n: int, j: int) -> 'FieldDomain':
        return cls(DomainKind.AFFINE_GRASSMANNIAN, n, j)

    @classmethod
    def sphere(cls, n: int) -> 'FieldDomain':
        """S^{n−1} ⊂ ℝⁿ."""
        return cls(DomainKind.SPHERE, n, 1)

    @classmethod
    def grassmannian(cls, n: int, rank: int) -> 'FieldDomain':
        return cls(DomainKind.GRASSMANNIAN, n, rank)

    def __str__(self):
        if self.kind is DomainKind.EUCLIDEAN:
            return f"R^{self.n}"
        if self.kind is DomainKind.SPHERE:
            return f"S^{self.n - 1}"
        if self.kind is DomainKind.AFFINE_GRASSMANNIAN:
            return f"A_{{{self.n},{self.rank}}}"
        return f"G_{{{self.n},{self.rank}}}"


@dataclass(frozen=True)
class FieldMetadata:
    decay_exponent: Optional[float] = None
    support_radius: Optional[float] = None
    closed_form_transforms: FrozenSet[str] = frozenset()
    sup_on_plane: Optional[Callable[[PlaneBatch], np.ndarray]] = None
    family: str = 'generic'
    params: Mapping[str, object] = field(default_factory=dict)
    # f = profile(|x|²) when set
    radial_profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # |φ| ≲ cos^e d near the equator of the pole e_n
    equator_order: float = 0.0
    indicator: bool = False


@dataclass(frozen=True, eq=False)
class ScalarField:
    domain: FieldDomain
    evaluator: Callable
    metadata: FieldMetadata = field(default_factory=FieldMetadata)
    name: str = 'field'

    def __call__(self, points) -> np.ndarray:
        values = np.asarray(self.evaluator(points), dtype=float)
        if not np.all(np.isfinite(values)):
            raise QuadratureError(f"field {self.name} returned non-finite values")
        return values

    def combine(self, a: float, other: 'ScalarField', b: float) -> 'ScalarField':
        """a·self + b·other on the common domain."""
        if other.domain != self.domain:
            raise DomainError("fields on the same domain")
        decays = [d for d in (self.metadata.decay_exponent, other.metadata.decay_exponent) if d is not None]
        supports = [s for s in (self.metadata.support_radius, other.metadata.support_radius) if s is not None]
        metadata = FieldMetadata(
            decay_exponent=min(decays) if len(decays) == 2 else None,
            support_radius=max(supports) if len(supports) == 2 else None,
            equator_order=min(self.metadata.equator_order, other.metadata.equator_order))
        return ScalarField(self.domain, lambda x: a * self.evaluator(x) + b * other.evaluator(x),
                           metadata, f"{a:g}*{self.name}+{b:g}*{other.name}")

    def scaled(self, factor: float) -> 'ScalarField':
        return ScalarField(self.domain, lambda x: factor * self.evaluator(x),
                           replace(self.metadata, closed_form_transforms=frozenset(), family='generic',
                                   sup_on_plane=None, indicator=False),
                           f"{factor:g}*{self.name}")


# Ellipsoids and star sets

@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """The body {x : xᵀAx ≤ 1}."""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError("square matrix A")
        if not np.allclose(matrix, matrix.T, atol=1e-12):
            raise DomainError("symmetric matrix A")
        if np.min(np.linalg.eigvalsh(matrix)) <= 0:
            raise DomainError("positive-definite matrix A")
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def ball(cls, n: int, radius: float = 1.0) -> 'Ellipsoid':
        return cls(np.eye(n) / radius ** 2)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def max_radius(self) -> float:
        return float(1.0 / math.sqrt(np.min(np.linalg.eigvalsh(self.matrix))))

    def volume(self) -> float:
        return ball_volume(self.dim) / math.sqrt(np.linalg.det(self.matrix))

    def radial(self, theta: np.ndarray) -> np.ndarray:
        return np.einsum('ni,ij,nj->n', theta, self.matrix, theta) ** -0.5

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.einsum('ni,ij,nj->n', points, self.matrix, points) <= 1.0


class StarKind(Enum):
    BALL = 'Ball'
    ELLIPSOID = 'Ellipsoid'
    EQUATORIAL_BUMP = 'EquatorialBump'
    RANDOM_SMOOTH = 'RandomSmooth'


@dataclass(frozen=True, eq=False)
class StarSet:
    dim: int
    kind: StarKind
    params: Mapping[str, object]
    radial_fn: Callable[[np.ndarray], np.ndarray]
    max_radius: float
    scale: float = 1.0

    def radial(self, theta: np.ndarray) -> np.ndarray:
        return self.scale * self.radial_fn(np.asarray(theta, dtype=float))

    def scaled(self, factor: float) -> 'StarSet':
        if factor <= 0:
            raise DomainError("scale λ > 0")
        return replace(self, scale=self.scale * factor, max_radius=self.max_radius * factor)

    @property
    def equator_order(self) -> float:
        return float(self.params['gamma']) if self.kind is StarKind.EQUATORIAL_BUMP else 0.0

    @property
    def ellipsoid(self) -> Optional[Ellipsoid]:
        if self.kind is StarKind.BALL:
            return Ellipsoid.ball(self.dim, float(self.params['radius']) * self.scale)
        if self.kind is StarKind.ELLIPSOID:
            return Ellipsoid(np.asarray(self.params['matrix']) / self.scale ** 2)
        return None

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        radii = np.linalg.norm(points, axis=-1)
        theta = points / np.where(radii > 0, radii, 1.0)[:, None]
        theta[radii == 0] = np.eye(self.dim)[-1]
        return (radii == 0) | (radii <= self.radial(theta))

    def describe(self) -> dict:
        params = {key: (np.asarray(value).tolist() if isinstance(value, np.ndarray) else value)
                  for key, value in self.params.items()}
        return {'kind': self.kind.value, 'dim': self.dim, 'scale': self.scale, **params}


def random_smooth_coefficients(dim: int, seed: int, terms: int = 4, amplitude: float = 0.3):
    """Seeded (a_i, v_i) for ρ(θ) = exp(Σ a_i⟨θ, v_i⟩)."""
    rng = RandomStream(seed, 'random_smooth').generator()
    directions = uniform_sphere(rng, terms, dim)
    return amplitude * rng.standard_normal(terms), directions


class StarSetFactory:
    """Build star sets from a kind tag and numeric parameters."""

    def __call__(self, kind: Union[StarKind, str], params: Mapping[str, object] = None,
                 dim: int = None) -> StarSet:
        kind = StarKind(kind) if not isinstance(kind, StarKind) else kind
        params = dict(params or {})
        dim = int(params.pop('dim', dim) or 0)
        if dim < 1:
            raise DomainError("dimension n ≥ 1 for a star set")
        builder = getattr(self, f"_{kind.name.lower()}")
        return builder(dim, params)

    @staticmethod
    def _ball(dim, params):
        radius = float(params.get('radius', 1.0))
        if radius <= 0:
            raise DomainError("ball radius r > 0")
        return StarSet(dim, StarKind.BALL, {'radius': radius},
                       lambda theta: np.full(theta.shape[0], radius), radius)

    @staticmethod
    def _ellipsoid(dim, params):
        body = Ellipsoid(np.asarray(params['matrix'], dtype=float))
        if body.dim != dim:
            raise DomainError("ellipsoid matrix of size n×n")
        return StarSet(dim, StarKind.ELLIPSOID, {'matrix': body.matrix}, body.radial, body.max_radius)

    @staticmethod
    def _equatorial_bump(dim, params):
        gamma = float(params['gamma'])
        if gamma <= 0:
            raise DomainError("γ > 0", f"γ={gamma}")
        return StarSet(dim, StarKind.EQUATORIAL_BUMP, {'gamma': gamma},
                       lambda theta: np.abs(theta[:, -1]) ** gamma, 1.0)

    @staticmethod
    def _random_smooth(dim, params):
        seed = int(params.get('seed', 0))
        terms = int(params.get('terms', 4))
        amplitude = float(params.get('amplitude', 0.3))
        coefficients, directions = random_smooth_coefficients(dim, seed, terms, amplitude)

        def radial(theta):
            return np.exp(theta @ directions.T @ coefficients)

        bound = float(np.exp(np.sum(np.abs(coefficients))))
        return StarSet(dim, StarKind.RANDOM_SMOOTH,
                       {'seed': seed, 'terms': terms, 'amplitude': amplitude}, radial, bound)


make_star_set = StarSetFactory()


# Euclidean fields

def _squared_norms(x: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(x) ** 2, axis=-1)


def gaussian(n: int) -> ScalarField:
    """e^{−|x|²}."""
    return ScalarField(
        FieldDomain.euclidean(n), lambda x: np.exp(-_squared_norms(x)),
        FieldMetadata(decay_exponent=math.inf, closed_form_transforms=frozenset({'kplane'}),
                      family='gaussian', radial_profile=lambda s: np.exp(-s),
                      sup_on_plane=lambda planes: np.exp(-planes.squared_distances())),
        'gaussian')


def make_extremizer(n: int, k: int, transform: AffineMap = None) -> ScalarField:
    """f(x) = (1+|Mx|²)^{−(k+1)/2}."""
    if not 0 < k < n:
        raise DomainError("0 < k < n", f"n={n}, k={k}")
    power = -0.5 * (k + 1)
    if transform is None or transform.is_identity:
        return ScalarField(
            FieldDomain.euclidean(n), lambda x: (1.0 + _squared_norms(x)) ** power,
            FieldMetadata(decay_exponent=k + 1.0, closed_form_transforms=frozenset({'kplane'}),
                          family='extremizer', params={'k': k},
                          radial_profile=lambda s: (1.0 + s) ** power,
                          sup_on_plane=lambda planes: (1.0 + planes.squared_distances()) ** power),
            'extremizer')
    if transform.dim != n:
        raise DomainError("affine map on ℝⁿ")
    return ScalarField(
        FieldDomain.euclidean(n), lambda x: (1.0 + _squared_norms(transform(x))) ** power,
        FieldMetadata(decay_exponent=k + 1.0, family='extremizer', params={'k': k}),
        'extremizer[M]')


def ball_indicator(n: int, radius: float = 1.0) -> ScalarField:
    return ellipsoid_indicator(Ellipsoid.ball(n, radius), family='ball', radius=radius)


def ellipsoid_indicator(body: Ellipsoid, family: str = 'ellipsoid', **params) -> ScalarField:
    return ScalarField(
        FieldDomain.euclidean(body.dim), lambda x: body.contains(np.asarray(x)).astype(float),
        FieldMetadata(support_radius=body.max_radius, closed_form_transforms=frozenset({'kplane'}),
                      family=family, params={'body': body, **params}, indicator=True),
        f"indicator[{family}]")


def star_indicator(star: StarSet) -> ScalarField:
    metadata = FieldMetadata(support_radius=star.max_radius, family='star', params={'star': star},
                             indicator=True)
    body = star.ellipsoid
    if body is not None:
        metadata = replace(metadata, closed_form_transforms=frozenset({'kplane'}),
                           family='ellipsoid', params={'body': body, 'star': star})
    return ScalarField(FieldDomain.euclidean(star.dim), lambda x: star.contains(x).astype(float),
                       metadata, f"indicator[{star.kind.value}]")


def _gauge(star: StarSet, x: np.ndarray) -> np.ndarray:
    """|x|/ρ_L(x/|x|), 0 at the origin."""
    x = np.asarray(x, dtype=float)
    radii = np.linalg.norm(x, axis=-1)
    theta = x / np.where(radii > 0, radii, 1.0)[:, None]
    theta[radii == 0] = np.eye(star.dim)[-1]
    return radii / star.radial(theta)


def star_gaussian(star: StarSet) -> ScalarField:
    """exp(−(|x|/ρ_L(x̂))²) for a star set with positive radial function."""
    return ScalarField(FieldDomain.euclidean(star.dim), lambda x: np.exp(-_gauge(star, x) ** 2),
                       FieldMetadata(decay_exponent=math.inf, family='star_gaussian'),
                       f"star_gaussian[{star.kind.value}]")


def star_power(star: StarSet) -> ScalarField:
    """(1+(|x|/ρ_L(x̂))²)^{−(n+1)/2}."""
    power = -0.5 * (star.dim + 1)
    return ScalarField(FieldDomain.euclidean(star.dim), lambda x: (1.0 + _gauge(star, x) ** 2) ** power,
                       FieldMetadata(decay_exponent=star.dim + 1.0, family='star_power'),
                       f"star_power[{star.kind.value}]")


# Fields on affine Grassmannians

def plane_gaussian(n: int, j: int) -> ScalarField:
    return ScalarField(
        FieldDomain.affine_grassmannian(n, j), lambda planes: np.exp(-planes.squared_distances()),
        FieldMetadata(decay_exponent=math.inf, family='plane_gaussian', radial_profile=lambda s: np.exp(-s)),
        'plane_gaussian')


def plane_extremizer(n: int, j: int, k: int, transform: AffineMap = None) -> ScalarField:
    """(1+|Mζ|²)^{−(k+1)/2} on A_{n,j}, where |Mζ| is the distance of the image plane M(ζ)."""
    if not 0 <= j < k < n:
        raise DomainError("0 ≤ j < k < n", f"n={n}, j={j}, k={k}")
    power = -0.5 * (k + 1)
    if transform is None or transform.is_identity:
        return ScalarField(
            FieldDomain.affine_grassmannian(n, j),
            lambda planes: (1.0 + planes.squared_distances()) ** power,
            FieldMetadata(decay_exponent=k + 1.0, closed_form_transforms=frozenset({'jk'}),
                          family='plane_extremizer', params={'k': k},
                          radial_profile=lambda s: (1.0 + s) ** power),
            'plane_extremizer')
    return ScalarField(
        FieldDomain.affine_grassmannian(n, j),
        lambda planes: (1.0 + apply_affine_batch(transform, planes).squared_distances()) ** power,
        FieldMetadata(decay_exponent=k + 1.0, family='plane_extremizer', params={'k': k}),
        'plane_extremizer[M]')


def evaluate_on_planes(f: ScalarField, planes: PlaneBatch) -> np.ndarray:
    """Evaluate a field on j-planes; Euclidean fields are accepted for j = 0."""
    if f.domain.kind is DomainKind.EUCLIDEAN and planes.dim == 0:
        return f(planes.offsets)
    if f.domain.kind is not DomainKind.AFFINE_GRASSMANNIAN or f.domain.rank != planes.dim:
        raise DomainError(f"field on A_{{n,{planes.dim}}}", f"got {f.domain}")
    return f(planes)


# Fields on spheres and compact Grassmannians

def constant_sphere(n: int, value: float = 1.0) -> ScalarField:
    return ScalarField(FieldDomain.sphere(n), lambda theta: np.full(np.shape(theta)[0], float(value)),
                       FieldMetadata(family='constant', params={'value': value}), 'constant')


def coordinate_power(n: int, index: int, exponent: float) -> ScalarField:
    """θ ↦ θ_index^exponent (integer exponents keep the sign)."""
    order = float(exponent) if index in (n - 1, -1) else 0.0
    return ScalarField(FieldDomain.sphere(n), lambda theta: np.asarray(theta)[:, index] ** exponent,
                       FieldMetadata(family='coordinate_power', equator_order=order),
                       f"theta[{index}]^{exponent}")


def radial_power(star: StarSet, m: float) -> ScalarField:
    """θ ↦ ρ_L(θ)^m."""
    return ScalarField(FieldDomain.sphere(star.dim), lambda theta: star.radial(theta) ** m,
                       FieldMetadata(family='radial_power', equator_order=star.equator_order * m,
                                     params={'star': star, 'm': m}),
                       f"rho[{star.kind.value}]^{m:g}")


def random_smooth_sphere(n: int, seed: int, terms: int = 4, amplitude: float = 0.3) -> ScalarField:
    star = make_star_set(StarKind.RANDOM_SMOOTH, {'seed': seed, 'terms': terms, 'amplitude': amplitude}, dim=n)
    return replace(radial_power(star, 1.0), name=f"random_smooth[{seed}]")


def lines_from_sphere(phi: ScalarField) -> ScalarField:
    """A sphere field seen on G_{n,1}: the even part evaluated at either unit vector."""
    if phi.domain.kind is not DomainKind.SPHERE:
        raise DomainError("field on the sphere")

    def evaluate(frames):
        theta = np.asarray(frames)[:, :, 0]
        return 0.5 * (phi(theta) + phi(-theta))

    return ScalarField(FieldDomain.grassmannian(phi.domain.n, 1), evaluate,
                       replace(phi.metadata, closed_form_transforms=frozenset()), f"lines[{phi.name}]")


def pullback_to_sphere(f: ScalarField, j: int, k: int) -> ScalarField:
    """Λ_j ρ₁^{−1} f on G_{n+1,j+1}: ζ₀ ↦ f(unlift ζ₀)·(1+|ζ|²)^{(k+1)/2}.

    Rows on the exceptional set evaluate to 0 (a null set of the Haar measure)."""
    n = f.domain.n
    power = 0.5 * (k + 1)

    def evaluate(frames):
        planes, valid = unlift_batch(np.asarray(frames))
        values = evaluate_on_planes(f, planes) * (1.0 + planes.squared_distances()) ** power
        if not valid.all():
            logger.debug(f"{np.count_nonzero(~valid)} frames on the exceptional set dropped")
        return np.where(valid, values, 0.0)

    return ScalarField(FieldDomain.grassmannian(n + 1, j + 1), evaluate,
                       FieldMetadata(family='pullback', params={'j': j, 'k': k}), f"pullback[{f.name}]")


def pushforward_to_plane(g: ScalarField, k: int) -> ScalarField:
    """ρ₁ Λ_j^{−1} g on A_{n,j}: ζ ↦ (1+|ζ|²)^{−(k+1)/2} g(lift ζ)."""
    if g.domain.kind is not DomainKind.GRASSMANNIAN:
        raise DomainError("field on a compact Grassmannian")
    n, j = g.domain.n - 1, g.domain.rank - 1
    power = -0.5 * (k + 1)

    def evaluate(planes):
        return (1.0 + planes.squared_distances()) ** power * g(lift_batch(planes.directions, planes.offsets))

    return ScalarField(FieldDomain.affine_grassmannian(n, j), evaluate,
                       FieldMetadata(decay_exponent=k + 1.0, family='pushforward'), f"pushforward[{g.name}]")


# Oracles

def ellipsoid_section_volume(body: Ellipsoid, frame: OrthonormalFrame) -> float:
    """V_k(E ∩ τ₀) = b_k/√det(QᵀAQ)."""
    q = frame.columns
    return ball_volume(frame.rank) / math.sqrt(np.linalg.det(q.T @ body.matrix @ q))


def central_section_volumes(body: Ellipsoid, frames: np.ndarray) -> np.ndarray:
    gram = np.einsum('nik,ij,njl->nkl', frames, body.matrix, frames)
    return ball_volume(frames.shape[-1]) / np.sqrt(np.linalg.det(gram))


def affine_section_volumes(body: Ellipsoid, directions: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """V_k(E ∩ τ) for planes (directions, offsets): b_k(1−m)_+^{k/2}/√det B with
    B = QᵀAQ and m the minimum of xᵀAx over the plane."""
    k = directions.shape[-1]
    base = np.einsum('ni,ij,nj->n', offsets, body.matrix, offsets)
    if k == 0:
        return (base <= 1.0).astype(float)
    gram = np.einsum('nik,ij,njl->nkl', directions, body.matrix, directions)
    cross = np.einsum('nik,ij,nj->nk', directions, body.matrix, offsets)
    solved = np.linalg.solve(gram, cross[:, :, None])[:, :, 0]
    minimum = base - np.sum(cross * solved, axis=-1)
    return ball_volume(k) * np.clip(1.0 - minimum, 0.0, None) ** (0.5 * k) / np.sqrt(np.linalg.det(gram))


def _as_batch(planes: Union[AffinePlane, PlaneBatch]) -> PlaneBatch:
    if isinstance(planes, AffinePlane):
        return PlaneBatch(planes.columns[None], planes.offset[None])
    return planes


def oracle_kplane_batch(f: ScalarField, planes: PlaneBatch) -> np.ndarray:
    if 'kplane' not in f.metadata.closed_form_transforms:
        raise DomainError("a field with a closed-form k-plane transform", f.name)
    k = planes.dim
    distance2 = planes.squared_distances()
    family = f.metadata.family
    if family == 'gaussian':
        return math.pi ** (0.5 * k) * np.exp(-distance2)
    if family in ('ball', 'ellipsoid'):
        return affine_section_volumes(f.metadata.params['body'], planes.directions, planes.offsets)
    if family == 'extremizer':
        if f.metadata.params['k'] != k:
            raise DomainError("extremizer built for the same k", f"{f.metadata.params['k']} vs {k}")
        return 0.5 * sphere_area(k) / np.sqrt(1.0 + distance2)
    raise DomainError("a known closed-form family", family)


def oracle_kplane(f: ScalarField, plane: Union[AffinePlane, PlaneBatch]):
    """Exact (R_k f)(τ) for Gaussian, ball/ellipsoid indicators and the extremizer."""
    values = oracle_kplane_batch(f, _as_batch(plane))
    return float(values[0]) if isinstance(plane, AffinePlane) else values


def oracle_jk_extremizer(n: int, j: int, k: int, plane: Union[AffinePlane, PlaneBatch]):
    """(R_{j,k} f₀)(τ) = (σ_k/σ_j)(1+|τ|²)^{−(j+1)/2}."""
    if not 0 <= j < k < n:
        raise DomainError("0 ≤ j < k < n", f"n={n}, j={j}, k={k}")
    batch = _as_batch(plane)
    values = sphere_area(k) / sphere_area(j) * (1.0 + batch.squared_distances()) ** (-0.5 * (j + 1))
    return float(values[0]) if isinstance(plane, AffinePlane) else values
