"""Linear and affine Grassmannians: frames, planes, Haar and importance
sampling, geodesic distance to a pole and the stereographic lift.

Single objects (``OrthonormalFrame``, ``AffinePlane``) validate their
invariants; the batched helpers work on raw arrays of shape (N, n, k) for
directions and (N, n) for offsets and are what the integrators use.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import special

from errors import DegenerateSampleError, DomainError, ExceptionalSetError, IntegrabilityError
from logger import GetLogger
from special_constants import log_sphere_area
from streams import RandomSource, as_generator

logger = GetLogger()(name=__name__)

FRAME_TOL = 1e-10
SIGN_TOL = 1e-12
EXCEPTIONAL_TOL = 1e-12
MAX_RETRIES = 8
MAX_CONDITION = 1e12


def fix_signs(frames: np.ndarray) -> np.ndarray:
    """Make the first entry of each column with |x| > 1e−12 positive."""
    if frames.shape[-1] == 0:
        return frames
    mask = np.abs(frames) > SIGN_TOL
    first = np.argmax(mask, axis=-2)
    lead = np.take_along_axis(frames, first[..., None, :], axis=-2)
    return frames * np.where(lead < 0, -1.0, 1.0)


def orthonormalize(vectors: np.ndarray, signs: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """Modified Gram–Schmidt with one re-orthogonalization sweep.

    ``vectors`` has shape (..., n, k). Returns the frames and a boolean mask
    that is False where the input was numerically rank deficient."""
    q = np.array(vectors, dtype=float, copy=True)
    ok = np.ones(q.shape[:-2], dtype=bool)
    for col in range(q.shape[-1]):
        v = q[..., :, col]
        scale = np.maximum(np.linalg.norm(v, axis=-1), 1.0)
        for _ in range(2):
            for prev in range(col):
                basis = q[..., :, prev]
                v = v - np.sum(basis * v, axis=-1, keepdims=True) * basis
        norm = np.linalg.norm(v, axis=-1)
        ok &= norm > SIGN_TOL * scale
        q[..., :, col] = v / np.where(norm > 0, norm, 1.0)[..., None]
    return (fix_signs(q) if signs else q), ok


def complement_basis(units: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of unit vectors (N, k) -> (N, k, k−1),
    taken from the Householder reflection sending e₁ to ±unit."""
    k = units.shape[-1]
    sign = np.where(units[:, 0] < 0, -1.0, 1.0)
    v = units.copy()
    v[:, 0] += sign
    vv = np.sum(v * v, axis=-1)
    householder = np.eye(k)[None, :, :] - 2.0 * v[:, :, None] * v[:, None, :] / vv[:, None, None]
    return householder[:, :, 1:]


@dataclass(frozen=True)
class OrthonormalFrame:
    """k orthonormal columns in ℝⁿ; equality of spans goes through projectors."""
    columns: np.ndarray

    def __post_init__(self):
        columns = np.array(self.columns, dtype=float)
        if columns.ndim == 1:
            columns = columns[:, None]
        n, k = columns.shape
        if not 1 <= k <= n:
            raise DomainError("1 ≤ k ≤ n", f"frame of shape {columns.shape}")
        if not np.allclose(columns.T @ columns, np.eye(k), atol=FRAME_TOL, rtol=0):
            raise DomainError("orthonormal columns (frame-gram = I)")
        columns.setflags(write=False)
        object.__setattr__(self, 'columns', columns)

    @classmethod
    def from_vectors(cls, vectors: np.ndarray) -> 'OrthonormalFrame':
        vectors = np.asarray(vectors, dtype=float)
        if vectors.ndim == 1:
            vectors = vectors[:, None]
        frame, ok = orthonormalize(vectors)
        if not ok:
            raise DomainError("linearly independent vectors")
        return cls(frame)

    @property
    def ambient_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.T

    def gram(self) -> np.ndarray:
        return self.columns.T @ self.columns

    def same_subspace(self, other: 'OrthonormalFrame', tol: float = FRAME_TOL) -> bool:
        return np.allclose(self.projector(), other.projector(), atol=tol, rtol=0)


@dataclass(frozen=True)
class AffinePlane:
    """τ = (ξ, u) with u ⊥ ξ. A 0-plane is a point: ``direction`` is None
    and ``offset`` is the point itself."""
    direction: Optional[OrthonormalFrame]
    offset: np.ndarray

    def __post_init__(self):
        offset = np.array(self.offset, dtype=float).ravel()
        if self.direction is None:
            if offset.size < 1:
                raise DomainError("a point with at least one coordinate")
        elif offset.shape != (self.direction.ambient_dim,):
            raise DomainError("offset in the ambient space of the direction")
        leak = self.columns.T @ offset
        if leak.size and np.max(np.abs(leak)) > FRAME_TOL * max(1.0, np.linalg.norm(offset)):
            raise DomainError("offset orthogonal to the direction")
        offset.setflags(write=False)
        object.__setattr__(self, 'offset', offset)

    @classmethod
    def point(cls, x: np.ndarray) -> 'AffinePlane':
        return cls(None, x)

    @property
    def columns(self) -> np.ndarray:
        """Direction columns, shape (n, k); (n, 0) for a point."""
        if self.direction is None:
            return np.zeros((np.size(self.offset), 0))
        return self.direction.columns

    @classmethod
    def through(cls, direction: OrthonormalFrame, point: np.ndarray) -> 'AffinePlane':
        """The plane with direction ξ passing through ``point``."""
        point = np.asarray(point, dtype=float)
        columns = direction.columns
        return cls(direction, point - columns @ (columns.T @ point))

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.offset.size

    def points(self, coords: np.ndarray) -> np.ndarray:
        """Points u + ξ s for coordinates ``coords`` of shape (N, k)."""
        return self.offset + np.asarray(coords) @ self.columns.T


@dataclass(frozen=True)
class WeightedSample:
    plane: AffinePlane
    importance_weight: float

    def __post_init__(self):
        if not (np.isfinite(self.importance_weight) and self.importance_weight >= 0):
            raise DomainError("finite non-negative importance weight")


@dataclass(frozen=True)
class PlaneBatch:
    """N planes of common dimension: directions (N, n, k), offsets (N, n)."""
    directions: np.ndarray
    offsets: np.ndarray

    def __len__(self) -> int:
        return self.offsets.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.offsets.shape[1]

    @property
    def dim(self) -> int:
        return self.directions.shape[2]

    @classmethod
    def from_planes(cls, planes) -> 'PlaneBatch':
        planes = list(planes)
        return cls(np.stack([p.columns for p in planes]), np.stack([p.offset for p in planes]))

    def plane(self, index: int) -> AffinePlane:
        if self.dim == 0:
            return AffinePlane.point(self.offsets[index])
        return AffinePlane(OrthonormalFrame(self.directions[index]), self.offsets[index])

    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.offsets, axis=-1)

    def squared_distances(self) -> np.ndarray:
        return np.sum(self.offsets ** 2, axis=-1)

    def take(self, index) -> 'PlaneBatch':
        return PlaneBatch(self.directions[index], self.offsets[index])


@dataclass(frozen=True)
class WeightedPlaneBatch:
    planes: PlaneBatch
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.planes)


@dataclass(frozen=True)
class AffineMap:
    """x ↦ A x + t with A invertible."""
    matrix: np.ndarray
    translation: Optional[np.ndarray] = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError("square matrix")
        if not np.isfinite(np.linalg.cond(matrix)) or np.linalg.cond(matrix) >= MAX_CONDITION:
            raise DomainError("invertible matrix (condition number < 1e12)")
        translation = (np.zeros(matrix.shape[0]) if self.translation is None
                       else np.array(self.translation, dtype=float).ravel())
        if translation.shape != (matrix.shape[0],):
            raise DomainError("translation of matching dimension")
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'translation', translation)

    @classmethod
    def identity(cls, n: int) -> 'AffineMap':
        return cls(np.eye(n))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_identity(self) -> bool:
        return np.array_equal(self.matrix, np.eye(self.dim)) and not np.any(self.translation)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.matrix.T + self.translation


# Sampling

def uniform_sphere(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((size, dim))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def haar_frames(rng: np.random.Generator, size: int, n: int, k: int, signs: bool = True) -> np.ndarray:
    """(size, n, k) frames with Haar-distributed spans. Without the sign
    convention the frames themselves are Haar distributed on the Stiefel manifold."""
    frames, ok = orthonormalize(rng.standard_normal((size, n, k)), signs=signs)
    for attempt in range(MAX_RETRIES):
        if ok.all():
            return frames
        bad = np.flatnonzero(~ok)
        logger.debug(f"redrawing {bad.size} rank-deficient frames (attempt {attempt + 1})")
        frames[bad], ok[bad] = orthonormalize(rng.standard_normal((bad.size, n, k)), signs=signs)
    if not ok.all():
        raise DegenerateSampleError(f"rank-deficient draws persisted after {MAX_RETRIES} retries")
    return frames


def haar_subspace(n: int, k: int, stream: RandomSource) -> OrthonormalFrame:
    """A Haar-distributed k-subspace of ℝⁿ as a sign-normalized frame."""
    if not 1 <= k <= n:
        raise DomainError("1 ≤ k ≤ n", f"n={n}, k={k}")
    return OrthonormalFrame(haar_frames(as_generator(stream), 1, n, k)[0])


def radial_offsets(rng: np.random.Generator, size: int, dim: int, alpha: float,
                   beta: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Vectors in ℝ^dim with density ∝ |u|^β(1+|u|²)^{−α/2} and weights 1/density."""
    if dim == 0:
        return np.zeros((size, 0)), np.ones(size)
    a, b = 0.5 * (dim + beta), 0.5 * (alpha - dim - beta)
    if a <= 0:
        raise IntegrabilityError(f"origin exponent β > −{dim}", f"β={beta}")
    if b <= 0:
        raise DomainError(f"radial exponent α > {dim + beta:g}", f"α={alpha}")
    x = np.clip(rng.beta(a, b, size), 1e-300, 1.0 - 2.0 ** -52)
    t = x / (1.0 - x)
    directions = uniform_sphere(rng, size, dim)
    log_norm = log_sphere_area(dim - 1) + special.betaln(a, b) - math.log(2.0)
    log_weights = log_norm - 0.5 * beta * np.log(t) + 0.5 * alpha * np.log1p(t)
    return directions * np.sqrt(t)[:, None], np.exp(log_weights)


def ball_offsets(rng: np.random.Generator, size: int, dim: int, radius: float,
                 beta: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Vectors in the ball |u| ≤ radius of ℝ^dim with density ∝ |u|^β and weights 1/density."""
    if dim == 0:
        return np.zeros((size, 0)), np.ones(size)
    power = dim + beta
    if power <= 0:
        raise IntegrabilityError(f"origin exponent β > −{dim}", f"β={beta}")
    r = radius * np.clip(rng.random(size), 1e-300, None) ** (1.0 / power)
    directions = uniform_sphere(rng, size, dim)
    log_norm = log_sphere_area(dim - 1) + power * math.log(radius) - math.log(power)
    return directions * r[:, None], np.exp(log_norm - beta * np.log(r))


def sample_affine_planes(rng: np.random.Generator, size: int, n: int, k: int,
                         radial_exponent: float = None, origin_exponent: float = 0.0,
                         support_radius: float = None) -> WeightedPlaneBatch:
    """Planes τ ∈ A_{n,k} with weights so that mean(g·w) estimates ∫ g dτ.

    With ``support_radius`` the offsets stay in the ball |u| ≤ R, for
    integrands vanishing on planes farther than R from the origin."""
    if not 1 <= k < n:
        raise DomainError("1 ≤ k < n", f"n={n}, k={k}")
    alpha = n + 1.0 if radial_exponent is None else float(radial_exponent)
    if support_radius is None and alpha <= n - k + origin_exponent:
        raise DomainError(f"α > n − k{'' if not origin_exponent else ' + β'}",
                          f"α={alpha}, n={n}, k={k}")
    rotations = haar_frames(rng, size, n, n, signs=False)
    directions = fix_signs(rotations[:, :, :k])
    if support_radius is not None:
        coefficients, weights = ball_offsets(rng, size, n - k, support_radius, origin_exponent)
    else:
        coefficients, weights = radial_offsets(rng, size, n - k, alpha, origin_exponent)
    offsets = np.einsum('nij,nj->ni', rotations[:, :, k:], coefficients)
    return WeightedPlaneBatch(PlaneBatch(directions, offsets), weights)


def sample_affine_plane(n: int, k: int, radial_exponent: float, stream: RandomSource) -> WeightedSample:
    batch = sample_affine_planes(as_generator(stream), 1, n, k, radial_exponent)
    return WeightedSample(batch.planes.plane(0), float(batch.weights[0]))


def plane_distance(plane: AffinePlane) -> float:
    """|τ| = |u|, valid because u ⊥ ξ."""
    return float(np.linalg.norm(plane.offset))


def sample_subplanes(rng: np.random.Generator, directions: np.ndarray, offsets: np.ndarray, j: int,
                     radial_exponent: float = None, origin_exponent: float = 0.0) -> WeightedPlaneBatch:
    """j-planes inside the k-planes (directions, offsets): η Haar in ξ, w in ξ ⊖ η."""
    size, n, k = directions.shape
    if not 0 <= j < k:
        raise DomainError("0 ≤ j < k", f"j={j}, k={k}")
    alpha = k + 1.0 if radial_exponent is None else float(radial_exponent)
    rotations = haar_frames(rng, size, k, k, signs=False)
    inner = np.einsum('nij,njl->nil', directions, rotations)
    coefficients, weights = radial_offsets(rng, size, k - j, alpha, origin_exponent)
    shifts = np.einsum('nij,nj->ni', inner[:, :, j:], coefficients)
    return WeightedPlaneBatch(PlaneBatch(fix_signs(inner[:, :, :j]), offsets + shifts), weights)


def sample_subplane(plane: AffinePlane, j: int, radial_exponent: float, stream: RandomSource) -> WeightedSample:
    """Single weighted j-plane of τ; for j = 0 a weighted point of τ."""
    batch = sample_subplanes(as_generator(stream), plane.columns[None],
                             plane.offset[None], j, radial_exponent)
    return WeightedSample(batch.planes.plane(0), float(batch.weights[0]))


def subsphere_points(rng: np.random.Generator, frames: np.ndarray) -> np.ndarray:
    """One uniform point on the unit sphere of each span: (N, m, r) -> (N, m)."""
    size, _, rank = frames.shape
    return np.einsum('nij,nj->ni', frames, uniform_sphere(rng, size, rank))


def sample_subsphere(frame: OrthonormalFrame, stream: RandomSource) -> np.ndarray:
    return subsphere_points(as_generator(stream), frame.columns[None])[0]


def sample_pole_adapted(rng: np.random.Generator, size: int, n: int, k: int,
                        cos_shift: float = 0.0, sin_shift: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Haar k-subspaces of ℝⁿ, importance sampled in the distance d to the pole e_n.

    Under Haar measure cos²d ~ Beta(k/2, (n−k)/2). Drawing it from
    Beta(k/2 + cos_shift/2, (n−k)/2 + sin_shift/2) instead gives weights
    proportional to cos^{−cos_shift}d · sin^{−sin_shift}d, which cancel singular
    pole weights. The subspace is span(p) ⊕ W with p = √c e_n + √(1−c) v and
    W Haar in span(e_n, v)^⊥."""
    if not 1 <= k < n:
        raise DomainError("1 ≤ k < n", f"n={n}, k={k}")
    a0, b0 = 0.5 * k, 0.5 * (n - k)
    a, b = a0 + 0.5 * cos_shift, b0 + 0.5 * sin_shift
    if a <= 0:
        raise IntegrabilityError(f"cos-exponent > −{k}", f"exponent {cos_shift:g}")
    if b <= 0:
        raise IntegrabilityError(f"sin-exponent > −{n - k}", f"exponent {sin_shift:g}")
    c = np.clip(rng.beta(a, b, size), 1e-300, 1.0 - 2.0 ** -52)
    basis = haar_frames(rng, size, n - 1, k, signs=False)
    frames = np.zeros((size, n, k))
    frames[:, :n - 1, 0] = np.sqrt(1.0 - c)[:, None] * basis[:, :, 0]
    frames[:, n - 1, 0] = np.sqrt(c)
    frames[:, :n - 1, 1:] = basis[:, :, 1:]
    log_weights = (special.betaln(a, b) - special.betaln(a0, b0)
                   - 0.5 * cos_shift * np.log(c) - 0.5 * sin_shift * np.log1p(-c))
    return frames, np.exp(log_weights)


def sample_pole_adapted_sphere(rng: np.random.Generator, size: int, n: int, cos_shift: float = 0.0,
                               sin_shift: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Points θ ∈ S^{n−1} with weights absorbing |θ_n|^{cos_shift}(1−θ_n²)^{sin_shift/2}."""
    frames, weights = sample_pole_adapted(rng, size, n, 1, cos_shift, sin_shift)
    signs = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return frames[:, :, 0] * signs[:, None], weights


# Pole geometry and the stereographic lift

def pole_cosines(frames: np.ndarray, pole: np.ndarray = None) -> np.ndarray:
    """|P_τ₀ pole| for frames (N, m, r); the pole defaults to the last basis vector."""
    if pole is None:
        return np.linalg.norm(frames[:, -1, :], axis=-1)
    return np.linalg.norm(np.einsum('nij,i->nj', frames, pole), axis=-1)


def geodesic_distance(frame: OrthonormalFrame, pole: np.ndarray) -> float:
    """arccos |P_τ₀ pole| ∈ [0, π/2]."""
    pole = np.asarray(pole, dtype=float)
    if not math.isclose(np.linalg.norm(pole), 1.0, rel_tol=0, abs_tol=FRAME_TOL):
        raise DomainError("unit pole vector")
    cosine = np.linalg.norm(frame.columns.T @ pole)
    return float(np.arccos(np.clip(cosine, 0.0, 1.0)))


def lift_batch(directions: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """γ: (ξ, u) ↦ ξ ⊕ ℝu₀ with u₀ = (u + e_{n+1})/√(1+|u|²)."""
    size, n, k = directions.shape
    norm = np.sqrt(1.0 + np.sum(offsets ** 2, axis=-1))
    frames = np.zeros((size, n + 1, k + 1))
    frames[:, :n, :k] = directions
    frames[:, :n, k] = offsets / norm[:, None]
    frames[:, n, k] = 1.0 / norm
    return frames


def lift(plane: AffinePlane) -> OrthonormalFrame:
    return OrthonormalFrame(lift_batch(plane.columns[None], plane.offset[None])[0])


def unlift_batch(frames: np.ndarray) -> Tuple[PlaneBatch, np.ndarray]:
    """Inverse of the lift for frames (N, n+1, r). The mask is False on the
    exceptional set (pole projection below 1e−12); those rows hold zeros."""
    size, m, rank = frames.shape
    coefficients = frames[:, -1, :]
    norms = np.linalg.norm(coefficients, axis=-1)
    valid = norms >= EXCEPTIONAL_TOL
    safe = np.where(valid, norms, 1.0)
    units = np.where(valid[:, None], coefficients / safe[:, None], np.eye(rank)[0])
    u0 = np.einsum('nij,nj->ni', frames, units)
    offsets = u0[:, :-1] / np.where(valid, u0[:, -1], 1.0)[:, None]
    inner = np.einsum('nij,njl->nil', frames, complement_basis(units))
    directions, _ = orthonormalize(inner[:, :-1, :])
    offsets = np.where(valid[:, None], offsets, 0.0)
    return PlaneBatch(directions, offsets), valid


def unlift(frame: OrthonormalFrame) -> AffinePlane:
    planes, valid = unlift_batch(frame.columns[None])
    if not valid[0]:
        raise ExceptionalSetError("the subspace lies in e_{n+1}^⊥; unlift is undefined there")
    direction = planes.directions[0]
    offset = planes.offsets[0]
    # clean the O(eps) leak before the invariant check
    offset = offset - direction @ (direction.T @ offset)
    return AffinePlane(OrthonormalFrame(direction), offset)


def apply_affine_batch(transform: AffineMap, planes: PlaneBatch) -> PlaneBatch:
    """Image planes M(τ), re-orthonormalized with offsets re-projected."""
    directions, ok = orthonormalize(np.einsum('ij,njk->nik', transform.matrix, planes.directions))
    if not ok.all():
        raise DomainError("invertible affine map")
    points = planes.offsets @ transform.matrix.T + transform.translation
    offsets = points - np.einsum('nij,nj->ni', directions, np.einsum('nij,ni->nj', directions, points))
    return PlaneBatch(directions, offsets)


def apply_affine(transform: AffineMap, plane: AffinePlane) -> AffinePlane:
    image = apply_affine_batch(transform, PlaneBatch(plane.columns[None], plane.offset[None]))
    return image.plane(0)
