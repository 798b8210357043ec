"""R_k, R_{j,k}, F_k, F_{j,k} and the stereographic conjugation formulas.

Single-plane operations return an ``Estimate`` and honour the
``QuadratureSpec`` mode. The ``*_values`` kernels evaluate a transform on a
whole batch of planes or frames with a deterministic rule and are what the
outer integrals of the harness call.
"""
from typing import Callable, Iterator

import numpy as np

from errors import DomainError, IntegrabilityError, QuadratureError
from fields_and_oracles import (DomainKind, FieldDomain, FieldMetadata, ScalarField, evaluate_on_planes,
                                pushforward_to_plane)
from grassmann_geometry import (AffinePlane, OrthonormalFrame, PlaneBatch, complement_basis, haar_frames,
                                lift, sample_subplanes, subsphere_points, unlift)
from logger import GetLogger
from quadrature import (Estimate, QuadratureSpec, ball_rule, mc_estimate, radial_rule, sphere_rule,
                        tensor_tan_rule)
from special_constants import sphere_area

logger = GetLogger()(name=__name__)

MAX_TENSOR_DIM = 3
_POINTS_PER_CHUNK = 1 << 20


def _chunks(count: int, per_item: int) -> Iterator[slice]:
    step = max(1, _POINTS_PER_CHUNK // max(per_item, 1))
    for start in range(0, count, step):
        yield slice(start, min(count, start + step))


def require_integrable(f: ScalarField, dim: int):
    """R_k-type integrals over ℝ^dim need decay > dim or compact support."""
    if dim == 0 or f.metadata.support_radius is not None:
        return
    decay = f.metadata.decay_exponent
    if decay is None or decay <= dim:
        raise IntegrabilityError(f"decay exponent > {dim} or compact support",
                                 f"{f.name} declares decay {decay}")


def inner_radial_exponent(f: ScalarField, dim: int) -> float:
    """Proposal exponent for an integral over ℝ^dim: heavy enough to dominate f."""
    decay = f.metadata.decay_exponent
    if decay is None or f.metadata.support_radius is not None:
        return dim + 1.0
    return min(dim + 1.0, decay)


def as_point_field(f: ScalarField) -> ScalarField:
    """View a field on A_{n,0} as a Euclidean field on ℝⁿ."""
    if f.domain.kind is DomainKind.EUCLIDEAN:
        return f
    if f.domain.kind is not DomainKind.AFFINE_GRASSMANNIAN or f.domain.rank != 0:
        raise DomainError("field on ℝⁿ or A_{n,0}", str(f.domain))
    n = f.domain.n

    def evaluate(points):
        points = np.asarray(points)
        return f(PlaneBatch(np.zeros((points.shape[0], n, 0)), points))

    return ScalarField(FieldDomain.euclidean(n), evaluate, f.metadata, f.name)


# Deterministic batched kernels

def _flat_integral(f: ScalarField, planes: PlaneBatch, order: int, tensor: bool) -> np.ndarray:
    """∫_{ℝ^k} f(u + ξs) ds for every plane of the batch."""
    size, n, k = planes.directions.shape
    support = f.metadata.support_radius
    profile = f.metadata.radial_profile
    distance2 = planes.squared_distances()
    if profile is not None and not tensor and support is None:
        r, w = radial_rule(order, k - 1)
        values = profile(distance2[:, None] + (r ** 2)[None, :]) @ w
        return sphere_area(k - 1) * values
    if k > MAX_TENSOR_DIM:
        raise QuadratureError(f"deterministic rules need k ≤ {MAX_TENSOR_DIM}; use Monte-Carlo")
    if support is not None:
        nodes, weights = ball_rule(k, order)
        radius = np.sqrt(np.clip(support ** 2 - distance2, 0.0, None))
    else:
        nodes, weights = tensor_tan_rule(k, order)
        radius = np.ones(size)
    out = np.empty(size)
    for part in _chunks(size, nodes.shape[0]):
        coords = radius[part, None, None] * nodes[None, :, :]
        points = planes.offsets[part, None, :] + np.einsum('nij,npj->npi', planes.directions[part], coords)
        values = f(points.reshape(-1, n)).reshape(points.shape[0], -1)
        out[part] = (values @ weights) * radius[part] ** k
    return out


def kplane_values(f: ScalarField, planes: PlaneBatch, order: int, tensor: bool = False) -> np.ndarray:
    """(R_k f)(τ) on a batch of k-planes. ``tensor`` forces the per-axis tan
    rule even for radial fields."""
    require_integrable(f, planes.dim)
    return _flat_integral(as_point_field(f), planes, order, tensor)


def jk_values(f: ScalarField, planes: PlaneBatch, order: int) -> np.ndarray:
    """(R_{j,k} f)(τ) on a batch of k-planes, j = rank of f's domain."""
    size, n, k = planes.directions.shape
    j = 0 if f.domain.kind is DomainKind.EUCLIDEAN else f.domain.rank
    if not 0 <= j < k:
        raise DomainError("0 ≤ j < k", f"j={j}, k={k}")
    require_integrable(f, k - j)
    if j == 0:
        return _flat_integral(as_point_field(f), planes, order, tensor=False)
    profile = f.metadata.radial_profile
    if profile is not None and f.metadata.support_radius is None:
        r, w = radial_rule(order, k - j - 1)
        return sphere_area(k - j - 1) * (profile(planes.squared_distances()[:, None] + (r ** 2)[None, :]) @ w)
    if k > MAX_TENSOR_DIM or j not in (1, k - 1):
        raise QuadratureError("deterministic R_{j,k} needs k ≤ 3 and j ∈ {1, k−1}")
    theta, w_theta = sphere_rule(k, order)
    basis = complement_basis(theta)
    if j == 1:
        eta_coords, shift_coords = theta[:, :, None], basis
    else:
        eta_coords, shift_coords = basis, theta[:, :, None]
    shift_dim = k - j
    support = f.metadata.support_radius
    if support is not None:
        w_nodes, w_weights = ball_rule(shift_dim, order)
        radius = np.sqrt(np.clip(support ** 2 - planes.squared_distances(), 0.0, None))
    else:
        w_nodes, w_weights = tensor_tan_rule(shift_dim, order)
        radius = np.ones(size)
    n_theta, n_w = theta.shape[0], w_nodes.shape[0]
    # (θ, w) -> coefficients in ξ coordinates
    shift_in_xi = np.einsum('tij,wj->twi', shift_coords, w_nodes)
    out = np.empty(size)
    for part in _chunks(size, n_theta * n_w):
        xi = planes.directions[part]
        m = xi.shape[0]
        eta = np.einsum('nij,tjl->ntil', xi, eta_coords)
        shifts = np.einsum('nij,twj->ntwi', xi, shift_in_xi) * radius[part, None, None, None]
        offsets = planes.offsets[part, None, None, :] + shifts
        directions = np.broadcast_to(eta[:, :, None], (m, n_theta, n_w, n, j))
        batch = PlaneBatch(directions.reshape(-1, n, j), offsets.reshape(-1, n))
        values = evaluate_on_planes(f, batch).reshape(m, n_theta, n_w)
        out[part] = np.einsum('ntw,t,w->n', values, w_theta, w_weights) * radius[part] ** shift_dim
    return out


def funk_values(phi: ScalarField, frames: np.ndarray, order: int) -> np.ndarray:
    """(F_r φ)(τ₀) for frames (N, m, r) with the probability rule on S^{r−1}."""
    if phi.domain.kind is not DomainKind.SPHERE:
        raise DomainError("field on the sphere", str(phi.domain))
    size, m, rank = frames.shape
    nodes, weights = sphere_rule(rank, order)
    out = np.empty(size)
    for part in _chunks(size, nodes.shape[0]):
        points = np.einsum('nij,pj->npi', frames[part], nodes)
        out[part] = phi(points.reshape(-1, m)).reshape(points.shape[0], -1) @ weights
    return out


def funk_jk_values(g: ScalarField, frames: np.ndarray, order: int) -> np.ndarray:
    """(F_{j,r} g)(τ₀): mean of g over j-subspaces of each span, j = rank of g."""
    size, m, rank = frames.shape
    j = g.domain.rank
    if g.domain.kind is not DomainKind.GRASSMANNIAN or not 1 <= j < rank:
        raise DomainError("field on G_{m,j} with 1 ≤ j < rank", str(g.domain))
    if rank > MAX_TENSOR_DIM:
        raise QuadratureError(f"deterministic F_{{j,k}} needs k ≤ {MAX_TENSOR_DIM}; use Monte-Carlo")
    if j not in (1, rank - 1):
        raise QuadratureError("deterministic F_{j,k} needs j ∈ {1, k−1}")
    theta, weights = sphere_rule(rank, order)
    coords = theta[:, :, None] if j == 1 else complement_basis(theta)
    out = np.empty(size)
    for part in _chunks(size, theta.shape[0]):
        sub = np.einsum('nij,tjl->ntil', frames[part], coords)
        values = g(sub.reshape(-1, m, j)).reshape(sub.shape[0], -1)
        out[part] = values @ weights
    return out


def funk_field(phi: ScalarField, rank: int, order: int) -> ScalarField:
    """ζ₀ ↦ (F_rank φ)(ζ₀) as a field on G_{n,rank}."""
    n = phi.domain.n
    metadata = FieldMetadata(family='funk', equator_order=phi.metadata.equator_order)
    return ScalarField(FieldDomain.grassmannian(n, rank), lambda frames: funk_values(phi, frames, order),
                       metadata, f"F_{rank}[{phi.name}]")


def relative_quadrature_error(kernel: Callable[[int], np.ndarray], order: int) -> float:
    """Relative gap between a kernel at ``order`` and at half that order.

    The lower order is markedly less accurate, so the gap bounds the error of
    the higher-order values."""
    high = kernel(order)
    low = kernel(max(2, order // 2))
    scale = np.mean(np.abs(high))
    if scale == 0:
        return 0.0
    return float(np.mean(np.abs(high - low)) / scale)


# Single-plane operations

def _single(plane: AffinePlane) -> PlaneBatch:
    return PlaneBatch(plane.columns[None], plane.offset[None])


def _subplane_mc(f: ScalarField, plane: AffinePlane, j: int, q: QuadratureSpec) -> Estimate:
    k = plane.dim
    alpha = inner_radial_exponent(f, k - j)
    directions, offset = plane.columns, plane.offset

    def sampler(rng, size):
        batch = sample_subplanes(rng, np.broadcast_to(directions, (size,) + directions.shape),
                                 np.broadcast_to(offset, (size, offset.size)), j, alpha)
        return evaluate_on_planes(f, batch.planes) * batch.weights

    return mc_estimate(sampler, q.samples, q.stream('subplane'), q.threads)


def kplane_transform(f: ScalarField, plane: AffinePlane, q: QuadratureSpec) -> Estimate:
    """(R_k f)(τ) = ∫_{ℝ^k} f(u + Σ sᵢξᵢ) ds."""
    if f.domain.kind is not DomainKind.EUCLIDEAN or f.domain.n != plane.ambient_dim:
        raise DomainError(f"field on ℝ^{plane.ambient_dim}", str(f.domain))
    require_integrable(f, plane.dim)
    if q.deterministic:
        value = _flat_integral(f, _single(plane), q.order, tensor=True)[0]
        nodes = q.order ** plane.dim
        return Estimate(float(value), 0.0, nodes)
    return _subplane_mc(f, plane, 0, q)


def jk_transform(f: ScalarField, plane: AffinePlane, q: QuadratureSpec) -> Estimate:
    """(R_{j,k} f)(τ): integral over the j-planes of τ against d*η dw."""
    j = 0 if f.domain.kind is DomainKind.EUCLIDEAN else f.domain.rank
    if f.domain.n != plane.ambient_dim or not 0 <= j < plane.dim:
        raise DomainError("0 ≤ j < k on a common ℝⁿ", f"{f.domain} vs k={plane.dim}")
    require_integrable(f, plane.dim - j)
    if q.deterministic:
        return Estimate(float(jk_values(f, _single(plane), q.order)[0]), 0.0, q.order ** (plane.dim - j))
    return _subplane_mc(f, plane, j, q)


def funk_transform(phi: ScalarField, frame: OrthonormalFrame, q: QuadratureSpec) -> Estimate:
    """Mean of φ over the great subsphere S^{n−1} ∩ τ₀."""
    if phi.domain.kind is not DomainKind.SPHERE or phi.domain.n != frame.ambient_dim:
        raise DomainError(f"field on S^{frame.ambient_dim - 1}", str(phi.domain))
    columns = frame.columns
    if q.deterministic and frame.rank <= MAX_TENSOR_DIM:
        return Estimate(float(funk_values(phi, columns[None], q.order)[0]), 0.0,
                        sphere_rule(frame.rank, q.order)[0].shape[0])

    def sampler(rng, size):
        return phi(subsphere_points(rng, np.broadcast_to(columns, (size,) + columns.shape)))

    return mc_estimate(sampler, q.samples, q.stream('subsphere'), q.threads)


def funk_jk_transform(g: ScalarField, frame: OrthonormalFrame, q: QuadratureSpec) -> Estimate:
    """Mean of g over Haar j-subspaces of span(τ₀)."""
    j, rank = g.domain.rank, frame.rank
    if g.domain.kind is not DomainKind.GRASSMANNIAN or g.domain.n != frame.ambient_dim:
        raise DomainError(f"field on a Grassmannian of ℝ^{frame.ambient_dim}", str(g.domain))
    if not 1 <= j < rank:
        raise DomainError("1 ≤ j < k", f"j={j}, k={rank}")
    columns = frame.columns
    if q.deterministic and rank <= MAX_TENSOR_DIM and j in (1, rank - 1):
        return Estimate(float(funk_jk_values(g, columns[None], q.order)[0]), 0.0, q.order)

    def sampler(rng, size):
        inner = haar_frames(rng, size, rank, j)
        return g(np.einsum('ij,njl->nil', columns, inner))

    return mc_estimate(sampler, q.samples, q.stream('subspace'), q.threads)


def conjugation_factor(j: int, k: int) -> float:
    """a = σ_k/σ_j."""
    return sphere_area(k) / sphere_area(j)


def radon_from_funk(g: ScalarField, plane: AffinePlane, q: QuadratureSpec) -> Estimate:
    """a·ρ₂(τ)·(F_{j+1,k+1} g)(lift τ) for g on G_{n+1,j+1}, i.e. the right side
    of R_{j,k}f = aρ₂Λ_k^{−1}F_{j+1,k+1}Λ_jρ₁^{−1}f with g = Λ_jρ₁^{−1}f."""
    if g.domain.kind is not DomainKind.GRASSMANNIAN or g.domain.n != plane.ambient_dim + 1:
        raise DomainError(f"field on G_{{{plane.ambient_dim + 1},j+1}}", str(g.domain))
    j, k = g.domain.rank - 1, plane.dim
    rho2 = (1.0 + float(plane.offset @ plane.offset)) ** (-0.5 * (j + 1))
    return funk_jk_transform(g, lift(plane), q).scale(conjugation_factor(j, k) * rho2)


def funk_from_radon(g: ScalarField, frame: OrthonormalFrame, q: QuadratureSpec) -> Estimate:
    """(F_{j+1,k+1} g)(τ₀) computed through R_{j,k} on the unlifted plane:
    R_{j,k}(ρ₁Λ_j^{−1}g)(τ)/(a·ρ₂(τ))."""
    if g.domain.kind is not DomainKind.GRASSMANNIAN or g.domain.n != frame.ambient_dim:
        raise DomainError(f"field on G_{{{frame.ambient_dim},j+1}}", str(g.domain))
    j, k = g.domain.rank - 1, frame.rank - 1
    plane = unlift(frame)
    rho2 = (1.0 + float(plane.offset @ plane.offset)) ** (-0.5 * (j + 1))
    radon = jk_transform(pushforward_to_plane(g, k), plane, q)
    return radon.scale(1.0 / (conjugation_factor(j, k) * rho2))
