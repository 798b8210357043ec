"""Shared building blocks of the registered checks.

Fields and star sets are described in check parameters by short names or
small dicts (``'gaussian'``, ``{'kind': 'ellipsoid', 'diag': [1, 1, 4]}``)
so the same descriptors work from Python, the CLI and experiment files.
"""
import math
from dataclasses import replace
from typing import Any, Callable, Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from errors import DomainError
from fields_and_oracles import (DomainKind, Ellipsoid, FieldDomain, FieldMetadata, ScalarField, StarKind, StarSet,
                                ball_indicator, constant_sphere, ellipsoid_indicator, gaussian, make_extremizer,
                                make_star_set, oracle_kplane_batch, plane_extremizer, plane_gaussian,
                                random_smooth_sphere, star_gaussian, star_indicator, star_power)
from functionals import NormSpec, section_field, weighted_integral
from grassmann_geometry import AffineMap, PlaneBatch, haar_frames, sample_affine_planes
from logger import GetLogger
from quadrature import Estimate, QuadratureSpec
from special_constants import inv, inv_conj
from transforms import jk_values, kplane_values, relative_quadrature_error

logger = GetLogger()(name=__name__)

Descriptor = Union[str, Mapping[str, Any], None]

STAR_ALIASES = {
    'ball': StarKind.BALL,
    'ellipsoid': StarKind.ELLIPSOID,
    'bump': StarKind.EQUATORIAL_BUMP,
    'equatorial_bump': StarKind.EQUATORIAL_BUMP,
    'random_smooth': StarKind.RANDOM_SMOOTH,
}


def _split(descriptor: Descriptor, default: str) -> Tuple[str, dict]:
    if descriptor is None:
        return default, {}
    if isinstance(descriptor, str):
        return descriptor, {}
    params = dict(descriptor)
    name = params.pop('kind', params.pop('name', default))
    return str(name), params


def default_ellipsoid_diag(n: int) -> list:
    """Diagonal of A for the default ellipsoid {xᵀAx ≤ 1}: (1, …, 1, 4)."""
    return [1.0] * (n - 1) + [4.0]


def ellipsoid_matrix(params: Mapping[str, Any], n: int) -> np.ndarray:
    if 'matrix' in params:
        return np.asarray(params['matrix'], dtype=float)
    diag = params.get('diag', default_ellipsoid_diag(n))
    if len(diag) != n:
        raise DomainError(f"ellipsoid diagonal of length {n}", f"got {len(diag)}")
    return np.diag(np.asarray(diag, dtype=float))


def build_star(descriptor: Descriptor, n: int, default: str = 'ball') -> StarSet:
    """Star set from a descriptor; ``seed`` selects a RandomSmooth member."""
    if isinstance(descriptor, StarSet):
        return descriptor
    name, params = _split(descriptor, default)
    scale = float(params.pop('scale', 1.0))
    kind = STAR_ALIASES.get(name.lower())
    if kind is None:
        try:
            kind = StarKind(name)
        except ValueError:
            raise DomainError(f"star set kind among {', '.join(STAR_ALIASES)}", f"got {name!r}") from None
    if kind is StarKind.ELLIPSOID:
        params = {'matrix': ellipsoid_matrix(params, n)}
    star = make_star_set(kind, params, dim=n)
    return star.scaled(scale) if scale != 1.0 else star


def affine_map(params: Mapping[str, Any], n: int) -> Optional[AffineMap]:
    """x ↦ D x / s + t from the optional keys ``diag``, ``scale`` and ``translation``."""
    if not any(key in params for key in ('diag', 'scale', 'translation')):
        return None
    diag = np.asarray(params.get('diag', [1.0] * n), dtype=float)
    scale = float(params.get('scale', 1.0))
    if diag.shape != (n,) or scale <= 0:
        raise DomainError("diag of length n and scale > 0")
    translation = params.get('translation')
    return AffineMap(np.diag(diag) / scale, None if translation is None else np.asarray(translation, dtype=float))


def euclidean_field(descriptor: Descriptor, n: int, k: int = None) -> ScalarField:
    name, params = _split(descriptor, 'gaussian')
    if name == 'gaussian':
        return gaussian(n)
    if name == 'extremizer':
        if k is None:
            raise DomainError("k for the extremizer field")
        return make_extremizer(n, k, affine_map(params, n))
    if name == 'ball':
        return ball_indicator(n, float(params.get('radius', 1.0)))
    if name == 'ellipsoid':
        return ellipsoid_indicator(Ellipsoid(ellipsoid_matrix(params, n)))
    if name in ('star_indicator', 'star_gaussian', 'star_power'):
        star = build_star(params.get('star', {'kind': 'random_smooth', 'seed': params.get('seed', 0)}), n)
        return {'star_indicator': star_indicator, 'star_gaussian': star_gaussian,
                'star_power': star_power}[name](star)
    raise DomainError("a known field on ℝⁿ (gaussian, extremizer, ball, ellipsoid, star_indicator, "
                      "star_gaussian, star_power)", f"got {name!r}")


def plane_field(descriptor: Descriptor, n: int, j: int, k: int) -> ScalarField:
    """Field on A_{n,j}; j = 0 falls back to fields on ℝⁿ."""
    name, params = _split(descriptor, 'gaussian')
    if j == 0:
        return euclidean_field({'kind': name.replace('plane_', ''), **params}, n, k)
    if name in ('gaussian', 'plane_gaussian'):
        return plane_gaussian(n, j)
    if name in ('extremizer', 'plane_extremizer'):
        return plane_extremizer(n, j, k, affine_map(params, n))
    raise DomainError("a known field on A_{n,j} (plane_gaussian, plane_extremizer)", f"got {name!r}")


def sphere_field(descriptor: Descriptor, n: int) -> ScalarField:
    name, params = _split(descriptor, 'random_smooth')
    if name == 'constant':
        return constant_sphere(n, float(params.get('value', 1.0)))
    if name == 'random_smooth':
        return random_smooth_sphere(n, int(params.get('seed', 0)), int(params.get('terms', 4)),
                                    float(params.get('amplitude', 0.3)))
    raise DomainError("a known sphere field (constant, random_smooth)", f"got {name!r}")


def plane_domain(n: int, j: int) -> FieldDomain:
    return FieldDomain.euclidean(n) if j == 0 else FieldDomain.affine_grassmannian(n, j)


def field_rank(f: ScalarField) -> int:
    return 0 if f.domain.kind is DomainKind.EUCLIDEAN else f.domain.rank


def transform_field(f: ScalarField, k: int, order: int, exact: bool = False) -> ScalarField:
    """τ ↦ (R_{j,k} f)(τ) on A_{n,k} with j the rank of f's domain (R_k for j = 0).

    ``exact`` evaluates through the closed-form oracle instead of quadrature."""
    n, j = f.domain.n, field_rank(f)
    if exact:
        evaluate = lambda planes: oracle_kplane_batch(f, planes)
    elif j == 0:
        evaluate = lambda planes: kplane_values(f, planes, order)
    else:
        evaluate = lambda planes: jk_values(f, planes, order)
    decay = f.metadata.decay_exponent
    if decay is not None and math.isfinite(decay):
        decay = decay - (k - j)
    metadata = FieldMetadata(decay_exponent=decay, support_radius=f.metadata.support_radius,
                             family='transform', params={'source': f.name})
    return ScalarField(FieldDomain.affine_grassmannian(n, k), evaluate, metadata, f"R_{j},{k}[{f.name}]")


def section_volume_field(star: StarSet, k: int, order: int) -> ScalarField:
    """τ ↦ V_k(S ∩ τ) on A_{n,k}; exact for balls and ellipsoids."""
    indicator = star_indicator(star)
    return transform_field(indicator, k, order, exact=star.ellipsoid is not None)


def syserr_plane_batch(n: int, k: int, q: QuadratureSpec, count: int, support: float = None) -> PlaneBatch:
    rng = q.stream('syserr').generator()
    return sample_affine_planes(rng, count, n, k, support_radius=support).planes


def plane_syserr(f: ScalarField, k: int, q: QuadratureSpec, count: int) -> float:
    """Relative quadrature error of R_{j,k} f on a few sampled planes."""
    j = field_rank(f)
    planes = syserr_plane_batch(f.domain.n, k, q, count, f.metadata.support_radius)
    kernel = kplane_values if j == 0 else jk_values
    return relative_quadrature_error(lambda order: kernel(f, planes, order), q.order)


def frame_syserr(kernel: Callable[[np.ndarray, int], np.ndarray], n: int, rank: int,
                 q: QuadratureSpec, count: int) -> float:
    """Relative quadrature error of a Funk-type kernel on a few Haar frames."""
    frames = haar_frames(q.stream('syserr').generator(), count, n, rank)
    return relative_quadrature_error(lambda order: kernel(frames, order), q.order)


def with_syserr(estimate: Estimate, relative: float, exponent: float = 1.0) -> Estimate:
    """Attach a systematic error for an integrand g^exponent whose g carries ``relative`` error."""
    if not relative:
        return estimate
    return replace(estimate, syserr=estimate.syserr + abs(estimate.value) * relative * abs(exponent))


def choose_exponent(lower: float = -math.inf, upper: float = math.inf, preferred: float = 0.0,
                    margin: float = 0.25) -> float:
    """A weight exponent strictly inside (lower, upper): ``preferred`` when it
    sits comfortably inside, else the midpoint or half a unit off the finite end."""
    if not lower < upper:
        raise DomainError("a non-empty range of admissible μ", f"({lower:g}, {upper:g})")
    if lower + margin <= preferred <= upper - margin:
        return preferred
    if math.isinf(upper):
        return lower + 0.5
    if math.isinf(lower):
        return upper - 0.5
    return 0.5 * (lower + upper)


def linear_bounds(constraints: Iterable[Tuple[float, float]]) -> Tuple[float, float]:
    """Interval of μ with a·μ + b > 0 for every (a, b)."""
    lower, upper = -math.inf, math.inf
    for a, b in constraints:
        if a > 0:
            lower = max(lower, -b / a)
        elif a < 0:
            upper = min(upper, -b / a)
        elif b <= 0:
            return math.inf, -math.inf
    return lower, upper


def funk_mu_bounds(n: int, j: int, k: int, p: float, order_k: float = 0.0,
                   order_j: float = 0.0) -> Tuple[float, float]:
    """Admissible μ for the weighted Funk inequality on G_{n,k} against G_{n,j}:
    the constant's domain plus integrability of α·|F|^p and β·|φ|^p, where the
    transformed fields vanish like cos^{order} near the equator."""
    ipc = inv_conj(p)
    shift = (k - j) * ipc
    return linear_bounds([
        (1.0, -(k - n * inv(p) - j * ipc)),
        # α = sin^{νp} cos^{(j−ν)p−n}, ν = μ − (k−j)/p′
        (p, (n - k) - shift * p),
        (-p, (j + shift) * p - n + order_k * p + k),
        # β = sin^{μp} cos^{(k−μ)p−n}
        (p, n - j),
        (-p, k * p - n + order_j * p + j),
    ])


def section_power(star: StarSet, k: int, m: float, p: float, q: QuadratureSpec, syserr_planes: int,
                  weight=None) -> Estimate:
    """∫_{G_{n,k}} Ṽ_m(L∩τ₀)^p w d*τ₀ with the Funk quadrature error attached."""
    n = star.dim
    sections = section_field(star, k, m, q.order)
    value = weighted_integral(sections, NormSpec(FieldDomain.grassmannian(n, k), p, pole_weight=weight), q)
    if star.ellipsoid is not None and m == k:
        return value
    relative = frame_syserr(lambda frames, order: section_field(star, k, m, order)(frames), n, k, q, syserr_planes)
    return with_syserr(value, relative, p)
