"""Weighted norms on ℝⁿ, A_{n,j}, S^{n−1} and G_{n,r}, and the star-set
volume functionals built on them.

Every integral first runs ``precheck``: a weighted integral that would
diverge raises ``IntegrabilityError`` naming the violated condition instead
of returning a meaningless Monte-Carlo number.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import DomainError, IntegrabilityError
from fields_and_oracles import (DomainKind, FieldDomain, FieldMetadata, ScalarField, StarSet,
                                central_section_volumes, evaluate_on_planes, radial_power)
from grassmann_geometry import (PlaneBatch, OrthonormalFrame, pole_cosines, sample_affine_planes,
                                sample_pole_adapted, sample_pole_adapted_sphere, uniform_sphere)
from logger import GetLogger
from quadrature import (Estimate, QuadratureSpec, mc_estimate, radial_rule, sphere_rule, unit_radial_rule)
from special_constants import INF, ball_volume, inv_conj, sphere_area
from transforms import as_point_field, funk_transform, funk_values

logger = GetLogger()(name=__name__)


@dataclass(frozen=True)
class PoleWeight:
    """w(τ₀) = (sin d)^sin_exp (cos d)^cos_exp with d the geodesic distance of
    τ₀ to the pole e_n. On the sphere cos d = |θ_n| and sin d = √(1−θ_n²)."""
    sin_exp: float = 0.0
    cos_exp: float = 0.0

    def __call__(self, cosines: np.ndarray) -> np.ndarray:
        cosines = np.clip(cosines, 0.0, 1.0)
        sines = np.sqrt(np.clip(1.0 - cosines ** 2, 0.0, None))
        return sines ** self.sin_exp * cosines ** self.cos_exp

    @property
    def trivial(self) -> bool:
        return self.sin_exp == 0 and self.cos_exp == 0


@dataclass(frozen=True)
class NormSpec:
    """Which weighted L^p norm to take.

    ``weight_exponent`` is the μ of ‖|x|^μ f‖_p, i.e. the integrand carries
    |x|^{μp} (|ζ|^{μp} on A_{n,j}); ``pole_weight`` is used on the sphere and
    compact Grassmannians. ``radial_exponent`` overrides the proposal tail
    for Monte-Carlo integrals over A_{n,j}."""
    domain: FieldDomain
    p: float = 1.0
    weight_exponent: float = 0.0
    pole_weight: Optional[PoleWeight] = None
    radial_exponent: Optional[float] = None

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError("1 ≤ p ≤ ∞", f"p={self.p}")
        compact = self.domain.kind in (DomainKind.SPHERE, DomainKind.GRASSMANNIAN)
        if compact and self.weight_exponent:
            raise DomainError("pole weights (not |x|^μ) on compact domains")
        if not compact and self.pole_weight is not None:
            raise DomainError("|x|^μ weights (not pole weights) on ℝⁿ and A_{n,j}")

    @property
    def power_weight(self) -> float:
        """Exponent of |x| in the integrand."""
        return 0.0 if self.p == INF else self.weight_exponent * self.p


# Weights of the Funk-type inequalities

def _nu(j: int, k: int, p: float, mu: float) -> float:
    return mu - (k - j) * inv_conj(p)


def alpha(j: int, k: int, n: int, p: float, mu: float) -> PoleWeight:
    """α(τ₀) = sin^{νp} cos^{(j−ν)p−n}, ν = μ − (k−j)/p′, on G_{n,k}."""
    nu = _nu(j, k, p, mu)
    return PoleWeight(nu * p, (j - nu) * p - n)


def beta(j: int, k: int, n: int, p: float, mu: float) -> PoleWeight:
    """β(ζ₀) = sin^{μp} cos^{(k−μ)p−n} on G_{n,j}."""
    return PoleWeight(mu * p, (k - mu) * p - n)


def alpha1(k: int, n: int, p: float, mu: float) -> PoleWeight:
    return alpha(1, k, n, p, mu)


def beta1(k: int, n: int, p: float, mu: float) -> PoleWeight:
    """(1−θ_n²)^{μp/2}|θ_n|^{(k−μ)p−n} on S^{n−1}."""
    return beta(1, k, n, p, mu)


def alpha_tilde1(k: int, n: int, mu: float) -> PoleWeight:
    return PoleWeight(mu, 1.0 - mu - n)


def beta_tilde1(k: int, n: int, mu: float) -> PoleWeight:
    return PoleWeight(mu, k - mu - n)


def alpha2(k: int, n: int) -> PoleWeight:
    """α₁ at p = n/k, μ = 0: sin^{(k−1)(k−n)/k} cos^{1−k}."""
    return PoleWeight((k - 1) * (k - n) / k, 1.0 - k)


# Integrability

def _compact_exponents(f: ScalarField, spec: NormSpec):
    weight = spec.pole_weight or PoleWeight()
    vanishing = f.metadata.equator_order * spec.p if spec.p != INF else 0.0
    return weight.cos_exp + vanishing, weight.sin_exp


def precheck(f: ScalarField, spec: NormSpec):
    """Raise IntegrabilityError when ∫|f|^p w diverges for the declared metadata."""
    if f.domain.n != spec.domain.n or f.domain.kind is not spec.domain.kind and not (
            f.domain.kind is DomainKind.EUCLIDEAN and spec.domain.kind is DomainKind.AFFINE_GRASSMANNIAN
            and spec.domain.rank == 0):
        raise DomainError(f"field on {spec.domain}", f"got {f.domain}")
    if spec.p == INF:
        return
    kind = spec.domain.kind
    if kind in (DomainKind.SPHERE, DomainKind.GRASSMANNIAN):
        rank, n = spec.domain.rank, spec.domain.n
        cos_total, sin_exp = _compact_exponents(f, spec)
        if cos_total <= -rank:
            raise IntegrabilityError(f"cos-exponent > −{rank}",
                                     f"weight and field give cos^{cos_total:g} d on G_{{{n},{rank}}}")
        if sin_exp <= -(n - rank):
            raise IntegrabilityError(f"sin-exponent > −{n - rank}", f"sin^{sin_exp:g} d on G_{{{n},{rank}}}")
        return
    dim = spec.domain.n - spec.domain.rank
    mu_p = spec.power_weight
    if dim + mu_p <= 0:
        raise IntegrabilityError(f"μ > −{dim}/p", f"|x|^{mu_p:g} is not integrable at the origin of ℝ^{dim}")
    if f.metadata.support_radius is not None:
        return
    decay = f.metadata.decay_exponent
    if decay is None or decay * spec.p - mu_p <= dim:
        raise IntegrabilityError(f"decay exponent > μ + {dim}/p",
                                 f"{f.name} declares decay {decay}, μp={mu_p:g}, p={spec.p:g}")


# Euclidean integrals

def _star_of(f: ScalarField):
    params = f.metadata.params
    if not f.metadata.indicator:
        return None
    if 'star' in params:
        return params['star'].radial
    if 'body' in params:
        return params['body'].radial
    return None


def _sphere_average(values_at, n: int, q: QuadratureSpec, label: str) -> Estimate:
    """Mean over S^{n−1} of ``values_at(theta)``: deterministic rule for n ≤ 3
    in TensorTan mode, Monte-Carlo otherwise."""
    if q.deterministic and n <= 3:
        theta, weights = sphere_rule(n, q.order)
        return Estimate(float(values_at(theta) @ weights), 0.0, theta.shape[0])

    def sampler(rng, size):
        return values_at(uniform_sphere(rng, size, n))

    return mc_estimate(sampler, q.samples, q.stream(label), q.threads)


def _euclidean_integral(f: ScalarField, spec: NormSpec, q: QuadratureSpec) -> Estimate:
    n, p, mu_p = f.domain.n, spec.p, spec.power_weight
    radial = _star_of(f)
    if radial is not None:
        # ∫_L |x|^{μp} dx = σ_{n−1} · mean ρ^{n+μp}/(n+μp)
        power = n + mu_p
        return _sphere_average(lambda theta: radial(theta) ** power / power, n, q, 'star').scale(sphere_area(n - 1))
    support = f.metadata.support_radius
    if support is not None:
        r, w = unit_radial_rule(q.order, n - 1 + mu_p)
        r, w = support * r, w * support ** (n + mu_p)
    else:
        r, w = radial_rule(q.order, n - 1 + mu_p)
    profile = f.metadata.radial_profile
    if profile is not None:
        return Estimate.exact(sphere_area(n - 1) * float(np.abs(profile(r ** 2)) ** p @ w))

    def along_rays(theta):
        points = theta[:, None, :] * r[None, :, None]
        values = np.abs(f(points.reshape(-1, n)).reshape(theta.shape[0], -1)) ** p
        return values @ w

    return _sphere_average(along_rays, n, q, 'rays').scale(sphere_area(n - 1))


def _euclidean_sup(f: ScalarField, spec: NormSpec, q: QuadratureSpec) -> Estimate:
    n, mu = f.domain.n, spec.weight_exponent
    r, _ = radial_rule(q.order, n - 1)
    r = np.concatenate([[0.0], r])
    theta = uniform_sphere(q.stream('sup').generator(), max(1, q.samples // len(r)), n)
    points = (theta[:, None, :] * r[None, :, None]).reshape(-1, n)
    values = np.abs(f(points))
    if mu:
        radii = np.linalg.norm(points, axis=-1)
        keep = radii > 0
        values = values[keep] * radii[keep] ** mu
    value = float(np.max(values))
    return Estimate(value, 0.0, points.shape[0], lower_bound=True)


# Affine Grassmannian integrals

def _default_radial_exponent(f: ScalarField, spec: NormSpec) -> float:
    n = spec.domain.n
    if spec.radial_exponent is not None:
        return spec.radial_exponent
    decay = f.metadata.decay_exponent
    if f.metadata.support_radius is not None or decay is None or decay == INF:
        return n + 1.0 + spec.power_weight
    return min(n + 1.0 + spec.power_weight, decay * spec.p)


def _affine_integral(f: ScalarField, spec: NormSpec, q: QuadratureSpec) -> Estimate:
    n, j, p, mu_p = spec.domain.n, spec.domain.rank, spec.p, spec.power_weight
    profile = f.metadata.radial_profile
    if profile is not None and f.metadata.support_radius is None:
        # ∫ |f|^p |ζ|^{μp} dζ = σ_{n−j−1} ∫_0^∞ r^{n−j−1+μp} |profile(r²)|^p dr
        r, w = radial_rule(q.order, n - j - 1 + mu_p)
        return Estimate.exact(sphere_area(n - j - 1) * float(np.abs(profile(r ** 2)) ** p @ w))
    alpha_tail = _default_radial_exponent(f, spec)
    support = f.metadata.support_radius

    def sampler(rng, size):
        batch = sample_affine_planes(rng, size, n, j, alpha_tail, origin_exponent=mu_p, support_radius=support)
        values = np.abs(evaluate_on_planes(f, batch.planes)) ** p
        if mu_p:
            values = values * batch.planes.distances() ** mu_p
        return values * batch.weights

    return mc_estimate(sampler, q.samples, q.stream('planes'), q.threads)


def _affine_sup(f: ScalarField, spec: NormSpec, q: QuadratureSpec) -> Estimate:
    n, j, mu = spec.domain.n, spec.domain.rank, spec.weight_exponent
    rng = q.stream('sup').generator()
    batch = sample_affine_planes(rng, q.samples, n, j, n + 1.0).planes
    candidates = PlaneBatch(np.concatenate([batch.directions, batch.directions]),
                            np.concatenate([batch.offsets, np.zeros_like(batch.offsets)]))
    values = np.abs(evaluate_on_planes(f, candidates))
    if mu:
        distances = candidates.distances()
        keep = distances > 0
        values = values[keep] * distances[keep] ** mu
    return Estimate(float(np.max(values)), 0.0, len(candidates), lower_bound=True)


# Compact integrals

def _compact_integral(f: ScalarField, spec: NormSpec, q: QuadratureSpec) -> Estimate:
    n, rank, p = spec.domain.n, spec.domain.rank, spec.p
    weight = spec.pole_weight or PoleWeight()
    cos_shift, sin_shift = _compact_exponents(f, spec)
    sphere = spec.domain.kind is DomainKind.SPHERE

    def sampler(rng, size):
        if sphere:
            points, weights = sample_pole_adapted_sphere(rng, size, n, cos_shift, sin_shift)
            cosines = np.abs(points[:, -1])
        else:
            points, weights = sample_pole_adapted(rng, size, n, rank, cos_shift, sin_shift)
            cosines = pole_cosines(points)
        # weights are Haar over proposal density; w·weights stays bounded near the pole
        return np.abs(f(points)) ** p * (weight(cosines) * weights)

    if q.deterministic and sphere and n <= 3 and weight.trivial:
        theta, rule = sphere_rule(n, q.order)
        return Estimate(float((np.abs(f(theta)) ** p) @ rule), 0.0, theta.shape[0])
    return mc_estimate(sampler, q.samples, q.stream('pole'), q.threads)


def _compact_sup(f: ScalarField, spec: NormSpec, q: QuadratureSpec) -> Estimate:
    n, rank = spec.domain.n, spec.domain.rank
    rng = q.stream('sup').generator()
    weight = spec.pole_weight or PoleWeight()
    if spec.domain.kind is DomainKind.SPHERE:
        points = uniform_sphere(rng, q.samples, n)
        cosines = np.abs(points[:, -1])
    else:
        points, _ = sample_pole_adapted(rng, q.samples, n, rank)
        cosines = pole_cosines(points)
    values = np.abs(f(points)) * (weight(cosines) if not weight.trivial else 1.0)
    return Estimate(float(np.max(values)), 0.0, q.samples, lower_bound=True)


def weighted_integral(f: ScalarField, spec: NormSpec, q: QuadratureSpec) -> Estimate:
    """∫ |f|^p w over the domain of ``spec`` (no root)."""
    if spec.p == INF:
        raise DomainError("p < ∞ for an integral; use weighted_norm")
    precheck(f, spec)
    kind = spec.domain.kind
    if kind is DomainKind.EUCLIDEAN or kind is DomainKind.AFFINE_GRASSMANNIAN and spec.domain.rank == 0:
        return _euclidean_integral(as_point_field(f), spec, q)
    if kind is DomainKind.AFFINE_GRASSMANNIAN:
        return _affine_integral(f, spec, q)
    return _compact_integral(f, spec, q)


def weighted_norm(f: ScalarField, spec: NormSpec, q: QuadratureSpec) -> Estimate:
    """(∫ |f|^p w)^{1/p}; p = ∞ gives a sampled supremum flagged ``lower_bound``."""
    if spec.p != INF:
        return weighted_integral(f, spec, q).power(1.0 / spec.p)
    precheck(f, spec)
    kind = spec.domain.kind
    if kind is DomainKind.EUCLIDEAN or kind is DomainKind.AFFINE_GRASSMANNIAN and spec.domain.rank == 0:
        return _euclidean_sup(as_point_field(f), spec, q)
    if kind is DomainKind.AFFINE_GRASSMANNIAN:
        return _affine_sup(f, spec, q)
    return _compact_sup(f, spec, q)


# Star-set functionals

def dual_quermass(star: StarSet, m: float, q: QuadratureSpec) -> Estimate:
    """Ṽ_m(L) = b_n ∫ ρ_L^m d*θ."""
    n = star.dim
    rho_m = radial_power(star, m)
    return weighted_integral(rho_m, NormSpec(FieldDomain.sphere(n)), q.derive('dual_quermass')).scale(ball_volume(n))


def star_volume(star: StarSet, q: QuadratureSpec) -> Estimate:
    """V_n(L) = Ṽ_n(L)."""
    return dual_quermass(star, star.dim, q)


def _check_section_power(star: StarSet, m: float, rank: int):
    if m < 0 and star.equator_order and (rank == 1 or star.equator_order * m <= -1):
        raise IntegrabilityError("γ·m > −1 on subspheres meeting the equator",
                                 f"ρ vanishes like |θ_n|^{star.equator_order:g}, m={m:g}")


def section_dual_quermass(star: StarSet, frame: OrthonormalFrame, m: float, q: QuadratureSpec) -> Estimate:
    """Ṽ_m(L ∩ τ₀) = b_k (F_k ρ_L^m)(τ₀)."""
    _check_section_power(star, m, frame.rank)
    return funk_transform(radial_power(star, m), frame, q).scale(ball_volume(frame.rank))


def section_field(star: StarSet, k: int, m: float, order: int) -> ScalarField:
    """τ₀ ↦ Ṽ_m(L ∩ τ₀) on G_{n,k}; closed form for ellipsoids at m = k."""
    _check_section_power(star, m, k)
    n = star.dim
    body = star.ellipsoid
    if body is not None and m == k:
        evaluate = lambda frames: central_section_volumes(body, frames)
    else:
        rho_m = radial_power(star, m)
        b_k = ball_volume(k)
        evaluate = lambda frames: b_k * funk_values(rho_m, frames, order)
    return ScalarField(FieldDomain.grassmannian(n, k), evaluate,
                       FieldMetadata(family='section', equator_order=star.equator_order * m,
                                     params={'star': star, 'm': m}),
                       f"V~_{m:g}(L∩.)[{star.kind.value}]")


def lutwak_mean(star: StarSet, k: int, p: float, q: QuadratureSpec) -> Estimate:
    """(∫_{G_{n,k}} V_k(L∩τ₀)^p d*τ₀)^{1/p}."""
    field = section_field(star, k, k, q.order)
    return weighted_norm(field, NormSpec(FieldDomain.grassmannian(star.dim, k), p), q.derive('lutwak'))
