"""Checks on ℝⁿ and the affine Grassmannians: the k-plane and (j,k)
transforms, their sharp L^p bounds and the section-volume inequalities
derived from them."""
import math

import numpy as np

from check_support import (build_star, choose_exponent, euclidean_field, field_rank, plane_domain, plane_field,
                           plane_syserr, section_volume_field, transform_field, with_syserr)
from errors import IntegrabilityError
from fields_and_oracles import FieldDomain, FieldMetadata, ScalarField, StarKind, StarSet, star_indicator
from functionals import NormSpec, precheck, star_volume, weighted_integral, weighted_norm
from logger import GetLogger
from quadrature import Estimate, QuadratureSpec, tensor_tan_rule
from special_constants import asymptotic_limit, constant, inv, inv_conj, scaled_norm_constant
from verification_harness import CheckContext, CheckRegistry, Comparison, Relation, Sides

logger = GetLogger()(name=__name__)

WEIGHTED_PANEL = ('gaussian', 'extremizer', 'ball',
                  {'kind': 'star_gaussian', 'seed': 1}, {'kind': 'star_power', 'seed': 2})
DPP_PANEL = ('gaussian', 'ball', 'ellipsoid', {'kind': 'star_gaussian', 'seed': 3})
_POINTS_PER_CHUNK = 1 << 20


def _affine(n: int, k: int) -> FieldDomain:
    return FieldDomain.affine_grassmannian(n, k)


def _syserr_planes(ctx: CheckContext) -> int:
    return ctx.config.syserr_planes


# Exact p = 1 equalities

def _p1_sides(ctx: CheckContext, f: ScalarField, k: int, mu: float, c: float) -> Sides:
    n, j = f.domain.n, field_rank(f)
    lhs = weighted_integral(transform_field(f, k, ctx.order), NormSpec(_affine(n, k), 1.0, mu), ctx.lhs_budget())
    lhs = with_syserr(lhs, plane_syserr(f, k, ctx.budget, _syserr_planes(ctx)))
    rhs = weighted_integral(f, NormSpec(plane_domain(n, j), 1.0, mu), ctx.rhs_budget())
    return Sides(lhs, rhs, c, {'field': f.name})


@CheckRegistry.register('rk_p1_equality', Relation.EQUALITY, "exact p = 1 equality for R_k",
                        {'n': 3, 'k': 1, 'mu': 0.0, 'field': 'gaussian'})
def rk_p1_equality(ctx: CheckContext) -> Sides:
    """∫ (R_k f)(τ)|τ|^μ dτ = ω_{k,1,μ}(n) ∫ f(x)|x|^μ dx."""
    n, k, mu = int(ctx.params['n']), int(ctx.params['k']), float(ctx.params['mu'])
    c = constant('OmegaKPMu', n=n, k=k, p=1, mu=mu)
    return _p1_sides(ctx, euclidean_field(ctx.params['field'], n, k), k, mu, c)


@CheckRegistry.register('rjk_p1_equality', Relation.EQUALITY, "exact p = 1 equality for R_{j,k}",
                        {'n': 3, 'j': 1, 'k': 2, 'mu': 0.0, 'field': 'plane_gaussian'})
def rjk_p1_equality(ctx: CheckContext) -> Sides:
    """∫ (R_{j,k} f)(τ)|τ|^μ dτ = ω_{j,k,1,μ}(n) ∫ f(ζ)|ζ|^μ dζ."""
    n, j, k = int(ctx.params['n']), int(ctx.params['j']), int(ctx.params['k'])
    mu = float(ctx.params['mu'])
    c = constant('OmegaJKPMu', n=n, j=j, k=k, p=1, mu=mu)
    return _p1_sides(ctx, plane_field(ctx.params['field'], n, j, k), k, mu, c)


# Weighted L^p bound on a panel of fields

def _tail_bound(f: ScalarField, n: int, k: int, p: float) -> float:
    """Largest μ keeping both ‖R_k f‖_{p,ν} and ‖f‖_{p,μ} finite for a power-decaying f."""
    decay = f.metadata.decay_exponent
    if f.metadata.support_radius is not None or decay is None or math.isinf(decay):
        return math.inf
    return min(decay - k - (n - k) * inv(p) + k * inv_conj(p), decay - n * inv(p))


@CheckRegistry.register('rk_weighted_bound', Relation.INEQUALITY, "weighted L^p boundedness of R_k",
                        {'n': 3, 'k': 1, 'p': 2.0, 'mu': None, 'members': None},
                        samples=20_000, order=24,
                        notes="attainment for p ≠ 1 is open; best_normalized_ratio is reported as a diagnostic")
def rk_weighted_bound(ctx: CheckContext) -> Sides:
    """‖R_k f‖_{p,ν} ≤ ω_{k,p,μ}(n)‖f‖_{p,μ} with ν = μ − k/p′, on a panel of fields."""
    n, k, p = int(ctx.params['n']), int(ctx.params['k']), float(ctx.params['p'])
    fields = [euclidean_field(member, n, k) for member in ctx.params['members'] or WEIGHTED_PANEL]
    mu = ctx.params['mu']
    if mu is None:
        mu = choose_exponent(k - n * inv(p), min(_tail_bound(f, n, k, p) for f in fields))
    mu = float(mu)
    c = constant('OmegaKPMu', n=n, k=k, p=p, mu=mu)
    nu = mu - k * inv_conj(p)
    lhs_spec, rhs_spec = NormSpec(_affine(n, k), p, nu), NormSpec(FieldDomain.euclidean(n), p, mu)

    comparisons, skipped = [], []
    for index, f in enumerate(fields):
        transformed = transform_field(f, k, ctx.order)
        try:
            precheck(transformed, lhs_spec)
            precheck(f, rhs_spec)
        except IntegrabilityError as error:
            logger.warning(f"rk_weighted_bound: skipping {f.name}: {error}")
            skipped.append({'field': f.name, 'reason': str(error)})
            continue
        lhs = weighted_norm(transformed, lhs_spec, ctx.lhs_budget(f"lhs/{index}"))
        lhs = with_syserr(lhs, plane_syserr(f, k, ctx.budget, _syserr_planes(ctx)))
        rhs = weighted_norm(f, rhs_spec, ctx.rhs_budget(f"rhs/{index}"))
        comparisons.append(Comparison(lhs, rhs, f.name))
    if not comparisons:
        raise IntegrabilityError("at least one admissible panel member", f"μ={mu:g}, p={p:g}")

    ratios = [cmp.lhs.value / (c * cmp.rhs.value) for cmp in comparisons]
    best = int(np.argmax(ratios))
    details = {'mu': mu, 'nu': nu, 'best_normalized_ratio': ratios[best], 'best_member': comparisons[best].label,
               'members': [{'field': cmp.label, 'normalized_ratio': r} for cmp, r in zip(comparisons, ratios)],
               'skipped': skipped}
    return Sides(comparisons[best].lhs, comparisons[best].rhs, c, details, pointwise=comparisons)


# Sharp L^p–L^q bounds and their extremizers

@CheckRegistry.register('rk_lplq_extremizer', Relation.EQUALITY, "sharp L^p–L^q bound for R_k and its extremizers",
                        {'n': 2, 'k': 1, 'transform': None}, samples=20_000)
def rk_lplq_extremizer(ctx: CheckContext) -> Sides:
    """‖R_k f₀‖_q = Ω_k(n)‖f₀‖_p, p = (n+1)/(k+1), q = n+1, f₀ = (1+|Mx|²)^{−(k+1)/2}."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    c = constant('BigOmegaK', n=n, k=k)
    p, q = (n + 1) / (k + 1), n + 1.0
    f0 = euclidean_field({'kind': 'extremizer', **(ctx.params['transform'] or {})}, n, k)
    lhs = weighted_norm(transform_field(f0, k, ctx.order), NormSpec(_affine(n, k), q), ctx.lhs_budget())
    lhs = with_syserr(lhs, plane_syserr(f0, k, ctx.budget, _syserr_planes(ctx)))
    rhs = weighted_norm(f0, NormSpec(FieldDomain.euclidean(n), p), ctx.rhs_budget())
    return Sides(lhs, rhs, c, {'p': p, 'q': q, 'field': f0.name})


@CheckRegistry.register('rjk_lplq_extremizer', Relation.EQUALITY, "equality of the R_{j,k} L^p–L^q ratio at f₀",
                        {'n': 3, 'j': 1, 'k': 2, 'transform': None}, samples=20_000)
def rjk_lplq_extremizer(ctx: CheckContext) -> Sides:
    """‖R_{j,k} f₀‖_q = Ω_{j,k}(n)‖f₀‖_p, p = (n+1)/(k+1), q = (n+1)/(j+1)."""
    n, j, k = int(ctx.params['n']), int(ctx.params['j']), int(ctx.params['k'])
    c = constant('BigOmegaJK', n=n, j=j, k=k)
    p, q = (n + 1) / (k + 1), (n + 1) / (j + 1)
    f0 = plane_field({'kind': 'plane_extremizer', **(ctx.params['transform'] or {})}, n, j, k)
    lhs = weighted_norm(transform_field(f0, k, ctx.order), NormSpec(_affine(n, k), q), ctx.lhs_budget())
    lhs = with_syserr(lhs, plane_syserr(f0, k, ctx.budget, _syserr_planes(ctx)))
    rhs = weighted_norm(f0, NormSpec(plane_domain(n, j), p), ctx.rhs_budget())
    return Sides(lhs, rhs, c, {'p': p, 'q': q, 'field': f0.name})


# Sup-normalized power inequality

def _plane_sup(f: ScalarField, planes, order: int, radon: np.ndarray) -> np.ndarray:
    """sup of f over each plane: closed form, indicator support, or max over quadrature nodes and the foot point."""
    if f.metadata.sup_on_plane is not None:
        return f.metadata.sup_on_plane(planes)
    if f.metadata.indicator:
        return (radon > 0).astype(float)
    size, n, k = planes.directions.shape
    nodes, _ = tensor_tan_rule(k, order)
    nodes = np.concatenate([np.zeros((1, k)), nodes])
    out = np.empty(size)
    step = max(1, _POINTS_PER_CHUNK // nodes.shape[0])
    for start in range(0, size, step):
        part = slice(start, min(size, start + step))
        points = planes.offsets[part, None, :] + np.einsum('nij,pj->npi', planes.directions[part], nodes)
        out[part] = np.max(f(points.reshape(-1, n)).reshape(points.shape[0], -1), axis=-1)
    return out


def _dpp_field(f: ScalarField, k: int, order: int, exact: bool) -> ScalarField:
    n = f.domain.n
    radon_of = transform_field(f, k, order, exact=exact)

    def evaluate(planes):
        radon = radon_of(planes)
        sup = _plane_sup(f, planes, order, radon)
        positive = sup > 0
        # (R/sup)^{n−k}·R^{k+1}; sup^{n−k} on its own underflows far from the support
        ratio = np.divide(radon, sup, out=np.zeros(radon.shape), where=positive)
        return ratio ** (n - k) * np.where(positive, radon, 0.0) ** (k + 1)

    decay = f.metadata.decay_exponent
    if decay is not None and math.isfinite(decay):
        decay = decay * (k + 1) - k * (n + 1)
    return ScalarField(_affine(n, k), evaluate,
                       FieldMetadata(decay_exponent=decay, support_radius=f.metadata.support_radius, family='dpp'),
                       f"dpp[{f.name}]")


@CheckRegistry.register('dpp_inequality', Relation.INEQUALITY, "sup-normalized power inequality for R_k",
                        {'n': 3, 'k': 1, 'members': None}, samples=20_000, order=24)
def dpp_inequality(ctx: CheckContext) -> Sides:
    """∫ (R_k f)^{n+1}/‖f|_τ‖_∞^{n−k} dτ ≤ C ‖f‖₁^{k+1} for nonnegative bounded integrable f."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    c = constant('DppC', n=n, k=k)
    comparisons = []
    for index, member in enumerate(ctx.params['members'] or DPP_PANEL):
        f = euclidean_field(member, n, k)
        exact = f.metadata.indicator and 'kplane' in f.metadata.closed_form_transforms
        lhs = weighted_integral(_dpp_field(f, k, ctx.order, exact), NormSpec(_affine(n, k)),
                                ctx.lhs_budget(f"lhs/{index}"))
        if not exact:
            lhs = with_syserr(lhs, plane_syserr(f, k, ctx.budget, _syserr_planes(ctx)), n + 1)
        rhs = weighted_integral(f, NormSpec(FieldDomain.euclidean(n)), ctx.rhs_budget(f"rhs/{index}")).power(k + 1)
        comparisons.append(Comparison(lhs, rhs, f.name))
    ratios = [cmp.lhs.value / (c * cmp.rhs.value) for cmp in comparisons]
    best = int(np.argmax(ratios))
    details = {'members': [{'field': cmp.label, 'normalized_ratio': r} for cmp, r in zip(comparisons, ratios)]}
    return Sides(comparisons[best].lhs, comparisons[best].rhs, c, details, pointwise=comparisons)


# Section volumes

def _section_power_integral(ctx: CheckContext, star: StarSet, k: int, p: float, weight: float,
                            label: str) -> Estimate:
    """∫_{A_{n,k}} V_k(S∩τ)^p |τ|^{weight·p} dτ; k = 0 gives ∫_S |x|^{weight·p} dx."""
    n = star.dim
    if k == 0:
        return weighted_integral(star_indicator(star), NormSpec(FieldDomain.euclidean(n), p, weight),
                                 ctx.budget.derive(label))
    sections = section_volume_field(star, k, ctx.order)
    value = weighted_integral(sections, NormSpec(_affine(n, k), p, weight), ctx.budget.derive(label))
    if star.ellipsoid is None:
        value = with_syserr(value, plane_syserr(star_indicator(star), k, ctx.budget, _syserr_planes(ctx)), p)
    return value


def _volume(star: StarSet, q: QuadratureSpec) -> Estimate:
    body = star.ellipsoid
    return Estimate.exact(body.volume()) if body is not None else star_volume(star, q)


def _is_ball(star: StarSet) -> bool:
    body = star.ellipsoid
    if star.kind is StarKind.BALL:
        return True
    return body is not None and np.allclose(body.matrix, body.matrix[0, 0] * np.eye(star.dim))


@CheckRegistry.register('section_weighted', Relation.INEQUALITY, "weighted mean section volumes of a set",
                        {'n': 3, 'k': 1, 'p': 2.0, 'mu': None, 'star': 'ellipsoid'})
def section_weighted(ctx: CheckContext) -> Sides:
    """∫ V_k(S∩τ)^p |τ|^{νp} dτ ≤ ω_{k,p,μ}(n)^p ∫_S |x|^{μp} dx, ν = μ − k/p′."""
    n, k, p = int(ctx.params['n']), int(ctx.params['k']), float(ctx.params['p'])
    star = build_star(ctx.params['star'], n, 'ellipsoid')
    mu = ctx.params['mu']
    mu = choose_exponent(k - n * inv(p)) if mu is None else float(mu)
    c = constant('OmegaKPMu', n=n, k=k, p=p, mu=mu) ** p
    nu = mu - k * inv_conj(p)
    lhs = _section_power_integral(ctx, star, k, p, nu, 'lhs')
    rhs = _section_power_integral(ctx, star, 0, p, mu, 'rhs')
    relation = Relation.EQUALITY if p == 1 else None
    return Sides(lhs, rhs, c, {'mu': mu, 'nu': nu, 'star': star.describe()}, relation)


@CheckRegistry.register('section_p1_equality', Relation.EQUALITY, "exact p = 1 equality for section volumes",
                        {'n': 3, 'k': 1, 'mu': 1.0, 'star': 'ellipsoid'})
def section_p1_equality(ctx: CheckContext) -> Sides:
    """∫ V_k(S∩τ)|τ|^μ dτ = ω_{k,1,μ}(n) ∫_S |x|^μ dx."""
    n, k, mu = int(ctx.params['n']), int(ctx.params['k']), float(ctx.params['mu'])
    star = build_star(ctx.params['star'], n, 'ellipsoid')
    c = constant('OmegaKPMu', n=n, k=k, p=1, mu=mu)
    lhs = _section_power_integral(ctx, star, k, 1.0, mu, 'lhs')
    rhs = _section_power_integral(ctx, star, 0, 1.0, mu, 'rhs')
    return Sides(lhs, rhs, c, {'star': star.describe()})


@CheckRegistry.register('fubini_identity', Relation.EQUALITY, "integral of section volumes equals the volume",
                        {'n': 3, 'k': 1, 'star': 'ellipsoid'})
def fubini_identity(ctx: CheckContext) -> Sides:
    """∫ V_k(S∩τ) dτ = V_n(S)."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    star = build_star(ctx.params['star'], n, 'ellipsoid')
    lhs = _section_power_integral(ctx, star, k, 1.0, 0.0, 'lhs')
    return Sides(lhs, _volume(star, ctx.rhs_budget()), 1.0, {'star': star.describe()})


@CheckRegistry.register('section_jk_weighted', Relation.INEQUALITY, "mean volumes of cross-sections across dimensions",
                        {'n': 3, 'j': 1, 'k': 2, 'p': 2.0, 'mu': None, 'star': 'ellipsoid'})
def section_jk_weighted(ctx: CheckContext) -> Sides:
    """∫ V_k(S∩τ)^p |τ|^{νp} dτ ≤ ω_{j,k,p,μ}(n)^p ∫ V_j(S∩ζ)^p |ζ|^{μp} dζ, ν = μ − (k−j)/p′."""
    n, j, k = int(ctx.params['n']), int(ctx.params['j']), int(ctx.params['k'])
    p = float(ctx.params['p'])
    star = build_star(ctx.params['star'], n, 'ellipsoid')
    mu = ctx.params['mu']
    mu = choose_exponent(k - n * inv(p) - j * inv_conj(p)) if mu is None else float(mu)
    c = constant('OmegaJKPMu', n=n, j=j, k=k, p=p, mu=mu) ** p
    nu = mu - (k - j) * inv_conj(p)
    lhs = _section_power_integral(ctx, star, k, p, nu, 'lhs')
    rhs = _section_power_integral(ctx, star, j, p, mu, 'rhs')
    relation = Relation.EQUALITY if p == 1 else None
    return Sides(lhs, rhs, c, {'mu': mu, 'nu': nu, 'star': star.describe()}, relation)


@CheckRegistry.register('section_lplq', Relation.INEQUALITY, "section-power bound from the sharp L^p–L^q inequality",
                        {'n': 3, 'k': 1, 'star': 'ellipsoid'})
def section_lplq(ctx: CheckContext) -> Sides:
    """∫ V_k(S∩τ)^{n+1} dτ ≤ 2^{k−n}(σ_k^n/σ_n^k) V_n(S)^{k+1}."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    star = build_star(ctx.params['star'], n, 'ellipsoid')
    c = constant('SectionLpLqC', n=n, k=k)
    lhs = _section_power_integral(ctx, star, k, n + 1.0, 0.0, 'lhs')
    rhs = _volume(star, ctx.rhs_budget()).power(k + 1)
    return Sides(lhs, rhs, c, {'star': star.describe()})


@CheckRegistry.register('gardner_inequality', Relation.INEQUALITY, "section-power inequality for bounded sets",
                        {'n': 3, 'k': 1, 'star': 'ball'},
                        notes="equality for ellipsoids; judged as an equality when the set is one")
def gardner_inequality(ctx: CheckContext) -> Sides:
    """∫ V_k(S∩τ)^{n+1} dτ ≤ C V_n(S)^{k+1} with C = b_k^{n+1}b_{n(k+1)}/(b_n^{k+1}b_{k(n+1)})."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    star = build_star(ctx.params['star'], n, 'ball')
    c = constant('GardnerC', n=n, k=k)
    lhs = _section_power_integral(ctx, star, k, n + 1.0, 0.0, 'lhs')
    rhs = _volume(star, ctx.rhs_budget()).power(k + 1)
    relation = Relation.EQUALITY if star.ellipsoid is not None else None
    return Sides(lhs, rhs, c, {'star': star.describe()}, relation)


@CheckRegistry.register('schneider_inequality', Relation.INEQUALITY, "section-power inequality for convex bodies",
                        {'n': 3, 'k': 1, 'm': 2, 'star': 'ball'},
                        notes="equality for balls, and for ellipsoids when m = n")
def schneider_inequality(ctx: CheckContext) -> Sides:
    """∫ V_k(K∩τ)^{m+1} dτ ≤ C V_n(K)^{1+km/n} with C = b_k^{m+1}b_{n+km}/(b_n^{(n+km)/n}b_{k+km})."""
    n, k, m = int(ctx.params['n']), int(ctx.params['k']), int(ctx.params['m'])
    star = build_star(ctx.params['star'], n, 'ball')
    c = constant('SchneiderC', n=n, k=k, m=m)
    lhs = _section_power_integral(ctx, star, k, m + 1.0, 0.0, 'lhs')
    rhs = _volume(star, ctx.rhs_budget()).power(1.0 + k * m / n)
    equality = _is_ball(star) or (star.ellipsoid is not None and m == n)
    return Sides(lhs, rhs, c, {'star': star.describe()}, Relation.EQUALITY if equality else None)


@CheckRegistry.register('asymptotic_norms', Relation.EQUALITY, "asymptotics of the norms as n → ∞",
                        {'n': 1_000_000, 'j': 0, 'k': 1, 'p': 2.0, 'mu': 0.5}, samples=1, rel_tol=1e-3)
def asymptotic_norms(ctx: CheckContext) -> Sides:
    """ω_{j,k,p,μ}(n)·n^{(k−j)/2p′} → (2π)^{(k−j)/2p′} p^{(k−j)/2}."""
    n, j, k = int(ctx.params['n']), int(ctx.params['j']), int(ctx.params['k'])
    p, mu = float(ctx.params['p']), float(ctx.params['mu'])
    lhs = Estimate.exact(scaled_norm_constant(j, k, p, mu, n))
    return Sides(lhs, Estimate.exact(asymptotic_limit(j, k, p)), 1.0)
