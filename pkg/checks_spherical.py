"""Checks of the stereographic transfer and of the Funk-type transforms on
spheres and compact Grassmannians."""
import numpy as np

from check_support import choose_exponent, frame_syserr, funk_mu_bounds, plane_field, sphere_field, with_syserr
from errors import DomainError
from fields_and_oracles import (FieldDomain, ScalarField, lines_from_sphere, plane_gaussian, pullback_to_sphere,
                                pushforward_to_plane)
from functionals import NormSpec, alpha, alpha_tilde1, beta, beta_tilde1, weighted_integral, weighted_norm
from grassmann_geometry import sample_affine_planes
from logger import GetLogger
from quadrature import Estimate
from special_constants import constant, inv_conj, sphere_area
from transforms import funk_field, funk_jk_values, funk_values, jk_values, radon_from_funk
from verification_harness import CheckContext, CheckRegistry, Comparison, Relation, Sides

logger = GetLogger()(name=__name__)

LIFT_SUPPORT = 1.5
DIRECTIONS = ('affine_to_compact', 'compact_to_affine')


def _grassmannian(n: int, rank: int) -> FieldDomain:
    return FieldDomain.grassmannian(n, rank) if rank > 1 else FieldDomain.sphere(n)


@CheckRegistry.register('lift_conjugation', Relation.EQUALITY,
                        "R_{j,k} as a conjugated Funk transform on the lifted Grassmannian",
                        {'n': 2, 'j': 0, 'k': 1, 'planes': 20, 'field': 'gaussian'}, samples=50_000)
def lift_conjugation(ctx: CheckContext) -> Sides:
    """(R_{j,k} f)(τ) = (σ_k/σ_j)ρ₂(τ)(F_{j+1,k+1}Λ_jρ₁^{−1}f)(γτ) at random planes."""
    n, j, k = int(ctx.params['n']), int(ctx.params['j']), int(ctx.params['k'])
    f = plane_field(ctx.params['field'], n, j, k)
    rng = ctx.budget.stream('planes').generator()
    planes = sample_affine_planes(rng, int(ctx.params['planes']), n, k, support_radius=LIFT_SUPPORT).planes
    direct = jk_values(f, planes, ctx.order)
    syserr = np.abs(direct - jk_values(f, planes, max(2, ctx.order // 2)))
    lifted = pullback_to_sphere(f, j, k)

    comparisons = []
    for index in range(len(planes)):
        lhs = Estimate(float(direct[index]), 0.0, ctx.order, syserr=float(syserr[index]))
        rhs = radon_from_funk(lifted, planes.plane(index), ctx.rhs_budget(f"rhs/{index}"))
        comparisons.append(Comparison(lhs, rhs, f"plane {index} |τ|={planes.distances()[index]:.3f}"))
    return Sides(comparisons[0].lhs, comparisons[0].rhs, 1.0, {'field': f.name}, pointwise=comparisons)


@CheckRegistry.register('measure_transfer', Relation.EQUALITY,
                        "integrals over A_{n,k} as weighted integrals over G_{n+1,k+1}",
                        {'n': 2, 'k': 1, 'direction': 'affine_to_compact', 'field': 'random_smooth'},
                        order=16)
def measure_transfer(ctx: CheckContext) -> Sides:
    """∫_{A_{n,k}} φ dτ = (σ_n/σ_k)∫_{G_{n+1,k+1}} φ(γ^{−1}τ₀)(cos d)^{−n−1} d*τ₀, and its inverse."""
    n, k, direction = int(ctx.params['n']), int(ctx.params['k']), ctx.params['direction']
    if direction == 'affine_to_compact':
        phi = plane_gaussian(n, k)
        lhs = weighted_integral(phi, NormSpec(FieldDomain.affine_grassmannian(n, k)), ctx.lhs_budget())
        lifted = pullback_to_sphere(phi, k, n)
        rhs = weighted_integral(lifted, NormSpec(_grassmannian(n + 1, k + 1)), ctx.rhs_budget())
        c = sphere_area(n) / sphere_area(k)
    elif direction == 'compact_to_affine':
        psi = sphere_field(ctx.params['field'], n + 1)
        g = funk_field(psi, k + 1, ctx.order)
        lhs = weighted_integral(g, NormSpec(FieldDomain.grassmannian(n + 1, k + 1)), ctx.lhs_budget())
        flat = pushforward_to_plane(g, n)
        rhs = weighted_integral(flat, NormSpec(FieldDomain.affine_grassmannian(n, k)), ctx.rhs_budget())
        c = sphere_area(k) / sphere_area(n)
    else:
        raise DomainError(f"direction among {', '.join(DIRECTIONS)}", f"got {direction!r}")
    return Sides(lhs, rhs, c, {'direction': direction})


# Funk transforms

def _funk_sides(ctx: CheckContext, psi: ScalarField, k: int, p: float, lhs_weight=None, rhs_weight=None,
                norm: bool = True):
    n = psi.domain.n
    transformed = funk_field(psi, k, ctx.order)
    lhs_spec = NormSpec(FieldDomain.grassmannian(n, k), p, pole_weight=lhs_weight)
    rhs_spec = NormSpec(FieldDomain.sphere(n), p, pole_weight=rhs_weight)
    reduce = weighted_norm if norm else weighted_integral
    lhs = reduce(transformed, lhs_spec, ctx.lhs_budget())
    relative = frame_syserr(lambda frames, order: funk_values(psi, frames, order), n, k, ctx.budget,
                            ctx.config.syserr_planes)
    lhs = with_syserr(lhs, relative)
    return lhs, reduce(psi, rhs_spec, ctx.rhs_budget())


@CheckRegistry.register('funk_sharp', Relation.INEQUALITY, "sharp L^{n/k}–L^n bound for the Funk transform",
                        {'n': 3, 'k': 2, 'field': 'random_smooth'},
                        notes="equality for constant functions")
def funk_sharp(ctx: CheckContext) -> Sides:
    """‖F_k φ‖_{L^n(G_{n,k})} ≤ ‖φ‖_{L^{n/k}(S^{n−1})} against probability measures."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    psi = sphere_field(ctx.params['field'], n)
    transformed = funk_field(psi, k, ctx.order)
    lhs = weighted_norm(transformed, NormSpec(FieldDomain.grassmannian(n, k), float(n)), ctx.lhs_budget())
    lhs = with_syserr(lhs, frame_syserr(lambda frames, order: funk_values(psi, frames, order), n, k,
                                        ctx.budget, ctx.config.syserr_planes))
    rhs = weighted_norm(psi, NormSpec(FieldDomain.sphere(n), n / k), ctx.rhs_budget())
    relation = Relation.EQUALITY if psi.metadata.family == 'constant' else None
    return Sides(lhs, rhs, 1.0, {'field': psi.name}, relation)


@CheckRegistry.register('funk_mean_value', Relation.EQUALITY, "mean-value property of the Funk transform",
                        {'n': 3, 'k': 2, 'field': 'random_smooth'})
def funk_mean_value(ctx: CheckContext) -> Sides:
    """∫_{G_{n,k}} F_k φ d*τ₀ = ∫_{S^{n−1}} φ d*θ."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    lhs, rhs = _funk_sides(ctx, sphere_field(ctx.params['field'], n), k, 1.0, norm=False)
    return Sides(lhs, rhs, 1.0)


def _funk_exponent(params, n: int, j: int, k: int, p: float) -> float:
    if params['mu'] is not None:
        return float(params['mu'])
    return choose_exponent(*funk_mu_bounds(n, j, k, p))


@CheckRegistry.register('funk_weighted', Relation.INEQUALITY, "weighted L^p bound for F_{j,k} with pole weights",
                        {'n': 3, 'j': 1, 'k': 2, 'p': 2.0, 'mu': None, 'field': 'random_smooth'},
                        notes="p = 1 is an equality")
def funk_weighted(ctx: CheckContext) -> Sides:
    """(∫|F_{j,k}φ|^p α d*τ₀)^{1/p} ≤ c(∫|φ|^p β d*ζ₀)^{1/p}; j = 1 reads φ on the sphere."""
    n, j, k = int(ctx.params['n']), int(ctx.params['j']), int(ctx.params['k'])
    p = float(ctx.params['p'])
    psi = sphere_field(ctx.params['field'], n)
    mu = _funk_exponent(ctx.params, n, j, k, p)
    c = constant('FunkWeightedC', n=n, j=j, k=k, p=p, mu=mu)
    phi = lines_from_sphere(psi) if j == 1 else funk_field(psi, j, ctx.order)

    transformed = ScalarField(FieldDomain.grassmannian(n, k),
                              lambda frames: funk_jk_values(phi, frames, ctx.order),
                              name=f"F_{j},{k}[{phi.name}]")
    lhs = weighted_norm(transformed, NormSpec(FieldDomain.grassmannian(n, k), p, pole_weight=alpha(j, k, n, p, mu)),
                        ctx.lhs_budget())
    lhs = with_syserr(lhs, frame_syserr(lambda frames, order: funk_jk_values(phi, frames, order), n, k,
                                        ctx.budget, ctx.config.syserr_planes))
    source = psi if j == 1 else phi
    rhs = weighted_norm(source, NormSpec(_grassmannian(n, j), p, pole_weight=beta(j, k, n, p, mu)),
                        ctx.rhs_budget())
    relation = Relation.EQUALITY if p == 1 else None
    return Sides(lhs, rhs, c, {'mu': mu, 'nu': mu - (k - j) * inv_conj(p), 'field': psi.name}, relation)


@CheckRegistry.register('funk_weighted_p1', Relation.EQUALITY, "explicit p = 1 equality for the weighted Funk transform",
                        {'n': 3, 'k': 2, 'mu': -0.5, 'field': 'random_smooth'})
def funk_weighted_p1(ctx: CheckContext) -> Sides:
    """∫ F_k φ α̃₁ d*τ₀ = c̃₁ ∫ φ β̃₁ d*θ with μ > k − n."""
    n, k, mu = int(ctx.params['n']), int(ctx.params['k']), float(ctx.params['mu'])
    c = constant('FunkTildeC1', n=n, k=k, mu=mu)
    psi = sphere_field(ctx.params['field'], n)
    lhs, rhs = _funk_sides(ctx, psi, k, 1.0, alpha_tilde1(k, n, mu), beta_tilde1(k, n, mu), norm=False)
    return Sides(lhs, rhs, c, {'field': psi.name})


@CheckRegistry.register('funk_jk_weighted', Relation.INEQUALITY, "weighted comparison of F_k ψ with F_j ψ",
                        {'n': 4, 'j': 2, 'k': 3, 'p': 2.0, 'mu': None, 'field': 'random_smooth'})
def funk_jk_weighted(ctx: CheckContext) -> Sides:
    """(∫|F_kψ|^p α d*τ₀)^{1/p} ≤ c(∫|F_jψ|^p β d*ζ₀)^{1/p}."""
    n, j, k = int(ctx.params['n']), int(ctx.params['j']), int(ctx.params['k'])
    p = float(ctx.params['p'])
    psi = sphere_field(ctx.params['field'], n)
    mu = _funk_exponent(ctx.params, n, j, k, p)
    c = constant('FunkWeightedC', n=n, j=j, k=k, p=p, mu=mu)
    lhs = weighted_norm(funk_field(psi, k, ctx.order),
                        NormSpec(FieldDomain.grassmannian(n, k), p, pole_weight=alpha(j, k, n, p, mu)),
                        ctx.lhs_budget())
    lhs = with_syserr(lhs, frame_syserr(lambda frames, order: funk_values(psi, frames, order), n, k,
                                        ctx.budget, ctx.config.syserr_planes))
    source = psi if j == 1 else funk_field(psi, j, ctx.order)
    rhs = weighted_norm(source, NormSpec(_grassmannian(n, j), p, pole_weight=beta(j, k, n, p, mu)),
                        ctx.rhs_budget())
    if j > 1:
        rhs = with_syserr(rhs, frame_syserr(lambda frames, order: funk_values(psi, frames, order), n, j,
                                            ctx.budget, ctx.config.syserr_planes))
    relation = Relation.EQUALITY if p == 1 else None
    return Sides(lhs, rhs, c, {'mu': mu, 'field': psi.name}, relation)
