"""Checks on star sets: weighted section integrals on G_{n,k}, the
Busemann bound and its ellipsoid equality, dual Quermassintegrals."""
import math

from check_support import build_star, choose_exponent, funk_mu_bounds, section_power
from errors import DomainError
from fields_and_oracles import FieldDomain, StarSet, radial_power
from functionals import (NormSpec, alpha, alpha1, alpha2, alpha_tilde1, beta, beta1, beta_tilde1, dual_quermass,
                         star_volume, weighted_integral)
from logger import GetLogger
from quadrature import Estimate
from special_constants import ball_volume, constant
from verification_harness import CheckContext, CheckRegistry, Relation, Sides

logger = GetLogger()(name=__name__)

CASES = ('general', 'alpha2')


def bump_order(n: int, k: int, m: float, mu: float) -> int:
    """Smallest integer γ ≥ 1 with k − μ − n + γm > −1, so ρ^m·|θ_n|^{k−μ−n} is integrable."""
    return max(1, math.floor((n - k - 1 + mu) / m) + 1)


def _sections(ctx: CheckContext, star: StarSet, k: int, m: float, p: float, weight=None,
              label: str = 'lhs') -> Estimate:
    return section_power(star, k, m, p, ctx.budget.derive(label), ctx.config.syserr_planes, weight)


def _radial(ctx: CheckContext, star: StarSet, m: float, weight=None, label: str = 'rhs') -> Estimate:
    """∫_{S^{n−1}} ρ_L^m w d*θ."""
    return weighted_integral(radial_power(star, m), NormSpec(FieldDomain.sphere(star.dim), pole_weight=weight),
                             ctx.budget.derive(label))


def _volume(star: StarSet, ctx: CheckContext) -> Estimate:
    body = star.ellipsoid
    return Estimate.exact(body.volume()) if body is not None else star_volume(star, ctx.rhs_budget())


@CheckRegistry.register('star_weighted_equality', Relation.EQUALITY,
                        "p = 1 weighted equality for sections of star sets",
                        {'n': 3, 'k': 2, 'm': None, 'mu': 0.0, 'star': None})
def star_weighted_equality(ctx: CheckContext) -> Sides:
    """∫ Ṽ_m(L∩τ₀) α̃₁ d*τ₀ = c̃₁ b_k ∫ ρ_L^m β̃₁ d*θ.

    Without a star set an equatorial bump ρ = |θ_n|^γ is used with the
    smallest γ that makes the right side finite."""
    n, k, mu = int(ctx.params['n']), int(ctx.params['k']), float(ctx.params['mu'])
    m = float(ctx.params['m'] if ctx.params['m'] is not None else k)
    c = constant('FunkTildeC1', n=n, k=k, mu=mu) * ball_volume(k)
    descriptor = ctx.params['star'] or {'kind': 'bump', 'gamma': bump_order(n, k, m, mu)}
    star = build_star(descriptor, n)
    lhs = _sections(ctx, star, k, m, 1.0, alpha_tilde1(k, n, mu))
    rhs = _radial(ctx, star, m, beta_tilde1(k, n, mu))
    return Sides(lhs, rhs, c, {'m': m, 'gamma': star.equator_order, 'star': star.describe()})


@CheckRegistry.register('star_weighted_bound', Relation.INEQUALITY, "weighted L^p bounds for sections of star sets",
                        {'n': 3, 'k': 2, 'm': None, 'p': 2.0, 'mu': None, 'case': 'general',
                         'star': 'random_smooth'},
                        notes="constants are sharp over star sets; sharpness among star bodies with "
                              "continuous radial function is unknown")
def star_weighted_bound(ctx: CheckContext) -> Sides:
    """∫ Ṽ_m(L∩τ₀)^p α₁ d*τ₀ ≤ (c₁b_k)^p ∫ ρ_L^{mp} β₁ d*θ; the ``alpha2`` case
    takes p = n/k, μ = 0 against (c₁b_k)^{n/k}/b_n · Ṽ_{mn/k}(L)."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    m = float(ctx.params['m'] if ctx.params['m'] is not None else k)
    star = build_star(ctx.params['star'], n, 'random_smooth')
    case = ctx.params['case']
    if case == 'alpha2':
        p = n / k
        c = (constant('FunkWeightedC1', n=n, k=k, p=p, mu=0.0) * ball_volume(k)) ** p / ball_volume(n)
        lhs = _sections(ctx, star, k, m, p, alpha2(k, n))
        rhs = dual_quermass(star, m * p, ctx.rhs_budget())
        return Sides(lhs, rhs, c, {'m': m, 'p': p, 'mu': 0.0, 'case': case, 'star': star.describe()})
    if case != 'general':
        raise DomainError(f"case among {', '.join(CASES)}", f"got {case!r}")

    p = float(ctx.params['p'])
    order = star.equator_order * m
    mu = ctx.params['mu']
    mu = choose_exponent(*funk_mu_bounds(n, 1, k, p, order, order)) if mu is None else float(mu)
    c = (constant('FunkWeightedC1', n=n, k=k, p=p, mu=mu) * ball_volume(k)) ** p
    lhs = _sections(ctx, star, k, m, p, alpha1(k, n, p, mu))
    rhs = _radial(ctx, star, m * p, beta1(k, n, p, mu))
    relation = Relation.EQUALITY if p == 1 else None
    return Sides(lhs, rhs, c, {'m': m, 'p': p, 'mu': mu, 'case': case, 'star': star.describe()}, relation)


@CheckRegistry.register('sections_of_sections', Relation.INEQUALITY,
                        "weighted comparison of j- and k-dimensional central sections",
                        {'n': 3, 'j': 1, 'k': 2, 'p': 2.0, 'mu': None, 'star': 'random_smooth'})
def sections_of_sections(ctx: CheckContext) -> Sides:
    """∫ Ṽ_j(L∩τ₀)^p α d*τ₀ ≤ (c b_k/b_j)^p ∫ V_j(L∩ζ₀)^p β d*ζ₀."""
    n, j, k = int(ctx.params['n']), int(ctx.params['j']), int(ctx.params['k'])
    p = float(ctx.params['p'])
    star = build_star(ctx.params['star'], n, 'random_smooth')
    order = star.equator_order * j
    mu = ctx.params['mu']
    mu = choose_exponent(*funk_mu_bounds(n, j, k, p, order, order)) if mu is None else float(mu)
    c = (constant('FunkWeightedC', n=n, j=j, k=k, p=p, mu=mu) * ball_volume(k) / ball_volume(j)) ** p
    lhs = _sections(ctx, star, k, j, p, alpha(j, k, n, p, mu), 'lhs')
    rhs = _sections(ctx, star, j, j, p, beta(j, k, n, p, mu), 'rhs')
    relation = Relation.EQUALITY if p == 1 else None
    return Sides(lhs, rhs, c, {'mu': mu, 'star': star.describe()}, relation)


@CheckRegistry.register('busemann', Relation.INEQUALITY, "Busemann intersection inequality",
                        {'n': 3, 'k': 2, 'star': 'random_smooth'},
                        notes="equality for centred ellipsoids")
def busemann(ctx: CheckContext) -> Sides:
    """∫_{G_{n,k}} V_k(L∩τ₀)^n d*τ₀ ≤ (b_k^n/b_n^k) V_n(L)^k."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    star = build_star(ctx.params['star'], n, 'random_smooth')
    c = constant('BusemannC', n=n, k=k)
    lhs = _sections(ctx, star, k, k, float(n))
    rhs = _volume(star, ctx).power(k)
    relation = Relation.EQUALITY if star.ellipsoid is not None else None
    return Sides(lhs, rhs, c, {'star': star.describe()}, relation)


@CheckRegistry.register('furstenberg_tzkoni', Relation.EQUALITY, "Furstenberg–Tzkoni formula for ellipsoids",
                        {'n': 3, 'k': 2, 'star': 'ellipsoid'})
def furstenberg_tzkoni(ctx: CheckContext) -> Sides:
    """∫_{G_{n,k}} V_k(E∩τ₀)^n d*τ₀ = (b_k^n/b_n^k) V_n(E)^k with exact section volumes."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    star = build_star(ctx.params['star'], n, 'ellipsoid')
    if star.ellipsoid is None:
        raise DomainError("an ellipsoid or a ball", f"got {star.kind.value}")
    lhs = _sections(ctx, star, k, k, float(n))
    return Sides(lhs, _volume(star, ctx).power(k), constant('BusemannC', n=n, k=k), {'star': star.describe()})


@CheckRegistry.register('dual_quermass_identity', Relation.EQUALITY,
                        "dual Quermassintegral as a mean of section volumes",
                        {'n': 3, 'k': 2, 'star': 'random_smooth'})
def dual_quermass_identity(ctx: CheckContext) -> Sides:
    """Ṽ_k(L) = (b_n/b_k) ∫_{G_{n,k}} V_k(L∩τ₀) d*τ₀."""
    n, k = int(ctx.params['n']), int(ctx.params['k'])
    star = build_star(ctx.params['star'], n, 'random_smooth')
    lhs = dual_quermass(star, k, ctx.lhs_budget())
    rhs = _sections(ctx, star, k, k, 1.0, label='rhs')
    return Sides(lhs, rhs, ball_volume(n) / ball_volume(k), {'star': star.describe()})
