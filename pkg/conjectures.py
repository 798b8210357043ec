"""Bounded searches for counterexamples to two open sharp-constant statements.

``JkLpLq``: ‖R_{j,k} f‖_q ≤ Ω_{j,k}(n)‖f‖_p with p = (n+1)/(k+1), q = (n+1)/(j+1),
attained at f₀ = (1+|ζ|²)^{−(k+1)/2} and its affine images.

``StarSections``: for 1 ≤ j ≤ k < n and every star set L,
∫_{G_{n,k}} Ṽ_m(L∩τ₀)^{n/j} d*τ₀ ≤ (b_k/b_j)^{n/j} (∫_{G_{n,j}} Ṽ_m(L∩ζ₀)^{n/k} d*ζ₀)^{k/j},
with equality for centred balls.

An explorer never proves anything. It reports the largest ratio it found and
flags a violation only when the confirmed ratio clears the bound by more than
the statistical allowance.
"""
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple, Type

import numpy as np

from check_support import (affine_map, build_star, field_rank, plane_domain, plane_field, plane_syserr, section_power,
                           transform_field, with_syserr)
from config import Config
from errors import DomainError, IntegrabilityError
from fields_and_oracles import FieldDomain, FieldMetadata, ScalarField
from functionals import NormSpec, weighted_norm
from grassmann_geometry import AffineMap, apply_affine_batch
from logger import GetLogger
from quadrature import Estimate, QuadratureSpec
from special_constants import constant
from streams import RandomStream
from verification_harness import TolerancePolicy

logger = GetLogger()(name=__name__)

DEFAULT_MEMBERS = 16
DEFAULT_REFINE = 4
DEFAULT_SAMPLES = 20_000
DEFAULT_ORDER = 24
INITIAL_STEP = 0.5


class ConjectureTarget(Enum):
    JK_LP_LQ = 'JkLpLq'
    STAR_SECTIONS = 'StarSections'


@dataclass(frozen=True)
class ConjectureReport:
    target: ConjectureTarget
    family: str
    n: int
    j: int
    k: int
    bound: float
    seed: int
    best_ratio: float
    best_stderr: float
    best_params: Mapping[str, Any]
    search_ratio: float
    violation_found: bool
    members_evaluated: int
    members_skipped: int
    members_inconclusive: int
    evaluations: int
    m: Optional[float] = None
    options: Mapping[str, Any] = field(default_factory=dict)
    wall_time: Optional[float] = None

    @property
    def normalized_ratio(self) -> float:
        return self.best_ratio / self.bound if self.bound else math.nan


def _log_uniform(rng: np.random.Generator, low: float, high: float, size=None):
    return np.exp(rng.uniform(math.log(low), math.log(high), size))


def power_field(n: int, j: int, decay: float, transform: AffineMap = None) -> ScalarField:
    """(1+|Mζ|²)^{−a/2} on A_{n,j}, on ℝⁿ for j = 0; a = (k+1) gives the extremizer."""
    power = -0.5 * decay
    identity = transform is None or transform.is_identity
    metadata = FieldMetadata(decay_exponent=decay, family='power', params={'decay': decay},
                             radial_profile=(lambda s: (1.0 + s) ** power) if identity else None)
    if j == 0:
        domain = FieldDomain.euclidean(n)
        if identity:
            evaluate = lambda x: (1.0 + np.sum(np.asarray(x) ** 2, axis=-1)) ** power
        else:
            evaluate = lambda x: (1.0 + np.sum(transform(x) ** 2, axis=-1)) ** power
    else:
        domain = FieldDomain.affine_grassmannian(n, j)
        if identity:
            evaluate = lambda planes: (1.0 + planes.squared_distances()) ** power
        else:
            evaluate = lambda planes: (1.0 + apply_affine_batch(transform, planes).squared_distances()) ** power
    return ScalarField(domain, evaluate, metadata, f"power[{decay:.3g}]")


# Families

class SearchFamily:
    """Parametric family searched by an explorer.

    ``draw`` returns JSON-ready parameters of a random member, ``perturb`` a
    nearby member, ``build`` the field or star set the parameters describe."""
    target: ConjectureTarget
    name: str

    def __init__(self, n: int, j: int, k: int, options: Mapping[str, Any] = None):
        self.n, self.j, self.k = n, j, k
        self.options = dict(options or {})

    @property
    def default_members(self) -> int:
        return DEFAULT_MEMBERS

    def draw(self, rng: np.random.Generator, index: int) -> Dict[str, Any]:
        raise NotImplementedError

    def perturb(self, params: Mapping[str, Any], rng: np.random.Generator, step: float) -> Dict[str, Any]:
        raise NotImplementedError

    def build(self, params: Mapping[str, Any]):
        raise NotImplementedError


class FamilyRegistry:
    _instances: Dict[Tuple[ConjectureTarget, str], Type[SearchFamily]] = {}

    @classmethod
    def register(cls, target: ConjectureTarget, name: str):
        def decorator(family: Type[SearchFamily]):
            family.target, family.name = target, name
            cls._instances[(target, name)] = family
            return family
        return decorator

    @classmethod
    def names(cls, target: ConjectureTarget) -> List[str]:
        return [name for key, name in cls._instances if key is target]

    @classmethod
    def get(cls, target: ConjectureTarget, name: str) -> Type[SearchFamily]:
        try:
            return cls._instances[(target, name)]
        except KeyError:
            raise DomainError(f"family among {', '.join(cls.names(target))} for {target.value}",
                              f"got {name!r}") from None


@FamilyRegistry.register(ConjectureTarget.JK_LP_LQ, 'extremizer')
class ExtremizerFamily(SearchFamily):
    """f₀∘M with M = diag(d)/s + t; only scalings, translations and diagonal maps are searched.

    For j ≥ 1 diagonal maps are opt-in (``moves``); |Mζ| is then the distance
    of the image plane M(ζ) to the origin."""
    MOVES = ('scale', 'translation', 'diag')

    @property
    def moves(self) -> Tuple[str, ...]:
        default = self.MOVES if self.j == 0 else ('scale', 'translation')
        moves = tuple(self.options.get('moves', default))
        unknown = sorted(set(moves) - set(self.MOVES))
        if unknown:
            raise DomainError(f"moves among {', '.join(self.MOVES)}", f"got {', '.join(unknown)}")
        return moves

    def draw(self, rng, index):
        params = {}
        if 'scale' in self.moves:
            params['scale'] = float(_log_uniform(rng, 0.5, 2.0))
        if 'translation' in self.moves:
            params['translation'] = rng.uniform(-1.0, 1.0, self.n).tolist()
        if 'diag' in self.moves:
            params['diag'] = _log_uniform(rng, 0.5, 2.0, self.n).tolist()
        return params

    def perturb(self, params, rng, step):
        moved = dict(params)
        if 'scale' in moved:
            moved['scale'] = float(moved['scale'] * math.exp(step * rng.standard_normal()))
        if 'translation' in moved:
            moved['translation'] = (np.asarray(moved['translation']) + step * rng.standard_normal(self.n)).tolist()
        if 'diag' in moved:
            moved['diag'] = (np.asarray(moved['diag']) * np.exp(step * rng.standard_normal(self.n))).tolist()
        return moved

    def build(self, params):
        return plane_field({'kind': 'plane_extremizer', **params}, self.n, self.j, self.k)


@FamilyRegistry.register(ConjectureTarget.JK_LP_LQ, 'power')
class PowerFamily(ExtremizerFamily):
    """(1+|Mζ|²)^{−a/2} with a = (k+1)·s, s ∈ [0.7, 1.5], on top of the extremizer moves."""

    def draw(self, rng, index):
        return {'decay_factor': float(rng.uniform(0.7, 1.5)), **super().draw(rng, index)}

    def perturb(self, params, rng, step):
        moved = super().perturb(params, rng, step)
        factor = params['decay_factor'] + 0.2 * step * rng.standard_normal()
        moved['decay_factor'] = float(np.clip(factor, 0.5, 2.0))
        return moved

    def build(self, params):
        params = dict(params)
        decay = (self.k + 1) * float(params.pop('decay_factor'))
        return power_field(self.n, self.j, decay, affine_map(params, self.n))


@FamilyRegistry.register(ConjectureTarget.STAR_SECTIONS, 'ball')
class BallFamily(SearchFamily):

    def draw(self, rng, index):
        return {'radius': float(_log_uniform(rng, 0.5, 2.0))}

    def perturb(self, params, rng, step):
        return {'radius': float(params['radius'] * math.exp(step * rng.standard_normal()))}

    def build(self, params):
        return build_star({'kind': 'ball', **params}, self.n)


@FamilyRegistry.register(ConjectureTarget.STAR_SECTIONS, 'ellipsoid')
class EllipsoidFamily(SearchFamily):

    def draw(self, rng, index):
        return {'diag': _log_uniform(rng, 0.25, 4.0, self.n).tolist()}

    def perturb(self, params, rng, step):
        return {'diag': (np.asarray(params['diag']) * np.exp(step * rng.standard_normal(self.n))).tolist()}

    def build(self, params):
        return build_star({'kind': 'ellipsoid', **params}, self.n)


@FamilyRegistry.register(ConjectureTarget.STAR_SECTIONS, 'random_smooth')
class RandomSmoothFamily(SearchFamily):
    """RandomSmooth star sets; ``seeds`` fixes the members, otherwise seeds are drawn.
    Refinement moves the amplitude only."""

    @property
    def seeds(self) -> Optional[List[int]]:
        seeds = self.options.get('seeds')
        return None if seeds is None else [int(seed) for seed in seeds]

    @property
    def default_members(self) -> int:
        return len(self.seeds) if self.seeds is not None else DEFAULT_MEMBERS

    def draw(self, rng, index):
        amplitude = float(rng.uniform(0.1, 0.5))
        seeds = self.seeds
        seed = seeds[index % len(seeds)] if seeds else int(rng.integers(0, 2 ** 31))
        return {'seed': seed, 'amplitude': amplitude}

    def perturb(self, params, rng, step):
        amplitude = float(np.clip(params['amplitude'] + 0.2 * step * rng.standard_normal(), 0.05, 0.8))
        return {'seed': params['seed'], 'amplitude': amplitude}

    def build(self, params):
        return build_star({'kind': 'random_smooth', **params}, self.n)


# Ratios

def jk_ratio(f: ScalarField, k: int, q: QuadratureSpec, syserr_planes: int) -> Estimate:
    """‖R_{j,k} f‖_{(n+1)/(j+1)} / ‖f‖_{(n+1)/(k+1)}."""
    n, j = f.domain.n, field_rank(f)
    p, r = (n + 1) / (k + 1), (n + 1) / (j + 1)
    lhs = weighted_norm(transform_field(f, k, q.order), NormSpec(FieldDomain.affine_grassmannian(n, k), r),
                        q.derive('lhs'))
    lhs = with_syserr(lhs, plane_syserr(f, k, q, syserr_planes))
    rhs = weighted_norm(f, NormSpec(plane_domain(n, j), p), q.derive('rhs'))
    return lhs / rhs


def star_sections_ratio(star, j: int, k: int, m: float, q: QuadratureSpec, syserr_planes: int) -> Estimate:
    """(∫ Ṽ_m(L∩τ₀)^{n/j} d*τ₀) / (∫ Ṽ_m(L∩ζ₀)^{n/k} d*ζ₀)^{k/j}; exactly 1 when j = k."""
    n = star.dim
    lhs = section_power(star, k, m, n / j, q.derive('lhs'), syserr_planes)
    if j == k:
        return Estimate(1.0, 0.0, lhs.samples_used)
    rhs = section_power(star, j, m, n / k, q.derive('rhs'), syserr_planes).power(k / j)
    return lhs / rhs


def conjecture_bound(target: ConjectureTarget, n: int, j: int, k: int) -> float:
    if target is ConjectureTarget.JK_LP_LQ:
        if j == k:
            raise DomainError("j < k for JkLpLq", f"j={j}, k={k}")
        return constant('BigOmegaJK', n=n, j=j, k=k)
    if not 1 <= j <= k < n:
        raise DomainError("1 ≤ j ≤ k < n for StarSections", f"n={n}, j={j}, k={k}")
    return 1.0 if j == k else constant('StarSectionsC', n=n, j=j, k=k)


class ConjectureExplorer:
    """Random search plus local refinement of one family against one bound.

    All members share one quadrature budget (common random numbers), so ratio
    differences between members are not sampling noise. The best member is
    re-estimated on an independent stream before a violation is declared."""

    def __init__(self, target: ConjectureTarget, family: SearchFamily, budget: QuadratureSpec,
                 tolerance: TolerancePolicy, syserr_planes: int, m: float = None):
        self.target = target
        self.family = family
        self.budget = budget
        self.tolerance = tolerance
        self.syserr_planes = syserr_planes
        self.m = m
        self.bound = conjecture_bound(target, family.n, family.j, family.k)
        self.evaluations = 0

    def ratio(self, params: Mapping[str, Any], q: QuadratureSpec) -> Estimate:
        self.evaluations += 1
        member = self.family.build(params)
        if self.target is ConjectureTarget.JK_LP_LQ:
            return jk_ratio(member, self.family.k, q, self.syserr_planes)
        return star_sections_ratio(member, self.family.j, self.family.k, self.m, q, self.syserr_planes)

    def conclusive(self, estimate: Estimate) -> bool:
        return (math.isfinite(estimate.value) and math.isfinite(estimate.total_error)
                and estimate.total_error <= self.tolerance.inconclusive_fraction * self.bound)

    def violates(self, estimate: Estimate) -> bool:
        floor = self.tolerance.roundoff_floor * max(abs(estimate.value), self.bound)
        allowance = self.tolerance.stat_sigma * estimate.stderr + estimate.syserr + floor
        return estimate.value - self.bound > allowance

    def search(self, members: int, refine: int, rng: np.random.Generator) -> Dict[str, Any]:
        q = self.budget.derive('search')
        best_params, best = None, None
        skipped = inconclusive = 0
        for index in range(members):
            params = self.family.draw(rng, index)
            try:
                estimate = self.ratio(params, q)
            except IntegrabilityError as exc:
                skipped += 1
                logger.warning(f"skipping member {params}: {exc}")
                continue
            if not self.conclusive(estimate):
                inconclusive += 1
                logger.info(f"member {params} inconclusive: {estimate.value:.6g} ± {estimate.total_error:.3g}")
                continue
            logger.debug(f"member {index}: ratio {estimate.value:.6g}")
            if best is None or estimate.value > best.value:
                best_params, best = params, estimate

        step = INITIAL_STEP
        for _ in range(refine if best is not None else 0):
            candidate = self.family.perturb(best_params, rng, step)
            try:
                estimate = self.ratio(candidate, q)
            except IntegrabilityError as exc:
                logger.debug(f"refinement candidate {candidate} rejected: {exc}")
                estimate = None
            if estimate is not None and self.conclusive(estimate) and estimate.value > best.value:
                best_params, best = candidate, estimate
            step /= 2
        return {'params': best_params, 'estimate': best, 'skipped': skipped, 'inconclusive': inconclusive}

    def confirm(self, params: Mapping[str, Any]) -> Estimate:
        return self.ratio(params, self.budget.derive('confirm'))


def explore_conjecture(target, family: str, n: int, j: int, k: int, members: int = None,
                       refine: int = DEFAULT_REFINE, m: float = None, options: Mapping[str, Any] = None,
                       seed: int = None, samples: int = None, order: int = None, threads: int = 1,
                       config: Config = None, timing: bool = False) -> ConjectureReport:
    """Maximize the conjecture ratio over a family and compare the best member with the bound."""
    config = config or Config()
    target = target if isinstance(target, ConjectureTarget) else ConjectureTarget(target)
    seed = config.seed if seed is None else int(seed)
    n, j, k = int(n), int(j), int(k)
    searched = FamilyRegistry.get(target, family)(n, j, k, options)
    members = searched.default_members if members is None else int(members)
    if members < 1:
        raise DomainError("a non-empty family", f"{family} with {members} members")
    if target is ConjectureTarget.STAR_SECTIONS:
        m = float(k if m is None else m)
    label = f"explore/{target.value}/{family}/{n}.{j}.{k}"
    budget = QuadratureSpec.monte_carlo(samples or DEFAULT_SAMPLES, seed=seed, label=label,
                                        order=order or DEFAULT_ORDER, threads=threads,
                                        block_size=config.block_size)
    explorer = ConjectureExplorer(target, searched, budget, TolerancePolicy.from_config(config),
                                  config.syserr_planes, m)
    started = time.perf_counter()
    logger.info(f"exploring {target.value} over {family} ({members} members, {refine} refinements) "
                f"at n={n}, j={j}, k={k}; bound {explorer.bound:.6g}")

    found = explorer.search(members, max(0, int(refine)), RandomStream(seed, f"{label}/draws").generator())
    if found['estimate'] is None:
        logger.warning(f"no conclusive member in {family}; nothing to confirm")
        best_params, confirmed, search_ratio = {}, Estimate(math.nan, math.inf), math.nan
        violation = False
    else:
        best_params, search_ratio = found['params'], found['estimate'].value
        confirmed = explorer.confirm(best_params)
        violation = explorer.conclusive(confirmed) and explorer.violates(confirmed)
        if violation:
            logger.warning(f"{target.value}: ratio {confirmed.value:.8g} exceeds the bound {explorer.bound:.8g} "
                           f"at {best_params}")
    elapsed = time.perf_counter() - started
    logger.info(f"{target.value}/{family}: best ratio {confirmed.value:.6g} against {explorer.bound:.6g} "
                f"({elapsed:.2f}s)")
    return ConjectureReport(target, family, n, j, k, explorer.bound, seed, confirmed.value, confirmed.stderr,
                            best_params, search_ratio, violation, members, found['skipped'],
                            found['inconclusive'], explorer.evaluations, m, dict(options or {}),
                            elapsed if timing else None)
