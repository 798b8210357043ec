"""Registry of numerical checks and the verdict logic shared by all of them.

A check computes two sides of a relation ``lhs (= or ≤) constant·rhs`` as
``Estimate`` values and the harness turns them into a ``CheckResult``. Check
bodies live in the ``checks_*`` modules and register themselves through
``CheckRegistry.register``; the registry imports them lazily on first use.
"""
import importlib
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

from scipy.stats import norm

from config import Config
from errors import DomainError, UnknownCheckError
from logger import GetLogger
from quadrature import Estimate, QuadratureSpec

logger = GetLogger()(name=__name__)

CHECK_MODULES = ('checks_affine', 'checks_spherical', 'checks_star')


class Verdict(Enum):
    PASS_EQUALITY = 'PassEquality'
    PASS_INEQUALITY = 'PassInequality'
    FAIL = 'Fail'
    INCONCLUSIVE = 'Inconclusive'

    @property
    def passed(self) -> bool:
        return self in (Verdict.PASS_EQUALITY, Verdict.PASS_INEQUALITY)


class Relation(Enum):
    EQUALITY = 'equality'
    INEQUALITY = 'inequality'


@dataclass(frozen=True)
class TolerancePolicy:
    stat_sigma: float = 3.0
    rel_tol: float = 0.02
    inconclusive_fraction: float = 0.25
    roundoff_floor: float = 1e-9

    def __post_init__(self):
        if self.stat_sigma <= 0 or self.rel_tol < 0 or self.inconclusive_fraction <= 0:
            raise DomainError("stat_sigma > 0, rel_tol ≥ 0, inconclusive_fraction > 0")

    @classmethod
    def from_config(cls, config: Config, **overrides) -> 'TolerancePolicy':
        values = {'stat_sigma': config.stat_sigma, 'rel_tol': config.rel_tol,
                  'inconclusive_fraction': config.inconclusive_fraction,
                  'roundoff_floor': config.roundoff_floor}
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def threshold(self, comparisons: int = 1) -> float:
        """stat_sigma, Bonferroni-corrected when several comparisons share one verdict."""
        if comparisons <= 1:
            return self.stat_sigma
        return float(norm.isf(norm.sf(self.stat_sigma) / comparisons))


@dataclass(frozen=True)
class Comparison:
    lhs: Estimate
    rhs: Estimate
    label: str = ''


@dataclass
class Sides:
    """What a check body returns.

    With ``pointwise`` set, every comparison is judged at a Bonferroni
    threshold and lhs/rhs are expected to be the least favourable pair."""
    lhs: Estimate
    rhs: Estimate
    constant: float
    details: Dict[str, Any] = field(default_factory=dict)
    relation: Optional[Relation] = None
    pointwise: Sequence[Comparison] = ()


@dataclass(frozen=True)
class Judgement:
    verdict: Verdict
    margin_sigma: Optional[float]
    stderr: float


def judge(lhs: Estimate, rhs: Estimate, constant: float, relation: Relation,
          tolerance: TolerancePolicy, comparisons: int = 1) -> Judgement:
    """Verdict for ``lhs`` against ``constant·rhs``."""
    target = rhs.scale(constant)
    stat = math.hypot(lhs.stderr, target.stderr)
    error = stat + lhs.syserr + target.syserr
    gap = lhs.value - target.value
    if not (math.isfinite(gap) and math.isfinite(error)):
        return Judgement(Verdict.INCONCLUSIVE, None, error)
    floor = tolerance.roundoff_floor * max(abs(lhs.value), abs(target.value))
    margin = (target.value - lhs.value) / error if error > 0 else None
    if error > tolerance.inconclusive_fraction * abs(target.value):
        return Judgement(Verdict.INCONCLUSIVE, margin, error)
    allowance = tolerance.threshold(comparisons) * stat + lhs.syserr + target.syserr + floor

    if relation is Relation.INEQUALITY:
        verdict = Verdict.PASS_INEQUALITY if gap <= allowance else Verdict.FAIL
        return Judgement(verdict, margin, error)

    relative_ok = abs(gap) <= tolerance.rel_tol * abs(target.value) + floor
    if error <= floor:
        # both sides exact to round-off
        statistical_ok = True
    else:
        statistical_ok = abs(gap) <= allowance
    verdict = Verdict.PASS_EQUALITY if relative_ok and statistical_ok else Verdict.FAIL
    return Judgement(verdict, margin, error)


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    params: Mapping[str, Any]
    lhs: Estimate
    rhs: Estimate
    constant: float
    ratio: float
    normalized_ratio: float
    stderr: float
    margin_sigma: Optional[float]
    verdict: Verdict
    relation: Relation
    anchor: str
    seed: int
    details: Mapping[str, Any] = field(default_factory=dict)
    wall_time: Optional[float] = None


@dataclass
class CheckContext:
    """Everything a check body may look at."""
    params: Dict[str, Any]
    budget: QuadratureSpec
    tolerance: TolerancePolicy
    config: Config

    @property
    def order(self) -> int:
        return self.budget.order

    def lhs_budget(self, label: str = 'lhs', **changes) -> QuadratureSpec:
        return self.budget.derive(label, **changes)

    def rhs_budget(self, label: str = 'rhs', **changes) -> QuadratureSpec:
        return self.budget.derive(label, **changes)


@dataclass(frozen=True)
class CheckDefinition:
    check_id: str
    relation: Relation
    anchor: str
    compute: Callable[[CheckContext], Sides]
    defaults: Mapping[str, Any]
    samples: Optional[int] = None
    order: Optional[int] = None
    rel_tol: Optional[float] = None
    notes: str = ''

    @property
    def description(self) -> str:
        doc = (self.compute.__doc__ or '').strip()
        return doc.splitlines()[0] if doc else self.check_id

    def resolve(self, params: Mapping[str, Any] = None) -> Dict[str, Any]:
        params = dict(params or {})
        unknown = sorted(set(params) - set(self.defaults))
        if unknown:
            raise DomainError(f"parameters among {', '.join(sorted(self.defaults))}",
                              f"{self.check_id} got {', '.join(unknown)}")
        return {**self.defaults, **params}

    def budget(self, config: Config, seed: int, samples: int = None, order: int = None,
               threads: int = 1) -> QuadratureSpec:
        return QuadratureSpec.monte_carlo(
            samples or self.samples or config.samples, seed=seed, label=self.check_id,
            order=order or self.order or config.order, threads=threads, block_size=config.block_size)

    def schema(self) -> Dict[str, Any]:
        return {'check_id': self.check_id, 'relation': self.relation.value, 'anchor': self.anchor,
                'description': self.description, 'params': dict(self.defaults),
                'budget': {'samples': self.samples, 'order': self.order}, 'notes': self.notes}


class CheckRegistry:
    """Checks by id, in registration order."""
    _instances: Dict[str, CheckDefinition] = {}
    _loaded = False

    @classmethod
    def register(cls, check_id: str, relation: Relation, anchor: str, defaults: Mapping[str, Any],
                 samples: int = None, order: int = None, rel_tol: float = None, notes: str = ''):
        def decorator(compute: Callable[[CheckContext], Sides]):
            if check_id in cls._instances:
                raise ValueError(f"check {check_id} registered twice")
            cls._instances[check_id] = CheckDefinition(check_id, relation, anchor, compute, dict(defaults),
                                                       samples, order, rel_tol, notes)
            return compute
        return decorator

    @classmethod
    def load(cls):
        if not cls._loaded:
            for module in CHECK_MODULES:
                importlib.import_module(module)
            cls._loaded = True
            logger.debug(f"{len(cls._instances)} checks registered")

    @classmethod
    def get(cls, check_id: str) -> CheckDefinition:
        cls.load()
        try:
            return cls._instances[check_id]
        except KeyError:
            raise UnknownCheckError(f"unknown check id {check_id!r}") from None

    @classmethod
    def ids(cls) -> List[str]:
        cls.load()
        return list(cls._instances)

    @classmethod
    def definitions(cls) -> List[CheckDefinition]:
        cls.load()
        return list(cls._instances.values())


@dataclass(frozen=True)
class CheckSpec:
    check_id: str
    params: Mapping[str, Any]
    budget: QuadratureSpec
    tolerance: TolerancePolicy
    seed: int = 0


def make_spec(check_id: str, params: Mapping[str, Any] = None, seed: int = None, samples: int = None,
              order: int = None, threads: int = 1, tolerance: Mapping[str, float] = None,
              config: Config = None) -> CheckSpec:
    """Resolve defaults: config < check definition < explicit arguments."""
    config = config or Config()
    seed = config.seed if seed is None else int(seed)
    definition = CheckRegistry.get(check_id)
    resolved = definition.resolve(params)
    overrides = dict(tolerance or {})
    if definition.rel_tol is not None:
        overrides.setdefault('rel_tol', definition.rel_tol)
    return CheckSpec(check_id, resolved, definition.budget(config, seed, samples, order, threads),
                     TolerancePolicy.from_config(config, **overrides), seed)


def _worst(comparisons: Sequence[Comparison], constant: float, relation: Relation,
           tolerance: TolerancePolicy):
    count = len(comparisons)
    rank = {Verdict.FAIL: 0, Verdict.INCONCLUSIVE: 1, Verdict.PASS_INEQUALITY: 2, Verdict.PASS_EQUALITY: 2}
    judged = [(judge(c.lhs, c.rhs, constant, relation, tolerance, count), c) for c in comparisons]

    def severity(item):
        judgement, comparison = item
        target = constant * comparison.rhs.value
        ratio = comparison.lhs.value / target if target else math.inf
        badness = abs(ratio - 1.0) if relation is Relation.EQUALITY else ratio
        return rank[judgement.verdict], -badness

    judgement, comparison = min(judged, key=severity)
    scores = [{'label': c.label, 'margin_sigma': j.margin_sigma, 'verdict': j.verdict.value}
              for j, c in judged]
    return judgement, comparison, scores


def run_check(spec: CheckSpec, config: Config = None, timing: bool = False) -> CheckResult:
    """Evaluate both sides of a registered relation and judge them."""
    config = config or Config()
    definition = CheckRegistry.get(spec.check_id)
    params = definition.resolve(spec.params)
    context = CheckContext(params, spec.budget, spec.tolerance, config)
    started = time.perf_counter()
    logger.info(f"running {spec.check_id} with {params}")
    sides = definition.compute(context)
    relation = sides.relation or definition.relation
    details = dict(sides.details)
    lhs, rhs = sides.lhs, sides.rhs

    if sides.pointwise:
        judgement, worst, scores = _worst(sides.pointwise, sides.constant, relation, spec.tolerance)
        lhs, rhs = worst.lhs, worst.rhs
        details['pointwise'] = scores
        details['worst'] = worst.label
        details['threshold_sigma'] = spec.tolerance.threshold(len(sides.pointwise))
    else:
        judgement = judge(lhs, rhs, sides.constant, relation, spec.tolerance)

    ratio = lhs.value / rhs.value if rhs.value else math.nan
    normalized = ratio / sides.constant if sides.constant else math.nan
    elapsed = time.perf_counter() - started
    logger.info(f"{spec.check_id}: {judgement.verdict.value} (ratio {normalized:.6g} of the bound, {elapsed:.2f}s)")
    return CheckResult(spec.check_id, params, lhs, rhs, sides.constant, ratio, normalized, judgement.stderr,
                       judgement.margin_sigma, judgement.verdict, relation, definition.anchor, spec.seed,
                       details, elapsed if timing else None)


def run_checks(specs: Sequence[CheckSpec], config: Config = None, threads: int = 1,
               timing: bool = False) -> List[CheckResult]:
    """Run independent checks, possibly concurrently; results keep the input order."""
    config = config or Config()
    if threads > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda spec: run_check(spec, config, timing), specs))
    return [run_check(spec, config, timing) for spec in specs]
