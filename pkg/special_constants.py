"""Closed-form constants of the k-plane, (j,k) and Funk-type inequalities.

Every Γ-ratio is evaluated as a difference of ``gammaln`` values and only the
final logarithm is exponentiated, so arguments of order 10⁶ and beyond are safe.
The exponent p = ∞ is the float ``math.inf`` and is special-cased wherever 1/p
or 1/p′ appears.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Mapping

from scipy import special

from errors import ConstantOverflowError, DomainError
from logger import GetLogger

logger = GetLogger()(name=__name__)

INF = math.inf
LOG_PI = math.log(math.pi)
_MAX_LOG = math.log(1.7976931348623157e308)


def log_gamma(x: float) -> float:
    """ln Γ(x) for x > 0."""
    if not x > 0:
        raise DomainError("x > 0", f"log_gamma({x})")
    return float(special.gammaln(x))


def inv(p: float) -> float:
    """1/p with 1/∞ = 0."""
    return 0.0 if p == INF else 1.0 / p


def inv_conj(p: float) -> float:
    """1/p′ = 1 − 1/p, with the endpoints taken exactly."""
    if p == 1:
        return 0.0
    if p == INF:
        return 1.0
    return 1.0 - 1.0 / p


def log_sphere_area(m: int) -> float:
    if m < 0:
        raise DomainError("m ≥ 0", f"sphere_area({m})")
    return math.log(2.0) + 0.5 * (m + 1) * LOG_PI - log_gamma(0.5 * (m + 1))


def sphere_area(m: int) -> float:
    """σ_m, the area of the unit sphere S^m ⊂ ℝ^{m+1}."""
    return math.exp(log_sphere_area(m))


def log_ball_volume(m: float) -> float:
    if m < 0:
        raise DomainError("m ≥ 0", f"ball_volume({m})")
    if m == 0:
        return 0.0
    return 0.5 * m * LOG_PI - log_gamma(0.5 * m + 1.0)


def ball_volume(m: float) -> float:
    """b_m = π^{m/2}/Γ(m/2+1), b_0 = 1. Non-integer m is allowed for the
    Gardner/Schneider formulas where b is evaluated at products of dimensions."""
    return math.exp(log_ball_volume(m))


class ConstantTag(Enum):
    OMEGA_K_P_MU = 'OmegaKPMu'
    OMEGA_JK_P_MU = 'OmegaJKPMu'
    BIG_OMEGA_K = 'BigOmegaK'
    BIG_OMEGA_JK = 'BigOmegaJK'
    GARDNER_C = 'GardnerC'
    SCHNEIDER_C = 'SchneiderC'
    DPP_C = 'DppC'
    FUNK_WEIGHTED_C = 'FunkWeightedC'
    FUNK_WEIGHTED_C1 = 'FunkWeightedC1'
    FUNK_TILDE_C1 = 'FunkTildeC1'
    ASYMPTOTIC_LIMIT = 'AsymptoticLimit'
    BUSEMANN_C = 'BusemannC'
    SECTION_LPLQ_C = 'SectionLpLqC'
    STAR_SECTIONS_C = 'StarSectionsC'


_INTEGER_PARAMS = ('n', 'k', 'j', 'm')

_REQUIRED: Dict[ConstantTag, tuple] = {
    ConstantTag.OMEGA_K_P_MU: ('n', 'k', 'p', 'mu'),
    ConstantTag.OMEGA_JK_P_MU: ('n', 'j', 'k', 'p', 'mu'),
    ConstantTag.BIG_OMEGA_K: ('n', 'k'),
    ConstantTag.BIG_OMEGA_JK: ('n', 'j', 'k'),
    ConstantTag.GARDNER_C: ('n', 'k'),
    ConstantTag.SCHNEIDER_C: ('n', 'k', 'm'),
    ConstantTag.DPP_C: ('n', 'k'),
    ConstantTag.FUNK_WEIGHTED_C: ('n', 'j', 'k', 'p', 'mu'),
    ConstantTag.FUNK_WEIGHTED_C1: ('n', 'k', 'p', 'mu'),
    ConstantTag.FUNK_TILDE_C1: ('n', 'k', 'mu'),
    ConstantTag.ASYMPTOTIC_LIMIT: ('j', 'k', 'p'),
    ConstantTag.BUSEMANN_C: ('n', 'k'),
    ConstantTag.SECTION_LPLQ_C: ('n', 'k'),
    ConstantTag.STAR_SECTIONS_C: ('n', 'j', 'k'),
}


@dataclass(frozen=True)
class ConstantKind:
    """A tagged constant together with its parameters (n, k, j, p, mu, m)."""
    tag: ConstantTag
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.tag, ConstantTag):
            object.__setattr__(self, 'tag', ConstantTag(self.tag))
        missing = [name for name in _REQUIRED[self.tag] if name not in self.params]
        if missing:
            raise DomainError(f"parameters {', '.join(missing)}", f"{self.tag.value}")
        normalized = {}
        for name, value in self.params.items():
            if name in _INTEGER_PARAMS:
                if float(value) != int(value):
                    raise DomainError(f"integer {name}", f"got {value}")
                normalized[name] = int(value)
            else:
                normalized[name] = float(value)
        object.__setattr__(self, 'params', normalized)
        _validate(self.tag, normalized)


def _require(condition: bool, constraint: str, **values):
    if not condition:
        detail = ", ".join(f"{key}={value}" for key, value in values.items()) or None
        raise DomainError(constraint, detail)


def _check_p(p: float):
    _require(p >= 1, "1 ≤ p ≤ ∞", p=p)


def _check_k_n(k: int, n: int, allow_equal: bool = False):
    _require(k > 0, "k > 0", k=k)
    if allow_equal:
        _require(k <= n, "k ≤ n", k=k, n=n)
    else:
        _require(k < n, "k < n", k=k, n=n)


def _check_j_k(j: int, k: int, lowest: int = 0):
    _require(j >= lowest, f"j ≥ {lowest}", j=j)
    _require(j < k, "j < k", j=j, k=k)


def _validate(tag: ConstantTag, params: Dict[str, float]):
    n, k, j = params.get('n'), params.get('k'), params.get('j')
    p, mu, m = params.get('p'), params.get('mu'), params.get('m')

    if tag is ConstantTag.OMEGA_K_P_MU:
        _check_p(p)
        _check_k_n(k, n)
        _require(mu > k - n * inv(p), "μ > k − n/p", mu=mu)
    elif tag in (ConstantTag.OMEGA_JK_P_MU, ConstantTag.FUNK_WEIGHTED_C):
        _check_p(p)
        _check_j_k(j, k, lowest=1 if tag is ConstantTag.FUNK_WEIGHTED_C else 0)
        _check_k_n(k, n)
        _require(mu > k - n * inv(p) - j * inv_conj(p), "μ > k − n/p − j/p′", mu=mu)
    elif tag in (ConstantTag.BIG_OMEGA_K, ConstantTag.DPP_C,
                 ConstantTag.BUSEMANN_C, ConstantTag.SECTION_LPLQ_C):
        _check_k_n(k, n)
    elif tag in (ConstantTag.BIG_OMEGA_JK, ConstantTag.STAR_SECTIONS_C):
        _check_j_k(j, k, lowest=1 if tag is ConstantTag.STAR_SECTIONS_C else 0)
        _check_k_n(k, n)
    elif tag is ConstantTag.GARDNER_C:
        _check_k_n(k, n, allow_equal=True)
    elif tag is ConstantTag.SCHNEIDER_C:
        _check_k_n(k, n, allow_equal=True)
        _require(1 <= m <= n, "1 ≤ m ≤ n", m=m, n=n)
    elif tag is ConstantTag.FUNK_WEIGHTED_C1:
        _check_p(p)
        _check_k_n(k, n)
        _require(mu > k - n * inv(p) - inv_conj(p), "μ > k − n/p − 1/p′", mu=mu)
    elif tag is ConstantTag.FUNK_TILDE_C1:
        _check_k_n(k, n)
        _require(n >= 2, "n ≥ 2", n=n)
        _require(mu > k - n, "μ > k − n", mu=mu)
    elif tag is ConstantTag.ASYMPTOTIC_LIMIT:
        _check_p(p)
        _check_j_k(j, k)


def _log_omega_jk(n, j, k, p, mu) -> float:
    ip, ipc = inv(p), inv_conj(p)
    log_value = 0.5 * (k - j) * ipc * LOG_PI
    if ip:
        log_value += ip * (log_gamma(0.5 * (n - j)) - log_gamma(0.5 * (n - k)))
    log_value += log_gamma(0.5 * (mu + n * ip - k + j * ipc))
    log_value -= log_gamma(0.5 * (mu + n * ip - j * ip))
    return log_value


def _log_funk_weighted(n, j, k, p, mu) -> float:
    ip, ipc = inv(p), inv_conj(p)
    log_value = 0.0
    if ipc:
        log_value += ipc * (log_gamma(0.5 * k) - log_gamma(0.5 * j))
    if ip:
        log_value += ip * (log_gamma(0.5 * (n - j)) - log_gamma(0.5 * (n - k)))
    log_value += log_gamma(0.5 * (mu + n * ip - k + j * ipc))
    log_value -= log_gamma(0.5 * (mu + n * ip - j * ip))
    return log_value


def _log_gardner(n, k) -> float:
    return ((n + 1) * log_ball_volume(k) + log_ball_volume(n * (k + 1))
            - (k + 1) * log_ball_volume(n) - log_ball_volume(k * (n + 1)))


def _log_schneider(n, k, m) -> float:
    return ((m + 1) * log_ball_volume(k) + log_ball_volume(n + k * m)
            - ((n + k * m) / n) * log_ball_volume(n) - log_ball_volume(k + k * m))


def _log_asymptotic(j, k, p) -> float:
    if p == INF:
        raise ConstantOverflowError("asymptotic limit is infinite at p = ∞")
    return 0.5 * (k - j) * inv_conj(p) * math.log(2.0 * math.pi) + 0.5 * (k - j) * math.log(p)


_LOG_FORMULAS: Dict[ConstantTag, Callable[[Dict[str, float]], float]] = {
    ConstantTag.OMEGA_K_P_MU: lambda c: _log_omega_jk(c['n'], 0, c['k'], c['p'], c['mu']),
    ConstantTag.OMEGA_JK_P_MU: lambda c: _log_omega_jk(c['n'], c['j'], c['k'], c['p'], c['mu']),
    ConstantTag.BIG_OMEGA_K: lambda c: (
        (c['k'] - c['n']) * math.log(2.0) + c['n'] * log_sphere_area(c['k'])
        - c['k'] * log_sphere_area(c['n'])) / (c['n'] + 1),
    ConstantTag.BIG_OMEGA_JK: lambda c: (
        (c['n'] - c['j']) * log_sphere_area(c['k']) + (c['k'] - c['n']) * log_sphere_area(c['j'])
        + (c['j'] - c['k']) * log_sphere_area(c['n'])) / (c['n'] + 1),
    ConstantTag.GARDNER_C: lambda c: _log_gardner(c['n'], c['k']),
    ConstantTag.DPP_C: lambda c: _log_gardner(c['n'], c['k']),
    ConstantTag.SCHNEIDER_C: lambda c: _log_schneider(c['n'], c['k'], c['m']),
    ConstantTag.FUNK_WEIGHTED_C: lambda c: _log_funk_weighted(c['n'], c['j'], c['k'], c['p'], c['mu']),
    ConstantTag.FUNK_WEIGHTED_C1: lambda c: _log_funk_weighted(c['n'], 1, c['k'], c['p'], c['mu']),
    ConstantTag.FUNK_TILDE_C1: lambda c: _log_funk_weighted(c['n'], 1, c['k'], 1.0, c['mu']),
    ConstantTag.ASYMPTOTIC_LIMIT: lambda c: _log_asymptotic(c['j'], c['k'], c['p']),
    ConstantTag.BUSEMANN_C: lambda c: c['n'] * log_ball_volume(c['k']) - c['k'] * log_ball_volume(c['n']),
    ConstantTag.SECTION_LPLQ_C: lambda c: (
        (c['k'] - c['n']) * math.log(2.0) + c['n'] * log_sphere_area(c['k'])
        - c['k'] * log_sphere_area(c['n'])),
    ConstantTag.STAR_SECTIONS_C: lambda c: (
        (c['n'] / c['j']) * (log_ball_volume(c['k']) - log_ball_volume(c['j']))),
}


def log_sharp_constant(kind: ConstantKind) -> float:
    return _LOG_FORMULAS[kind.tag](kind.params)


def sharp_constant(kind: ConstantKind) -> float:
    log_value = log_sharp_constant(kind)
    if log_value > _MAX_LOG:
        raise ConstantOverflowError(f"{kind.tag.value} exceeds the double range (log = {log_value})")
    value = math.exp(log_value)
    logger.debug(f"{kind.tag.value}{dict(kind.params)} = {value!r}")
    return value


def constant(tag: str, **params) -> float:
    """Shorthand: ``constant('OmegaKPMu', n=3, k=1, p=1, mu=0)``."""
    return sharp_constant(ConstantKind(ConstantTag(tag), params))


def asymptotic_limit(j: int, k: int, p: float) -> float:
    """ω⁰_{j,k,p} = (2π)^{(k−j)/2p′} p^{(k−j)/2}."""
    return sharp_constant(ConstantKind(ConstantTag.ASYMPTOTIC_LIMIT, {'j': j, 'k': k, 'p': p}))


def scaled_norm_constant(j: int, k: int, p: float, mu: float, n: int) -> float:
    """ω_{j,k,p,μ}(n)·n^{(k−j)/2p′}, the quantity that tends to ω⁰_{j,k,p}."""
    kind = ConstantKind(ConstantTag.OMEGA_JK_P_MU, {'n': n, 'j': j, 'k': k, 'p': p, 'mu': mu})
    return math.exp(log_sharp_constant(kind) + 0.5 * (k - j) * inv_conj(p) * math.log(n))
