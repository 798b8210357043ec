"""Estimates, quadrature settings, deterministic rules and the blocked
Monte-Carlo driver shared by transforms, functionals and the harness."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, List, Tuple, Union

import numpy as np
from numpy.polynomial import legendre
from scipy import special

from errors import QuadratureError
from logger import GetLogger
from special_constants import sphere_area
from streams import RandomStream

logger = GetLogger()(name=__name__)


@dataclass(frozen=True)
class Estimate:
    """A numerical value with its Monte-Carlo standard error.

    ``syserr`` bounds deterministic quadrature error (0 unless estimated) and
    ``lower_bound`` marks sampled suprema."""
    value: float
    stderr: float = 0.0
    samples_used: int = 0
    syserr: float = 0.0
    lower_bound: bool = False

    def __post_init__(self):
        if self.stderr < 0 or self.syserr < 0:
            raise ValueError("error terms must be non-negative")

    @classmethod
    def exact(cls, value: float) -> 'Estimate':
        return cls(float(value))

    @property
    def total_error(self) -> float:
        return self.stderr + self.syserr

    @property
    def relative_stderr(self) -> float:
        return self.stderr / abs(self.value) if self.value else math.inf

    def scale(self, factor: float) -> 'Estimate':
        factor = float(factor)
        return replace(self, value=factor * self.value, stderr=abs(factor) * self.stderr,
                       syserr=abs(factor) * self.syserr)

    def power(self, exponent: float) -> 'Estimate':
        """Delta-method propagation for value**exponent."""
        if exponent == 1:
            return self
        if self.value < 0 and not float(exponent).is_integer():
            return replace(self, value=math.nan, stderr=math.inf)
        value = self.value ** exponent
        if self.value == 0:
            slope = 0.0 if exponent > 1 else math.inf
        else:
            slope = abs(exponent) * abs(self.value) ** (exponent - 1)
        stderr = slope * self.stderr if self.stderr else 0.0
        syserr = slope * self.syserr if self.syserr else 0.0
        return replace(self, value=value, stderr=stderr, syserr=syserr)

    def __add__(self, other: Union['Estimate', float]) -> 'Estimate':
        if not isinstance(other, Estimate):
            return replace(self, value=self.value + float(other))
        return Estimate(self.value + other.value, math.hypot(self.stderr, other.stderr),
                        self.samples_used + other.samples_used, self.syserr + other.syserr,
                        self.lower_bound or other.lower_bound)

    __radd__ = __add__

    def __sub__(self, other: Union['Estimate', float]) -> 'Estimate':
        if not isinstance(other, Estimate):
            return replace(self, value=self.value - float(other))
        return self + other.scale(-1.0)

    def __mul__(self, other: Union['Estimate', float]) -> 'Estimate':
        if not isinstance(other, Estimate):
            return self.scale(other)
        value = self.value * other.value
        stderr = math.hypot(self.stderr * other.value, other.stderr * self.value)
        syserr = self.syserr * abs(other.value) + other.syserr * abs(self.value)
        return Estimate(value, stderr, self.samples_used + other.samples_used, syserr,
                        self.lower_bound or other.lower_bound)

    __rmul__ = __mul__

    def __truediv__(self, other: Union['Estimate', float]) -> 'Estimate':
        if not isinstance(other, Estimate):
            return self.scale(1.0 / float(other))
        if other.value == 0:
            return Estimate(math.inf if self.value else math.nan, math.inf)
        value = self.value / other.value
        stderr = math.hypot(self.stderr / other.value, other.stderr * self.value / other.value ** 2)
        syserr = self.syserr / abs(other.value) + other.syserr * abs(self.value) / other.value ** 2
        return Estimate(value, stderr, self.samples_used + other.samples_used, syserr)


class QuadratureMode(Enum):
    MONTE_CARLO = 'MonteCarlo'
    TENSOR_TAN = 'TensorTan'


@dataclass(frozen=True)
class QuadratureSpec:
    """How an integral is evaluated. ``samples`` drives Monte-Carlo loops,
    ``order`` every deterministic rule (per axis)."""
    mode: QuadratureMode = QuadratureMode.MONTE_CARLO
    samples: int = 100_000
    order: int = 48
    seed: int = 0
    label: str = 'q'
    threads: int = 1
    block_size: int = 4096

    def __post_init__(self):
        if not isinstance(self.mode, QuadratureMode):
            object.__setattr__(self, 'mode', QuadratureMode(self.mode))
        if self.samples < 1:
            raise QuadratureError("samples must be ≥ 1")
        if self.order < 2:
            raise QuadratureError("order must be ≥ 2")

    @classmethod
    def monte_carlo(cls, samples: int, seed: int = 0, label: str = 'q', **kwargs) -> 'QuadratureSpec':
        return cls(QuadratureMode.MONTE_CARLO, samples=samples, seed=seed, label=label, **kwargs)

    @classmethod
    def tensor_tan(cls, order: int, seed: int = 0, **kwargs) -> 'QuadratureSpec':
        return cls(QuadratureMode.TENSOR_TAN, order=order, seed=seed, **kwargs)

    @property
    def deterministic(self) -> bool:
        return self.mode is QuadratureMode.TENSOR_TAN

    def derive(self, label: str, **changes) -> 'QuadratureSpec':
        return replace(self, label=f"{self.label}/{label}", **changes)

    def stream(self, label: str = None) -> RandomStream:
        full_label = self.label if label is None else f"{self.label}/{label}"
        return RandomStream(self.seed, full_label, self.block_size)


# Deterministic rules

@lru_cache(maxsize=64)
def _gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return legendre.leggauss(order)


def tan_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes s = tan t and weights w·sec² t for ∫_ℝ g(s) ds."""
    x, w = _gauss_legendre(order)
    t = 0.5 * math.pi * x
    sec2 = 1.0 / np.cos(t) ** 2
    return np.tan(t), 0.5 * math.pi * w * sec2


@lru_cache(maxsize=32)
def tensor_tan_rule(dim: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Product tan rule on ℝ^dim; nodes (order^dim, dim)."""
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    s, w = tan_rule(order)
    grids = np.meshgrid(*([s] * dim), indexing='ij')
    weights = np.meshgrid(*([w] * dim), indexing='ij')
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    return nodes, np.prod(np.stack([g.ravel() for g in weights], axis=-1), axis=-1)


@lru_cache(maxsize=64)
def radial_rule(order: int, power: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes r and weights for ∫_0^∞ r^power g(r) dr.

    Uses r = tan t with t = π/4·(1+x) and Gauss–Jacobi in x with weight
    (1+x)^power, so the origin singularity is integrated exactly."""
    if power <= -1:
        raise QuadratureError(f"radial power {power} is not integrable at the origin")
    x, w = special.roots_jacobi(order, 0.0, power)
    t = 0.25 * math.pi * (1.0 + x)
    r = np.tan(t)
    ratio = r / t
    weights = (0.25 * math.pi) ** (power + 1) * w * ratio ** power / np.cos(t) ** 2
    return r, weights


@lru_cache(maxsize=64)
def unit_radial_rule(order: int, power: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ∫_0^1 r^power g(r) dr."""
    if power <= -1:
        raise QuadratureError(f"radial power {power} is not integrable at the origin")
    x, w = special.roots_jacobi(order, 0.0, power)
    return 0.5 * (1.0 + x), w / 2.0 ** (power + 1)


@lru_cache(maxsize=64)
def sphere_rule(dim: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Probability rule on S^{dim−1} ⊂ ℝ^dim for dim ≤ 3."""
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([0.5, 0.5])
    if dim == 2:
        count = max(2 * order, 8)
        phi = 2.0 * math.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), np.full(count, 1.0 / count)
    if dim == 3:
        z, wz = _gauss_legendre(order)
        count = max(2 * order, 8)
        phi = 2.0 * math.pi * (np.arange(count) + 0.5) / count
        zz, pp = np.meshgrid(z, phi, indexing='ij')
        rho = np.sqrt(1.0 - zz ** 2)
        nodes = np.stack([rho * np.cos(pp), rho * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        weights = (np.repeat(wz, count) / 2.0) / count
        return nodes, weights
    raise QuadratureError(f"no deterministic sphere rule for S^{dim - 1}; use Monte-Carlo")


@lru_cache(maxsize=32)
def ball_rule(dim: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Polar rule for ∫ over the unit ball of ℝ^dim (dim ≤ 3)."""
    directions, wd = sphere_rule(dim, order)
    r, wr = unit_radial_rule(order, dim - 1)
    nodes = (r[:, None, None] * directions[None, :, :]).reshape(-1, dim)
    weights = sphere_area(dim - 1) * np.outer(wr, wd).ravel()
    return nodes, weights


# Monte-Carlo driver

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def _block_moments(values: np.ndarray) -> Tuple[int, np.ndarray, np.ndarray]:
    mean = values.mean(axis=0)
    return values.shape[0], mean, ((values - mean) ** 2).sum(axis=0)


def mc_estimate(sampler: Sampler, n_samples: int, stream: RandomStream,
                threads: int = 1) -> Union[Estimate, List[Estimate]]:
    """Average ``sampler`` outputs over ``n_samples`` indices of ``stream``.

    ``sampler(rng, size)`` returns ``size`` values (or a (size, m) array for m
    integrands on shared samples). Blocks are merged in index order, so the
    result does not depend on ``threads``."""
    if n_samples < 1:
        raise QuadratureError("samples must be ≥ 1")
    block_size = stream.block_size

    def run(block_index: int):
        size = min(block_size, n_samples - block_index * block_size)
        values = np.asarray(sampler(stream.block(block_index), block_size), dtype=float)[:size]
        if not np.all(np.isfinite(values)):
            raise QuadratureError(f"non-finite integrand values in stream {stream.label}")
        return _block_moments(values)

    blocks = range(stream.n_blocks(n_samples))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(index) for index in blocks]

    count, mean, m2 = parts[0]
    for other_count, other_mean, other_m2 in parts[1:]:
        total = count + other_count
        delta = other_mean - mean
        mean = mean + delta * (other_count / total)
        m2 = m2 + other_m2 + delta ** 2 * (count * other_count / total)
        count = total

    if count > 1:
        stderr = np.sqrt(np.maximum(m2, 0.0) / (count - 1) / count)
    else:
        stderr = np.full_like(np.asarray(mean), math.inf)
    logger.debug(f"{stream.label}: {count} samples, mean={mean}, stderr={stderr}")
    if np.ndim(mean) == 0:
        return Estimate(float(mean), float(stderr), int(count))
    return [Estimate(float(v), float(s), int(count)) for v, s in zip(mean, stderr)]
