"""Distributions on the real line: empirical step distributions, a few
parametric laws for solving equilibria, order statistics and quadrature."""
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
from scipy import stats

from .enums import Orientation
from .errors import EmptySample, InputError, InvalidArity

__all__ = [
    "Orientation",
    "SupportBounds",
    "EmpiricalDistribution",
    "ContinuousDistribution",
    "Uniform",
    "ScipyContinuous",
    "Reflected",
    "from_sample",
    "point_mass",
    "gauss_legendre",
    "ks_distance",
    "parse_distribution",
]


@dataclass(frozen=True)
class SupportBounds:
    low: float
    high: float

    def __post_init__(self):
        if not (np.isfinite(self.low) and np.isfinite(self.high)) or self.low > self.high:
            raise InputError(f"invalid support bounds [{self.low}, {self.high}]")

    @property
    def width(self):
        return self.high - self.low


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Finite distribution: strictly ascending support points with weights."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.array(self.support, dtype=float, copy=True).ravel()
        w = np.array(self.weights, dtype=float, copy=True).ravel()
        if x.size == 0:
            raise EmptySample("distribution needs at least one support point")
        if x.shape != w.shape:
            raise InputError("support and weights differ in length")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(w)):
            raise InputError("support and weights must be finite")
        if np.any(np.diff(x) <= 0):
            raise InputError("support must be strictly ascending")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InputError("weights must be non-negative and sum to one")
        x.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "support", x)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_sample(cls, values):
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            raise EmptySample("cannot build a distribution from an empty sample")
        if not np.all(np.isfinite(v)):
            raise InputError("sample contains non-finite values")
        support, counts = np.unique(v, return_counts=True)
        w = counts / counts.sum()
        w[-1] = 1.0 - w[:-1].sum()
        return cls(support, w)

    def __len__(self):
        return self.support.size

    def __eq__(self, other):
        if not isinstance(other, EmpiricalDistribution):
            return NotImplemented
        return np.array_equal(self.support, other.support) and np.array_equal(
            self.weights, other.weights
        )

    __hash__ = None

    @property
    def low(self):
        return float(self.support[0])

    @property
    def high(self):
        return float(self.support[-1])

    @property
    def bounds(self):
        return SupportBounds(self.low, self.high)

    @property
    def is_degenerate(self):
        return self.support.size == 1

    def cumulative(self):
        """cdf at each support point, last entry exactly 1."""
        c = np.cumsum(self.weights)
        c[-1] = 1.0
        return c

    def cdf(self, x):
        """P(X <= x), right-continuous."""
        idx = np.searchsorted(self.support, x, side="right")
        c = np.concatenate(([0.0], self.cumulative()))
        out = c[idx]
        return float(out) if np.ndim(out) == 0 else out

    def cdf_left(self, x):
        """P(X < x)."""
        idx = np.searchsorted(self.support, x, side="left")
        c = np.concatenate(([0.0], self.cumulative()))
        out = c[idx]
        return float(out) if np.ndim(out) == 0 else out

    def mean(self):
        return float(self.weights @ self.support)

    def std(self):
        """Population standard deviation."""
        mu = self.mean()
        return float(np.sqrt(max(self.weights @ (self.support - mu) ** 2, 0.0)))

    def quantile(self, p):
        """Smallest support point with cdf >= p (inverse-cdf convention)."""
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)):
            raise InputError("quantile level must lie in [0, 1]")
        c = self.cumulative()
        idx = np.searchsorted(c, p - 1e-14, side="left")
        out = self.support[np.minimum(idx, self.support.size - 1)]
        return float(out) if out.ndim == 0 else out

    def max_order_pmf(self, n):
        """pmf of the maximum of n independent draws, over the support."""
        _check_arity(n, minimum=1)
        c = self.cumulative()
        prev = np.concatenate(([0.0], c[:-1]))
        return c**n - prev**n

    def min_order_pmf(self, n):
        """pmf of the minimum of n independent draws, over the support."""
        _check_arity(n, minimum=1)
        c = self.cumulative()
        prev = np.concatenate(([0.0], c[:-1]))
        above = np.clip(1.0 - c, 0.0, 1.0)
        at_or_above = np.clip(1.0 - prev, 0.0, 1.0)
        return at_or_above**n - above**n

    def min_order_stat_pmf(self, n, x):
        """P(min of n draws = x), written as the binomial sum over how many
        draws land strictly above x."""
        _check_arity(n, minimum=1)
        below = self.cdf_left(x)
        at = self.cdf(x) - below
        above = max(1.0 - below - at, 0.0)
        total = 0.0
        for j in range(n):
            total += comb(n, j) * (above**j * (below + at) ** (n - j) - (at + above) ** j * below ** (n - j))
        return total

    def max_order_stat_mean(self, n):
        if n == 1:
            return self.mean()
        return float(self.max_order_pmf(n) @ self.support)

    def min_order_stat_mean(self, n):
        if n == 1:
            return self.mean()
        return float(self.min_order_pmf(n) @ self.support)

    def reflect(self):
        """Law of -X."""
        return EmpiricalDistribution(-self.support[::-1], self.weights[::-1])

    def push_forward(self, func):
        """Law of func(X) for a strictly increasing func."""
        image = np.asarray(func(self.support), dtype=float)
        if np.any(np.diff(image) <= 0):
            raise InputError("push-forward map must be strictly increasing on the support")
        return EmpiricalDistribution(image, self.weights)

    def sample(self, rng, size):
        idx = rng.choice(self.support.size, size=size, p=self.weights)
        return self.support[idx]

    def to_dict(self):
        return {"support": self.support.tolist(), "weights": self.weights.tolist()}


def from_sample(values):
    return EmpiricalDistribution.from_sample(values)


def point_mass(x):
    return EmpiricalDistribution([float(x)], [1.0])


def _check_arity(n, minimum):
    if int(n) != n or n < minimum:
        raise InvalidArity(f"number of draws must be an integer >= {minimum}, got {n}")


class ContinuousDistribution:
    """Interface for laws with a density on [low, high]."""

    low: float
    high: float

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def ppf(self, p):
        raise NotImplementedError

    @property
    def bounds(self):
        return SupportBounds(self.low, self.high)

    @property
    def is_degenerate(self):
        return False

    def mean(self):
        x, w = gauss_legendre(self.low, self.high, 256)
        return float(w @ (x * self.pdf(x)))

    def sample(self, rng, size):
        return self.ppf(rng.random(size))

    def reflect(self):
        return Reflected(self)


@dataclass(frozen=True)
class Uniform(ContinuousDistribution):
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not self.low < self.high:
            raise InputError("uniform needs low < high")

    def cdf(self, x):
        return np.clip((np.asarray(x, float) - self.low) / (self.high - self.low), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, float)
        return np.where((x >= self.low) & (x <= self.high), 1.0 / (self.high - self.low), 0.0)

    def ppf(self, p):
        return self.low + np.asarray(p, float) * (self.high - self.low)

    def mean(self):
        return 0.5 * (self.low + self.high)


@dataclass(frozen=True, eq=False)
class ScipyContinuous(ContinuousDistribution):
    """Wrap a frozen scipy law with compact support (e.g. beta with loc/scale)."""

    frozen: object
    low: float
    high: float

    @classmethod
    def wrap(cls, frozen):
        lo, hi = frozen.support()
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise InputError("continuous values need a bounded support")
        return cls(frozen, float(lo), float(hi))

    def cdf(self, x):
        return self.frozen.cdf(x)

    def pdf(self, x):
        return self.frozen.pdf(x)

    def ppf(self, p):
        return self.frozen.ppf(p)

    def mean(self):
        return float(self.frozen.mean())


@dataclass(frozen=True, eq=False)
class Reflected(ContinuousDistribution):
    """Law of -X for a continuous X."""

    base: ContinuousDistribution

    @property
    def low(self):
        return -self.base.high

    @property
    def high(self):
        return -self.base.low

    def cdf(self, x):
        return 1.0 - self.base.cdf(-np.asarray(x, float))

    def pdf(self, x):
        return self.base.pdf(-np.asarray(x, float))

    def ppf(self, p):
        return -self.base.ppf(1.0 - np.asarray(p, float))

    def mean(self):
        return -self.base.mean()

    def reflect(self):
        return self.base


@lru_cache(maxsize=16)
def _legendre(nodes):
    return np.polynomial.legendre.leggauss(nodes)


def gauss_legendre(a, b, nodes=256):
    """Nodes and weights for integrating over [a, b]."""
    x, w = _legendre(int(nodes))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def ks_distance(dist, cdf):
    """Sup distance between an empirical distribution (or raw sample) and a
    continuous cdf (both one-sided limits at each atom are checked)."""
    if not isinstance(dist, EmpiricalDistribution):
        dist = EmpiricalDistribution.from_sample(dist)
    true = np.asarray(cdf(dist.support), float)
    upper = dist.cumulative()
    lower = np.concatenate(([0.0], upper[:-1]))
    return float(max(np.abs(upper - true).max(), np.abs(lower - true).max()))


def parse_distribution(text):
    """Parse ``uniform:a,b``, ``point:x``, ``beta:a,b[,low,high]``,
    ``discrete:x1=w1;x2=w2`` or ``sample:path`` / ``discrete-file:path``."""
    kind, _, arg = str(text).partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "uniform":
            a, b = (float(s) for s in arg.split(","))
            return Uniform(a, b)
        if kind == "point":
            return point_mass(float(arg))
        if kind == "beta":
            parts = [float(s) for s in arg.split(",")]
            lo, hi = (parts[2], parts[3]) if len(parts) == 4 else (0.0, 1.0)
            return ScipyContinuous.wrap(stats.beta(parts[0], parts[1], loc=lo, scale=hi - lo))
        if kind == "discrete":
            pairs = [p.split("=") for p in arg.split(";") if p.strip()]
            xs = np.array([float(x) for x, _ in pairs])
            ws = np.array([float(w) for _, w in pairs])
            order = np.argsort(xs)
            ws = ws[order] / ws.sum()
            return EmpiricalDistribution(xs[order], ws)
        if kind == "sample":
            return EmpiricalDistribution.from_sample(_read_numbers(arg))
        if kind == "discrete-file":
            table = np.loadtxt(arg, delimiter=",", ndmin=2)
            order = np.argsort(table[:, 0])
            w = table[order, 1]
            return EmpiricalDistribution(table[order, 0], w / w.sum())
    except (ValueError, IndexError, OSError) as exc:
        raise InputError(f"cannot parse distribution {text!r}: {exc}") from exc
    raise InputError(f"unknown distribution kind {kind!r} in {text!r}")


def _read_numbers(path):
    with open(path, encoding="utf-8") as fh:
        tokens = fh.read().replace(",", " ").split()
    return np.array([float(t) for t in tokens])
