"""Structural estimation from observed bids.

Beliefs are estimated with sample statistics (extrema, average winning bid,
mean, optional Tukey outlier fence), then bids are mapped back to pseudo values
(or pseudo costs) by the inverse minimax bidding function. The Bayes-Nash
benchmark uses the first-order-condition inversion with a triweight kernel
density and the closed-form equilibrium bid.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bidding import inverse_bid
from .distributions import ContinuousDistribution, EmpiricalDistribution, gauss_legendre
from .enums import Family, Orientation
from .errors import BidOutsideSupport, DensityUnderflow, EmptySample, InputError, InvalidArity
from .loss import make_belief

__all__ = [
    "BidSample",
    "BeliefEstimate",
    "PseudoValueSet",
    "parse_outlier_rule",
    "estimate_beliefs",
    "pseudo_values",
    "gpv_bandwidth",
    "gpv_pseudo_values",
    "bne_bid",
    "TRIWEIGHT_FACTOR",
]

TRIWEIGHT_FACTOR = 2.978
SILVERMAN = 1.06


@dataclass(frozen=True, eq=False)
class BidSample:
    """Bids from auctions with n bidders each; ``structured`` keeps one row per
    auction when the auction membership is known."""

    flat: np.ndarray
    n: int
    structured: np.ndarray = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidArity(f"need n >= 2 bidders, got {self.n}")
        flat = np.asarray(self.flat, float).ravel()
        if flat.size == 0:
            raise EmptySample("no bids")
        if not np.all(np.isfinite(flat)):
            raise InputError("bids must be finite")
        if self.structured is not None:
            H = np.asarray(self.structured, float)
            if H.ndim != 2 or H.shape[1] != self.n:
                raise InputError(f"structured sample must be T x {self.n}")
            if not np.array_equal(H.ravel(), flat):
                raise InputError("flat bids must be the row concatenation of the structured sample")
            object.__setattr__(self, "structured", H)
        object.__setattr__(self, "flat", flat)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_matrix(cls, H):
        H = np.asarray(H, float)
        if H.ndim != 2:
            raise InputError("structured sample must be a matrix (ragged auctions are not allowed)")
        return cls(H.ravel(), H.shape[1], H)

    @classmethod
    def from_flat(cls, bids, n):
        return cls(np.asarray(bids, float), n)

    @property
    def size(self):
        return self.flat.size


def parse_outlier_rule(rule):
    """None / 'none' -> no fence; 'tukey' -> k=1.5; 'tukey:k' or a number -> k."""
    if rule is None:
        return None
    if isinstance(rule, (int, float)):
        return float(rule)
    text = str(rule).strip().lower()
    if text in ("", "none"):
        return None
    kind, _, arg = text.partition(":")
    if kind != "tukey":
        raise InputError(f"unknown outlier rule {rule!r}")
    k = float(arg) if arg else 1.5
    if k < 0:
        raise InputError("Tukey factor must be non-negative")
    return k


@dataclass(frozen=True)
class BeliefEstimate:
    l: float
    m: float
    mu: float
    u: float
    n: int
    orientation: Orientation
    outliers_removed: int = 0
    cutoff: float = None
    source: tuple = ()

    def moment(self, family):
        return self.m if Family.parse(family) is Family.AGG else self.mu

    def belief(self, family):
        return make_belief(family, self.l, self.moment(family), self.u, self.n, self.orientation)

    def keep_mask(self, bids):
        b = np.asarray(bids, float)
        if self.cutoff is None:
            return np.ones(b.shape, bool)
        if self.orientation is Orientation.BUYER:
            return b >= self.cutoff
        return b <= self.cutoff

    def to_dict(self):
        return {
            "l": self.l, "m": self.m, "mu": self.mu, "u": self.u, "n": self.n,
            "orientation": self.orientation.value, "outliers_removed": self.outliers_removed,
            "cutoff": self.cutoff, "source": list(self.source),
        }


def tukey_cutoff(bids, k, orientation):
    d = EmpiricalDistribution.from_sample(bids)
    q1, q3 = d.quantile(0.25), d.quantile(0.75)
    if Orientation.parse(orientation) is Orientation.BUYER:
        return q1 - k * (q3 - q1)
    return q3 + k * (q3 - q1)


def estimate_beliefs(sample, orientation=Orientation.BUYER, outlier_rule=None):
    """Range and moment beliefs from a bid sample.

    Both moments are returned: ``m`` (average winning bid, or the expected
    extreme of n draws from the empirical law when auctions are not identified)
    and ``mu`` (sample mean). Moments use every bid; the outlier fence only
    trims the range end on the losing side (low bids for buyers, high bids in
    procurement)."""
    orientation = Orientation.parse(orientation)
    k = parse_outlier_rule(outlier_rule)
    bids = sample.flat
    notes = []
    buyer = orientation is Orientation.BUYER
    if sample.structured is not None:
        win = sample.structured.max(axis=1) if buyer else sample.structured.min(axis=1)
        m = float(win.mean())
        notes.append("moment: average winning bid")
    else:
        d = EmpiricalDistribution.from_sample(bids)
        m = d.max_order_stat_mean(sample.n) if buyer else d.min_order_stat_mean(sample.n)
        notes.append(f"moment: expected extreme of {sample.n} draws")
    mu = float(bids.mean())
    l, u = float(bids.min()), float(bids.max())
    if l == u:
        notes.append("degenerate sample: all bids identical")
    removed, cutoff = 0, None
    if k is not None:
        cutoff = float(tukey_cutoff(bids, k, orientation))
        keep = bids >= cutoff if buyer else bids <= cutoff
        removed = int((~keep).sum())
        if buyer:
            l = float(bids[keep].min())
        else:
            u = float(bids[keep].max())
        notes.append(f"tukey k={k}")
    return BeliefEstimate(l, m, mu, u, sample.n, orientation, removed, cutoff, tuple(notes))


@dataclass(frozen=True, eq=False)
class PseudoValueSet:
    """Recovered values (or costs) in input order for the kept bids."""

    values: np.ndarray
    family: Family
    belief_used: object
    kept: np.ndarray
    meta: dict = field(default_factory=dict)

    def distribution(self):
        return EmpiricalDistribution.from_sample(self.values)

    def __len__(self):
        return self.values.size


def _bids_of(sample):
    return sample.flat if isinstance(sample, BidSample) else np.asarray(sample, float).ravel()


def pseudo_values(sample, estimate, family, drop_outliers=False):
    """Invert the minimax bidding function at the estimated beliefs."""
    family = Family.parse(family)
    bids = _bids_of(sample)
    kept = estimate.keep_mask(bids) if drop_outliers else np.ones(bids.shape, bool)
    b = bids[kept]
    belief = estimate.belief(family)
    tol = 1e-12 * belief.scale
    bad = (b < belief.l - tol) | (b > belief.u + tol)
    if np.any(bad):
        idx = np.flatnonzero(kept)[bad]
        raise BidOutsideSupport(
            f"{idx.size} bid(s) outside [{belief.l}, {belief.u}] at positions {idx[:10].tolist()}",
            bids[idx].tolist(),
        )
    values = np.asarray(inverse_bid(belief, np.clip(b, belief.l, belief.u)), float)
    return PseudoValueSet(values, family, estimate, kept)


def gpv_bandwidth(bids, factor=TRIWEIGHT_FACTOR * SILVERMAN):
    b = np.asarray(bids, float)
    return factor * np.std(b, ddof=1) * b.size ** (-0.2)


def gpv_pseudo_values(sample, n=None, orientation=Orientation.BUYER, bandwidth=None):
    """Pseudo values from the Bayes-Nash first-order condition.

    Buyer: v = b + G(b) / ((n-1) g(b)); procurement: c = b - (1 - G(b)) / ((n-1) g(b)),
    G the empirical cdf (#{bids <= b} / N), g a triweight kernel density. Bids
    within one bandwidth of either sample end are trimmed."""
    orientation = Orientation.parse(orientation)
    bids = _bids_of(sample)
    n = sample.n if n is None and isinstance(sample, BidSample) else n
    if n is None or int(n) != n or n < 2:
        raise InvalidArity("GPV inversion needs n >= 2")
    if bids.size < 30:
        warnings.warn(f"only {bids.size} bids: kernel density will be rough", stacklevel=2)
    h = gpv_bandwidth(bids) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise InputError("bandwidth must be positive (are all bids identical?)")
    lo, hi = bids.min(), bids.max()
    kept = (bids - lo >= h) & (hi - bids >= h)
    if not kept.any():
        raise EmptySample("every bid lies within one bandwidth of the sample ends")
    b = bids[kept]
    G = np.searchsorted(np.sort(bids), b, side="right") / bids.size
    g = kernels.triweight_density(bids, b, h)
    if np.any(g <= 0):
        raise DensityUnderflow(f"zero density at {int((g <= 0).sum())} untrimmed bid(s)")
    if orientation is Orientation.BUYER:
        values = b + G / ((n - 1) * g)
    else:
        values = b - (1.0 - G) / ((n - 1) * g)
    return PseudoValueSet(values, Family.BNE, None, kept, {"bandwidth": h, "n": int(n)})


def bne_bid(F, n, c, orientation):
    """Bayes-Nash equilibrium bid for a value (buyer) or cost (procurement).

    Procurement: c + int_c^cbar (1-F)^(n-1) / (1-F(c))^(n-1); buyer:
    v - int_vlow^v F^(n-1) / F(v)^(n-1). Exact rectangle sums for an empirical
    F, Gauss-Legendre quadrature for a continuous one."""
    orientation = Orientation.parse(orientation)
    if int(n) != n or n < 2:
        raise InvalidArity(f"need n >= 2 bidders, got {n}")
    x = np.asarray(c, float)
    if isinstance(F, EmpiricalDistribution):
        out = _bne_empirical(F, int(n), x.ravel(), orientation)
    elif isinstance(F, ContinuousDistribution):
        out = _bne_continuous(F, int(n), x.ravel(), orientation)
    else:
        raise InputError("F must be an EmpiricalDistribution or a ContinuousDistribution")
    out = out.reshape(x.shape)
    return float(out) if out.ndim == 0 else out


def _bne_empirical(F, n, x, orientation):
    s = F.support
    cum = F.cumulative()
    widths = np.diff(s)
    k = np.searchsorted(s, x, side="right") - 1  # last support point <= x
    out = np.empty_like(x)
    if orientation is Orientation.PROCUREMENT:
        surv = np.clip(1.0 - cum[:-1], 0.0, 1.0) ** (n - 1)
        tail = np.concatenate((np.cumsum((widths * surv)[::-1])[::-1], [0.0]))  # int from s_j to top
        for i, (xi, ki) in enumerate(zip(x, k)):
            if xi >= s[-1]:
                out[i] = xi
                continue
            Fc = cum[ki] if ki >= 0 else 0.0
            nxt = ki + 1
            area = (s[nxt] - xi) * (1.0 - Fc) ** (n - 1) + tail[nxt]
            out[i] = xi + area / (1.0 - Fc) ** (n - 1)
        return out
    power = cum[:-1] ** (n - 1)
    head = np.concatenate(([0.0], np.cumsum(widths * power)))  # int from bottom to s_j
    for i, (xi, ki) in enumerate(zip(x, k)):
        if ki < 0:
            out[i] = xi
            continue
        Fv = cum[ki]
        area = head[ki] + (xi - s[ki]) * Fv ** (n - 1)
        out[i] = xi - area / Fv ** (n - 1)
    return out


def _bne_continuous(F, n, x, orientation, nodes=256):
    out = np.empty_like(x)
    for i, xi in enumerate(x):
        if orientation is Orientation.PROCUREMENT:
            if xi >= F.high:
                out[i] = xi
                continue
            t, w = gauss_legendre(max(xi, F.low), F.high, nodes)
            area = w @ (1.0 - np.asarray(F.cdf(t), float)) ** (n - 1)
            if xi < F.low:
                area += F.low - xi
            denom = (1.0 - float(F.cdf(xi))) ** (n - 1)
            out[i] = xi + area / denom
        else:
            if xi <= F.low:
                out[i] = xi
                continue
            t, w = gauss_legendre(F.low, min(xi, F.high), nodes)
            area = w @ np.asarray(F.cdf(t), float) ** (n - 1)
            if xi > F.high:
                area += xi - F.high
            out[i] = xi - area / float(F.cdf(xi)) ** (n - 1)
    return out
