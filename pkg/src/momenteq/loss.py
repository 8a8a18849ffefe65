"""Worst-case loss of a bid when opponents' bids are only known through a
range [l, u] and one moment.

Two belief families:

* ``AggregateBelief``: the expected *winning* bid among the n bidders is m.
* ``IndividualBelief``: the expected bid of each single opponent is mu.

The worst case over all bid distributions consistent with a belief puts mass on
at most two points x1 <= moment <= x2, which gives the closed forms below and
also makes the exhaustive grid oracle (``oracle_worst_loss``) possible.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .enums import Family, Orientation
from .errors import BidOutsideSupport, DegenerateSupport, DominatedBid, InputError, InvalidArity, InvalidBelief

__all__ = [
    "AggregateBelief",
    "IndividualBelief",
    "TwoPointDistribution",
    "make_belief",
    "q_prob",
    "p_win",
    "worst_loss_high_agg",
    "worst_loss_low_agg",
    "worst_loss_high_ind",
    "worst_loss_low_ind",
    "worst_loss",
    "oracle_worst_loss",
]

_TOL = 1e-12


def _validate(l, moment, u, n, name):
    if not all(np.isfinite([l, moment, u])):
        raise InvalidBelief("belief must be finite")
    if int(n) != n or n < 2:
        raise InvalidArity(f"need n >= 2 bidders, got {n}")
    if not (l <= moment <= u):
        raise InvalidBelief(f"belief needs l <= {name} <= u, got ({l}, {moment}, {u})")


class _Belief:
    family: Family

    @property
    def moment(self):
        raise NotImplementedError

    @property
    def is_degenerate(self):
        return self.u - self.l <= 0.0

    @property
    def is_separating(self):
        return self.l < self.moment < self.u

    @property
    def scale(self):
        return max(1.0, abs(self.u), abs(self.l))

    def as_tuple(self):
        return (self.l, self.moment, self.u)


@dataclass(frozen=True)
class AggregateBelief(_Belief):
    """Range [l, u] of opponent bids and expected winning bid m."""

    l: float
    m: float
    u: float
    n: int
    orientation: Orientation = Orientation.BUYER
    family = Family.AGG

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation.parse(self.orientation))
        _validate(self.l, self.m, self.u, self.n, "m")

    @property
    def moment(self):
        return self.m

    def replace(self, **kw):
        d = dict(l=self.l, m=self.m, u=self.u, n=self.n, orientation=self.orientation)
        d.update(kw)
        return AggregateBelief(**d)


@dataclass(frozen=True)
class IndividualBelief(_Belief):
    """Range [l, u] of opponent bids and expected single-opponent bid mu."""

    l: float
    mu: float
    u: float
    n: int
    orientation: Orientation = Orientation.BUYER
    family = Family.IND

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation.parse(self.orientation))
        _validate(self.l, self.mu, self.u, self.n, "mu")

    @property
    def moment(self):
        return self.mu

    def replace(self, **kw):
        d = dict(l=self.l, mu=self.mu, u=self.u, n=self.n, orientation=self.orientation)
        d.update(kw)
        return IndividualBelief(**d)


def make_belief(family, l, moment, u, n, orientation=Orientation.BUYER):
    family = Family.parse(family)
    if family is Family.AGG:
        return AggregateBelief(l, moment, u, n, orientation)
    if family is Family.IND:
        return IndividualBelief(l, moment, u, n, orientation)
    raise InputError("BNE has no moment belief")


@dataclass(frozen=True)
class TwoPointDistribution:
    """Opponent bid law on {x1, x2}; ``prob_x1`` is pinned by the moment."""

    x1: float
    x2: float
    prob_x1: float

    def __post_init__(self):
        if self.x1 > self.x2 or not (0.0 <= self.prob_x1 <= 1.0):
            raise DegenerateSupport("need x1 <= x2 and a probability in [0, 1]")

    @classmethod
    def pinned(cls, belief, x1, x2):
        return cls(float(x1), float(x2), q_prob(belief, x1, x2))

    @property
    def mean(self):
        return self.prob_x1 * self.x1 + (1.0 - self.prob_x1) * self.x2


def q_prob(belief, x1, x2):
    """Probability on x1 that puts the moment on target.

    For aggregate beliefs this is the probability that the extreme (max for a
    buyer auction, min for procurement) of all n bids equals x1; for individual
    beliefs it is the probability that one opponent bids x1."""
    mom = belief.moment
    if x1 > x2 or not (x1 - _TOL <= mom <= x2 + _TOL):
        raise DegenerateSupport(f"need x1 <= moment <= x2, got ({x1}, {mom}, {x2})")
    if x2 - x1 <= 0.0:
        return 1.0
    return float(min(max((x2 - mom) / (x2 - x1), 0.0), 1.0))


def p_win(belief, x1, x2):
    """Probability of beating every opponent by bidding marginally past the
    near point (above x1 for a buyer, below x2 in procurement)."""
    q = q_prob(belief, x1, x2)
    e = (belief.n - 1.0) / belief.n if belief.family is Family.AGG else belief.n - 1.0
    if belief.orientation is Orientation.BUYER:
        return q**e
    return (1.0 - q) ** e


def _check_bid(belief, v, b):
    tol = _TOL * belief.scale
    if not (belief.l - tol <= b <= belief.u + tol):
        raise BidOutsideSupport(f"bid {b} outside [{belief.l}, {belief.u}]", [b])
    if v is None:
        return
    if belief.orientation is Orientation.BUYER and b > v + tol:
        raise DominatedBid(f"bid {b} above value {v}")
    if belief.orientation is Orientation.PROCUREMENT and b < v - tol:
        raise DominatedBid(f"bid {b} below cost {v}")


def _family_check(belief, family):
    if belief.family is not family:
        raise InputError(f"expected a {family.value} belief, got {belief.family.value}")


def _losses(belief, v, b):
    return kernels.worst_losses(
        belief.family, belief.orientation, belief.l, belief.moment, belief.u, belief.n, v, b
    )


def worst_loss_high_agg(belief, b):
    """Worst-case loss from having bid more than needed (aggregate belief)."""
    _family_check(belief, Family.AGG)
    _check_bid(belief, None, b)
    return _losses(belief, b, b)[0]


def worst_loss_low_agg(belief, v, b):
    """Worst-case loss from having bid too little to win (aggregate belief)."""
    _family_check(belief, Family.AGG)
    _check_bid(belief, v, b)
    return _losses(belief, v, b)[1]


def worst_loss_high_ind(belief, b):
    _family_check(belief, Family.IND)
    _check_bid(belief, None, b)
    return _losses(belief, b, b)[0]


def worst_loss_low_ind(belief, v, b):
    """Worst case over single-opponent laws with mass on x1 in [b, mu] and u."""
    _family_check(belief, Family.IND)
    _check_bid(belief, v, b)
    return _losses(belief, v, b)[1]


def worst_loss(belief, v, b):
    """max of the two conditional worst cases; 0 for a degenerate belief."""
    _check_bid(belief, v, b)
    if belief.is_degenerate:
        return 0.0
    return max(_losses(belief, v, b))


def oracle_worst_loss(belief, v, b, grid_size=2000):
    """Brute-force worst case over two-point opponent laws on a uniform grid.

    Does not use any closed form: for every (x1, x2) pair the moment pins the
    probabilities, the best response is scanned over bidding at x1, at x2
    (suprema) or not winning, and bid b loses ties."""
    if grid_size < 100:
        raise InputError("oracle grid needs at least 100 points per axis")
    if belief.is_degenerate:
        return 0.0
    return kernels.oracle_max_loss(
        belief.family, belief.orientation, belief.l, belief.moment, belief.u, belief.n, v, b, grid_size
    )
