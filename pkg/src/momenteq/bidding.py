"""Minimax-loss bidding functions and their inverses.

The bid equalizes the worst-case loss from bidding too high with the worst-case
loss from bidding too low, capped at the upper belief. Forward evaluation is a
bisection; the inverses are closed form (the worst-case losses are piecewise
linear in the value for a fixed bid).
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._kernels import ratio_pow
from .enums import Family, Orientation
from .errors import BidOutsideSupport, InputError, InvalidArity, ValueBelowSupport
from .loss import AggregateBelief, IndividualBelief

__all__ = [
    "BiddingFunction",
    "bid",
    "bid_agg",
    "bid_ind",
    "bid_ind_two_bidders",
    "inverse_bid",
    "inverse_bid_agg",
    "inverse_bid_ind",
    "cost_inverse_procurement_ind",
    "cost_inverse_procurement_agg",
    "cutoff_value_agg",
    "affine_transform_check",
]

_TOL = 1e-12


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _check_values(belief, v):
    arr = np.asarray(v, float)
    tol = _TOL * belief.scale
    if belief.orientation is Orientation.BUYER:
        bad = arr < belief.l - tol
        side = "below the lowest bid belief"
    else:
        bad = arr > belief.u + tol
        side = "above the highest bid belief"
    if np.any(bad):
        raise ValueBelowSupport(f"types {arr[bad].ravel()[:5].tolist()} lie {side}")
    return arr


def bid(belief, v):
    """Minimax bid for value(s) v (buyer) or cost(s) v (procurement)."""
    arr = _check_values(belief, v)
    if belief.is_degenerate:
        out = np.full(arr.shape, float(belief.l))
    else:
        out = kernels.bid_values(
            belief.family, belief.orientation, belief.l, belief.moment, belief.u, belief.n, arr
        )
    return _scalar_or_array(out, v)


def bid_agg(belief, v):
    if not isinstance(belief, AggregateBelief):
        raise InputError("bid_agg needs an AggregateBelief")
    return bid(belief, v)


def bid_ind(belief, v):
    if not isinstance(belief, IndividualBelief):
        raise InputError("bid_ind needs an IndividualBelief")
    return bid(belief, v)


def bid_ind_two_bidders(belief, v):
    """Closed-form minimax bid for two bidders with an individual-moment belief
    (buyer orientation)."""
    if belief.n != 2 or belief.orientation is not Orientation.BUYER:
        raise InvalidArity("closed form covers two bidders in a buyer auction")
    l, mu, u = belief.l, belief.mu, belief.u
    v = _check_values(belief, v)
    if belief.is_degenerate:
        return _scalar_or_array(np.full(v.shape, float(l)), v)
    v_low = (u * (mu - l) + mu * (u - mu)) / (u - l)
    v_high = (u * (u - l) - l * (u - mu)) / (mu - l) if mu > l else np.inf
    with np.errstate(invalid="ignore", divide="ignore"):
        low = u - np.sqrt(np.clip((u - l) * (u - v), 0.0, None))
        # b >= mu: (u-mu)(b-l)^2 = (u-l)(v-b)(mu-l), root above l
        a = u - mu
        c2 = (u - l) * (mu - l)
        qa = a
        qb = -2.0 * a * l + c2
        qc = a * l * l - c2 * v
        disc = np.clip(qb * qb - 4.0 * qa * qc, 0.0, None)
        if a > 0:
            mid = (-qb + np.sqrt(disc)) / (2.0 * qa)
        else:
            mid = np.asarray(v, float)
    out = np.where(v < v_low, low, np.where(v < v_high, mid, u))
    out = np.minimum(np.where(v <= l, l, out), u)
    return _scalar_or_array(out, v)


def cutoff_value_agg(belief):
    """Type whose minimax bid equals m (the kink of the aggregate bidding function)."""
    l, m, u, n = belief.l, belief.m, belief.u, belief.n
    p = ratio_pow(u - m, u - l, (n - 1.0) / n)
    if belief.orientation is Orientation.BUYER:
        return m + (m - l) * p
    q = ratio_pow(m - l, u - l, (n - 1.0) / n)
    return m - (u - m) * q


def _check_bids(belief, b):
    arr = np.asarray(b, float)
    tol = _TOL * belief.scale
    bad = (arr < belief.l - tol) | (arr > belief.u + tol)
    if np.any(bad):
        offenders = arr[bad].ravel().tolist()
        raise BidOutsideSupport(
            f"{len(offenders)} bid(s) outside [{belief.l}, {belief.u}]: {offenders[:5]}", offenders
        )
    return np.clip(arr, belief.l, belief.u)


def inverse_bid(belief, b):
    """Type (value or cost) whose minimax bid is b; at the cap b = u (buyer) it
    returns the lowest capped type."""
    arr = _check_bids(belief, b)
    if belief.is_degenerate:
        out = np.full(arr.shape, float(belief.l))
    else:
        out = kernels.inverse_values(
            belief.family, belief.orientation, belief.l, belief.moment, belief.u, belief.n, arr
        )
    return _scalar_or_array(out, b)


def inverse_bid_agg(belief, b):
    if not isinstance(belief, AggregateBelief):
        raise InputError("inverse_bid_agg needs an AggregateBelief")
    return inverse_bid(belief, b)


def inverse_bid_ind(belief, b):
    if not isinstance(belief, IndividualBelief):
        raise InputError("inverse_bid_ind needs an IndividualBelief")
    return inverse_bid(belief, b)


def cost_inverse_procurement_ind(belief, b):
    """Cost of a procurement bidder submitting b, from the explicit formula in
    procurement notation (no reflection)."""
    if not isinstance(belief, IndividualBelief) or belief.orientation is not Orientation.PROCUREMENT:
        raise InputError("needs a procurement IndividualBelief")
    arr = _check_bids(belief, b)
    l, m, u, n = belief.l, belief.mu, belief.u, belief.n
    if belief.is_degenerate:
        return _scalar_or_array(np.full(arr.shape, float(l)), b)
    k = n - 1.0
    x2_hat = np.full(arr.shape, u) if n == 2 else ((n - 1.0) * arr - l) / (n - 2.0)
    x2 = np.minimum(u, np.maximum(m, x2_hat))
    with np.errstate(divide="ignore", invalid="ignore"):
        high = arr - ((arr - l) / (x2 - l)) ** k * (x2 - arr)
        low = arr - ((m - l) * (u - arr) / (x2 - l)) ** k * (x2 - arr) / ((u - arr) ** k - (m - arr) ** k)
    out = np.where(arr > m, high, low)
    out = np.where(arr >= u, u, out)
    return _scalar_or_array(out, b)


def cost_inverse_procurement_agg(belief, b):
    """Cost of a procurement bidder submitting b under an aggregate belief,
    solving the loss equalization in the cost by bisection."""
    if not isinstance(belief, AggregateBelief) or belief.orientation is not Orientation.PROCUREMENT:
        raise InputError("needs a procurement AggregateBelief")
    arr = _check_bids(belief, b)
    out = np.array([_cost_agg_one(belief, float(x)) for x in arr.ravel()]).reshape(arr.shape)
    return _scalar_or_array(out, b)


def _q(x1, x2, m):
    return 1.0 if x2 - x1 <= 0.0 else (x2 - m) / (x2 - x1)


def _cost_agg_one(belief, b):
    l, m, u, n = belief.l, belief.m, belief.u, belief.n
    if belief.is_degenerate or b >= u:
        return b
    e = (n - 1.0) / n
    too_low = (1.0 - _q(l, u, m)) ** e * (u - b)

    def too_high(c):
        if m < b:
            return max((1.0 - _q(l, b, m)) ** e * (b - c), m - c)
        return (b - c) * (1.0 - max(1.0 - _q(b, u, m), 0.0) ** e)

    hi = b
    if too_high(hi) - too_low >= 0.0:
        return hi
    step = max(u - l, 1e-12)
    lo = b - step
    while too_high(lo) - too_low < 0.0:
        step *= 2.0
        lo = b - step
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if too_high(mid) - too_low > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BiddingFunction:
    """Callable minimax bidding function for a fixed belief."""

    belief: object

    @property
    def family(self):
        return self.belief.family

    def __call__(self, v):
        return bid(self.belief, v)

    def inverse(self, b):
        return inverse_bid(self.belief, b)


def affine_transform_check(belief, p, q_shift, grid=50, tol=1e-8):
    """Check bid(p v + q | p l + q, ...) == p bid(v | l, ...) + q on a value grid."""
    if p <= 0:
        raise InputError("scale must be positive")
    lo, hi = belief.l, belief.u
    span = max(hi - lo, 1e-9)
    if belief.orientation is Orientation.BUYER:
        values = np.linspace(lo, hi + span, grid)
    else:
        values = np.linspace(lo - span, hi, grid)
    moved = belief.replace(
        l=p * belief.l + q_shift,
        u=p * belief.u + q_shift,
        **{"m" if belief.family is Family.AGG else "mu": p * belief.moment + q_shift},
    )
    lhs = bid(moved, p * values + q_shift)
    rhs = p * bid(belief, values) + q_shift
    scale = max(1.0, np.abs(rhs).max())
    return bool(np.max(np.abs(lhs - rhs)) <= tol * scale)
