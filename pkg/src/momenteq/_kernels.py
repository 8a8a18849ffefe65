"""Scalar loss formulas and loop kernels (numba-compiled when available).

All formulas are written for the buyer orientation (highest bid wins). The
procurement side is obtained by the reflection x -> -x in ``kernels``; the
oracle is the one exception and evaluates procurement payoffs directly so that
the reflection itself gets checked.

Family codes: 0 = aggregate moment (expected winning bid), 1 = individual
moment (expected single-opponent bid).
"""
import math

import numpy as np

from ._accel import jit

AGG = 0
IND = 1


@jit
def exponent(family, n):
    if family == AGG:
        return (n - 1.0) / n
    return n - 1.0


@jit
def ratio_pow(num, den, e):
    # (num/den)**e clipped to [0, 1]; 0/0 counts as 1 (mass collapsed on the moment)
    if den <= 0.0:
        return 1.0
    r = num / den
    if r <= 0.0:
        return 0.0
    if r >= 1.0:
        return 1.0
    return r**e


@jit
def ind_anchor(l, mu, u, n, b):
    """Low support point of the worst case for bidding too high (IND)."""
    if n == 2:
        xh = l
    else:
        xh = ((n - 1.0) * b - u) / (n - 2.0)
    return max(l, min(xh, mu))


@jit
def loss_high(family, l, mom, u, n, b):
    if family == AGG:
        x1 = l
    else:
        x1 = ind_anchor(l, mom, u, n, b)
    return ratio_pow(u - mom, u - x1, exponent(family, n)) * (b - x1)


@jit
def loss_low(family, l, mom, u, n, v, b):
    e = exponent(family, n)
    if b < mom:
        if family == AGG:
            return max(ratio_pow(u - mom, u - b, e) * (v - b), v - mom)
        if n == 2:
            x1 = b if v <= u else mom
        else:
            x1 = max(b, min(((n - 1.0) * v - u) / (n - 2.0), mom))
        return max(ratio_pow(u - mom, u - x1, e) * (v - x1), v - mom)
    return (v - b) * (1.0 - ratio_pow(b - mom, b - l, e))


@jit
def bid_one(family, l, mom, u, n, v):
    """Minimax bid of a buyer with value v: bisection on loss_low - loss_high."""
    if u - l <= 0.0 or v <= l:
        return l
    hi = min(v, u)
    if loss_low(family, l, mom, u, n, v, hi) - loss_high(family, l, mom, u, n, hi) >= 0.0:
        return hi
    lo = l
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if loss_low(family, l, mom, u, n, v, mid) - loss_high(family, l, mom, u, n, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@jit
def inverse_one(family, l, mom, u, n, b):
    """Lowest value whose minimax bid is b (closed form)."""
    if b <= l:
        return l
    e = exponent(family, n)
    lam = loss_high(family, l, mom, u, n, b)
    if b >= mom:
        d = 1.0 - ratio_pow(b - mom, b - l, e)
        if d <= 0.0:
            return math.inf
        return b + lam / d
    if u - mom <= 0.0:
        return mom + lam
    if family == AGG:
        return min(b + lam / ratio_pow(u - mom, u - b, e), mom + lam)
    # worst low-side loss is a max of lines in v; invert by minimizing over the support point
    if n == 2:
        x1 = b if lam <= u - mom else mom
    elif lam <= 0.0:
        x1 = b
    else:
        x1 = u - ((u - mom) ** (n - 1.0) / (lam * (n - 1.0))) ** (1.0 / (n - 2.0))
        x1 = max(b, min(x1, mom))
    return x1 + lam * ((u - x1) / (u - mom)) ** (n - 1.0)


@jit
def bid_batch(family, l, mom, u, n, values, out):
    for i in range(values.shape[0]):
        out[i] = bid_one(family, l, mom, u, n, values[i])


@jit
def inverse_batch(family, l, mom, u, n, bids, out):
    for i in range(bids.shape[0]):
        out[i] = inverse_one(family, l, mom, u, n, bids[i])


@jit
def two_point_loss(family, procurement, mom, n, x1, x2, v, b):
    """Best-response payoff minus payoff of b against a two-point opponent law."""
    span = x2 - x1
    q = 1.0 if span <= 0.0 else (x2 - mom) / span
    e = exponent(family, n)
    if not procurement:
        p1 = q**e  # P(highest opponent bid = x1)
        best = max(p1 * (v - x1), v - x2, 0.0)
        if b > x2:
            pay = v - b
        elif b > x1:
            pay = p1 * (v - b)
        else:
            pay = 0.0
    else:
        p2 = (1.0 - q) ** e  # P(lowest opponent bid = x2)
        best = max(x1 - v, p2 * (x2 - v), 0.0)
        if b < x1:
            pay = b - v
        elif b < x2:
            pay = p2 * (b - v)
        else:
            pay = 0.0
    return best - pay


@jit
def oracle_max_loss(family, procurement, mom, n, v, b, x1s, x2s):
    best = 0.0
    for i in range(x1s.shape[0]):
        for j in range(x2s.shape[0]):
            loss = two_point_loss(family, procurement, mom, n, x1s[i], x2s[j], v, b)
            if loss > best:
                best = loss
    return best


@jit
def triweight_density(sorted_data, points, h, out):
    total = sorted_data.shape[0]
    for i in range(points.shape[0]):
        x = points[i]
        lo = np.searchsorted(sorted_data, x - h)
        hi = np.searchsorted(sorted_data, x + h, side="right")
        acc = 0.0
        for k in range(lo, hi):
            z = (x - sorted_data[k]) / h
            t = 1.0 - z * z
            if t > 0.0:
                acc += t * t * t
        out[i] = 35.0 / 32.0 * acc / (total * h)
