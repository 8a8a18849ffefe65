"""Vectorized numpy versions of the loop kernels in ``_kernels``.

Same formulas, same bisection stopping rule; results agree with the compiled
path up to last-ulp differences in ``pow``.
"""
import numpy as np

from ._kernels import AGG


def exponent(family, n):
    return (n - 1.0) / n if family == AGG else n - 1.0


def ratio_pow(num, den, e):
    num, den = np.broadcast_arrays(np.asarray(num, float), np.asarray(den, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 1.0)
    return np.clip(r, 0.0, 1.0) ** e


def ind_anchor(l, mu, u, n, b):
    b = np.asarray(b, float)
    xh = np.full_like(b, l) if n == 2 else ((n - 1.0) * b - u) / (n - 2.0)
    return np.maximum(l, np.minimum(xh, mu))


def loss_high(family, l, mom, u, n, b):
    b = np.asarray(b, float)
    x1 = np.full_like(b, l) if family == AGG else ind_anchor(l, mom, u, n, b)
    return ratio_pow(u - mom, u - x1, exponent(family, n)) * (b - x1)


def loss_low(family, l, mom, u, n, v, b):
    v, b = np.broadcast_arrays(np.asarray(v, float), np.asarray(b, float))
    e = exponent(family, n)
    above = (v - b) * (1.0 - ratio_pow(b - mom, b - l, e))
    if family == AGG:
        below = np.maximum(ratio_pow(u - mom, u - b, e) * (v - b), v - mom)
    else:
        if n == 2:
            x1 = np.where(v <= u, b, mom)
        else:
            x1 = np.maximum(b, np.minimum(((n - 1.0) * v - u) / (n - 2.0), mom))
        below = np.maximum(ratio_pow(u - mom, u - x1, e) * (v - x1), v - mom)
    return np.where(b < mom, below, above)


def bid_batch(family, l, mom, u, n, values):
    v = np.asarray(values, float)
    out = np.full(v.shape, float(l))
    if u - l <= 0.0:
        return out
    active = v > l
    hi = np.minimum(v, u)
    f_hi = loss_low(family, l, mom, u, n, v, hi) - loss_high(family, l, mom, u, n, hi)
    capped = active & (f_hi >= 0.0)
    out[capped] = hi[capped]
    live = active & ~capped
    lo = np.full(v.shape, float(l))
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        moving = live & (mid > lo) & (mid < hi)
        if not moving.any():
            break
        f = loss_low(family, l, mom, u, n, v, mid) - loss_high(family, l, mom, u, n, mid)
        up = f > 0.0
        lo = np.where(moving & up, mid, lo)
        hi = np.where(moving & ~up, mid, hi)
    out[live] = 0.5 * (lo + hi)[live]
    return out


def inverse_batch(family, l, mom, u, n, bids):
    b = np.asarray(bids, float)
    e = exponent(family, n)
    lam = loss_high(family, l, mom, u, n, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = 1.0 - ratio_pow(b - mom, b - l, e)
        above = np.where(d > 0.0, b + lam / np.where(d > 0.0, d, 1.0), np.inf)
        if u - mom <= 0.0:
            below = mom + lam
        elif family == AGG:
            below = np.minimum(b + lam / ratio_pow(u - mom, u - b, e), mom + lam)
        else:
            if n == 2:
                x1 = np.where(lam <= u - mom, b, mom)
            else:
                x1 = u - ((u - mom) ** (n - 1.0) / (lam * (n - 1.0))) ** (1.0 / (n - 2.0))
                x1 = np.where(lam > 0.0, x1, b)
                x1 = np.maximum(b, np.minimum(x1, mom))
            below = x1 + lam * ((u - x1) / (u - mom)) ** (n - 1.0)
    out = np.where(b >= mom, above, below)
    return np.where(b <= l, float(l), out)


def oracle_max_loss(family, procurement, mom, n, v, b, x1s, x2s, chunk=256):
    e = exponent(family, n)
    x2 = np.asarray(x2s, float)[None, :]
    best = 0.0
    for start in range(0, len(x1s), chunk):
        x1 = np.asarray(x1s[start : start + chunk], float)[:, None]
        span = x2 - x1
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(span > 0.0, (x2 - mom) / np.where(span > 0.0, span, 1.0), 1.0)
        if not procurement:
            p1 = q**e
            top = np.maximum(np.maximum(p1 * (v - x1), v - x2), 0.0)
            pay = np.where(b > x2, v - b, np.where(b > x1, p1 * (v - b), 0.0))
        else:
            p2 = (1.0 - q) ** e
            top = np.maximum(np.maximum(x1 - v, p2 * (x2 - v)), 0.0)
            pay = np.where(b < x1, b - v, np.where(b < x2, p2 * (b - v), 0.0))
        best = max(best, float((top - pay).max()))
    return best


def triweight_density(sorted_data, points, h, chunk=512):
    data = np.asarray(sorted_data, float)
    pts = np.asarray(points, float)
    out = np.empty(pts.shape)
    order = np.argsort(pts, kind="stable")
    for start in range(0, len(pts), chunk):
        idx = order[start : start + chunk]
        x = pts[idx]
        lo = np.searchsorted(data, x.min() - h)
        hi = np.searchsorted(data, x.max() + h, side="right")
        z = (x[:, None] - data[None, lo:hi]) / h
        t = np.clip(1.0 - z * z, 0.0, None)
        out[idx] = 35.0 / 32.0 * (t * t * t).sum(axis=1) / (len(data) * h)
    return out
