"""Dispatch between the compiled and numpy kernels, and orientation handling.

Procurement calls are answered by the buyer kernels under x -> -x: beliefs
(l, m, u) become (-u, -m, -l), costs and bids change sign.
"""
import numpy as np

from . import _kernels as _nb
from . import _kernels_np as _np
from ._accel import use_numba
from .enums import Family, Orientation


def _mirror(orientation, l, mom, u):
    if Orientation.parse(orientation) is Orientation.PROCUREMENT:
        return True, -u, -mom, -l
    return False, l, mom, u


def bid_values(family, orientation, l, mom, u, n, values):
    """Vector of minimax bids for values (buyer) or costs (procurement)."""
    code = Family.parse(family).code
    flip, l_, m_, u_ = _mirror(orientation, l, mom, u)
    x = np.asarray(values, float)
    x = -x if flip else x
    flat = np.ascontiguousarray(x.ravel())
    if use_numba():
        out = np.empty_like(flat)
        _nb.bid_batch(code, float(l_), float(m_), float(u_), int(n), flat, out)
    else:
        out = _np.bid_batch(code, float(l_), float(m_), float(u_), int(n), flat)
    out = out.reshape(x.shape)
    return -out if flip else out


def inverse_values(family, orientation, l, mom, u, n, bids):
    """Vector of lowest values (buyer) or highest costs (procurement) whose bid is given."""
    code = Family.parse(family).code
    flip, l_, m_, u_ = _mirror(orientation, l, mom, u)
    b = np.asarray(bids, float)
    b = -b if flip else b
    flat = np.ascontiguousarray(b.ravel())
    if use_numba():
        out = np.empty_like(flat)
        _nb.inverse_batch(code, float(l_), float(m_), float(u_), int(n), flat, out)
    else:
        out = _np.inverse_batch(code, float(l_), float(m_), float(u_), int(n), flat)
    out = out.reshape(b.shape)
    return -out if flip else out


def worst_losses(family, orientation, l, mom, u, n, v, b):
    """(too-high, too-low) worst-case losses through the reflection."""
    code = Family.parse(family).code
    flip, l_, m_, u_ = _mirror(orientation, l, mom, u)
    if flip:
        v, b = -v, -b
    hi = _nb.loss_high(code, float(l_), float(m_), float(u_), int(n), float(b))
    lo = _nb.loss_low(code, float(l_), float(m_), float(u_), int(n), float(v), float(b))
    return float(hi), float(lo)


def oracle_grid(l, mom, u, grid_size, b):
    x1s = np.linspace(l, mom, grid_size)
    x2s = np.linspace(mom, u, grid_size)
    if l <= b <= mom:
        x1s = np.unique(np.append(x1s, b))
    if mom <= b <= u:
        x2s = np.unique(np.append(x2s, b))
    return x1s, x2s


def oracle_max_loss(family, orientation, l, mom, u, n, v, b, grid_size):
    code = Family.parse(family).code
    proc = Orientation.parse(orientation) is Orientation.PROCUREMENT
    x1s, x2s = oracle_grid(l, mom, u, grid_size, b)
    args = (code, proc, float(mom), int(n), float(v), float(b), x1s, x2s)
    if use_numba():
        return float(_nb.oracle_max_loss(*args))
    return float(_np.oracle_max_loss(*args))


def triweight_density(data, points, h):
    sorted_data = np.sort(np.asarray(data, float))
    pts = np.ascontiguousarray(np.asarray(points, float))
    if use_numba():
        out = np.empty_like(pts)
        _nb.triweight_density(sorted_data, pts, float(h), out)
        return out
    return _np.triweight_density(sorted_data, pts, float(h))
