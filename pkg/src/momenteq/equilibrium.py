"""Moment equilibria: beliefs reproduced by the bids they induce.

The lowest (buyer) range belief is the lowest value, the highest one follows
from a consistency equation tying it to the moment, and the moment is a fixed
point of the map "moment -> expected winning bid" (aggregate) or "moment ->
expected bid" (individual). Everything is solved in buyer orientation;
procurement runs through the reflection x -> -x.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._kernels import ratio_pow
from .distributions import ContinuousDistribution, EmpiricalDistribution, gauss_legendre
from .enums import Family, Orientation
from .errors import InfeasibleBelief, InputError, InvalidArity, SolverFailure
from .loss import make_belief

__all__ = [
    "EquilibriumSolution",
    "upper_belief_agg",
    "upper_belief_ind",
    "upper_belief",
    "solve_equilibrium",
    "solve_equilibrium_agg",
    "solve_equilibrium_ind",
    "solve_sample_equilibrium",
    "solve_sample_equilibrium_agg",
    "solve_sample_equilibrium_ind",
    "monte_carlo_consistency",
]

SCAN_POINTS = 41
QUAD_NODES = 256
TABLE_SIZE = 512


def _bisect(func, lo, hi, max_iter=400):
    """Root of a function positive at lo and non-positive at hi, to float resolution."""
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if func(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), it


def _check_upper_args(l, moment, v_bar, n):
    if int(n) != n or n < 2:
        raise InvalidArity(f"need n >= 2 bidders, got {n}")
    if moment >= v_bar:
        raise InfeasibleBelief(f"moment {moment} must lie below the highest value {v_bar}")
    if moment < l:
        raise InfeasibleBelief(f"moment {moment} below the lowest bid {l}")


def upper_belief_agg(l, m, v_bar, n):
    """Highest-bid belief at which the highest type v_bar bids exactly u, given
    lowest bid l and expected winning bid m."""
    _check_upper_args(l, m, v_bar, n)
    if m <= l:
        return float(l)
    e = (n - 1.0) / n

    def g(u):
        return v_bar - u - ratio_pow(u - m, u - l, e) * (v_bar - l)

    return float(_bisect(g, m, v_bar)[0])


def upper_belief_ind(l, mu, v_bar, n):
    """Highest-bid belief consistent with separation under an individual-moment
    belief: v_bar = u + (u - mu)(u - l)^(n-1) / ((u - l)^(n-1) - (u - mu)^(n-1))."""
    _check_upper_args(l, mu, v_bar, n)
    if mu <= l:
        return float(l)
    k = n - 1.0

    def g(u):
        r = (u - mu) / (u - l)
        return v_bar - u - (u - mu) / (1.0 - r**k)

    return float(_bisect(g, mu, v_bar)[0])


def upper_belief(family, l, moment, v_bar, n):
    if Family.parse(family) is Family.AGG:
        return upper_belief_agg(l, moment, v_bar, n)
    return upper_belief_ind(l, moment, v_bar, n)


@dataclass(frozen=True, eq=False)
class EquilibriumSolution:
    """Consistent beliefs (l, moment, u) with the induced bidding function."""

    family: Family
    orientation: Orientation
    n: int
    l: float
    moment: float
    u: float
    value_dist: object
    bid_table: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def belief(self):
        return make_belief(self.family, self.l, self.moment, self.u, self.n, self.orientation)

    @property
    def beliefs(self):
        return (self.l, self.moment, self.u)

    @property
    def is_pooling(self):
        return self.u - self.l <= 0.0

    def bid(self, values):
        if self.is_pooling:
            return np.full(np.shape(values), self.l) if np.ndim(values) else self.l
        out = kernels.bid_values(
            self.family, self.orientation, self.l, self.moment, self.u, self.n, values
        )
        return float(out) if np.ndim(values) == 0 else out

    def inverse(self, bids):
        out = kernels.inverse_values(
            self.family, self.orientation, self.l, self.moment, self.u, self.n, bids
        )
        return float(out) if np.ndim(bids) == 0 else out

    def mean_bid(self, nodes=QUAD_NODES):
        """Expected bid of a single bidder."""
        return _integrate_bids(self, nodes, extreme=False)

    def expected_winning_bid(self, nodes=QUAD_NODES):
        return _integrate_bids(self, nodes, extreme=True)

    def to_dict(self):
        return {
            "family": self.family.value,
            "orientation": self.orientation.value,
            "n": self.n,
            "l": self.l,
            "moment": self.moment,
            "u": self.u,
            "pooling": self.is_pooling,
            "mean_bid": self.mean_bid(),
            "expected_winning_bid": self.expected_winning_bid(),
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# -- integration against the value law (buyer orientation) -------------------


def _breakpoints(family, l, mom, u, n):
    """Bids at which the bidding function changes regime."""
    pts = [mom]
    if family is Family.IND and n >= 3:
        pts += [((n - 2.0) * l + u) / (n - 1.0), ((n - 2.0) * mom + u) / (n - 1.0)]
    return [p for p in pts if l < p < u]


def _nodes_weights(family, dist, l, mom, u, n, nodes, extreme):
    """Quadrature nodes in value space and weights of dF^n (extreme) or dF."""
    if isinstance(dist, EmpiricalDistribution):
        w = dist.max_order_pmf(n) if extreme else dist.weights
        return dist.support, w
    lo, hi = dist.low, dist.high
    kinks = []
    if u > l:
        bp = np.array(_breakpoints(family, l, mom, u, n))
        if bp.size:
            kinks = kernels.inverse_values(family, Orientation.BUYER, l, mom, u, n, bp)
    edges = np.unique(np.concatenate(([lo, hi], [k for k in np.atleast_1d(kinks) if lo < k < hi])))
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(a, b, nodes)
        xs.append(x)
        ws.append(w)
    x = np.concatenate(xs)
    w = np.concatenate(ws) * dist.pdf(x)
    if extreme:
        w = w * n * np.asarray(dist.cdf(x), float) ** (n - 1)
    return x, w


class _BuyerProblem:
    def __init__(self, family, dist, n, nodes, low=None):
        self.family = family
        self.dist = dist
        self.n = int(n)
        self.nodes = nodes
        self.low = float(dist.low if low is None else low)
        self.high = float(dist.high)
        self.extreme = family is Family.AGG

    def upper(self, mom):
        return upper_belief(self.family, self.low, mom, self.high, self.n)

    def expected(self, mom, u=None):
        u = self.upper(mom) if u is None else u
        x, w = _nodes_weights(self.family, self.dist, self.low, mom, u, self.n, self.nodes, self.extreme)
        bids = kernels.bid_values(self.family, Orientation.BUYER, self.low, mom, u, self.n, x)
        return float(w @ bids)

    def gap(self, mom):
        return self.expected(mom) - mom


def _solve_fixed_point(problem, scan):
    lo, hi = problem.low, problem.high
    eps = 1e-6 * (hi - lo)
    grid = np.linspace(lo + eps, hi - eps, scan)
    gaps = np.array([problem.gap(m) for m in grid])
    crossings = []
    for i in range(scan - 1):
        if np.sign(gaps[i]) != np.sign(gaps[i + 1]):
            crossings.append([float(grid[i]), float(grid[i + 1])])
    down = [i for i in range(scan - 1) if gaps[i] > 0.0 >= gaps[i + 1]]
    diag = {"scan_points": scan, "sign_changes": crossings}
    if not down:
        if gaps[0] <= 0.0 and np.all(np.abs(gaps) < 1e-14 * max(1.0, abs(hi))):
            return float(grid[0]), 0, diag
        diag["scan_gaps"] = gaps.tolist()
        raise SolverFailure("no downward crossing of the fixed-point map in the bracket", diag)
    i = down[0]
    mom, iters = _bisect(problem.gap, grid[i], grid[i + 1])
    diag["bracket"] = [float(grid[i]), float(grid[i + 1])]
    return float(mom), iters, diag


def _as_dist(F):
    if isinstance(F, (EmpiricalDistribution, ContinuousDistribution)):
        return F
    raise InputError("value distribution must be an EmpiricalDistribution or a ContinuousDistribution")


def solve_equilibrium(
    F,
    n,
    family,
    orientation=Orientation.BUYER,
    nodes=QUAD_NODES,
    table_size=TABLE_SIZE,
    scan=SCAN_POINTS,
    tol=1e-8,
    anchor=None,
):
    """Separating moment equilibrium for value (buyer) or cost (procurement) law F.

    ``anchor`` overrides the fixed range end (lowest bid for buyers, highest
    bid for procurement); by default it is the corresponding extreme type."""
    family = Family.parse(family)
    orientation = Orientation.parse(orientation)
    if family is Family.BNE:
        raise InputError("use estimation.bne_bid for the Bayes-Nash benchmark")
    if int(n) != n or n < 2:
        raise InvalidArity(f"need n >= 2 bidders, got {n}")
    dist = _as_dist(F)
    flip = orientation is Orientation.PROCUREMENT
    buyer_dist = dist.reflect() if flip else dist
    low = None if anchor is None else (-anchor if flip else anchor)
    if low is not None and low > buyer_dist.low:
        raise InputError("anchor must not cut off any type")

    if dist.is_degenerate:
        x = dist.low
        table = np.array([[x, x]])
        return EquilibriumSolution(family, orientation, int(n), x, x, x, dist, table,
                                   {"pooling": True, "iterations": 0, "residual": 0.0})

    problem = _BuyerProblem(family, buyer_dist, n, nodes, low)
    mom, iters, diag = _solve_fixed_point(problem, scan)
    u = problem.upper(mom)
    l = problem.low
    residual = abs(problem.expected(mom, u) - mom)
    diag.update(iterations=iters, residual=residual, pooling=False)
    if residual > tol * max(1.0, abs(problem.high), abs(problem.low)):
        raise SolverFailure(f"fixed-point residual {residual:.3g} above tolerance", diag)

    values = np.linspace(problem.low, problem.high, table_size)
    bids = kernels.bid_values(family, Orientation.BUYER, l, mom, u, n, values)
    if flip:
        l, mom, u = -u, -mom, -l
        values, bids = -values[::-1], -bids[::-1]
    table = np.column_stack([values, bids])
    if np.any(np.diff(table[:, 1]) <= 0):
        diag["separating"] = False
    else:
        diag["separating"] = True
    return EquilibriumSolution(family, orientation, int(n), float(l), float(mom), float(u), dist, table, diag)


def solve_equilibrium_agg(F, n, orientation=Orientation.BUYER, **kw):
    return solve_equilibrium(F, n, Family.AGG, orientation, **kw)


def solve_equilibrium_ind(F, n, orientation=Orientation.BUYER, **kw):
    return solve_equilibrium(F, n, Family.IND, orientation, **kw)


def _integrate_bids(sol, nodes, extreme):
    if sol.is_pooling:
        return sol.l
    flip = sol.orientation is Orientation.PROCUREMENT
    dist = sol.value_dist.reflect() if flip else sol.value_dist
    l, mom, u = (-sol.u, -sol.moment, -sol.l) if flip else (sol.l, sol.moment, sol.u)
    x, w = _nodes_weights(sol.family, dist, l, mom, u, sol.n, nodes, extreme)
    bids = kernels.bid_values(sol.family, Orientation.BUYER, l, mom, u, sol.n, x)
    val = float(w @ bids)
    return -val if flip else val


# -- sample (pseudo-value) equilibria ---------------------------------------


def solve_sample_equilibrium(pseudo_values, n, family, orientation=Orientation.PROCUREMENT, anchor=None, **kw):
    """Equilibrium for an empirical law of pseudo values or pseudo costs.

    The fixed range end is the sample extreme (max cost in procurement, min
    value for buyers) unless ``anchor`` is given. Diagnostics report the
    residuals of both coordinates of the two-dimensional sample map
    (extreme-type bid minus range belief, expected bid minus moment)."""
    if not isinstance(pseudo_values, EmpiricalDistribution):
        pseudo_values = EmpiricalDistribution.from_sample(pseudo_values)
    orientation = Orientation.parse(orientation)
    sol = solve_equilibrium(pseudo_values, n, family, orientation, anchor=anchor, **kw)
    if not sol.is_pooling:
        d = pseudo_values
        if orientation is Orientation.PROCUREMENT:
            range_gap = sol.bid(d.low) - sol.l
            pmf = d.min_order_pmf(n) if sol.family is Family.AGG else d.weights
        else:
            range_gap = sol.bid(d.high) - sol.u
            pmf = d.max_order_pmf(n) if sol.family is Family.AGG else d.weights
        moment_gap = float(pmf @ sol.bid(d.support)) - sol.moment
        sol.diagnostics.update(range_residual=float(abs(range_gap)), moment_residual=float(abs(moment_gap)))
    return sol


def solve_sample_equilibrium_agg(pseudo_values, n, u_star=None, orientation=Orientation.PROCUREMENT, **kw):
    return solve_sample_equilibrium(pseudo_values, n, Family.AGG, orientation, anchor=u_star, **kw)


def solve_sample_equilibrium_ind(pseudo_values, n, u_star=None, orientation=Orientation.PROCUREMENT, **kw):
    return solve_sample_equilibrium(pseudo_values, n, Family.IND, orientation, anchor=u_star, **kw)


# -- Monte Carlo check of belief consistency --------------------------------


def monte_carlo_consistency(sol, auctions=1_000_000, seed=0, chunk=100_000, table_size=8193):
    """Simulate auctions under the solved bidding function and compare the
    average winning bid (AGG) or average bid (IND) with the moment belief."""
    rng = np.random.default_rng(seed)
    dist = sol.value_dist
    discrete = isinstance(dist, EmpiricalDistribution)
    if discrete:
        support_bids = np.atleast_1d(sol.bid(dist.support))
    else:
        grid = np.linspace(dist.low, dist.high, table_size)
        grid_bids = sol.bid(grid)
    total = 0.0
    total_sq = 0.0
    count = 0
    remaining = int(auctions)
    while remaining > 0:
        size = min(chunk, remaining)
        remaining -= size
        if discrete:
            idx = rng.choice(dist.support.size, size=(size, sol.n), p=dist.weights)
            bids = support_bids[idx]
        else:
            vals = dist.ppf(rng.random((size, sol.n)))
            bids = np.interp(vals, grid, grid_bids)
        if sol.family is Family.AGG:
            stat = bids.max(axis=1) if sol.orientation is Orientation.BUYER else bids.min(axis=1)
        else:
            stat = bids.mean(axis=1)
        total += stat.sum()
        total_sq += (stat**2).sum()
        count += size
    mean = total / count
    var = max(total_sq / count - mean**2, 0.0)
    se = np.sqrt(var / count)
    return {"mean": float(mean), "se": float(se), "target": sol.moment,
            "z": float((mean - sol.moment) / se) if se > 0 else 0.0}
