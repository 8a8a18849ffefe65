"""Synthetic procurement data in the bid-file schema.

Costs are drawn from a known law, bidders play a known equilibrium (AGG, IND
or BNE) for the auction's bidder count, and the bid relative to the engineer
estimate gets covariate effects, an auction effect and idiosyncratic noise.
Fringe bidders optionally submit high-tail noise bids.
"""
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .distributions import EmpiricalDistribution, parse_distribution
from .enums import Family, Orientation
from .equilibrium import solve_equilibrium
from .errors import InputError
from .estimation import bne_bid

DEFAULT_EFFECTS = {"fringe": 0.04, "dist": 0.01, "util": -0.02, "rutil": 0.01, "rdist": -0.005}


@dataclass(frozen=True)
class SyntheticConfig:
    auctions: int = 600
    family: str = "ind"
    cost: str = "uniform:0.8,1.3"
    n_values: tuple = (2, 3, 4, 5, 6, 7, 10)
    n_weights: tuple = (6, 5, 4, 3, 2, 2, 2)
    fringe_share: float = 0.5
    outlier_share: float = 0.01
    outlier_low: float = 1.0
    outlier_high: float = 2.0
    effects: dict = field(default_factory=lambda: dict(DEFAULT_EFFECTS))
    sigma_auction: float = 0.0
    sigma_idio: float = 0.0
    eng_median: float = 1.0e6
    seed: int = 0

    def validate(self):
        if int(self.auctions) != self.auctions or self.auctions < 1:
            raise InputError("need at least one auction")
        if not 0.0 <= self.fringe_share <= 1.0 or not 0.0 <= self.outlier_share <= 1.0:
            raise InputError("shares must lie in [0, 1]")
        if any(int(n) != n or n < 2 for n in self.n_values):
            raise InputError("bidder counts must be integers >= 2")
        if self.n_weights is not None and len(self.n_weights) != len(self.n_values):
            raise InputError("n_weights must match n_values")
        if self.sigma_auction < 0 or self.sigma_idio < 0 or self.outlier_low > self.outlier_high:
            raise InputError("invalid noise parameters")
        unknown = set(self.effects) - set(DEFAULT_EFFECTS)
        if unknown:
            raise InputError(f"unknown covariate effects {sorted(unknown)}")
        Family.parse(self.family)


def _bid_function(family, dist, n):
    if family is Family.BNE:
        return (lambda c: bne_bid(dist, n, c, Orientation.PROCUREMENT)), {}
    sol = solve_equilibrium(dist, n, family, Orientation.PROCUREMENT)
    return sol.bid, {"l": sol.l, "moment": sol.moment, "u": sol.u}


def generate(config):
    """Return (DataFrame in the bid schema, ground-truth dict)."""
    config.validate()
    family = Family.parse(config.family)
    dist = parse_distribution(config.cost)
    rng = np.random.default_rng(config.seed)
    n_values = [int(n) for n in config.n_values]
    p = None if config.n_weights is None else np.asarray(config.n_weights, float) / np.sum(config.n_weights)
    ns = rng.choice(n_values, size=int(config.auctions), p=p)
    truth = {}
    funcs = {}
    for n in sorted(set(ns.tolist())):
        funcs[n], truth[str(n)] = _bid_function(family, dist, n)
    rows = []
    for a, n in enumerate(ns):
        n = int(n)
        fringe = int(rng.random() < config.fringe_share)
        costs = dist.sample(rng, n) if isinstance(dist, EmpiricalDistribution) else dist.ppf(rng.random(n))
        eq_bids = np.atleast_1d(funcs[n](np.asarray(costs, float)))
        dist_km = rng.uniform(0.0, 1.0, n)
        util = rng.uniform(0.0, 1.0, n)
        eng = config.eng_median * float(np.exp(rng.normal(0.0, 0.5)))
        effect = rng.normal(0.0, config.sigma_auction) if config.sigma_auction > 0 else 0.0
        for j in range(n):
            others = np.delete(np.arange(n), j)
            rdist, rutil = dist_km[others].min(), util[others].min()
            cov = {"fringe": fringe, "dist": dist_km[j], "util": util[j], "rutil": rutil, "rdist": rdist}
            y = eq_bids[j] + sum(config.effects.get(k, 0.0) * v for k, v in cov.items()) + effect
            if config.sigma_idio > 0:
                y += rng.normal(0.0, config.sigma_idio)
            if fringe and rng.random() < config.outlier_share:
                y *= 1.0 + rng.uniform(config.outlier_low, config.outlier_high)
            rows.append({
                "auction_id": f"A{a:05d}", "bidder_id": f"B{j:02d}", "bid": y * eng, "eng": eng,
                "dist": dist_km[j], "util": util[j], "rdist": rdist, "rutil": rutil,
                "fringe": fringe, "n_bidders": n,
            })
    df = pd.DataFrame(rows)
    meta = {"config": _config_dict(config), "equilibria": truth}
    return df, meta


def _config_dict(config):
    d = asdict(config)
    d["n_values"] = list(d["n_values"])
    if d["n_weights"] is not None:
        d["n_weights"] = list(d["n_weights"])
    return d
