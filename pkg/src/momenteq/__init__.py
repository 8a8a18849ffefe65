"""Minimax-loss bidding, moment equilibria and structural estimation for
first-price auctions."""
from ._accel import BACKEND
from .bidding import BiddingFunction, bid, bid_agg, bid_ind, inverse_bid
from .distributions import (
    EmpiricalDistribution,
    Uniform,
    from_sample,
    gauss_legendre,
    ks_distance,
    parse_distribution,
    point_mass,
)
from .empirics import (
    fit_homogenization,
    homogenize,
    l1_distance,
    leave_one_n_out_predict,
    moment_distance,
    weighted_fit_report,
)
from .enums import Family, Orientation
from .equilibrium import (
    EquilibriumSolution,
    monte_carlo_consistency,
    solve_equilibrium,
    solve_equilibrium_agg,
    solve_equilibrium_ind,
    solve_sample_equilibrium,
    upper_belief,
)
from .errors import *  # noqa: F401,F403
from .estimation import BidSample, bne_bid, estimate_beliefs, gpv_pseudo_values, pseudo_values
from .loss import AggregateBelief, IndividualBelief, make_belief, oracle_worst_loss, worst_loss

__version__ = "0.1.0"
