import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momenteq.enums import Family, Orientation
from momenteq.errors import BidOutsideSupport, DegenerateSupport, DominatedBid, InputError, InvalidBelief
from momenteq.loss import (
    AggregateBelief,
    IndividualBelief,
    TwoPointDistribution,
    make_belief,
    oracle_worst_loss,
    p_win,
    q_prob,
    worst_loss,
    worst_loss_high_agg,
    worst_loss_high_ind,
    worst_loss_low_agg,
    worst_loss_low_ind,
)

UNIFORM_AGG = AggregateBelief(0.0, 0.37, 0.5, 2)
UNIFORM_IND = IndividualBelief(0.0, 0.3, 0.55, 2)


@st.composite
def beliefs(draw, family=None, orientation=None):
    fam = draw(st.sampled_from([Family.AGG, Family.IND])) if family is None else family
    ori = draw(st.sampled_from(list(Orientation))) if orientation is None else orientation
    l = draw(st.floats(-2, 2))
    width = draw(st.floats(0.05, 3))
    frac = draw(st.floats(0.05, 0.95))
    n = draw(st.sampled_from([2, 3, 4, 7]))
    return make_belief(fam, l, l + frac * width, l + width, n, ori)


def test_belief_validation():
    with pytest.raises(InvalidBelief):
        AggregateBelief(0.0, 0.6, 0.5, 2)
    with pytest.raises(InputError):
        IndividualBelief(0.0, 0.3, 0.5, 1)


def test_q_and_p_corners():
    assert q_prob(UNIFORM_AGG, 0.1, 0.37) == 0.0
    assert p_win(UNIFORM_AGG, 0.1, 0.37) == 0.0
    assert q_prob(UNIFORM_AGG, 0.37, 0.45) == 1.0
    assert p_win(UNIFORM_AGG, 0.37, 0.45) == 1.0
    with pytest.raises(DegenerateSupport):
        q_prob(UNIFORM_AGG, 0.4, 0.45)


def test_two_point_mean_matches_moment():
    tp = TwoPointDistribution.pinned(UNIFORM_AGG, 0.1, 0.45)
    assert tp.mean == pytest.approx(0.37)


def test_high_agg_examples():
    assert worst_loss_high_agg(UNIFORM_AGG, 0.0) == 0.0
    # ((0.5-0.37)/0.5)^(1/2) * 0.5
    assert worst_loss_high_agg(UNIFORM_AGG, 0.5) == pytest.approx(np.sqrt(0.26) * 0.5, abs=1e-12)
    assert worst_loss_high_agg(UNIFORM_AGG, 0.5) == pytest.approx(0.2550, abs=1e-4)


def test_low_agg_examples():
    assert worst_loss_low_agg(UNIFORM_AGG, 0.37, 0.37) == 0.0
    assert worst_loss_low_agg(UNIFORM_AGG, 1.0, 0.37) == pytest.approx(0.63, abs=1e-12)
    assert worst_loss_low_agg(UNIFORM_AGG, 0.3, 0.0) == pytest.approx(0.1530, abs=1e-4)
    with pytest.raises(DominatedBid):
        worst_loss_low_agg(UNIFORM_AGG, 0.2, 0.3)
    with pytest.raises(BidOutsideSupport):
        worst_loss_high_agg(UNIFORM_AGG, 0.6)


def test_ind_examples():
    assert worst_loss_high_ind(UNIFORM_IND, 0.0) == 0.0
    b3 = IndividualBelief(0.0, 0.5, 1.0, 3)
    assert worst_loss_high_ind(b3, 0.8) == pytest.approx(0.3, abs=1e-12)
    assert worst_loss_low_ind(UNIFORM_IND, 0.2, 0.1) == pytest.approx(0.25 / 0.45 * 0.1, abs=1e-12)


@pytest.mark.parametrize(
    "belief, v, b, expected",
    [
        (UNIFORM_AGG, 0.5, 0.5, np.sqrt(0.26) * 0.5),
        (UNIFORM_AGG, 0.3, 0.0, np.sqrt(0.26) * 0.3),
        (IndividualBelief(0.0, 0.5, 1.0, 3), 0.8, 0.8, 0.3),
        (UNIFORM_IND, 0.2, 0.1, 0.25 / 0.45 * 0.1),
    ],
)
def test_examples_match_oracle(belief, v, b, expected):
    assert oracle_worst_loss(belief, v, b, 2000) == pytest.approx(expected, abs=2e-3 * belief.scale)


def test_oracle_trivial_cases():
    assert oracle_worst_loss(UNIFORM_AGG, 0.0, 0.0, 200) == pytest.approx(0.0, abs=1e-12)
    flat = AggregateBelief(0.4, 0.4, 0.4, 3)
    assert oracle_worst_loss(flat, 0.7, 0.4, 200) == 0.0
    assert worst_loss(flat, 0.7, 0.4) == 0.0
    with pytest.raises(InputError):
        oracle_worst_loss(UNIFORM_AGG, 0.3, 0.1, 50)


@given(beliefs(family=Family.AGG, orientation=Orientation.BUYER))
@settings(max_examples=40, deadline=None)
def test_high_agg_zero_at_l_and_increasing(belief):
    bs = np.linspace(belief.l, belief.u, 100)
    vals = np.array([worst_loss_high_agg(belief, b) for b in bs])
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) > 0)


@given(beliefs(family=Family.AGG, orientation=Orientation.BUYER), st.floats(0, 1.5))
@settings(max_examples=40, deadline=None)
def test_low_agg_decreasing_in_bid(belief, t):
    v = belief.l + t * (belief.u - belief.l)
    top = min(v, belief.u)
    bs = np.linspace(belief.l, top, 60)
    vals = np.array([worst_loss_low_agg(belief, v, b) for b in bs])
    assert np.all(np.diff(vals) <= 1e-12 * belief.scale)
    if v >= belief.m and v <= belief.u:
        assert worst_loss_low_agg(belief, v, v) == pytest.approx(0.0, abs=1e-12)


@given(beliefs(family=Family.IND, orientation=Orientation.BUYER), st.floats(0.05, 1.5))
@settings(max_examples=40, deadline=None)
def test_ind_losses_continuous(belief, t):
    v = belief.l + t * (belief.u - belief.l)
    top = min(v, belief.u)
    bs = np.linspace(belief.l, top, 4001)
    step = bs[1] - bs[0]
    hi = np.array([worst_loss_high_ind(belief, b) for b in bs])
    lo = np.array([worst_loss_low_ind(belief, v, b) for b in bs])
    # slopes are bounded by 1 (high) and by (v - l) / (u - b) scale (low)
    assert hi[0] == 0.0
    assert np.max(np.abs(np.diff(hi))) <= 10 * step
    slope = max(1.0, (v - belief.l) * (belief.n - 1) / max(belief.u - top, step))
    assert np.max(np.abs(np.diff(lo))) <= 10 * step * slope


@given(beliefs(orientation=Orientation.PROCUREMENT), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=60, deadline=None)
def test_procurement_mirror(belief, s, t):
    l, u = belief.l, belief.u
    b = l + s * (u - l)
    c = b - t * (b - l)
    buyer = make_belief(belief.family, l, l + u - belief.moment, u, belief.n, Orientation.BUYER)
    bb, vb = l + u - b, l + u - c
    if belief.family is Family.AGG:
        pairs = [(worst_loss_high_agg(belief, b), worst_loss_high_agg(buyer, bb)),
                 (worst_loss_low_agg(belief, c, b), worst_loss_low_agg(buyer, vb, bb))]
    else:
        pairs = [(worst_loss_high_ind(belief, b), worst_loss_high_ind(buyer, bb)),
                 (worst_loss_low_ind(belief, c, b), worst_loss_low_ind(buyer, vb, bb))]
    for proc, buy in pairs:
        assert proc == pytest.approx(buy, abs=1e-10 * belief.scale)


@pytest.mark.parametrize("family", [Family.AGG, Family.IND])
@pytest.mark.parametrize("orientation", list(Orientation))
def test_random_tuples_match_oracle(family, orientation):
    rng = np.random.default_rng(11)
    for _ in range(12):
        n = int(rng.choice([2, 3, 4]))
        l = rng.uniform(-1, 1)
        u = l + rng.uniform(0.2, 2)
        mom = l + rng.uniform(0.05, 0.95) * (u - l)
        belief = make_belief(family, l, mom, u, n, orientation)
        b = rng.uniform(l, u)
        if orientation is Orientation.BUYER:
            v = b + rng.uniform(0, 1.5) * (u - l)
        else:
            v = b - rng.uniform(0, 1.5) * (u - l)
        gap = abs(worst_loss(belief, v, b) - oracle_worst_loss(belief, v, b, 2000))
        assert gap <= 5e-3 * (u - l)
