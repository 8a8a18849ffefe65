"""One test per acceptance criterion. Each prints a PASS/FAIL line, and the
lines are repeated in the terminal summary."""
import itertools
import time

import numpy as np

from momenteq.bidding import affine_transform_check, bid
from momenteq.distributions import EmpiricalDistribution, Uniform, ks_distance
from momenteq.empirics import moment_distance_from_stats
from momenteq.enums import Family, Orientation
from momenteq.equilibrium import (
    monte_carlo_consistency,
    solve_equilibrium,
    solve_equilibrium_agg,
    solve_equilibrium_ind,
    upper_belief_ind,
)
from momenteq.estimation import BidSample, bne_bid, estimate_beliefs, pseudo_values
from momenteq.loss import make_belief, oracle_worst_loss, worst_loss
from momenteq.pipeline import PipelineConfig, run_pipeline
from momenteq.synthetic import SyntheticConfig, generate


def test_c01_uniform_aggregate(criterion):
    t = time.perf_counter()
    sol = solve_equilibrium_agg(Uniform(0, 1), 2)
    elapsed = time.perf_counter() - t
    ok = (sol.l == 0.0 and abs(sol.moment - 0.37) <= 0.005 and abs(sol.u - 0.5) <= 0.005
          and abs(sol.mean_bid() - 0.28) <= 0.005 and elapsed < 5)
    criterion(1, ok, f"(l, m, u) = ({sol.l:.4f}, {sol.moment:.4f}, {sol.u:.4f}), "
                     f"mean bid {sol.mean_bid():.4f}, {elapsed:.2f} s")


def test_c02_uniform_individual(criterion):
    sol = solve_equilibrium_ind(Uniform(0, 1), 2)
    mus = np.linspace(0.001, 0.999, 500)
    gap = max(abs(upper_belief_ind(0.0, mu, 1.0, 2) - np.sqrt(mu)) for mu in mus)
    ok = (sol.l == 0.0 and abs(sol.moment - 0.30) <= 0.005 and abs(sol.u - 0.55) <= 0.005 and gap <= 1e-8)
    criterion(2, ok, f"(l, mu, u) = ({sol.l:.4f}, {sol.moment:.4f}, {sol.u:.4f}), "
                     f"max |u(mu) - sqrt(mu)| = {gap:.1e}")


def test_c03_bne_benchmark(criterion):
    v = np.linspace(0, 1, 256)
    gap = float(np.max(np.abs(bne_bid(Uniform(0, 1), 2, v, Orientation.BUYER) - v / 2)))
    criterion(3, gap <= 1e-6, f"max |bid - v/2| = {gap:.1e} on 256 points")


def test_c04_oracle_agreement(criterion):
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    worst, count = 0.0, 0
    for family, orientation, n in itertools.product([Family.AGG, Family.IND], list(Orientation), [2, 3, 4, 7]):
        for _ in range(13):
            l = rng.uniform(-1, 1)
            u = l + rng.uniform(0.2, 2)
            belief = make_belief(family, l, l + rng.uniform(0.05, 0.95) * (u - l), u, n, orientation)
            b = rng.uniform(l, u)
            step = rng.uniform(0, 1.5) * (u - l)
            v = b + step if orientation is Orientation.BUYER else b - step
            gap = abs(worst_loss(belief, v, b) - oracle_worst_loss(belief, v, b, 2000)) / (u - l)
            worst = max(worst, gap)
            count += 1
    elapsed = time.perf_counter() - t
    ok = count >= 200 and worst <= 5e-3 and elapsed < 60
    criterion(4, ok, f"{count} tuples, max gap {worst:.2e} (u - l), {elapsed:.1f} s")


def test_c05_identification_round_trip(criterion):
    rng = np.random.default_rng(5)
    worst = 0.0
    for trial in range(5):
        k = int(rng.integers(3, 21))
        F = EmpiricalDistribution(np.sort(rng.uniform(0, 3, k)), rng.dirichlet(np.ones(k)))
        span = F.high - F.low
        probes = np.concatenate([F.support + 1e-7 * span, (F.support[:-1] + F.support[1:]) / 2])
        for n, family in itertools.product([2, 3], [Family.AGG, Family.IND]):
            sol = solve_equilibrium(F, n, family)
            G = F.push_forward(sol.bid)
            recovered = EmpiricalDistribution(np.atleast_1d(sol.inverse(G.support)), G.weights)
            worst = max(worst, float(np.max(np.abs(recovered.cdf(probes) - F.cdf(probes)))))
    criterion(5, worst <= 1e-6, f"5 distributions x n in {{2, 3}} x both families, max cdf error {worst:.1e}")


def test_c06_estimator_consistency(criterion):
    sol = solve_equilibrium_ind(Uniform(0, 1), 2)
    rng = np.random.default_rng(6)
    ks = []
    for size in (200, 2000, 20000):
        values = rng.uniform(0, 1, (size // 2, 2))
        sample = BidSample.from_matrix(sol.bid(values))
        pv = pseudo_values(sample, estimate_beliefs(sample, Orientation.BUYER), Family.IND)
        ks.append(ks_distance(pv.values, Uniform(0, 1).cdf))
    ok = ks[0] > ks[1] > ks[2] and ks[2] <= 0.03
    criterion(6, ok, "KS at 200/2000/20000 bids: " + ", ".join(f"{x:.4f}" for x in ks))


def test_c07_monte_carlo_beliefs(criterion):
    cases = [(Uniform(0, 1), 2, Family.AGG), (Uniform(0, 1), 2, Family.IND),
             (Uniform(0.8, 1.3), 4, Family.AGG), (Uniform(0.8, 1.3), 4, Family.IND),
             (EmpiricalDistribution(np.array([0.0, 0.4, 1.0]), np.array([0.3, 0.3, 0.4])), 3, Family.AGG)]
    zs = []
    for F, n, family in cases:
        sol = solve_equilibrium(F, n, family)
        zs.append(monte_carlo_consistency(sol, auctions=1_000_000, seed=7)["z"])
    ok = all(abs(z) <= 3 for z in zs)
    criterion(7, ok, "10^6 auctions, z = " + ", ".join(f"{z:+.2f}" for z in zs))


def test_c08_synthetic_pipeline_shape(criterion):
    df, _ = generate(SyntheticConfig())
    result = run_pipeline(df, PipelineConfig(bootstrap=0))
    weighted = {est: w["l1"] for (cls, est), w in result.report.weighted.items() if cls == "fringe"}
    best = min(weighted.values())
    md = moment_distance_from_stats(1.071, 0.079, 1.062, 0.073)
    ok = weighted["IND-Out"] <= best + 1e-12 and abs(md - 0.011) <= 0.001
    ranking = ", ".join(f"{k} {v:.4f}" for k, v in sorted(weighted.items(), key=lambda kv: kv[1]))
    criterion(8, ok, f"fringe weighted L1: {ranking}; MD spot value {md:.4f}")


def _random_interior(rng, family):
    while True:
        l = rng.uniform(-1, 1)
        u = l + rng.uniform(0.3, 2)
        mom = l + rng.uniform(0.1, 0.9) * (u - l)
        n = int(rng.integers(2, 7))
        v = l + rng.uniform(0.02, 1.0) * (u - l)
        belief = make_belief(family, l, mom, u, n)
        b = float(bid(belief, v))
        if l + 1e-6 * (u - l) < b < u - 1e-3 * (u - l):
            return belief, v


def test_c09_comparative_statics(criterion):
    rng = np.random.default_rng(9)
    tol = 1e-12
    failures = {}

    def check(name, ok):
        failures[name] = failures.get(name, 0) + (not ok)

    for _ in range(100):
        belief, v = _random_interior(rng, Family.AGG)
        l, m, u, n = belief.l, belief.m, belief.u, belief.n
        d = 1e-4 * (u - l)
        base = float(bid(belief, v))
        check("AGG v", float(bid(belief, v + d)) > base)
        check("AGG m", float(bid(belief.replace(m=m + d), v)) >= base - tol)
        check("AGG n", float(bid(belief.replace(n=n + 1), v)) >= base - tol)
        check("AGG u", float(bid(belief.replace(u=u + d), v)) <= base + tol)
        if v < m + (m - l) * ((u - m) / (u - l)) ** ((n - 1) / n):
            check("AGG l (low types)", float(bid(belief.replace(l=l + min(d, (m - l) / 2)), v)) >= base - tol)
    for _ in range(100):
        belief, v = _random_interior(rng, Family.IND)
        l, mu, u, n = belief.l, belief.mu, belief.u, belief.n
        d = 1e-4 * (u - l)
        base = float(bid(belief, v))
        check("IND v", float(bid(belief, v + d)) > base)
        check("IND mu", float(bid(belief.replace(mu=mu + d), v)) >= base - tol)
        check("IND n", float(bid(belief.replace(n=n + 1), v)) > base)
    ok = not any(failures.values())
    detail = ", ".join(f"{k}: {c} fail" for k, c in failures.items())
    criterion(9, ok, f"100 interior configurations per claim; {detail}")


def test_c10_affine_invariance(criterion):
    rng = np.random.default_rng(10)
    results = []
    for family in (Family.AGG, Family.IND):
        for _ in range(20):
            l = rng.uniform(-1, 1)
            u = l + rng.uniform(0.2, 2)
            belief = make_belief(family, l, l + rng.uniform(0.1, 0.9) * (u - l), u, int(rng.integers(2, 8)))
            results.append(affine_transform_check(belief, rng.uniform(0.1, 10), rng.uniform(-5, 5), tol=1e-8))
    criterion(10, all(results), f"{sum(results)}/{len(results)} (p, q) pairs hold to 1e-8")


def _enumerated_min_pmf(support, weights, n):
    pmf = np.zeros(len(support))
    for combo in itertools.product(range(len(support)), repeat=n):
        pmf[min(combo)] += np.prod(weights[list(combo)])
    return pmf


def test_c11_min_of_n_pmf(criterion):
    rng = np.random.default_rng(11)
    worst_sum, worst_gap, cases = 0.0, 0.0, 0
    for k in range(1, 5):
        for _ in range(10):
            support = np.sort(rng.choice(np.arange(-5.0, 6.0), size=k, replace=False))
            weights = rng.dirichlet(np.ones(k))
            F = EmpiricalDistribution(support, weights)
            for n in range(1, 5):
                pmf = F.min_order_pmf(n)
                worst_sum = max(worst_sum, abs(pmf.sum() - 1.0))
                worst_gap = max(worst_gap, float(np.max(np.abs(pmf - _enumerated_min_pmf(support, F.weights, n)))))
                cases += 1
    ok = worst_sum <= 1e-10 and worst_gap <= 1e-12
    criterion(11, ok, f"{cases} cases, |sum - 1| <= {worst_sum:.1e}, max gap vs enumeration {worst_gap:.1e}")
