"""Empirical pipeline on bid-level data.

1. Homogenize bids (bid / engineer estimate) with a random-effects regression
   on the number of bidders, fringe status and capacity covariates.
2. Split auctions into all-fringe and all-non-fringe sets.
3. For each bidder count n, predict the bid distribution out of sample from the
   auctions with n' != n bidders under five estimators (AGG, IND, BNE, AGG-Out,
   IND-Out) and compare with the observed bids (moment distance and L1).
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .distributions import EmpiricalDistribution
from .enums import Family, Orientation
from .equilibrium import solve_sample_equilibrium
from .errors import CollinearDesign, EmptySample, InputError, NotEnoughVariation
from .estimation import BidSample, bne_bid, estimate_beliefs, gpv_pseudo_values, tukey_cutoff
from .loss import make_belief
from .bidding import inverse_bid

__all__ = [
    "COLUMNS",
    "COVARIATES",
    "ESTIMATORS",
    "BidRecord",
    "records_to_frame",
    "HomogenizationModel",
    "fit_homogenization",
    "homogenize",
    "split_fringe",
    "class_samples",
    "summarize_classes",
    "PredictionConfig",
    "Prediction",
    "leave_one_n_out_predict",
    "moment_distance",
    "moment_distance_from_stats",
    "l1_distance",
    "FitRow",
    "FitReport",
    "weighted_fit_report",
]

COLUMNS = ["auction_id", "bidder_id", "bid", "eng", "dist", "util", "rdist", "rutil", "fringe", "n_bidders"]
COVARIATES = ["fringe", "dist", "util", "rutil", "rdist"]
ESTIMATORS = ("AGG", "IND", "BNE", "AGG-Out", "IND-Out")
BASE_N = 10  # n >= BASE_N carries no bidder-count dummy


@dataclass(frozen=True)
class BidRecord:
    auction_id: str
    bidder_id: str
    bid: float
    eng: float
    dist: float
    util: float
    rdist: float
    rutil: float
    fringe: bool
    n_bidders: int


def records_to_frame(records):
    if isinstance(records, pd.DataFrame):
        return records.copy()
    rows = [r.__dict__ if isinstance(r, BidRecord) else dict(r) for r in records]
    return pd.DataFrame(rows, columns=COLUMNS)


# -- homogenization -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HomogenizationModel:
    """Random-effects fit of bid/ENG on bidder-count dummies and covariates."""

    columns: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    sigma2_auction: float
    sigma2_idio: float
    n_levels: tuple
    notes: tuple = ()

    def coef(self, name):
        return float(self.coefficients[self.columns.index(name)])

    def as_dict(self):
        return {
            "coefficients": dict(zip(self.columns, map(float, self.coefficients))),
            "std_errors": dict(zip(self.columns, map(float, self.std_errors))),
            "sigma2_auction": self.sigma2_auction,
            "sigma2_idio": self.sigma2_idio,
            "notes": list(self.notes),
        }

    def n_effect(self, n):
        name = f"n{int(n)}"
        return self.coef(name) if name in self.columns else 0.0


def _design(df, n_levels):
    cols = {"intercept": np.ones(len(df))}
    nb = df["n_bidders"].to_numpy()
    for n in n_levels:
        cols[f"n{n}"] = (nb == n).astype(float)
    for c in COVARIATES:
        cols[c] = df[c].to_numpy(dtype=float)
    names = list(cols)
    return names, np.column_stack([cols[c] for c in names])


def _group_index(df):
    codes, uniques = pd.factorize(df["auction_id"], sort=True)
    return codes, len(uniques)


def _group_means(arr, codes, groups, sizes):
    out = np.zeros((groups,) + arr.shape[1:])
    np.add.at(out, codes, arr)
    return out / sizes.reshape((-1,) + (1,) * (arr.ndim - 1))


def _lstsq(X, y):
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    return beta, float(resid @ resid)


def _collinear_columns(X, names):
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    _, s, vt = np.linalg.svd(X / scale, full_matrices=False)
    tol = s.max() * max(X.shape) * np.finfo(float).eps * 10
    null = vt[s <= tol]
    if null.size == 0:
        return []
    return [names[j] for j in range(len(names)) if np.any(np.abs(null[:, j]) > 1e-8)]


def fit_homogenization(records):
    """Swamy-Arora feasible GLS with auction random effects."""
    df = records_to_frame(records)
    codes, groups = _group_index(df)
    if groups < 2:
        raise NotEnoughVariation("homogenization needs at least two auctions")
    nb = df["n_bidders"].to_numpy()
    n_levels = tuple(int(n) for n in sorted(set(nb.tolist())) if n < BASE_N)
    names, X = _design(df, n_levels)
    notes = []
    keep = []
    for j, name in enumerate(names):
        if name in COVARIATES and np.ptp(X[:, j]) == 0:
            notes.append(f"{name} is constant in the data and was dropped")
        elif name == "intercept" or np.any(X[:, j] != 0):
            keep.append(j)
    names = [names[j] for j in keep]
    X = X[:, keep]
    bad = _collinear_columns(X, names)
    if bad:
        raise CollinearDesign(f"collinear regressors: {', '.join(bad)}", bad)
    y = (df["bid"] / df["eng"]).to_numpy(dtype=float)
    N, k = X.shape
    sizes = np.bincount(codes, minlength=groups).astype(float)
    ybar = _group_means(y, codes, groups, sizes)
    Xbar = _group_means(X, codes, groups, sizes)

    Xw = X - Xbar[codes]
    yw = y - ybar[codes]
    varying = [j for j in range(k) if np.abs(Xw[:, j]).max() > 1e-12]
    if varying:
        _, ssr_w = _lstsq(Xw[:, varying], yw)
        k_w = np.linalg.matrix_rank(Xw[:, varying])
    else:
        ssr_w, k_w = float(yw @ yw), 0
    dof_w = N - groups - k_w
    if dof_w <= 0:
        raise NotEnoughVariation("too few within-auction observations for the idiosyncratic variance")
    s2e = ssr_w / dof_w

    if groups - k > 0:
        _, ssr_b = _lstsq(Xbar, ybar)
        t_harm = groups / np.sum(1.0 / sizes)
        s2u = ssr_b / (groups - k) - s2e / t_harm
        if s2u < 0:
            notes.append("negative auction-effect variance truncated to 0")
            s2u = 0.0
    else:
        notes.append("too few auctions for the between regression; auction-effect variance set to 0")
        s2u = 0.0

    theta = 1.0 - np.sqrt(s2e / (s2e + sizes * s2u)) if s2e > 0 else np.zeros(groups)
    Xs = X - theta[codes, None] * Xbar[codes]
    ys = y - theta[codes] * ybar[codes]
    beta, _ = _lstsq(Xs, ys)
    cov = s2e * np.linalg.pinv(Xs.T @ Xs)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return HomogenizationModel(tuple(names), beta, se, float(s2u), float(s2e), n_levels, tuple(notes))


def _components(df, model):
    """Fitted values, auction-effect predictions and idiosyncratic residuals."""
    names, X = _design(df, model.n_levels)
    X = pd.DataFrame(X, columns=names).reindex(columns=list(model.columns), fill_value=0.0).to_numpy()
    y = (df["bid"] / df["eng"]).to_numpy(dtype=float)
    fitted = X @ model.coefficients
    resid = y - fitted
    codes, groups = _group_index(df)
    sizes = np.bincount(codes, minlength=groups).astype(float)
    rbar = _group_means(resid, codes, groups, sizes)
    s2u, s2e = model.sigma2_auction, model.sigma2_idio
    denom = sizes * s2u + s2e
    shrink = np.where(denom > 0, sizes * s2u / np.where(denom > 0, denom, 1.0), 0.0)
    effect = shrink[codes] * rbar[codes]
    return y, fitted, effect, resid - effect


def homogenize(records, model):
    """Add ``y`` (bid/ENG), ``auction_effect``, ``residual`` and ``homogenized``
    = residual + intercept + bidder-count effect (0 for unseen or n >= 10)."""
    df = records_to_frame(records)
    y, fitted, effect, eps = _components(df, model)
    n_eff = np.array([model.n_effect(n) for n in df["n_bidders"]])
    out = df.copy()
    out["y"] = y
    out["fitted"] = fitted
    out["auction_effect"] = effect
    out["residual"] = eps
    out["homogenized"] = eps + model.coef("intercept") + n_eff
    return out


# -- dataset plumbing -----------------------------------------------------------


def split_fringe(df):
    """All-fringe and all-non-fringe auctions; mixed auctions are dropped."""
    share = df.groupby("auction_id")["fringe"].transform("mean")
    return {"non_fringe": df[share == 0].copy(), "fringe": df[share == 1].copy()}


def class_samples(df, value="homogenized", max_n=None):
    """One structured BidSample per bidder count (rows = auctions)."""
    out = {}
    for n, part in df.groupby("n_bidders", sort=True):
        n = int(n)
        if n < 2 or (max_n is not None and n > max_n):
            continue
        part = part.sort_values(["auction_id", "bidder_id"], kind="stable")
        sizes = part.groupby("auction_id", sort=True).size()
        if np.any(sizes.to_numpy() != n):
            raise InputError(f"auctions with n_bidders={n} carry a different number of bids")
        out[n] = BidSample.from_matrix(part[value].to_numpy(dtype=float).reshape(-1, n))
    return out


def summarize_classes(samples, orientation=Orientation.PROCUREMENT):
    rows = []
    for n, s in sorted(samples.items()):
        e = estimate_beliefs(s, orientation)
        rows.append({"n": n, "l": e.l, "m": e.m, "mu": e.mu, "u": e.u, "bids": s.size})
    return rows


# -- out-of-sample prediction ---------------------------------------------------


@dataclass(frozen=True)
class PredictionConfig:
    orientation: Orientation = Orientation.PROCUREMENT
    tukey_k: float = 1.5
    per_class_tukey: bool = False
    uhat_rule: str = "max"  # pooled extreme; "min" = min over classes of the class extreme
    bandwidth: float = None
    nodes: int = 256

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation.parse(self.orientation))
        if self.uhat_rule not in ("max", "min"):
            raise InputError("uhat_rule must be 'max' or 'min'")


@dataclass(frozen=True, eq=False)
class Prediction:
    estimator: str
    target_n: int
    predicted_bids: np.ndarray
    equilibrium: dict
    training: dict = field(default_factory=dict)

    @property
    def distribution(self):
        return EmpiricalDistribution.from_sample(self.predicted_bids)


def _parse_estimator(name):
    key = str(name).strip().upper().replace("_", "-").replace(" ", "-").rstrip(".")
    key = key.replace("-OUT.", "-OUT")
    table = {"AGG": ("AGG", False), "IND": ("IND", False), "BNE": ("BNE", False),
             "AGG-OUT": ("AGG", True), "IND-OUT": ("IND", True)}
    if key not in table:
        raise InputError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")
    fam, out = table[key]
    return Family.parse(fam), out


def leave_one_n_out_predict(samples, target_n, estimator, config=PredictionConfig()):
    """Predicted bid distribution for auctions with ``target_n`` bidders built
    only from the other bidder-count classes in ``samples`` (dict n -> BidSample)."""
    family, drop = _parse_estimator(estimator)
    train = {n: s for n, s in samples.items() if n != target_n}
    if len(train) < 2:
        raise NotEnoughVariation(f"need at least two bidder-count classes besides n={target_n}")
    if family is Family.BNE:
        return _predict_bne(train, target_n, config)
    return _predict_moment(train, target_n, family, drop, config)


def _predict_moment(train, target_n, family, drop, config):
    proc = config.orientation is Orientation.PROCUREMENT
    est = {n: estimate_beliefs(s, config.orientation) for n, s in train.items()}
    pooled = np.concatenate([s.flat for s in train.values()])
    keep = {n: np.ones(s.size, bool) for n, s in train.items()}
    cutoff = None
    if drop:
        if config.per_class_tukey:
            for n, s in train.items():
                c = tukey_cutoff(s.flat, config.tukey_k, config.orientation)
                keep[n] = s.flat <= c if proc else s.flat >= c
        else:
            cutoff = tukey_cutoff(pooled, config.tukey_k, config.orientation)
            for n, s in train.items():
                keep[n] = s.flat <= cutoff if proc else s.flat >= cutoff
    # losing-side range end (u for procurement, l for buyers): pooled over classes
    kept_all = np.concatenate([s.flat[keep[n]] for n, s in train.items()])
    if config.uhat_rule == "max":
        far = kept_all.max() if proc else kept_all.min()
    else:
        ends = [s.flat[keep[n]].max() if proc else s.flat[keep[n]].min() for n, s in train.items()]
        far = min(ends) if proc else max(ends)
    costs, beliefs = [], {}
    for n, s in sorted(train.items()):
        # winning-side range end: most aggressive class extreme over k <= n
        near_all = [est[k].l if proc else est[k].u for k in train if k <= n]
        near = min(near_all) if proc else max(near_all)
        l, u = (near, far) if proc else (far, near)
        belief = make_belief(family, l, est[n].moment(family), u, n, config.orientation)
        b = s.flat[keep[n]]
        b = b[(b >= l) & (b <= u)] if config.uhat_rule == "min" else b
        costs.append(np.asarray(inverse_bid(belief, b), float))
        beliefs[n] = {"l": l, "moment": belief.moment, "u": u, "bids_used": int(b.size)}
    pooled_costs = np.concatenate(costs)
    sol = solve_sample_equilibrium(pooled_costs, target_n, family, config.orientation, nodes=config.nodes)
    predicted = np.asarray(sol.bid(pooled_costs), float)
    eq = {"l": sol.l, "moment": sol.moment, "u": sol.u,
          "range_residual": sol.diagnostics.get("range_residual"),
          "moment_residual": sol.diagnostics.get("moment_residual")}
    return Prediction(f"{family.value.upper()}{'-Out' if drop else ''}", target_n, predicted, eq,
                      {"beliefs": beliefs, "cutoff": cutoff, "pseudo_costs": int(pooled_costs.size)})


def _predict_bne(train, target_n, config):
    costs = []
    info = {}
    for n, s in sorted(train.items()):
        try:
            pv = gpv_pseudo_values(s, n, config.orientation, config.bandwidth)
        except EmptySample as exc:
            # small classes can lose every bid to the boundary trim
            info[n] = {"skipped": str(exc)}
            continue
        costs.append(pv.values)
        info[n] = {"bandwidth": pv.meta["bandwidth"], "kept": int(pv.kept.sum())}
    if not costs:
        raise EmptySample("boundary trimming removed every training bid")
    pooled = np.concatenate(costs)
    F = EmpiricalDistribution.from_sample(pooled)
    predicted = np.asarray(bne_bid(F, target_n, pooled, config.orientation), float)
    return Prediction("BNE", target_n, predicted, {}, {"gpv": info, "pseudo_costs": int(pooled.size)})


# -- fit metrics ---------------------------------------------------------------


def _as_dist(x):
    return x if isinstance(x, EmpiricalDistribution) else EmpiricalDistribution.from_sample(x)


def moment_distance_from_stats(mean_a, sd_a, mean_b, sd_b):
    return float(np.hypot(mean_a - mean_b, sd_a - sd_b))


def moment_distance(pred, sample):
    """Euclidean distance between (mean, population SD) pairs."""
    a, b = _as_dist(pred), _as_dist(sample)
    return moment_distance_from_stats(a.mean(), a.std(), b.mean(), b.std())


def l1_distance(pred, sample):
    """Area between the two step cdfs."""
    a, b = _as_dist(pred), _as_dist(sample)
    grid = np.union1d(a.support, b.support)
    gap = np.abs(a.cdf(grid) - b.cdf(grid))
    return float(np.sum(gap[:-1] * np.diff(grid)))


@dataclass(frozen=True)
class FitRow:
    fringe_class: str
    n: int
    estimator: str
    md: float
    l1: float
    pred_mean: float
    pred_sd: float
    sample_mean: float
    sample_sd: float
    count: int


@dataclass(frozen=True, eq=False)
class FitReport:
    rows: tuple
    weighted: dict  # (class, estimator) -> {"md": .., "l1": .., "count": ..}
    diagnostics: dict = field(default_factory=dict)

    def best(self, fringe_class, metric="l1"):
        cands = {est: v[metric] for (cls, est), v in self.weighted.items() if cls == fringe_class}
        return min(cands, key=cands.get)

    def to_dict(self):
        return {
            "rows": [r.__dict__ for r in self.rows],
            "weighted": [{"fringe_class": c, "estimator": e, **v} for (c, e), v in self.weighted.items()],
            "diagnostics": self.diagnostics,
        }


def weighted_fit_report(rows, diagnostics=None):
    """Observation-weighted averages of MD and L1 per class and estimator."""
    groups = {}
    for r in rows:
        groups.setdefault((r.fringe_class, r.estimator), []).append(r)
    weighted = {}
    for key, rs in groups.items():
        rs = [r for r in rs if r.count > 0]
        total = sum(r.count for r in rs)
        if total == 0:
            continue
        weighted[key] = {
            "md": sum(r.md * r.count for r in rs) / total,
            "l1": sum(r.l1 * r.count for r in rs) / total,
            "count": total,
        }
    return FitReport(tuple(rows), weighted, diagnostics or {})


def fit_row(fringe_class, n, estimator, predicted, observed):
    p, s = _as_dist(predicted), _as_dist(observed)
    return FitRow(fringe_class, int(n), estimator, moment_distance(p, s), l1_distance(p, s),
                  p.mean(), p.std(), s.mean(), s.std(), int(np.size(observed)))


def reconcile_bidder_counts(df):
    """Set n_bidders to the number of recorded bids per auction."""
    counts = df.groupby("auction_id")["bid"].transform("size")
    changed = int((counts != df["n_bidders"]).sum())
    if changed:
        warnings.warn(f"n_bidders reset to the recorded bid count for {changed} row(s)", stacklevel=2)
    out = df.copy()
    out["n_bidders"] = counts.astype(int)
    return out, changed
