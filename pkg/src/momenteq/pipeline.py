"""End-to-end run: homogenize, split by fringe status, predict every bidder
count out of sample with each estimator, and score the predictions."""
from dataclasses import dataclass, field, fields

import numpy as np

from .empirics import (
    ESTIMATORS,
    PredictionConfig,
    class_samples,
    fit_homogenization,
    fit_row,
    homogenize,
    leave_one_n_out_predict,
    reconcile_bidder_counts,
    split_fringe,
    summarize_classes,
    weighted_fit_report,
)
from .enums import Orientation
from .errors import InputError, NotEnoughVariation

DEFAULT_CLASSES = {
    "non_fringe": {"max_n": 5, "target_max_n": 4},
    "fringe": {"max_n": 7, "target_max_n": 7},
}


@dataclass(frozen=True)
class PipelineConfig:
    orientation: str = "procurement"
    homogenize: bool = True
    tukey_k: float = 1.5
    per_class_tukey: bool = False
    uhat_rule: str = "max"
    bandwidth: float = None
    nodes: int = 256
    estimators: tuple = ESTIMATORS
    classes: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_CLASSES.items()})
    bootstrap: int = 200
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown pipeline option(s): {sorted(unknown)}")
        d = dict(d)
        if "estimators" in d:
            d["estimators"] = tuple(d["estimators"])
        return cls(**d)

    def prediction_config(self):
        return PredictionConfig(Orientation.parse(self.orientation), self.tukey_k, self.per_class_tukey,
                                self.uhat_rule, self.bandwidth, self.nodes)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    model: object
    summary: dict
    predictions: dict
    report: object
    notes: tuple

    def to_dict(self):
        return {
            "homogenization": None if self.model is None else self.model.as_dict(),
            "summary": self.summary,
            "fit_report": self.report.to_dict(),
            "equilibria": {
                f"{c}/n={n}/{e}": {"equilibrium": p.equilibrium, "training": p.training}
                for (c, n, e), p in self.predictions.items()
            },
            "notes": list(self.notes),
        }


def run_pipeline(df, config=PipelineConfig()):
    df, changed = reconcile_bidder_counts(df)
    notes = [f"n_bidders reset for {changed} row(s)"] if changed else []
    counts = sorted(df["n_bidders"].unique().tolist())
    if len(counts) < 3:
        raise NotEnoughVariation(f"leave-one-out prediction needs three bidder counts, data has {counts}")
    model = None
    if config.homogenize:
        model = fit_homogenization(df)
        data = homogenize(df, model)
        value = "homogenized"
    else:
        data = df.assign(y=df["bid"] / df["eng"])
        value = "y"
    pcfg = config.prediction_config()
    parts = split_fringe(data)
    summary, predictions, rows = {}, {}, []
    boot = {}
    for ci, (name, opts) in enumerate(sorted(config.classes.items())):
        if name not in parts:
            raise InputError(f"unknown fringe class {name!r}")
        samples = class_samples(parts[name], value, opts.get("max_n"))
        if not samples:
            continue
        summary[name] = summarize_classes(samples, pcfg.orientation)
        targets = [n for n in samples if n <= opts.get("target_max_n", max(samples))]
        if len(samples) < 3:
            notes.append(f"{name}: fewer than three bidder-count classes, skipped")
            continue
        for n in sorted(targets):
            observed = samples[n].flat
            for ei, est in enumerate(config.estimators):
                pred = leave_one_n_out_predict(samples, n, est, pcfg)
                predictions[(name, n, pred.estimator)] = pred
                rows.append(fit_row(name, n, pred.estimator, pred.predicted_bids, observed))
                rng = np.random.default_rng([config.seed, ci, n, ei])
                boot[f"{name}/n={n}/{pred.estimator}"] = _bootstrap_se(pred.predicted_bids, rng, config.bootstrap)
    if not rows:
        raise NotEnoughVariation("no fringe class has at least three bidder-count classes to compare")
    report = weighted_fit_report(rows, {"bootstrap_se_of_predicted_mean": boot})
    return PipelineResult(model, summary, predictions, report, tuple(notes))


def _bootstrap_se(values, rng, draws):
    if draws <= 1:
        return None
    idx = rng.integers(0, values.size, size=(draws, values.size))
    return float(values[idx].mean(axis=1).std(ddof=1))


def summary_rows(result):
    out = []
    for name, rows in sorted(result.summary.items()):
        for r in rows:
            out.append({"fringe_class": name, **r})
    return out


def prediction_rows(result):
    """One row per (class, source) with mean and SD for every target n."""
    out = []
    by_class = {}
    for r in result.report.rows:
        by_class.setdefault(r.fringe_class, []).append(r)
    for name, rs in sorted(by_class.items()):
        sample = {"fringe_class": name, "source": "Sample"}
        for r in rs:
            sample[f"mean_n{r.n}"], sample[f"sd_n{r.n}"] = r.sample_mean, r.sample_sd
        out.append(sample)
        for est in _order(rs):
            row = {"fringe_class": name, "source": est}
            for r in rs:
                if r.estimator == est:
                    row[f"mean_n{r.n}"], row[f"sd_n{r.n}"] = r.pred_mean, r.pred_sd
            out.append(row)
    return out


def distance_rows(result):
    """One row per (class, estimator) with MD and L1 for every target n plus
    the observation-weighted averages."""
    out = []
    by_class = {}
    for r in result.report.rows:
        by_class.setdefault(r.fringe_class, []).append(r)
    for name, rs in sorted(by_class.items()):
        for est in _order(rs):
            row = {"fringe_class": name, "estimator": est}
            for r in rs:
                if r.estimator == est:
                    row[f"md_n{r.n}"], row[f"l1_n{r.n}"] = r.md, r.l1
            w = result.report.weighted.get((name, est), {})
            row["md_weighted"], row["l1_weighted"] = w.get("md"), w.get("l1")
            out.append(row)
    return out


def _order(rows):
    seen = []
    for r in rows:
        if r.estimator not in seen:
            seen.append(r.estimator)
    return seen


def table_fieldnames(rows, lead):
    keys = []
    for r in rows:
        for k in r:
            if k not in keys and k not in lead:
                keys.append(k)
    return list(lead) + sorted(keys, key=_colkey)


_STEM_ORDER = {"mean": 0, "sd": 1, "md": 2, "l1": 3}


def _colkey(k):
    stem, _, n = k.rpartition("_n")
    if n.isdigit():
        return (0, int(n), _STEM_ORDER.get(stem, 9), stem)
    stem = k.rpartition("_")[0]
    return (1, 0, _STEM_ORDER.get(stem, 9), k)
