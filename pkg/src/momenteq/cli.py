"""Command-line entry point: ``momenteq {solve,estimate,pipeline,simulate,oracle}``.

Every option can also come from ``--config file.json`` (keys are the long
option names with dashes or underscores); flags given on the command line win.
Exit codes: 0 success, 2 bad input, 3 solver failure, 4 internal error.
"""
import argparse
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import io
from .distributions import parse_distribution
from .enums import Family, Orientation
from .equilibrium import monte_carlo_consistency, solve_equilibrium
from .errors import DensityUnderflow, InputError, SolverFailure
from .estimation import BidSample, estimate_beliefs, gpv_pseudo_values, pseudo_values
from .loss import make_belief, oracle_worst_loss, worst_loss

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_INTERNAL = 0, 2, 3, 4

DEFAULTS = {
    "solve": {
        "family": "agg", "orientation": "buyer", "dist": None, "n": None, "nodes": 256,
        "table_size": 512, "tol": 1e-8, "mc_auctions": 0, "seed": 0, "out": None,
    },
    "estimate": {
        "bids": None, "family": "ind", "orientation": "procurement", "outlier": "none",
        "drop_outliers": False, "per_n": False, "value": "ratio", "bandwidth": None, "out": None,
    },
    "pipeline": {
        "bids": None, "orientation": "procurement", "no_homogenize": False, "tukey_k": 1.5,
        "per_class_tukey": False, "uhat_rule": "max", "bandwidth": None, "nodes": 256,
        "estimators": "AGG,IND,BNE,AGG-Out,IND-Out", "classes": None, "bootstrap": 200,
        "seed": 0, "out": None,
    },
    "simulate": {
        "auctions": 600, "family": "ind", "cost": "uniform:0.8,1.3", "n_values": None,
        "n_weights": None, "fringe_share": 0.5, "outlier_share": 0.01, "outlier_low": 1.0,
        "outlier_high": 2.0, "effects": None, "sigma_auction": 0.0, "sigma_idio": 0.0,
        "eng_median": 1.0e6, "seed": 0, "out": None,
    },
    "oracle": {
        "family": "agg", "orientation": "buyer", "l": None, "moment": None, "u": None, "n": None,
        "grid_size": 2000, "points": 15, "v_min": None, "v_max": None, "tolerance": 5e-3, "out": None,
    },
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def build_parser():
    p = _Parser(prog="momenteq", description="Minimax-loss bidding and moment equilibria in first-price auctions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS

    def common(sp):
        sp.add_argument("--config", default=S, help="JSON file with option values (flags win)")
        sp.add_argument("--out", default=S, help="output path")

    sp = sub.add_parser("solve", help="solve a moment equilibrium for a value/cost law", argument_default=S)
    common(sp)
    sp.add_argument("--family", choices=["agg", "ind"])
    sp.add_argument("--orientation", choices=["buyer", "procurement"])
    sp.add_argument("--dist", help="uniform:a,b | point:x | beta:a,b[,lo,hi] | discrete:x=w;... | sample:path | discrete-file:path")
    sp.add_argument("--n", type=int)
    sp.add_argument("--nodes", type=int)
    sp.add_argument("--table-size", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--mc-auctions", type=int, help="Monte Carlo belief check with this many auctions (0: off)")
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("estimate", help="recover pseudo values from a bid file", argument_default=S)
    common(sp)
    sp.add_argument("--bids")
    sp.add_argument("--family", choices=["agg", "ind", "bne"])
    sp.add_argument("--orientation", choices=["buyer", "procurement"])
    sp.add_argument("--outlier", help="none | tukey | tukey:k")
    sp.add_argument("--drop-outliers", action="store_true")
    sp.add_argument("--per-n", action="store_true", help="estimate each bidder count separately")
    sp.add_argument("--value", choices=["ratio", "bid"], help="bid/eng ratio or raw bid")
    sp.add_argument("--bandwidth", type=float)

    sp = sub.add_parser("pipeline", help="out-of-sample fit tables for all estimators", argument_default=S)
    common(sp)
    sp.add_argument("--bids")
    sp.add_argument("--orientation", choices=["buyer", "procurement"])
    sp.add_argument("--no-homogenize", action="store_true")
    sp.add_argument("--tukey-k", type=float)
    sp.add_argument("--per-class-tukey", action="store_true")
    sp.add_argument("--uhat-rule", choices=["max", "min"])
    sp.add_argument("--bandwidth", type=float)
    sp.add_argument("--nodes", type=int)
    sp.add_argument("--estimators", help="comma-separated subset of AGG,IND,BNE,AGG-Out,IND-Out")
    sp.add_argument("--bootstrap", type=int)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("simulate", help="write a synthetic bid file", argument_default=S)
    common(sp)
    sp.add_argument("--auctions", type=int)
    sp.add_argument("--family", choices=["agg", "ind", "bne"])
    sp.add_argument("--cost")
    sp.add_argument("--n-values", help="comma-separated bidder counts")
    sp.add_argument("--n-weights", help="comma-separated sampling weights")
    sp.add_argument("--fringe-share", type=float)
    sp.add_argument("--outlier-share", type=float)
    sp.add_argument("--outlier-low", type=float)
    sp.add_argument("--outlier-high", type=float)
    sp.add_argument("--sigma-auction", type=float)
    sp.add_argument("--sigma-idio", type=float)
    sp.add_argument("--eng-median", type=float)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("oracle", help="closed-form vs brute-force worst-case losses", argument_default=S)
    common(sp)
    sp.add_argument("--family", choices=["agg", "ind"])
    sp.add_argument("--orientation", choices=["buyer", "procurement"])
    sp.add_argument("--l", type=float)
    sp.add_argument("--moment", type=float)
    sp.add_argument("--u", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--grid-size", type=int)
    sp.add_argument("--points", type=int, help="grid points per axis for (v, b)")
    sp.add_argument("--v-min", type=float)
    sp.add_argument("--v-max", type=float)
    sp.add_argument("--tolerance", type=float, help="allowed gap as a fraction of u - l")
    return p


def resolve_options(command, flags):
    """defaults < config file < explicit flags. Unknown config keys are errors."""
    opts = dict(DEFAULTS[command])
    flags = dict(flags)
    cfg_path = flags.pop("config", None)
    if cfg_path is not None:
        try:
            with open(cfg_path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{cfg_path}: invalid JSON ({exc})") from None
        if not isinstance(cfg, dict):
            raise InputError(f"{cfg_path}: expected a JSON object")
        for key, val in cfg.items():
            k = key.replace("-", "_")
            if k not in opts:
                raise InputError(f"{cfg_path}: unknown option {key!r} for {command}")
            opts[k] = val
    opts.update(flags)
    return opts


def _require(opts, *names):
    missing = [n for n in names if opts.get(n) is None]
    if missing:
        raise InputError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _emit(obj, out):
    if out is None:
        sys.stdout.write(io.dumps(obj) + "\n")
    else:
        io.write_json(obj, out)


# -- commands ------------------------------------------------------------------


def cmd_solve(opts):
    _require(opts, "dist", "n")
    dist = parse_distribution(opts["dist"])
    sol = solve_equilibrium(dist, int(opts["n"]), opts["family"], opts["orientation"],
                            nodes=int(opts["nodes"]), table_size=int(opts["table_size"]), tol=float(opts["tol"]))
    report = sol.to_dict()
    report["dist"] = opts["dist"]
    if int(opts["mc_auctions"]) > 0 and not sol.is_pooling:
        report["monte_carlo"] = monte_carlo_consistency(sol, int(opts["mc_auctions"]), seed=int(opts["seed"]))
    table = [{"value": v, "bid": b} for v, b in sol.bid_table]
    if opts["out"] is None:
        _emit(report, None)
    else:
        out = Path(opts["out"])
        io.write_json(report, out)
        io.write_rows(table, out.with_suffix(".csv"), ["value", "bid"])
    return report


def _class_sample(frame, n):
    """Complete auctions (exactly n rows each) give the matrix form, which lets
    the aggregate moment use the average winning bid."""
    sizes = frame.groupby("auction_id", sort=False).size()
    if (sizes == n).all():
        order = frame.sort_values(["auction_id", "bidder_id"], kind="mergesort")
        matrix = order["_value"].to_numpy().reshape(-1, n)
        return BidSample.from_matrix(matrix), order.index.to_numpy()
    return BidSample.from_flat(frame["_value"].to_numpy(), n), frame.index.to_numpy()


def cmd_estimate(opts):
    _require(opts, "bids")
    df = io.read_bids_csv(opts["bids"])
    counts = sorted(df["n_bidders"].unique().tolist())
    if len(counts) > 1 and not opts["per_n"]:
        raise InputError(f"file mixes bidder counts {counts}; pass --per-n to estimate each separately")
    family = Family.parse(opts["family"])
    orientation = Orientation.parse(opts["orientation"])
    df["_value"] = df["bid"] / df["eng"] if opts["value"] == "ratio" else df["bid"]
    pseudo = np.full(len(df), np.nan)
    kept = np.zeros(len(df), dtype=int)
    beliefs = {}
    for n in counts:
        if n < 2:
            raise InputError(f"auctions with n_bidders={n} cannot be estimated")
        part = df[df["n_bidders"] == n]
        sample, index = _class_sample(part, n)
        if family is Family.BNE:
            pv = gpv_pseudo_values(sample, n, orientation, opts["bandwidth"])
            beliefs[str(n)] = {"bandwidth": pv.meta["bandwidth"], "trimmed": int((~pv.kept).sum())}
        else:
            est = estimate_beliefs(sample, orientation, opts["outlier"])
            pv = pseudo_values(sample, est, family, drop_outliers=bool(opts["drop_outliers"]))
            beliefs[str(n)] = {**est.to_dict(), "moment_used": est.moment(family)}
        rows = index[pv.kept]
        pseudo[df.index.get_indexer(rows)] = pv.values
        kept[df.index.get_indexer(rows)] = 1
    out_rows = [
        {"auction_id": a, "bidder_id": b, "n_bidders": int(n), "value": float(v),
         "pseudo_value": None if np.isnan(p) else float(p), "kept": int(k)}
        for a, b, n, v, p, k in zip(df["auction_id"], df["bidder_id"], df["n_bidders"], df["_value"], pseudo, kept)
    ]
    report = {"family": family.value, "orientation": orientation.value, "value": opts["value"],
              "outlier": opts["outlier"], "drop_outliers": bool(opts["drop_outliers"]), "classes": beliefs}
    if opts["out"] is None:
        _emit({"beliefs": report, "rows": out_rows}, None)
    else:
        out = Path(opts["out"])
        io.write_rows(out_rows, out, ["auction_id", "bidder_id", "n_bidders", "value", "pseudo_value", "kept"])
        io.write_json(report, out.with_suffix(".json"))
    return report


def _split_list(text, cast=str):
    if text is None or isinstance(text, (list, tuple)):
        return None if text is None else [cast(x) for x in text]
    return [cast(x.strip()) for x in str(text).split(",") if x.strip()]


def cmd_pipeline(opts):
    from .pipeline import PipelineConfig, run_pipeline, summary_rows, prediction_rows, distance_rows, table_fieldnames

    _require(opts, "bids")
    df = io.read_bids_csv(opts["bids"])
    cfg = {
        "orientation": opts["orientation"], "homogenize": not opts["no_homogenize"],
        "tukey_k": float(opts["tukey_k"]), "per_class_tukey": bool(opts["per_class_tukey"]),
        "uhat_rule": opts["uhat_rule"], "bandwidth": opts["bandwidth"], "nodes": int(opts["nodes"]),
        "estimators": tuple(_split_list(opts["estimators"])), "bootstrap": int(opts["bootstrap"]),
        "seed": int(opts["seed"]),
    }
    if opts["classes"] is not None:
        cfg["classes"] = opts["classes"]
    result = run_pipeline(df, PipelineConfig.from_dict(cfg))
    report = result.to_dict()
    if opts["out"] is None:
        _emit(report, None)
        return report
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    summary, preds, dists = summary_rows(result), prediction_rows(result), distance_rows(result)
    io.write_rows(summary, out / "summary_by_n.csv", table_fieldnames(summary, ["fringe_class", "n"]))
    io.write_rows(preds, out / "predictions.csv", table_fieldnames(preds, ["fringe_class", "source"]))
    io.write_rows(dists, out / "distances.csv", table_fieldnames(dists, ["fringe_class", "estimator"]))
    io.write_json(report, out / "report.json")
    return report


def cmd_simulate(opts):
    from .synthetic import DEFAULT_EFFECTS, SyntheticConfig, generate

    kw = {k: opts[k] for k in ("auctions", "family", "cost", "fringe_share", "outlier_share", "outlier_low",
                               "outlier_high", "sigma_auction", "sigma_idio", "eng_median", "seed")}
    n_values = _split_list(opts["n_values"], int)
    n_weights = _split_list(opts["n_weights"], float)
    if n_values is not None:
        kw["n_values"] = tuple(n_values)
        # the default weights belong to the default bidder counts
        kw["n_weights"] = None if n_weights is None else tuple(n_weights)
    elif n_weights is not None:
        kw["n_weights"] = tuple(n_weights)
    if opts["effects"] is not None:
        kw["effects"] = {**DEFAULT_EFFECTS, **opts["effects"]}
    if int(kw["auctions"]) != kw["auctions"] or kw["auctions"] < 1:
        raise InputError("need at least one auction")
    df, meta = generate(SyntheticConfig(**kw))
    if opts["out"] is None:
        sys.stdout.write(df.to_csv(index=False, float_format="%.10g", lineterminator="\n"))
    else:
        out = Path(opts["out"])
        io.write_bids_csv(df, out)
        io.write_json(meta, out.with_suffix(".json"))
    return meta


def cmd_oracle(opts):
    _require(opts, "l", "moment", "u", "n")
    belief = make_belief(opts["family"], float(opts["l"]), float(opts["moment"]), float(opts["u"]),
                         int(opts["n"]), opts["orientation"])
    l, u = belief.l, belief.u
    width = (u - l) or 1.0
    buyer = belief.orientation is Orientation.BUYER
    v_min = opts["v_min"] if opts["v_min"] is not None else (l if buyer else l - 0.5 * width)
    v_max = opts["v_max"] if opts["v_max"] is not None else (u + 0.5 * width if buyer else u)
    k = int(opts["points"])
    if k < 1:
        raise InputError("need at least one grid point")
    rows, gap = [], 0.0
    for v in np.linspace(v_min, v_max, k):
        for b in np.linspace(l, u, k) if u > l else [l]:
            if (buyer and b > v) or (not buyer and b < v):
                continue
            closed = worst_loss(belief, float(v), float(b))
            brute = oracle_worst_loss(belief, float(v), float(b), int(opts["grid_size"]))
            gap = max(gap, abs(closed - brute))
            rows.append({"value": float(v), "bid": float(b), "closed_form": closed, "oracle": brute,
                         "gap": abs(closed - brute)})
    summary = {"belief": {"family": belief.family.value, "orientation": belief.orientation.value,
                          "l": l, "moment": belief.moment, "u": u, "n": belief.n},
               "pairs": len(rows), "max_gap": gap, "tolerance": float(opts["tolerance"]) * width,
               "within_tolerance": gap <= float(opts["tolerance"]) * width}
    if opts["out"] is None:
        _emit(summary, None)
    else:
        out = Path(opts["out"])
        io.write_rows(rows, out, ["value", "bid", "closed_form", "oracle", "gap"])
        io.write_json(summary, out.with_suffix(".json"))
    return summary


COMMANDS = {"solve": cmd_solve, "estimate": cmd_estimate, "pipeline": cmd_pipeline,
            "simulate": cmd_simulate, "oracle": cmd_oracle}


def main(argv=None):
    try:
        args = vars(build_parser().parse_args(argv))
        command = args.pop("command")
        opts = resolve_options(command, args)
        COMMANDS[command](opts)
        return EXIT_OK
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverFailure, DensityUnderflow) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
