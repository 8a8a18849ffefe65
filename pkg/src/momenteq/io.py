"""CSV reading/writing for bid-level data and small report helpers."""
import csv
import json

import numpy as np
import pandas as pd

from .empirics import COLUMNS
from .errors import EmptySample, SchemaError

NUMERIC = ["bid", "eng", "dist", "util", "rdist", "rutil"]
_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n"}


def _line(i):
    return i + 2  # header is line 1


def read_bids_csv(path, require=COLUMNS):
    """Read and validate a bid file. Errors cite 1-based file line numbers."""
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptySample(f"{path}: file is empty") from None
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path}: not UTF-8 ({exc})") from None
    raw.columns = [c.strip().lower() for c in raw.columns]
    missing = [c for c in require if c not in raw.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)} in header (line 1)")
    if raw.empty:
        raise EmptySample(f"{path}: no data rows")
    out = pd.DataFrame({"auction_id": raw["auction_id"].str.strip(), "bidder_id": raw["bidder_id"].str.strip()})
    for i, (a, b) in enumerate(zip(out["auction_id"], out["bidder_id"])):
        if not a or not b:
            raise SchemaError(f"{path}: line {_line(i)}: empty auction_id or bidder_id")
    for col in [c for c in NUMERIC if c in require]:
        vals = np.empty(len(raw))
        for i, text in enumerate(raw[col]):
            try:
                vals[i] = float(text)
            except ValueError:
                raise SchemaError(f"{path}: line {_line(i)}: column {col}: {text!r} is not a number") from None
            if not np.isfinite(vals[i]):
                raise SchemaError(f"{path}: line {_line(i)}: column {col} is not finite")
        out[col] = vals
    for col in ("bid", "eng"):
        if col in out:
            bad = np.flatnonzero(out[col].to_numpy() <= 0)
            if bad.size:
                raise SchemaError(f"{path}: line {_line(bad[0])}: {col} must be positive")
    if "fringe" in require:
        flags = []
        for i, text in enumerate(raw["fringe"]):
            key = text.strip().lower()
            if key in _TRUE:
                flags.append(1)
            elif key in _FALSE:
                flags.append(0)
            else:
                raise SchemaError(f"{path}: line {_line(i)}: fringe must be 0/1, got {text!r}")
        out["fringe"] = np.array(flags, dtype=int)
    if "n_bidders" in require:
        counts = []
        for i, text in enumerate(raw["n_bidders"]):
            try:
                val = float(text)
            except ValueError:
                val = np.nan
            if not np.isfinite(val) or val != int(val) or val < 1:
                raise SchemaError(f"{path}: line {_line(i)}: n_bidders must be a positive integer, got {text!r}")
            counts.append(int(val))
        out["n_bidders"] = np.array(counts, dtype=int)
    dup = out.duplicated(["auction_id", "bidder_id"])
    if dup.any():
        i = int(np.flatnonzero(dup.to_numpy())[0])
        raise SchemaError(f"{path}: line {_line(i)}: duplicate (auction_id, bidder_id)")
    return out


def write_bids_csv(df, path):
    frame = df[COLUMNS].copy()
    frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")


def write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default)


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_rows(rows, path, fieldnames=None):
    rows = list(rows)
    fieldnames = fieldnames or (list(rows[0]) if rows else [])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in fieldnames})


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    if x is None:
        return ""
    return x
