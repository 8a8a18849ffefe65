"""End-to-end CLI runs against frozen golden outputs.

Set MOMENTEQ_REGEN_GOLDEN=1 to rewrite the files in tests/data/golden after an
intentional numerical change.
"""
import csv
import json
import os
import shutil
from pathlib import Path

import numpy as np
import pytest

from momenteq.cli import DEFAULTS, main, resolve_options
from momenteq.errors import InputError

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden"
REGEN = os.environ.get("MOMENTEQ_REGEN_GOLDEN") == "1"


def _numeric(text):
    try:
        return float(text)
    except ValueError:
        return text


def _same_csv(a, b, rtol=1e-7, atol=1e-9):
    ra = list(csv.reader(open(a, encoding="utf-8")))
    rb = list(csv.reader(open(b, encoding="utf-8")))
    assert ra[0] == rb[0]
    assert len(ra) == len(rb)
    for x, y in zip(ra[1:], rb[1:]):
        for p, q in zip(map(_numeric, x), map(_numeric, y)):
            if isinstance(p, float) and isinstance(q, float):
                assert q == pytest.approx(p, rel=rtol, abs=atol)
            else:
                assert p == q


def _same_json(a, b, rtol=1e-7):
    def walk(p, q):
        if isinstance(p, dict):
            assert sorted(p) == sorted(q)
            for k in p:
                walk(p[k], q[k])
        elif isinstance(p, list):
            assert len(p) == len(q)
            for s, t in zip(p, q):
                walk(s, t)
        elif isinstance(p, float) and not isinstance(q, str):
            assert q == pytest.approx(p, rel=rtol, abs=1e-9)
        else:
            assert p == q

    walk(json.load(open(a)), json.load(open(b)))


def check_golden(produced, name):
    target = GOLDEN / name
    if REGEN:
        GOLDEN.mkdir(exist_ok=True)
        shutil.copyfile(produced, target)
    (_same_json if name.endswith(".json") else _same_csv)(target, produced)


def run(*argv):
    return main([str(a) for a in argv])


# -- solve ---------------------------------------------------------------------


def test_solve_agg_uniform(tmp_path):
    out = tmp_path / "agg.json"
    assert run("solve", "--family", "agg", "--dist", "uniform:0,1", "--n", 2, "--out", out) == 0
    report = json.loads(out.read_text())
    assert report["moment"] == pytest.approx(0.37, abs=0.005)
    assert report["u"] == pytest.approx(0.5, abs=0.005)
    table = np.loadtxt(out.with_suffix(".csv"), delimiter=",", skiprows=1)
    assert np.all(np.diff(table[:, 1]) >= 0)
    check_golden(out, "solve_agg_uniform.json")


def test_solve_ind_uniform(tmp_path):
    out = tmp_path / "ind.json"
    assert run("solve", "--family", "ind", "--dist", "uniform:0,1", "--n", 2, "--out", out) == 0
    report = json.loads(out.read_text())
    assert (report["moment"], report["u"]) == pytest.approx((0.30, 0.55), abs=0.005)


def test_solve_point_mass_pools(capsys):
    assert run("solve", "--family", "ind", "--dist", "point:0.5", "--n", 3) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pooling"] and report["l"] == report["u"] == 0.5


def test_solve_bad_input_exit_codes(capsys):
    assert run("solve", "--dist", "uniform:1,0", "--n", 2) == 2
    assert run("solve", "--dist", "uniform:0,1") == 2
    assert run("solve", "--dist", "uniform:0,1", "--n", 2, "--family", "bne") == 2
    assert "error" in capsys.readouterr().err


def test_solve_monte_carlo(tmp_path):
    out = tmp_path / "mc.json"
    assert run("solve", "--dist", "uniform:0,1", "--n", 2, "--mc-auctions", 20000, "--out", out) == 0
    assert abs(json.loads(out.read_text())["monte_carlo"]["z"]) <= 4


# -- estimate ------------------------------------------------------------------

ESTIMATE_CASES = {
    "complete_ind": ["--bids", DATA / "est_complete.csv", "--family", "ind"],
    "per_n_agg": ["--bids", DATA / "est_mixed.csv", "--family", "agg", "--per-n"],
    "outlier_raw": ["--bids", DATA / "est_outlier.csv", "--value", "bid", "--outlier", "tukey",
                    "--drop-outliers"],
}


@pytest.mark.parametrize("case", sorted(ESTIMATE_CASES))
def test_estimate_golden(tmp_path, case):
    out = tmp_path / f"{case}.csv"
    assert run("estimate", *ESTIMATE_CASES[case], "--out", out) == 0
    check_golden(out, f"estimate_{case}.csv")
    check_golden(out.with_suffix(".json"), f"estimate_{case}.json")


def test_estimate_rows_preserve_join_keys(tmp_path):
    out = tmp_path / "e.csv"
    run("estimate", *ESTIMATE_CASES["per_n_agg"], "--out", out)
    src = list(csv.DictReader(open(DATA / "est_mixed.csv")))
    got = list(csv.DictReader(open(out)))
    assert [(r["auction_id"], r["bidder_id"]) for r in src] == [(r["auction_id"], r["bidder_id"]) for r in got]


def test_estimate_outlier_row_flagged(tmp_path):
    out = tmp_path / "e.csv"
    run("estimate", *ESTIMATE_CASES["outlier_raw"], "--out", out)
    rows = list(csv.DictReader(open(out)))
    flagged = [(r["auction_id"], r["bidder_id"]) for r in rows if r["kept"] == "0"]
    assert flagged == [("T5", "1")]
    assert rows[11]["pseudo_value"] == ""


def test_estimate_errors(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run("estimate", "--bids", empty) == 2
    assert run("estimate", "--bids", DATA / "est_mixed.csv") == 2
    assert "--per-n" in capsys.readouterr().err
    assert run("estimate", "--bids", tmp_path / "missing.csv") == 2


# -- pipeline ------------------------------------------------------------------


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipe") / "seed0"
    assert run("pipeline", "--bids", DATA / "pipeline_small.csv", "--bootstrap", 20, "--out", out) == 0
    return out


def test_pipeline_golden(pipeline_run):
    for name in ("summary_by_n.csv", "predictions.csv", "distances.csv"):
        check_golden(pipeline_run / name, f"pipeline_{name}")


def test_pipeline_idempotent_and_seed_scope(pipeline_run, tmp_path):
    again = tmp_path / "again"
    other = tmp_path / "seed7"
    run("pipeline", "--bids", DATA / "pipeline_small.csv", "--bootstrap", 20, "--out", again)
    run("pipeline", "--bids", DATA / "pipeline_small.csv", "--bootstrap", 20, "--seed", 7, "--out", other)
    for name in ("summary_by_n.csv", "predictions.csv", "distances.csv", "report.json"):
        assert (again / name).read_bytes() == (pipeline_run / name).read_bytes()
    for name in ("summary_by_n.csv", "predictions.csv", "distances.csv"):
        assert (other / name).read_bytes() == (pipeline_run / name).read_bytes()
    a = json.loads((pipeline_run / "report.json").read_text())
    b = json.loads((other / "report.json").read_text())
    assert a["fit_report"]["rows"] == b["fit_report"]["rows"]
    assert a["fit_report"]["diagnostics"] != b["fit_report"]["diagnostics"]


def test_pipeline_single_class(tmp_path, capsys):
    assert run("pipeline", "--bids", DATA / "est_complete.csv", "--bootstrap", 0) == 2
    assert "three bidder counts" in capsys.readouterr().err


# -- simulate ------------------------------------------------------------------


def test_simulate_ind_100(tmp_path):
    out = tmp_path / "sim.csv"
    assert run("simulate", "--auctions", 100, "--seed", 4, "--out", out) == 0
    rows = list(csv.DictReader(open(out)))
    assert len({r["auction_id"] for r in rows}) == 100
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["config"]["family"] == "ind"
    assert set(meta["equilibria"]) == {str(n) for n in meta["config"]["n_values"]}


def test_simulate_errors_and_fringe(tmp_path):
    assert run("simulate", "--auctions", 0) == 2
    out = tmp_path / "f.csv"
    assert run("simulate", "--auctions", 30, "--fringe-share", 1.0, "--out", out) == 0
    assert {r["fringe"] for r in csv.DictReader(open(out))} == {"1"}


def test_simulate_stdout_deterministic(capsys):
    run("simulate", "--auctions", 5, "--seed", 2)
    a = capsys.readouterr().out
    run("simulate", "--auctions", 5, "--seed", 2)
    assert capsys.readouterr().out == a


# -- oracle --------------------------------------------------------------------


def test_oracle_uniform_belief(tmp_path):
    out = tmp_path / "o.csv"
    assert run("oracle", "--l", 0, "--moment", 0.37, "--u", 0.5, "--n", 2, "--points", 9, "--out", out) == 0
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["within_tolerance"]
    assert summary["pairs"] > 0


def test_oracle_degenerate_all_zero(tmp_path):
    out = tmp_path / "o.csv"
    assert run("oracle", "--l", 0.4, "--moment", 0.4, "--u", 0.4, "--n", 3, "--points", 5, "--out", out) == 0
    table = np.loadtxt(out, delimiter=",", skiprows=1, ndmin=2)
    assert np.all(table[:, 2:] == 0.0)


def test_oracle_ind_seven_bidders(capsys):
    assert run("oracle", "--family", "ind", "--l", 0, "--moment", 0.6, "--u", 1, "--n", 7, "--points", 6) == 0
    assert json.loads(capsys.readouterr().out)["within_tolerance"]


# -- configuration -------------------------------------------------------------


def test_config_merge_flags_win(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"family": "ind", "table-size": 64, "n": 3}))
    opts = resolve_options("solve", {"config": str(cfg), "n": 2})
    assert opts["family"] == "ind" and opts["table_size"] == 64 and opts["n"] == 2
    assert opts["nodes"] == DEFAULTS["solve"]["nodes"]


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"famly": "ind"}))
    with pytest.raises(InputError):
        resolve_options("solve", {"config": str(cfg)})
    assert run("solve", "--config", cfg, "--dist", "uniform:0,1", "--n", 2) == 2


def test_unknown_flag_exit_code():
    assert run("solve", "--bogus", 1) == 2
