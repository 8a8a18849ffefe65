import pandas as pd
import pytest

from momenteq.errors import InputError, NotEnoughVariation
from momenteq.pipeline import PipelineConfig, run_pipeline, prediction_rows, distance_rows, table_fieldnames
from momenteq.synthetic import SyntheticConfig, generate


@pytest.fixture(scope="module")
def small_result():
    df, _ = generate(SyntheticConfig(auctions=200, outlier_share=0.0, seed=3))
    return run_pipeline(df, PipelineConfig(estimators=("IND", "AGG"), bootstrap=5))


def test_config_rejects_unknown_keys():
    with pytest.raises(InputError):
        PipelineConfig.from_dict({"tukey": 1.5})
    assert PipelineConfig.from_dict({"estimators": ["IND"]}).estimators == ("IND",)


def test_single_bidder_count_rejected():
    df, _ = generate(SyntheticConfig(auctions=20, n_values=(3,), n_weights=None))
    with pytest.raises(NotEnoughVariation):
        run_pipeline(df)


def test_tables_layout(small_result):
    preds = prediction_rows(small_result)
    assert [r["source"] for r in preds if r["fringe_class"] == "fringe"] == ["Sample", "IND", "AGG"]
    cols = table_fieldnames(preds, ["fringe_class", "source"])
    assert cols[:4] == ["fringe_class", "source", "mean_n2", "sd_n2"]
    dists = distance_rows(small_result)
    cols = table_fieldnames(dists, ["fringe_class", "estimator"])
    assert cols[-2:] == ["md_weighted", "l1_weighted"]
    assert cols[2:4] == ["md_n2", "l1_n2"]


def test_non_fringe_targets_capped(small_result):
    ns = {r.n for r in small_result.report.rows if r.fringe_class == "non_fringe"}
    assert max(ns) <= 4


def test_rows_cover_every_target(small_result):
    rows = pd.DataFrame([r.__dict__ for r in small_result.report.rows])
    counts = rows.groupby(["fringe_class", "n"]).size()
    assert (counts == 2).all()
    assert (rows["count"] > 0).all()
