import math
import os
from pathlib import Path

import numpy as np
import pytest

import gkmnc

DATA = Path(os.environ.get("GKMNC_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))

SCHEMA = "shop = nominal\nx = numeric\ny = numeric\nlabel = target\npositive_label = yes\n"


def toy_csv(n=120, seed=0):
    rng = np.random.default_rng(seed)
    lines = ["shop,x,y,label"]
    for i in range(n):
        x, y = rng.normal(size=2)
        lines.append(f"{'ab'[i % 2]},{x},{y},{'yes' if x + y > 0 else 'no'}")
    return "\n".join(lines) + "\n"


def toy_table(n=120, seed=0):
    return gkmnc.read_table(toy_csv(n, seed), gkmnc.Schema.parse(SCHEMA))


def test_entropy_and_aggregation():
    assert gkmnc.entropy([2, 2]) == pytest.approx(1.0)
    assert gkmnc.entropy([3, 1]) == pytest.approx(0.8113, abs=1e-4)
    parts = [(26, 0.6923), (43, 0.9070), (27, 0.6296), (4, 0.50)]
    assert abs(gkmnc.aggregate_accuracy(parts) - 0.76) < 5e-3


def test_errors_carry_codes():
    with pytest.raises(gkmnc.GkmncError) as info:
        gkmnc.aggregate_accuracy([(0, 0.5)])
    assert info.value.code == "ZeroTotal"


def test_dbi_and_kmeans():
    rows = np.array([[0.0], [2.0], [10.0], [12.0]])
    assert gkmnc.davies_bouldin(rows, [0, 0, 1, 1], np.array([[1.0], [11.0]])) == pytest.approx(0.2, abs=1e-10)
    fit = gkmnc.kmeans(np.array([[0.0], [1.0], [9.0], [10.0]]), 2, seed=1)
    assert fit["sse"] == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    blobs = np.vstack([rng.normal(0, 0.5, (50, 2)), rng.normal(8, 0.5, (50, 2))])
    k, curve = gkmnc.select_k(blobs, 6, seed=2)
    assert k == 2 and len(curve) == 5


def test_laplace_one_dimensional_fixed_point():
    r = gkmnc.laplace_mode(np.ones((1, 1)), np.ones(1))
    f = r["mode"][0]
    assert abs(f - (1 - 1 / (1 + math.exp(-f)))) < 1e-6
    assert all(b >= a for a, b in zip(r["psi_trace"], r["psi_trace"][1:]))
    assert gkmnc.expected_logistic(0.0, 3.0) == pytest.approx(0.5)


def test_train_predict_roundtrip(tmp_path):
    table = toy_table()
    result = gkmnc.train(table, gkmnc.Config(hidden_size=2, clustering="off"))
    model = result.model
    assert model.leaf_count >= 1
    preds = model.predict(table)
    assert len(preds) == len(table)
    report = model.evaluate(table)
    hits = sum(p["label"] == t for p, t in zip(preds, table.targets()))
    assert report["accuracy"] == pytest.approx(hits / len(table))
    assert report["accuracy"] > 0.8

    path = tmp_path / "m.json"
    model.save(path)
    again = gkmnc.Model.load(path)
    assert again.name == model.name
    assert [p["label"] for p in again.predict(table)] == [p["label"] for p in preds]
    assert gkmnc.Model.loads(model.dumps()).dumps() == model.dumps()


def test_crossval_is_deterministic():
    table = toy_table(80, 4)
    cfg = gkmnc.Config(hidden_size=2, grouping="off", clustering="off")
    a = gkmnc.cross_validate(table, 4, cfg)
    b = gkmnc.cross_validate(table, 4, cfg)
    assert a["csv"] == b["csv"]
    assert len(a["folds"]) == 4


def test_german_gain_ratios():
    schema = gkmnc.Schema.load(DATA / "german_credit.schema")
    table = gkmnc.load_table(DATA / "german_credit.csv", schema)
    chosen, ratios = gkmnc.gain_ratios(table)
    assert chosen == 1
    top = next(r for r in ratios if r["attribute"] == 1)
    assert top["rank"] == 1 and abs(top["gain_ratio"] - 0.05257) < 0.002
