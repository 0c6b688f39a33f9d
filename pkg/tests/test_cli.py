import csv
import hashlib
import json

import numpy as np
import pytest

from mixedts.cli import main
from mixedts.multivariate import MultivariateParams
from mixedts.univariate import UnivariateParams

from conftest import SKEWED_REF, bivariate_params


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def digest(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


@pytest.fixture
def bivariate_json(tmp_path):
    return write_json(tmp_path / "t1.json", bivariate_params().to_dict())


@pytest.fixture
def skewed_json(tmp_path):
    return write_json(tmp_path / "skewed.json", SKEWED_REF)


def test_simulate_header_only_for_zero_count(tmp_path, bivariate_json):
    out = tmp_path / "y.csv"
    assert main(["simulate", "--params", bivariate_json, "--count", "0", "--out", str(out)]) == 0
    assert out.read_text() == "y1,y2\n"


def test_simulate_deterministic(tmp_path, bivariate_json):
    paths = [tmp_path / f"y{i}.csv" for i in range(3)]
    for p, seed in zip(paths, (11, 11, 12)):
        assert main(["simulate", "--params", bivariate_json, "--count", "500", "--seed", str(seed),
                     "--out", str(p)]) == 0
    assert digest(paths[0]) == digest(paths[1]) != digest(paths[2])
    rows = list(csv.reader(open(paths[0])))
    assert rows[0] == ["y1", "y2"] and len(rows) == 501
    assert all(len(r) == 2 for r in rows)


def test_simulate_univariate_to_stdout(capsys, skewed_json):
    assert main(["simulate", "--params", skewed_json, "--count", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "y1" and len(lines) == 4


def test_bad_inputs_exit_nonzero(tmp_path, bivariate_json, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", "--params", str(bad), "--count", "3"]) == 2
    assert main(["simulate", "--params", str(tmp_path / "missing.json"), "--count", "3"]) == 2
    assert main(["simulate", "--params", bivariate_json, "--count", "-1"]) == 2
    schema = write_json(tmp_path / "schema.json", {"mu": 0})
    assert main(["strip", "--params", schema]) == 2
    invalid = write_json(tmp_path / "inv.json", dict(SKEWED_REF, alpha=2.5))
    assert main(["moments", "--params", invalid]) == 2
    assert "error" in capsys.readouterr().err


def test_strip_reference(tmp_path, skewed_json):
    out = tmp_path / "strip.json"
    assert main(["strip", "--params", skewed_json, "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert abs(d["lower"] + 1.4105) < 1e-3 and d["upper"] == pytest.approx(1.2) and d["case"] == "Case3"
    assert "versions" in d["meta"]


def test_strip_multivariate(tmp_path, bivariate_json):
    out = tmp_path / "strip.json"
    assert main(["strip", "--params", bivariate_json, "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["marginals"]) == 2


def test_moments_symmetric_has_zero_skew(tmp_path):
    p = write_json(tmp_path / "sym.json", dict(SKEWED_REF, lambda_plus=1.5, lambda_minus=1.5))
    out = tmp_path / "m.json"
    assert main(["moments", "--params", p, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["central_m3"] == 0.0


def test_moments_multivariate_strict_json(tmp_path, bivariate_json):
    out = tmp_path / "m.json"
    assert main(["moments", "--params", bivariate_json, "--out", str(out)]) == 0
    text = out.read_text()
    assert "Infinity" not in text and "NaN" not in text
    d = json.loads(text)
    assert d["covariance_bounds"][0]["upper"] == "inf"
    assert np.allclose(d["covariance"], np.array(d["covariance"]).T)


def test_tails_command(tmp_path):
    data = tmp_path / "x.csv"
    x = np.random.default_rng(0).laplace(size=(5000, 2))
    data.write_text("a,b\n" + "\n".join(f"{u},{v}" for u, v in x.tolist()))
    out = tmp_path / "t.json"
    assert main(["tails", "--data", str(data), "--zeta", "0.02", "--sweep", "0.01,0.05",
                 "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert [c["column"] for c in d["columns"]] == ["a", "b"]
    fit = d["columns"][0]["fit"]
    assert set(fit) == {"q_star_hat", "r_star_hat", "zeta", "n_left", "n_right"}
    assert [r["zeta"] for r in d["columns"][1]["sweep"]] == [0.01, 0.05]


def test_tails_reports_failures_with_exit_one(tmp_path):
    data = tmp_path / "x.csv"
    data.write_text("y1\n1\n2\n3\n")
    out = tmp_path / "t.json"
    assert main(["tails", "--data", str(data), "--out", str(out)]) == 1
    assert "error" in json.loads(out.read_text())["columns"][0]


def test_estimate_round_trip_and_determinism(tmp_path, bivariate_json):
    data = tmp_path / "y.csv"
    assert main(["simulate", "--params", bivariate_json, "--count", "2000", "--out", str(data)]) == 0
    cfg = write_json(tmp_path / "cfg.json", {"n0": 60, "max_iter": 150})
    outs = [tmp_path / f"e{i}.json" for i in range(2)]
    fitted = tmp_path / "fit.json"
    for o in outs:
        assert main(["estimate", "--data", str(data), "--config", cfg, "--seed", "3",
                     "--out", str(o), "--params-out", str(fitted)]) == 0
    assert digest(outs[0]) == digest(outs[1])
    report = json.loads(outs[0].read_text())
    assert report["config"]["seed"] == 3 and report["meta"]["seed"] == 3
    MultivariateParams.from_dict(json.loads(fitted.read_text()))
    again = tmp_path / "y2.csv"
    assert main(["simulate", "--params", str(fitted), "--count", "5", "--out", str(again)]) == 0


def test_estimate_rejects_unknown_config(tmp_path, bivariate_json):
    data = tmp_path / "y.csv"
    main(["simulate", "--params", bivariate_json, "--count", "100", "--out", str(data)])
    cfg = write_json(tmp_path / "cfg.json", {"unknown": 1})
    assert main(["estimate", "--data", str(data), "--config", cfg]) == 2


def test_bootstrap_table_layout(tmp_path, bivariate_json):
    data = tmp_path / "y.csv"
    main(["simulate", "--params", bivariate_json, "--count", "1500", "--out", str(data)])
    cfg = write_json(tmp_path / "cfg.json", {"n0": 40, "max_iter": 40})
    table = tmp_path / "table.csv"
    out = tmp_path / "b.json"
    assert main(["bootstrap", "--data", str(data), "--config", cfg, "--reps", "2", "--size", "800",
                 "--truth", bivariate_json, "--table", str(table), "--out", str(out)]) == 0
    rows = list(csv.reader(open(table)))
    assert rows[0] == ["parameter", "true", "est", "median", "sd", "quartile1", "quartile3"]
    assert [r[0] for r in rows[1:3]] == ["mu_1", "beta_1"] and len(rows) == 16
    assert json.loads(out.read_text())["summary"]["replications"] == 2


def test_levy_command(tmp_path, capsys):
    p = write_json(tmp_path / "f3.json", dict(SKEWED_REF, lambda_plus=1.9))
    table = tmp_path / "g.csv"
    out = tmp_path / "l.json"
    assert main(["levy", "--params", p, "--truncation", "50", "--nodes", "1024",
                 "--csv", str(table), "--out", str(out)]) == 0
    lines = table.read_text().splitlines()
    assert lines[0] == "x,g"
    d = json.loads(out.read_text())
    assert d["points"] == len(lines) - 1 and d["nodes"] == 1024
    assert main(["levy", "--params", p, "--nodes", "1000"]) == 2
    t1 = write_json(tmp_path / "t1.json", bivariate_params().to_dict())
    assert main(["levy", "--params", t1]) == 2


def test_param_files_are_refeedable(tmp_path, skewed_json):
    UnivariateParams.from_dict(json.loads(open(skewed_json).read()))
