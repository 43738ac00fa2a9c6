import csv
import json

import numpy as np
import pytest

from rmadapt import __version__
from rmadapt.cli import main
from rmadapt.experiments import ConfigError, ExperimentConfig, config_from_dict, render


def rows_of(path):
    lines = [ln for ln in open(path) if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def run(tmp_path, name, *args):
    out = tmp_path / name
    assert main([*args, "--out", str(out)]) == 0
    return out


def test_table2_identical_across_worker_counts(tmp_path):
    args = ["table2", "--iters", "1500", "--replicates", "2", "--deterministic", "--seed", "3"]
    a = run(tmp_path, "a.csv", *args, "--workers", "1")
    b = run(tmp_path, "b.csv", *args, "--workers", "2")
    assert a.read_bytes() == b.read_bytes()


def test_table1_identical_across_worker_counts(tmp_path):
    args = ["table1", "--iters", "300", "--replicates", "3", "--deterministic"]
    a = run(tmp_path, "a.csv", *args, "--workers", "1")
    b = run(tmp_path, "b.csv", *args, "--workers", "3")
    assert a.read_bytes() == b.read_bytes()


def test_header_provenance(tmp_path):
    p = run(tmp_path, "t.csv", "table1", "--iters", "100", "--replicates", "2", "--target", "normal")
    lines = p.read_text().splitlines()
    assert lines[0] == f"# rmadapt {__version__}"
    cfg = json.loads(lines[1][len("# config: "):])
    assert cfg["iters"] == 100 and cfg["targets"] == ["normal"]
    assert lines[2].startswith("# generated: ")
    assert lines[3].startswith("target,sigma_q05")
    det = run(tmp_path, "d.csv", "table1", "--iters", "100", "--replicates", "2", "--target", "normal",
              "--deterministic")
    assert not any(ln.startswith("# generated") for ln in det.read_text().splitlines())


def test_single_replicate_gives_degenerate_quantiles(tmp_path):
    p = run(tmp_path, "t.csv", "table1", "--iters", "200", "--replicates", "1", "--deterministic")
    for r in rows_of(p):
        assert r["sigma_q05"] == r["sigma_q50"] == r["sigma_q95"]
        assert r["oap_q05"] == r["oap_q50"] == r["oap_q95"]
    assert len(rows_of(p)) == 9


def test_table2_rows(tmp_path):
    p = run(tmp_path, "t.csv", "table2", "--iters", "800", "--replicates", "2", "--deterministic")
    rows = rows_of(p)
    assert len(rows) == 2 * 3 * (2 + 2)
    opt = [r for r in rows if r["method"] == "optimal-fixed" and r["replicate"] != "se"]
    assert all(float(r["sigma2_mean"]) == pytest.approx(2.38 ** 2 / 10, rel=1e-5) for r in opt)
    assert {r["replicate"] for r in rows} == {"0", "1", "mean", "se"}


def test_json_output(tmp_path):
    p = run(tmp_path, "t.json", "table1", "--iters", "100", "--replicates", "2", "--target", "cauchy",
            "--format", "json", "--deterministic")
    d = json.loads(p.read_text())
    assert d["version"] == __version__ and "generated" not in d
    assert d["rows"][0]["target"] == "cauchy"


def test_tune_report(tmp_path):
    p = run(tmp_path, "r.json", "tune", "--iters", "3000", "--format", "json", "--deterministic",
            "--trace-out", str(tmp_path / "tr.rmt"))
    rep = json.loads(p.read_text())["report"]
    assert rep["iters"] == 3000
    assert len(rep["sigma_path"]) <= 1000
    assert rep["oap_window"] == 500
    assert len(rep["oap_trajectory"]) <= 1000
    assert 1.8 < rep["final_sigma"] < 3.2
    assert (tmp_path / "tr.rmt").exists()


def test_tune_zero_iterations(tmp_path):
    p = run(tmp_path, "r.json", "tune", "--iters", "0", "--format", "json", "--deterministic")
    rep = json.loads(p.read_text())["report"]
    assert rep["sigma_path"] == [] and rep["oap_trajectory"] == [] and rep["restarts"] == []


def test_tune_multivariate_csv(tmp_path):
    p = run(tmp_path, "r.csv", "tune", "--kind", "mvn-random-cov", "--dim", "5", "--iters", "2000",
            "--deterministic")
    rows = rows_of(p)
    assert rows[0].keys() == {"step", "sigma"}


def test_curves_columns(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p_grid": [0.2, 0.5], "oracle_n": 20000}))
    p = run(tmp_path, "c.csv", "curves", "--config", str(cfg), "--deterministic")
    rows = rows_of(p)
    assert list(rows[0]) == ["target", "m", "m_star", "p_star", "sigma_star", "ratio", "se_ratio", "n",
                             "ref_univariate", "ref_interpolated"]
    assert float(rows[1]["ref_univariate"]) == pytest.approx(4.0)


def test_oracle_subcommand(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"oracle_n": 50000}))
    p = run(tmp_path, "o.csv", "oracle", "--config", str(cfg), "--target", "normal", "--deterministic")
    r = rows_of(p)[0]
    assert abs(float(r["sigma_star"]) - 2.42) < 0.05


def test_mwg_demo_small(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"hier": {"n_groups": 3, "coef_block_dim": 2, "knot_block_dim": 2}}))
    p = run(tmp_path, "m.csv", "mwg-demo", "--config", str(cfg), "--iters", "400", "--deterministic")
    rows = rows_of(p)
    assert [r["block"] for r in rows] == ["b0", "b1", "b2", "beta", "u"]


@pytest.mark.parametrize("args", [
    ["table1", "--target", "bogus"],
    ["table2", "--dim", "0"],
    ["table1", "--replicates", "0"],
    ["tune", "--p-star", "1.5"],
    ["table3"],
    ["table1", "--no-such-flag"],
])
def test_config_errors_exit_2(args, capsys):
    assert main(args) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["table1", "--config", str(bad)]) == 2
    bad.write_text(json.dumps({"unknown_key": 1}))
    assert main(["table1", "--config", str(bad)]) == 2


def test_numerical_failure_exit_3(monkeypatch, capsys):
    from rmadapt import experiments
    from rmadapt.numerics import DecompositionError
    from rmadapt.oracle import BracketError

    def boom(exc):
        def f(*a, **k):
            raise exc("no sign change")
        return f

    monkeypatch.setattr(experiments, "ratio_curve", boom(BracketError))
    assert main(["oracle"]) == 3
    monkeypatch.setattr(experiments, "ratio_curve", boom(DecompositionError))
    assert main(["oracle"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_config_round_trip():
    cfg = config_from_dict({"experiment": "table2", "seed": 5, "target": {"kind": "mvn-random-cov"}})
    r = cfg.resolved()
    assert (r.dim, r.iters, r.replicates, r.n0_override) == (10, 20_000, 5, 20)
    p = config_from_dict({"experiment": "table2", "paper_scale": True}).resolved()
    assert (p.dim, p.iters, p.replicates) == (50, 100_000, 10)
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="nope").resolved()


def test_render_formats_six_significant_digits():
    cfg = ExperimentConfig(deterministic=True).resolved()
    text = render([{"a": np.float64(1 / 3), "b": 7}], ["a", "b"], cfg)
    assert text.splitlines()[-1] == "0.333333,7"
