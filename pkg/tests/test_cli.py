import csv
import json

import pytest

from cdlab import cli
from cdlab.errors import NoConvergence


def run(args):
    return cli.main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_writes_population_csv(tmp_path):
    out = tmp_path / "out"
    assert run(["simulate", "--out", out]) == 0
    rows = read_csv(out / "population.csv")
    assert rows[0] == ["market_id", "type", "product", "x1", "p", "xi", "z",
                       "share"]
    assert len(rows) == 201  # default population: 200 markets, one product


def test_invert_round_trip_artifact(tmp_path):
    out = tmp_path / "out"
    assert run(["invert", "--out", out]) == 0
    rows = read_csv(out / "inversion.csv")
    for row in rows[1:]:
        assert abs(float(row[2]) - float(row[3])) < 1e-8


def test_predict_artifact_matches_truth_for_single_type(tmp_path):
    out = tmp_path / "out"
    assert run(["predict", "--out", out]) == 0
    rows = read_csv(out / "predictions.csv")
    for row in rows[1:]:
        assert abs(float(row[3]) - float(row[4])) < 1e-8


def test_reruns_are_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run(["simulate", "--out", out, "--seed", "7"]) == 0
    assert (out1 / "population.csv").read_bytes() == \
        (out2 / "population.csv").read_bytes()


def test_fig1_emits_curves_figure_and_variance_report(tmp_path):
    out = tmp_path / "out"
    assert run(["fig1", "--out", out, "--set", "market_count=40"]) == 0
    assert (out / "fig1.svg").exists()
    rows = read_csv(out / "curves.csv")
    assert rows[0] == ["market_id", "type", "grid_price", "own_share",
                       "opposite_share"]
    vrows = read_csv(out / "variance_report.csv")
    by_pop = {r[0]: float(r[2]) for r in vrows[1:]}
    assert by_pop["two-type"] > by_pop["single-type"]


def test_fig2_emits_paths_and_two_panel_figure(tmp_path):
    out = tmp_path / "out"
    assert run(["fig2", "--out", out, "--set", "market_count=6"]) == 0
    content = (out / "fig2.svg").read_text()
    assert "(a) rejected candidate" in content
    assert "(b) true transform" in content
    rows = read_csv(out / "paths_transformed.csv")
    names = {r[3] for r in rows[1:]}
    assert names == {"identity", "true"}


def test_verify_thm1_report(tmp_path):
    out = tmp_path / "out"
    assert run(["verify-thm1", "--out", out]) == 0
    rows = read_csv(out / "thm1_report.csv")
    assert len(rows) == 4
    assert all(r[2] == "True" for r in rows[1:])


def test_verify_thm2_report(tmp_path):
    out = tmp_path / "out"
    assert run(["verify-thm2", "--out", out, "--set", "market_count=8"]) == 0
    rows = read_csv(out / "thm2_report.csv")
    assert [r[0] for r in rows[1:]] == ["profile_conversion", "parallel_paths",
                                        "transformed_shift"]


def test_extrapolate_and_prop32(tmp_path):
    out = tmp_path / "out"
    assert run(["extrapolate", "--out", out, "--set", "n=400"]) == 0
    assert (out / "predictions.csv").exists()
    grows = read_csv(out / "gmm_report.csv")
    assert len(grows) == 5  # four treatment levels
    assert run(["prop32", "--out", tmp_path / "p32"]) == 0
    assert (tmp_path / "p32" / "prop32_report.csv").exists()


def test_micro_identify_estimates(tmp_path):
    out = tmp_path / "out"
    assert run(["micro-identify", "--out", out,
                "--set", "market_count=24",
                "--set", "price_levels=[0.5,1.25,2.0]",
                "--set", "w_grid=[-1.0,-0.5,0.0,0.5,1.0]"]) == 0
    est = {r[0]: float(r[1]) for r in read_csv(out / "estimates.csv")[1:]}
    assert abs(est["alpha"] - 1.0) < 1e-4
    assert abs(est["sigma"] - 0.8) < 1e-3
    assert (out / "g_hat.csv").exists()
    assert (out / "h_hat.csv").exists()
    assert (out / "moment_report.csv").exists()


def test_price_ccs_report(tmp_path):
    out = tmp_path / "out"
    assert run(["price-ccs", "--out", out, "--set", "market_count=40"]) == 0
    rows = read_csv(out / "price_ccs_report.csv")
    assert rows[1][0] == "max_price_error"
    assert rows[1][3] == "True"


def test_config_file_drives_run(tmp_path):
    cfg = {"schema_version": 1, "experiment": "simulate",
           "output_dir": str(tmp_path / "from_cfg"), "seed": 2,
           "population": {"J": 1, "market_count": 3,
                          "mixing_by_type": [{"kind": "lognormal",
                                              "loc": [0.0], "scale": [0.4]}],
                          "type_probabilities": [1.0]}}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    assert run(["simulate", "--config", path]) == 0
    rows = read_csv(tmp_path / "from_cfg" / "population.csv")
    assert len(rows) == 4


def test_exit_code_1_on_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert run(["simulate", "--config", bad]) == 1
    ok = tmp_path / "ok.json"
    ok.write_text(json.dumps({"schema_version": 1, "experiment": "invert"}))
    assert run(["simulate", "--config", ok]) == 1  # experiment mismatch
    assert "error:" in capsys.readouterr().err


def test_exit_code_2_writes_failure_report(tmp_path, monkeypatch):
    def boom(cfg, out):
        raise NoConvergence(5, 0.1)

    monkeypatch.setitem(cli.RUNNERS, "invert", boom)
    out = tmp_path / "out"
    assert run(["invert", "--out", out]) == 2
    rows = read_csv(out / "report.csv")
    assert rows[0] == ["experiment", "failure"]
    assert rows[1][0] == "invert"


def test_acceptance_subset_runs_and_reports(tmp_path):
    out = tmp_path / "out"
    assert run(["acceptance", "--out", out, "--set", "criteria=[9]"]) == 0
    rows = read_csv(out / "acceptance.csv")
    assert rows[0][0] == "criterion"
    assert {r[0] for r in rows[1:]} == {"9"}
    assert all(r[6] == "True" for r in rows[1:])
    assert (out / "fig1.svg").exists() and (out / "fig2.svg").exists()
