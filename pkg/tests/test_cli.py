import csv
import json

import numpy as np
import pytest

from orlicz_heat import cli


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def report(out):
    return json.loads((out / "report.json").read_text())


def test_fujita_preset_splits_at_critical_q(tmp_path):
    assert cli.run(["preset", "fujita-threshold", "--n", "2", "--p", "3", "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "thresholds.csv")
    # q_c = n(p - 1)/2 = 2 with offsets -0.5, -0.1, 0.1, 0.5
    assert [float(r["q"]) for r in table] == pytest.approx([1.5, 1.9, 2.1, 2.5])
    assert [r["kind"] for r in table] == ["diverges", "diverges", "converges", "converges"]
    rep = report(tmp_path)
    assert rep["status"] == "ok" and rep["result"]["threshold"] == 2.0


@pytest.mark.parametrize("name", ["log-fujita", "log-power", "exp-critical", "expexp-critical"])
def test_other_presets_complete(tmp_path, name):
    assert cli.run(["preset", name, "--out", str(tmp_path)]) == 0
    assert report(tmp_path)["config"]["preset"] == name


def test_construct_j_margin_nonnegative(tmp_path):
    assert cli.run(["construct-j", "--r", "exp", "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "J.csv")
    assert len(table) == 81
    assert all(float(r["margin"]) >= 0 for r in table)
    checks = report(tmp_path)["result"]["checks"]
    assert checks["passed"] and checks["rapid_ratio"] > 1e2


def test_smoothing_sweep_slope(tmp_path):
    argv = ["smoothing-sweep", "--phi", "power:q=1", "--psi", "power:q=2", "--n", "1",
            "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    assert report(tmp_path)["result"]["slope"] == pytest.approx(-0.25, abs=0.02)
    assert len(rows(tmp_path / "sweep.csv")) == 9


def test_slope_expectation_failure_is_verdict_level(tmp_path):
    argv = ["smoothing-sweep", "--phi", "power:q=1", "--psi", "power:q=2", "--N", "256",
            "--expect-slope", "-0.5", "--out", str(tmp_path)]
    assert cli.run(argv) == 2
    assert report(tmp_path)["status"] == "failed"


def test_young_check(tmp_path):
    assert cli.run(["young-check", "--phi", "explp:p=2", "--out", str(tmp_path)]) == 0
    res = report(tmp_path)["result"]
    assert res["inverse_sandwich"] and res["inverse_midpoint_concave"] and res["inverse_product_in_band"]
    # Phi_lam(x) = Phi(x / lam) scales the Luxemburg norm by 1 / lam
    assert res["dilation"]["dilated_norm_times_lam_over_norm"] == pytest.approx(1.0, rel=1e-8)


def test_young_check_without_complement(tmp_path):
    assert cli.run(["young-check", "--phi", "linf", "--out", str(tmp_path)]) == 0
    assert report(tmp_path)["result"]["inverse_sandwich"]


def test_kernel_norm_with_induction(tmp_path):
    argv = ["kernel-norm", "--theta", "power:q=2", "--n", "1", "--t-points", "5", "--a", "1.0",
            "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    res = report(tmp_path)["result"]
    assert res["refinement_drift"] < 0.05
    table = rows(tmp_path / "induction.csv")
    assert [int(r["j"]) for r in table] == [1, 2, 3, 4, 5, 6]
    assert max(float(r["I_ratio"]) for r in table) <= 1 + 1e-6


def test_wellposed_lambda_grid(tmp_path):
    argv = ["wellposed", "--f", "explp:m=3,p=2", "--phi", "explp:p=2", "--n", "2",
            "--lam", "0.5,1.1", "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    assert [r["kind"] for r in rows(tmp_path / "verdicts.csv")] == ["converges", "diverges"]


def test_global_flag_reports_divergence_at_zero(tmp_path):
    argv = ["wellposed", "--f", "fujita:p=3", "--phi", "max-power:q=1.5,r=3", "--global",
            "--lam", "0.1", "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    (row,) = rows(tmp_path / "verdicts.csv")
    assert row["kind"] == "diverges" and row["where"] == "zero"


def test_solve_small_cubic(tmp_path):
    argv = ["solve", "--f", "fujita:p=3", "--data", "gaussian:amp=0.5", "--N", "256", "--L", "16",
            "--M", "8", "--save-grids", "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    traj = rows(tmp_path / "trajectory.csv")
    assert len(traj) == 8
    assert report(tmp_path)["result"]["converged"]
    manifest = json.loads((tmp_path / "grids" / "manifest.json").read_text())
    assert len(manifest["files"]) == 8


def test_solve_monotone(tmp_path):
    argv = ["solve", "--f", "fujita:p=3", "--data", "gaussian:amp=0.5", "--N", "256", "--L", "16",
            "--M", "8", "--monotone", "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    res = report(tmp_path)["result"]
    assert res["ordering_violation"] <= 1e-10 * 0.5
    assert (tmp_path / "lower.csv").exists()


def test_solve_blow_up_is_verdict_level(tmp_path):
    argv = ["solve", "--f", "fujita:p=3", "--data", "gaussian:amp=5", "--N", "256", "--L", "16",
            "--M", "8", "--out", str(tmp_path)]
    assert cli.run(argv) == 2


def test_global_decay(tmp_path):
    argv = ["global", "--f", "fujita:p=5", "--phi", "max-power:q=1.5,r=3", "--c", "0.45",
            "--M", "16", "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    res = report(tmp_path)["result"]
    assert res["solve"]["decay_check"]["passed"]


def test_global_without_budget_exits_two(tmp_path):
    argv = ["global", "--f", "fujita:p=3", "--phi", "max-power:q=1.5,r=3", "--c", "1.0",
            "--out", str(tmp_path)]
    assert cli.run(argv) == 2
    assert "no admissible global budget" in report(tmp_path)["failures"][0]


def test_critical_with_probe(tmp_path):
    argv = ["critical", "--f", "explp:m=0,p=1", "--phi", "power:q=1", "--gamma", "0.5",
            "--N", "128", "--M", "8", "--halvings", "1", "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    res = report(tmp_path)["result"]
    assert res["probe"]["status"] in ("converged", "converged on a shorter window",
                                      "consistent with nonexistence")
    assert len(rows(tmp_path / "probe.csv")) >= 1


# ---------------------------------------------------------------------------
# usage errors and configuration
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    [], ["bogus"], ["preset"], ["young-check"], ["young-check", "--phi", "nosuch:q=1"],
    ["solve", "--f", "fujita:p=3", "--N", "255"], ["solve", "--f", "nosuch"],
    ["wellposed", "--f", "fujita:p=3", "--phi", "power:q=2", "--lam", "a,b"],
    ["solve", "--f", "fujita:p=3", "--data", "triangle"],
])
def test_usage_errors_exit_one(argv, capsys):
    assert cli.run(argv) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "bad.txt"
    cfg.write_text("phi = power:q=2\nnot a pair\n")
    assert cli.run(["young-check", "--config", str(cfg)]) == 1
    assert "bad.txt:2" in capsys.readouterr().err
    cfg.write_text("phi = power:q=2\nfrobnicate = 1\n")
    assert cli.run(["young-check", "--config", str(cfg)]) == 1
    cfg.write_text("samples = many\n")
    assert cli.run(["young-check", "--config", str(cfg), "--phi", "power:q=2"]) == 1
    assert cli.run(["young-check", "--config", str(tmp_path / "missing.txt")]) == 1


def test_config_supplies_required_options_and_flags_override(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("# a comment\nphi = power:q=2\nlam = 3\n")
    out = tmp_path / "a"
    assert cli.run(["young-check", "--config", str(cfg), "--out", str(out)]) == 0
    assert report(out)["config"]["phi"] == "power:q=2"
    assert report(out)["config"]["lam"] == 3.0
    assert cli.run(["young-check", "--config", str(cfg), "--lam", "4", "--out", str(out)]) == 0
    assert report(out)["config"]["lam"] == 4.0


def test_config_subcommand_mismatch(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("command = preset\n")
    assert cli.run(["young-check", "--config", str(cfg), "--phi", "linf"]) == 1


@pytest.mark.parametrize("argv,csv_name", [
    (["preset", "log-power"], "thresholds.csv"),
    (["wellposed", "--f", "fujita:p=3", "--phi", "power:q=2.5", "--n", "2", "--lam", "0.5,2"], "verdicts.csv"),
    (["smoothing-sweep", "--phi", "sumspace", "--psi", "inf", "--data", "gaussian", "--N", "256"], "sweep.csv"),
])
def test_config_round_trip_is_byte_identical(tmp_path, argv, csv_name):
    first, second = tmp_path / "first", tmp_path / "second"
    assert cli.run(argv + ["--out", str(first)]) == 0
    cfg = report(first)["config"]
    assert cli.run(argv[:2 if argv[0] == "preset" else 1]
                   + ["--config", str(first / "config.txt"), "--out", str(second)]) == 0
    again = report(second)["config"]
    assert {k: v for k, v in again.items() if k != "out"} == {k: v for k, v in cfg.items() if k != "out"}
    assert (first / csv_name).read_bytes() == (second / csv_name).read_bytes()


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    argv = ["wellposed", "--f", "fujita:p=2", "--phi", "loglebesgue:q=1,r=1.5", "--n", "2",
            "--lam", "0.25,0.5,1,2"]
    monkeypatch.setenv("ORLICZ_HEAT_THREADS", "1")
    assert cli.run(argv + ["--out", str(tmp_path / "one")]) == 0
    monkeypatch.setenv("ORLICZ_HEAT_THREADS", "4")
    assert cli.run(argv + ["--out", str(tmp_path / "four")]) == 0
    assert (tmp_path / "one" / "verdicts.csv").read_bytes() == (tmp_path / "four" / "verdicts.csv").read_bytes()


def test_dump_config_round_trip():
    cfg = {"command": "wellposed", "lam": [0.1, 1.0], "global_": False, "n": 2, "c": None}
    text = cli.dump_config(cfg)
    assert "c =" not in text
    assert dict(cli.read_config_text(text)) == {"command": "wellposed", "lam": "0.1,1.0",
                                                "global_": "false", "n": "2"}


def test_jsonable_non_finite():
    out = cli.jsonable({"a": np.float64(np.inf), "b": [np.nan, 1], "c": np.int64(3)})
    assert out == {"a": "inf", "b": ["nan", 1], "c": 3}
