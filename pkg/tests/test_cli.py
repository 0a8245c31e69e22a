import csv
import json

import numpy as np
import pytest

from nmcs import cli, solar
from nmcs.cli import (
    ConfigError,
    ExperimentConfig,
    MissingSpectrum,
    SchemaError,
    compare_report,
    main,
    run_benchmark_suite,
    run_solar_experiment,
)


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithms=("pso",))
    with pytest.raises(ConfigError):
        ExperimentConfig(functions=("nope",))
    with pytest.raises(ConfigError):
        ExperimentConfig(runs=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="solar", cells=(11,))
    with pytest.raises(ConfigError):
        ExperimentConfig(params={"pso": {}})


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"experiment": "benchmark", "runs": 3, "functions": ["RC"]}))
    cfg = ExperimentConfig.from_file(path, runs=2)
    assert cfg.runs == 2 and cfg.functions == ("RC",)
    path.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)


def test_benchmark_rows_and_determinism(tmp_path):
    cfg = ExperimentConfig(functions=("B2", "Z2"), runs=3, output_path=str(tmp_path / "a"))
    rows = run_benchmark_suite(cfg)
    assert [r["function"] for r in rows] == ["B2", "Z2"]
    for r in rows:
        assert r["mean_error"] < 1e-4
        assert r["success_rate"] == 1.0
    again = ExperimentConfig(functions=("B2", "Z2"), runs=3, output_path=str(tmp_path / "b"))
    run_benchmark_suite(again)
    a = (tmp_path / "a" / "benchmark.csv").read_text()
    assert a == (tmp_path / "b" / "benchmark.csv").read_text()
    assert a.splitlines()[0] == ",".join(cli.BENCH_COLUMNS)


def test_benchmark_other_algorithms():
    cfg = ExperimentConfig(functions=("Z2",), runs=2, algorithms=("nms", "cs", "sa", "ga"), budget=400)
    rows = run_benchmark_suite(cfg, write=False)
    assert [r["algorithm"] for r in rows] == ["nms", "cs", "sa", "ga"]
    assert all(r["mean_evals"] <= 400 for r in rows)


def test_benchmark_budget_ceiling():
    cfg = ExperimentConfig(functions=("S4,5",), runs=2, budget=150)
    report = cli.run_benchmark_once("S4,5", "nmcs", 1, cfg)
    assert report.evals_used <= 150


def test_solar_rows(tmp_path):
    cfg = ExperimentConfig(experiment="solar", algorithms=("nmcs", "sa"), runs=1, budget=60,
                           cells=(3,), topologies=("mj",), output_path=str(tmp_path))
    rows = run_solar_experiment(cfg)
    assert [(r["topology"], r["algorithm"], r["seed"]) for r in rows] == [("mj", "nmcs", 1), ("mj", "sa", 1)]
    stack = solar.make_stack(3, "mj")
    for r in rows:
        assert r["evals_used"] <= 60
        assert 100 * solar.mj_efficiency(stack, r["best_gaps"]) == pytest.approx(r["best_eta_percent"])
    written = read(tmp_path / "solar.csv")
    assert list(written[0])[:6] == cli.SOLAR_COLUMNS
    assert written[0]["gap_3"] != ""


def test_solar_start_recipe_is_shared():
    stack = solar.make_stack(4, "ss")
    a = cli.solar_start_points(stack, np.random.default_rng(7))
    b = cli.solar_start_points(stack, np.random.default_rng(7))
    assert all(np.array_equal(x, y) for xs, ys in zip(a, b) for x, y in zip(xs, ys))
    informed, eight, five = a
    assert (len(informed), len(eight), len(five)) == (2, 8, 5)


def test_multistart_nms_splits_budget():
    stack = solar.make_stack(3, "ss")
    rep = cli.run_solar_once(stack, "nms", 1, 105)
    assert rep.evals_used == 105


def test_missing_spectrum(tmp_path, monkeypatch):
    monkeypatch.delenv("SPECTRUM_PATH", raising=False)
    with pytest.raises(MissingSpectrum):
        cli.resolve_spectrum(str(tmp_path / "none.csv"))
    monkeypatch.setenv("SPECTRUM_PATH", str(tmp_path / "none.csv"))
    with pytest.raises(MissingSpectrum):
        cli.resolve_spectrum()
    monkeypatch.setenv("SPECTRUM_PATH", solar.default_spectrum_path())
    assert cli.resolve_spectrum() == solar.default_spectrum_path()


def solar_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cli.SOLAR_COLUMNS)
        w.writerows(rows)
    return path


def test_report_identical_files_tie(tmp_path):
    rows = [("ss", 3, "nmcs", 1, 51.9, 1500), ("ss", 3, "nms", 1, 51.0, 1500)]
    a = solar_csv(tmp_path / "a.csv", rows)
    b = solar_csv(tmp_path / "b.csv", rows)
    text, ok = compare_report([a, b])
    assert ok
    line = [l for l in text.splitlines() if l.startswith("SS-3")][0]
    assert line.count("=") == 2 and "*" not in line


def test_report_marks_dominant_algorithm(tmp_path):
    rows = [("ss", n, algo, 1, eta + (1 if algo == "nmcs" else 0), 1500)
            for n, eta in ((3, 51.0), (4, 55.0)) for algo in ("nmcs", "nms", "ga")]
    text, _ = compare_report([solar_csv(tmp_path / "a.csv", rows)])
    for line in text.splitlines():
        if line.startswith("SS-"):
            cells = line.split()
            assert cells[2].endswith("*")  # columns sorted: ga, nmcs, nms


def test_report_threshold_failure(tmp_path):
    text, ok = compare_report([solar_csv(tmp_path / "a.csv", [("ss", 3, "nmcs", 1, 40.0, 1500)])])
    assert not ok and "!" in text


def test_report_schema_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("topology,n_cells,algorithm\nss,3,nmcs\n")
    with pytest.raises(SchemaError):
        compare_report([bad])


def test_cli_end_to_end(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["bench", "--algo", "nmcs", "--runs", "1", "--seed", "3", "--functions", "Z2", "--out", str(out)]) == 0
    first = (out / "benchmark.csv").read_text()
    assert main(["bench", "--algo", "nmcs", "--runs", "1", "--seed", "3", "--functions", "Z2", "--out", str(out)]) == 0
    assert (out / "benchmark.csv").read_text() == first
    assert main(["solar", "--topology", "ss", "--cells", "3", "--algo", "ga", "--runs", "1",
                 "--budget", "30", "--out", str(out)]) == 0
    code = main(["report", "--in", str(out), "--no-check"])
    assert code == 0
    assert "Z2" in capsys.readouterr().out
    assert main(["bench", "--algo", "pso", "--out", str(out)]) == 2
