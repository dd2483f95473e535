import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from planeclust import cli
from planeclust.cli import (
    CsvParseError,
    ExperimentConfig,
    emit_report,
    grid_search,
    load_csv,
    main,
    report_to_csv_rows,
    report_to_json,
    restart_seed,
    run_benchmark,
    save_csv,
    strip_timing,
)
from planeclust.core import Dataset, InvalidInputError, NumericalFailureError
from planeclust.datagen import SyntheticSpec


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------- CSV


def test_load_plain_table(tmp_path):
    ds = load_csv(_write(tmp_path / "a.csv", "1,2\n3,4\n5,6\n"), has_header=False)
    assert (ds.n, ds.d) == (3, 2) and ds.labels is None


def test_load_with_named_label(tmp_path):
    ds = load_csv(_write(tmp_path / "a.csv", "x,y,class\n1,2,0\n3,4,1\n"), label_column="class")
    assert ds.d == 2 and ds.feature_names == ("x", "y")
    np.testing.assert_array_equal(ds.labels, [0, 1])


def test_load_label_by_index(tmp_path):
    ds = load_csv(_write(tmp_path / "a.csv", "7,1,2\n9,3,4\n"), has_header=False, label_column=0)
    np.testing.assert_array_equal(ds.points, [[1, 2], [3, 4]])
    np.testing.assert_array_equal(ds.labels, [0, 1])


@pytest.mark.parametrize("text,kw,row,col", [
    ("x,y\n1,2\n3\n", {}, 3, None),
    ("x,y\n1,2\n3,abc\n", {}, 3, 2),
    ("x,y\n1,2\n", {"label_column": "class"}, 1, None),
    ("x,c\n1,0.5\n", {"label_column": "c"}, 2, 2),
    ("x,y\n1,nan\n", {}, 2, 2),
])
def test_parse_errors_carry_location(tmp_path, text, kw, row, col):
    with pytest.raises(CsvParseError) as err:
        load_csv(_write(tmp_path / "bad.csv", text), **kw)
    assert err.value.row == row and err.value.column == col


def test_empty_file_is_an_error(tmp_path):
    with pytest.raises(CsvParseError):
        load_csv(_write(tmp_path / "e.csv", ""))
    with pytest.raises(CsvParseError):
        load_csv(_write(tmp_path / "h.csv", "x,y\n"))


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(arrays(float, st.tuples(st.integers(1, 8), st.integers(1, 4)), elements=finite),
       st.booleans())
def test_csv_round_trip_is_bit_exact(tmp_path_factory, x, labelled):
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    labels = np.arange(x.shape[0]) % 3 if labelled else None
    ds = Dataset(x, labels)
    save_csv(ds, path)
    back = load_csv(path, has_header=True, label_column="label" if labelled else None)
    assert np.array_equal(back.points.view(np.uint64), ds.points.view(np.uint64))
    if labelled:
        np.testing.assert_array_equal(back.labels, ds.labels)


# ---------------------------------------------------------------- config


def test_config_validation():
    s1 = SyntheticSpec("S1")
    with pytest.raises(InvalidInputError):
        ExperimentConfig(s1, restarts=0)
    with pytest.raises(InvalidInputError):
        ExperimentConfig(s1, alpha_grid=())
    with pytest.raises(InvalidInputError):
        ExperimentConfig(s1, method="dbscan")
    with pytest.raises(InvalidInputError):
        ExperimentConfig(s1, method="fcrm")
    with pytest.raises(InvalidInputError):
        ExperimentConfig("data.csv")
    assert ExperimentConfig(s1).n_clusters == 3


def test_restart_seeds_are_distinct_and_stable():
    seeds = [restart_seed(0, r) for r in range(100)]
    assert len(set(seeds)) == 100
    assert restart_seed(0, 5) == restart_seed(0, 5) != restart_seed(1, 5)


# ---------------------------------------------------------------- benchmark


def test_single_restart_has_zero_std():
    rep = run_benchmark(ExperimentConfig(SyntheticSpec("S1"), restarts=1))
    acc = rep["aggregate"]["acc"]
    assert acc["mean"] == rep["restarts"][0]["metrics"]["acc"] and acc["std"] == 0.0


def test_aggregate_matches_recomputation():
    rep = run_benchmark(ExperimentConfig(SyntheticSpec("S1", "student_t1"), restarts=6, method="kpc"))
    for name in ("acc", "nmi", "ari", "purity", "objective"):
        vals = [r["objective"] if name == "objective" else r["metrics"][name] for r in rep["restarts"]]
        mean = sum(vals) / len(vals)
        std = math.sqrt(sum((v - mean) ** 2 for v in vals) / (len(vals) - 1))
        assert rep["aggregate"][name]["mean"] == pytest.approx(mean, abs=1e-12)
        assert rep["aggregate"][name]["std"] == pytest.approx(std, abs=1e-12)


def test_failures_are_recorded_and_excluded(monkeypatch):
    real = cli.fit
    bad = restart_seed(0, 1)

    def flaky(data, params, *a, **kw):
        if params.seed == bad:
            raise NumericalFailureError("forced")
        return real(data, params, *a, **kw)

    monkeypatch.setattr(cli, "fit", flaky)
    rep = run_benchmark(ExperimentConfig(SyntheticSpec("S1"), restarts=3))
    assert rep["failures"] == 1
    assert rep["restarts"][1]["status"] == "failed" and "forced" in rep["restarts"][1]["error"]
    assert rep["aggregate"]["acc"]["n"] == 2


@pytest.mark.parametrize("method", ["rflkpc", "kpc", "fkpc"])
def test_benchmark_is_deterministic(method):
    cfg = ExperimentConfig(SyntheticSpec("S2", "gaussian"), method=method, restarts=3)
    a = report_to_json(strip_timing(run_benchmark(cfg)))
    b = report_to_json(strip_timing(run_benchmark(cfg)))
    assert a == b


def test_parallel_matches_serial():
    cfg = ExperimentConfig(SyntheticSpec("S1", "laplace"), restarts=4)
    a = report_to_json(strip_timing(run_benchmark(cfg, threads=1)))
    b = report_to_json(strip_timing(run_benchmark(cfg, threads=2)))
    assert a == b


def test_threads_env(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.resolve_threads() == 3
    assert cli.resolve_threads(1) == 1
    with pytest.raises(InvalidInputError):
        cli.resolve_threads(0)


def test_fcrm_benchmark(tmp_path):
    rng = np.random.default_rng(0)
    xt = rng.uniform(-1, 1, 60)
    y = np.where(np.arange(60) < 30, 2 * xt + 1, -xt) + 0.02 * rng.normal(size=60)
    path = tmp_path / "reg.csv"
    save_csv(Dataset(np.column_stack([xt, y]), np.arange(60) >= 30, ("x", "y")), path)
    cfg = ExperimentConfig(str(path), method="fcrm", k=2, restarts=2, label_column="label", response_column="y")
    rep = run_benchmark(cfg)
    assert rep["failures"] == 0 and rep["aggregate"]["acc"]["mean"] > 0.9


# ---------------------------------------------------------------- grid search


def test_single_cell_grid():
    cfg = ExperimentConfig(SyntheticSpec("S1"), restarts=1, alpha_grid=(0.3,), lam_grid=(0.1,))
    rep = grid_search(cfg)
    assert rep["best"]["alpha"] == 0.3 and rep["best"]["lam"] == 0.1 and len(rep["grid"]) == 1


def test_default_grid_has_55_cells_and_s2_reaches_full_accuracy():
    cfg = ExperimentConfig(SyntheticSpec("S2"), restarts=3)
    rep = grid_search(cfg)
    assert len(rep["grid"]) == 55
    assert rep["best"]["acc_mean"] == 1.0
    best = max(e["acc_mean"] for e in rep["grid"])
    assert all(rep["best"]["acc_mean"] >= e["acc_mean"] for e in rep["grid"]) and best == 1.0
    # ties go to the smallest lambda, then the smallest alpha
    tied = [(e["lam"], e["alpha"]) for e in rep["grid"] if e["acc_mean"] == best]
    assert (rep["best"]["lam"], rep["best"]["alpha"]) == min(tied)


def test_best_objective_selection():
    cfg = ExperimentConfig(SyntheticSpec("S1"), restarts=1, alpha_grid=(0.0, 1.0), lam_grid=(0.01, 1.0))
    rep = grid_search(cfg, selection="best_objective")
    best = min(e["objective_mean"] for e in rep["grid"])
    assert rep["best"]["objective_mean"] == best


def test_best_metric_needs_labels(tmp_path):
    path = _write(tmp_path / "u.csv", "x,y\n0,0\n1,1\n2,2\n3,3\n")
    cfg = ExperimentConfig(path, k=2, restarts=1, alpha_grid=(0.5,), lam_grid=(1.0,))
    with pytest.raises(InvalidInputError):
        grid_search(cfg, "best_metric")
    rep = grid_search(cfg, "best_objective")
    assert "acc_mean" not in rep["grid"][0]


def test_grid_search_rejects_baselines():
    with pytest.raises(InvalidInputError):
        grid_search(ExperimentConfig(SyntheticSpec("S1"), method="kpc", restarts=1))


# ---------------------------------------------------------------- reports


def test_json_round_trip(tmp_path):
    rep = run_benchmark(ExperimentConfig(SyntheticSpec("S1"), restarts=2))
    path = tmp_path / "r.json"
    emit_report(rep, path, "json")
    back = json.loads(path.read_text())
    assert back["version"] == cli.REPORT_VERSION
    assert report_to_json(back) == path.read_text()
    assert back["restarts"][1]["objective_trace"] == rep["restarts"][1]["objective_trace"]


def test_csv_report_shape(tmp_path):
    rep = run_benchmark(ExperimentConfig(SyntheticSpec("S1"), restarts=3))
    path = tmp_path / "r.csv"
    emit_report(rep, path, "csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "method,restart,seed,status,metric,value"
    assert len(lines) == 1 + 3 * 5


def test_empty_report_is_refused(tmp_path):
    rep = run_benchmark(ExperimentConfig(SyntheticSpec("S1"), restarts=1))
    rep["restarts"] = []
    for fmt in ("json", "csv"):
        path = tmp_path / f"r.{fmt}"
        with pytest.raises(InvalidInputError):
            emit_report(rep, path, fmt)
        assert not path.exists()


def test_unwritable_path_raises(tmp_path):
    rep = run_benchmark(ExperimentConfig(SyntheticSpec("S1"), restarts=1))
    with pytest.raises(OSError):
        emit_report(rep, tmp_path / "missing" / "r.json")


def test_grid_csv_rows():
    cfg = ExperimentConfig(SyntheticSpec("S1"), restarts=1, alpha_grid=(0.2, 0.4), lam_grid=(1.0,))
    rows = report_to_csv_rows(grid_search(cfg))
    assert rows[0][:2] == ["alpha", "lam"] and len(rows) == 3


# ---------------------------------------------------------------- command line


def test_cli_datagen_then_benchmark(tmp_path, capsys):
    data = tmp_path / "s2.csv"
    assert main(["datagen", "--synthetic", "S2-N", "--seed", "3", "--out", str(data)]) == 0
    out = tmp_path / "rep.json"
    assert main(["benchmark", "--data", str(data), "--label-col", "label", "--k", "3",
                 "--restarts", "2", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["dataset"]["n"] == 150 and len(rep["restarts"]) == 2


def test_cli_config_file_and_override(tmp_path):
    conf = _write(tmp_path / "run.conf", "# demo\nsynthetic = S1\nrestarts = 4\nalpha = 0.3\nformat = csv\n")
    out = tmp_path / "r.json"
    assert main(["benchmark", "--config", conf, "--restarts", "2", "--format", "json", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["config"]["restarts"] == 2 and rep["config"]["alpha"] == 0.3


def test_cli_bad_config_key(tmp_path, capsys):
    conf = _write(tmp_path / "bad.conf", "colour = blue\n")
    assert main(["benchmark", "--config", conf]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_cli_fit_and_metrics(tmp_path, capsys):
    assert main(["fit", "--synthetic", "S1", "--lambda", "0.5"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["metrics"]["acc"] == 1.0 and len(res["labels"]) == 150
    assert main(["fit", "--synthetic", "S1", "--method", "kpc"]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "ok"
    truth = _write(tmp_path / "t.csv", "label\n0\n0\n1\n1\n")
    pred = _write(tmp_path / "p.csv", "label\n1\n1\n0\n0\n")
    assert main(["metrics", truth, pred]) == 0
    assert json.loads(capsys.readouterr().out)["acc"] == 1.0


def test_cli_gridsearch_csv(capsys):
    assert main(["gridsearch", "--synthetic", "S1", "--restarts", "1", "--alpha-grid", "0.5",
                 "--lambda-grid", "0.1,1", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and lines[0].startswith("alpha,lam")


def test_cli_missing_dataset(capsys):
    assert main(["benchmark"]) == 2
    assert "dataset" in capsys.readouterr().err
