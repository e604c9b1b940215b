import csv
import json

import numpy as np
import pytest

from binlat import harness
from binlat.config import ExperimentConfig
from binlat.errors import NoConvergence
from binlat.harness import ExperimentResult, emit_tables, run_experiment, table_rows
from binlat.marginal import fit_marginal
from binlat.model import ModelParams, child_seed, linear_trend_design, simulate_series, simulate_trials


def _cfg(**kw):
    base = dict(n=(100,), m=(2,), phi=(0.2,), replications=6, C=(1, 2),
                outputs=("table1", "table2", "table3"))
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def small():
    return run_experiment(_cfg())


def test_single_replication_summary():
    cfg = _cfg(replications=1, outputs=("table2",), seed=3)
    cell = run_experiment(cfg).cells[0]
    seed = child_seed(child_seed(3, 0), 0)
    X = linear_trend_design(100)
    data = simulate_series(X, simulate_trials(100, 2, seed), ModelParams((1.0, 2.0), 1.0, 0.2), seed)
    fit = fit_marginal(data)
    assert np.allclose(cell.mean, fit.delta_hat)
    assert cell.sd is None
    assert cell.kappa2_hat == float(fit.degenerate)


def test_summary_invariants(small):
    for c in small.cells:
        assert 0 <= c.kappa1_hat <= 1 and 0 <= c.kappa2_hat <= 1
        interior = c.replications - c.failures - c.boundary_count
        assert c.boundary_count == round(c.kappa2_hat * (c.replications - c.failures))
        assert interior >= 0
        assert c.k_n == [4, 8]
        assert len(c.sub_se) == 2


def test_table3_columns(small):
    header, rows = table_rows(small, "table3")
    assert header[4:] == ["ASD", "SD", "C=1", "C=2", "k_n"]
    assert [r[3] for r in rows] == ["beta1", "beta2", "tau"]


def test_table_layouts(small):
    h1, r1 = table_rows(small, "table1")
    assert "kappa1_hat" in h1 and len(r1) == 2
    h2, r2 = table_rows(small, "table2")
    assert h2[4:7] == ["mean", "sd", "asd"] and len(r2) == 3


def test_json_round_trip(small, tmp_path):
    paths = emit_tables(small, "json", tmp_path)
    assert sorted(p.rsplit("/", 1)[-1] for p in paths) == [
        "result.json", "table1.json", "table2.json", "table3.json"]
    back = ExperimentResult.from_json((tmp_path / "result.json").read_text())
    assert back == ExperimentResult.from_json(small.to_json())
    assert back.to_json() == small.to_json()
    doc = json.loads((tmp_path / "table3.json").read_text())
    assert doc["metadata"]["config_sha256"] == small.config_sha256


def test_csv_metadata_and_precision(small, tmp_path):
    emit_tables(small, "csv", tmp_path)
    lines = (tmp_path / "table2.csv").read_text().splitlines()
    assert lines[0].startswith("# binlat ")
    assert f"config_sha256={small.config_sha256}" in lines[0]
    assert f"seed={small.seed}" in lines[0]
    rows = list(csv.reader(lines[1:]))
    for value in rows[1][4:7]:
        digits = value.replace("-", "").replace(".", "").lstrip("0").split("e")[0]
        assert len(digits) <= 4


def test_empty_outputs(tmp_path):
    result = run_experiment(_cfg(outputs=()))
    assert result.cells == []
    assert emit_tables(result, "csv", tmp_path / "none") == []
    assert not (tmp_path / "none").exists()


def test_failures_counted_and_excluded(monkeypatch):
    calls = {"n": 0}

    def flaky(data, **kw):
        calls["n"] += 1
        if calls["n"] % 3 == 0:
            raise NoConvergence("synthetic")
        return fit_marginal(data, **kw)

    monkeypatch.setattr(harness, "fit_marginal", flaky)
    cell = run_experiment(_cfg(replications=9, outputs=("table2",))).cells[0]
    assert cell.failures == 3
    assert [f[0] for f in cell.failure_log] == [2, 5, 8]
    assert "NoConvergence" in cell.failure_log[0][1]
    assert cell.boundary_count <= 6


def test_seed_changes_results():
    a = run_experiment(_cfg(outputs=("table2",), seed=1)).cells[0]
    b = run_experiment(_cfg(outputs=("table2",), seed=2)).cells[0]
    assert a.mean != b.mean


def test_analytic_only_has_no_cells():
    result = run_experiment(_cfg(outputs=("analytic",), m=(1, 2), phi=(0.0,)))
    assert result.cells == []
    assert [a["m"] for a in result.analytic] == [1, 2]
    header, rows = table_rows(result, "analytic")
    assert header == ["m", "phi", "quantity", "value"]
    assert any(r[2] == "beta_prime1" for r in rows)


@pytest.mark.montecarlo
def test_table2_cell_m2():
    cell = run_experiment(_cfg(n=(200,), phi=(0.0,), replications=1000, seed=20161016,
                               outputs=("table2",))).cells[0]
    assert abs(cell.mean[2] - 1.063) <= 0.06
    assert abs(100 * cell.kappa2_hat - 7.25) <= 2


@pytest.mark.montecarlo
def test_table1_cell_n500():
    cell = run_experiment(_cfg(n=(500,), m=(1,), phi=(0.0,), replications=1000,
                               seed=20161016, outputs=("table2",))).cells[0]
    assert abs(100 * cell.kappa2_hat - 46.26) <= 3


@pytest.mark.montecarlo
def test_doubling_replications_shrinks_error():
    def spread(reps):
        k = [run_experiment(_cfg(n=(40,), m=(1,), phi=(0.0,), replications=reps,
                                 seed=9000 + 7 * reps + s, outputs=("table2",))).cells[0].kappa2_hat
             for s in range(120)]
        return np.std(k, ddof=1)

    ratio = spread(50) / spread(25)
    assert abs(ratio / np.sqrt(0.5) - 1) <= 0.20
