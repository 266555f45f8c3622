import json
import os
import subprocess
import sys

import numpy as np
import pytest

from mixcop import cli, metrics
from mixcop import simulation as sim
from mixcop.data import (DataError, atomic_write, dataset_csv, load_csv, load_matrix_csv,
                         matrix_csv, schema_to_json)


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def schema(tmp_path):
    return write(tmp_path / "s.json",
                 json.dumps([{"name": "a", "kind": "continuous"},
                             {"name": "b", "kind": "discrete"}]))


class TestLoadCsv:
    def test_missing_fields(self, tmp_path, schema):
        data = load_csv(write(tmp_path / "d.csv", "a,b\n1.5,2\n,3\n2.5,\n"), schema)
        assert data.n == 3
        assert data.missing_counts() == {"a": 1, "b": 1}
        assert data.values[0].tolist() == [1.5, 2.0]

    def test_integral_tolerance(self, tmp_path, schema):
        data = load_csv(write(tmp_path / "d.csv", "a,b\n1,2.0000000001\n"), schema)
        assert data.values[0, 1] == 2.0

    def test_non_integral(self, tmp_path, schema):
        with pytest.raises(DataError, match="'b'.*row 3"):
            load_csv(write(tmp_path / "d.csv", "a,b\n1,2\n1,2.5\n"), schema)

    def test_header_mismatch_names_column(self, tmp_path, schema):
        with pytest.raises(DataError, match="'c'"):
            load_csv(write(tmp_path / "d.csv", "a,c\n1,2\n"), schema)

    def test_bad_value_row_number(self, tmp_path, schema):
        with pytest.raises(DataError, match="row 3.*'x'"):
            load_csv(write(tmp_path / "d.csv", "a,b\n1,2\nx,2\n"), schema)

    def test_ragged_row(self, tmp_path, schema):
        with pytest.raises(DataError, match="row 2 has 3 fields"):
            load_csv(write(tmp_path / "d.csv", "a,b\n1,2,3\n"), schema)

    def test_bad_schema(self, tmp_path):
        bad = write(tmp_path / "s.json", '[{"name": "a", "kind": "ordinal"}]')
        with pytest.raises(DataError, match="entry 0"):
            load_csv(write(tmp_path / "d.csv", "a\n1\n"), bad)

    def test_matrix_round_trip(self, tmp_path):
        m = np.array([[1.0, np.nan], [np.nan, 1.0]])
        path = write(tmp_path / "m.csv", matrix_csv(["p", "q"], m))
        names, back = load_matrix_csv(path)
        assert names == ["p", "q"] and np.array_equal(back, m, equal_nan=True)


def test_atomic_write_leaves_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "out.csv"
    target.write_text("old\n")

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        atomic_write(target, "new\n")
    assert target.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]


def run(*argv):
    return cli.main([str(a) for a in argv])


def manifest(path):
    return json.loads(open(str(path) + ".manifest.json").read())


class TestCli:
    def test_pipeline(self, tmp_path):
        data, sigma, out = tmp_path / "d.csv", tmp_path / "sigma.csv", tmp_path / "corr.csv"
        assert run("simulate", "--recipe", "blocks", "--n", 500, "--seed", 11, "--out", data,
                   "--sigma-out", sigma) == 0
        schema = tmp_path / "d.schema.json"
        assert schema.exists()
        assert run("estimate", "--input", data, "--schema", schema, "--out", out) == 0
        _, est = load_matrix_csv(out)
        _, truth = load_matrix_csv(sigma)
        assert metrics.rmse(est, truth) <= 0.08
        diag = json.loads((tmp_path / "corr.csv.diagnostics.json").read_text())
        assert diag["n"] == 500 and len(diag["pairs"]) == 435
        m = manifest(out)
        for key in ("command", "argv", "seed", "threads", "backend", "versions", "started",
                    "elapsed_seconds", "outputs"):
            assert key in m
        assert manifest(data)["seed"] == 11

    def test_deterministic_outputs(self, tmp_path):
        texts = []
        for k in range(2):
            d = tmp_path / f"r{k}"
            assert run("simulate", "--recipe", "blocks:4x0.6,4x0.2", "--n", 80, "--seed", 5,
                       "--margins", "normal(0,1)*3; poisson(2)*3; bernoulli(0.3)*2",
                       "--out", d / "x.csv") == 0
            assert run("estimate", "--input", d / "x.csv", "--schema", d / "x.schema.json",
                       "--out", d / "c.csv", "--threads", k + 1) == 0
            assert run("bench", "--recipe", "blocks:3x0.5,3x0.2", "--n", 30, "--n", 60,
                       "--reps", 3, "--seed", 2, "--out", d / "bench", "--threads", k + 1) == 0
            texts.append([(d / f).read_bytes() for f in
                          ("x.csv", "c.csv", "bench/summary.csv", "bench/replications.csv")])
        assert texts[0] == texts[1]

    def test_gensigma_records_sparsity(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("gensigma", "--recipe", "sparse:0.8", "--dim", 20, "--seed", 1, "--out",
                   out) == 0
        names, s = load_matrix_csv(out)
        assert len(names) == 20 and np.allclose(np.diag(s), 1)
        assert manifest(out)["gamma_F"] == pytest.approx(sim.achieved_sparsity(s))

    def test_compare(self, tmp_path):
        x = sim.make_fixture_threshold(1.0, 200, seed=3)
        path = write(tmp_path / "t.csv", dataset_csv(x))
        sch = write(tmp_path / "t.json", schema_to_json(x.schema))
        assert run("compare", "--input", path, "--schema", sch, "--out", tmp_path / "o.csv") == 0
        lines = (tmp_path / "o.csv").read_text().splitlines()
        assert lines[0] == "var1,var2,type_pair,pearson,spearman,kendall,copula"
        row = lines[1].split(",")
        assert row[:3] == ["x1", "x2", "CD"] and float(row[6]) > 0.99

    def test_network_multiple_thresholds(self, tmp_path):
        corr = write(tmp_path / "c.csv", matrix_csv(["a", "b", "c"], np.array(
            [[1, 0.5, 0.2], [0.5, 1, 0.35], [0.2, 0.35, 1]])))
        assert run("network", "--corr", corr, "--threshold", 0.3, "--threshold", 0.4,
                   "--format", "edge_csv", "--min-degree", 1, "--out", tmp_path / "net.csv") == 0
        assert (tmp_path / "net_t0.3.csv").read_text().count("\n") == 3
        assert (tmp_path / "net_t0.4.csv").read_text().count("\n") == 2
        assert (tmp_path / "net_t0.3.hubs.csv").read_text().splitlines()[1] == "b,2"
        assert manifest(tmp_path / "net_t0.4.csv")["command"] == "network"

    def test_oracle_hidden(self, tmp_path, capsys):
        sigma = write(tmp_path / "s.csv", matrix_csv(["a", "b"], np.array([[1, 0.4], [0.4, 1]])))
        assert run("oracle", "--sigma", sigma, "--margins", "normal(0,1); bernoulli(0.4)",
                   "--point", "0.2,1", "--mass") == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["total_mass"] == pytest.approx(1.0, abs=1e-8)
        assert doc["density"] > 0
        assert "oracle" not in cli.build_parser().format_help()

    @pytest.mark.parametrize("argv", [[], ["bogus"], ["network", "--corr", "x", "--out", "y",
                                                      "--threshold", "1.1"],
                                      ["simulate", "--n", "0", "--out", "x"]])
    def test_usage_errors(self, argv):
        assert run(*argv) == 1

    def test_data_errors(self, tmp_path, schema):
        assert run("estimate", "--input", tmp_path / "nope.csv", "--schema", schema,
                   "--out", tmp_path / "o.csv") == 2
        bad = write(tmp_path / "d.csv", "a,b\n1,0.5\n")
        assert run("estimate", "--input", bad, "--schema", schema, "--out",
                   tmp_path / "o.csv") == 2
        assert not (tmp_path / "o.csv").exists()

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV, "3")
        assert cli.default_threads() == 3
        monkeypatch.setenv(cli.THREADS_ENV, "zero")
        assert run("bench", "--n", 10, "--reps", 1, "--out", "unused") == 1
        monkeypatch.delenv(cli.THREADS_ENV)
        assert cli.default_threads() == (os.cpu_count() or 1)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mixcop", "gensigma", "--out",
                           str(tmp_path / "s.csv")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "s.csv").read_text().startswith("x1,x2")
