import json

import numpy as np
import pytest

from uniqcert import cli, grid
from uniqcert.grid import Axis, MultiIndex, SampledField


def run(*argv):
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def sample_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "u.csv"
    code = run("generate", "--case", "transport_exp", "--a", "3",
               "--counts", "60,80", "--out", str(path))
    assert code == 0
    return path


@pytest.fixture(scope="module")
def growth_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "g.csv"
    assert run("generate", "--case", "linear_growth", "--a", "2", "--b", "2",
               "--counts", "80,100", "--out", str(path)) == 0
    return path


class TestGenerate:
    def test_writes_ingestible_grid(self, sample_csv):
        fld = grid.ingest_csv(sample_csv)
        assert fld.shape == (60, 80)
        assert fld.values[0, 0] == pytest.approx(1.0)

    def test_manifest_written(self, sample_csv):
        manifest = json.loads((sample_csv.parent / "u.csv.manifest.json").read_text())
        assert manifest["tool"] == "uniqcert"
        assert manifest["config"]["case"] == "transport_exp"
        assert str(sample_csv) in manifest["outputs"]

    def test_unknown_case_is_usage_error(self, tmp_path):
        assert run("generate", "--case", "nope", "--out", str(tmp_path / "x.csv")) == cli.USAGE_EXIT

    def test_missing_parameter(self, tmp_path):
        code = run("generate", "--case", "transport_exp", "--out", str(tmp_path / "x.csv"))
        assert code == cli.ERROR_EXIT


class TestDifferentiate:
    def test_derivative_csv(self, sample_csv, tmp_path):
        out = tmp_path / "ux.csv"
        assert run("differentiate", "--in", str(sample_csv), "--space-order", "1",
                   "--accuracy", "4", "--out", str(out)) == 0
        der = grid.ingest_csv(out)
        assert der.shape == (60, 80 - 2 * 2)

    def test_odd_accuracy_rounded(self, sample_csv, tmp_path, capsys):
        out = tmp_path / "ux.csv"
        assert run("differentiate", "--in", str(sample_csv), "--space-order", "1",
                   "--accuracy", "3", "--out", str(out)) == 0
        assert "rounded up to 4" in capsys.readouterr().out


class TestSfranco:
    def test_decay_summary_and_outputs(self, sample_csv, tmp_path, capsys):
        prefix = str(tmp_path / "decay")
        assert run("sfranco", "--in", str(sample_csv),
                   "--features", "kind=linear; inputs=u,u_x",
                   "--out-prefix", prefix) == 0
        out = capsys.readouterr().out
        assert "decaying=True" in out
        lines = (tmp_path / "decay.csv").read_text().splitlines()
        assert lines[0] == "order,sigma_min"
        assert [int(line.split(",")[0]) for line in lines[1:]] == [2, 4, 6, 8]
        assert (tmp_path / "decay.svg").read_text().startswith("<svg")

    def test_no_decay(self, growth_csv, tmp_path, capsys):
        assert run("sfranco", "--in", str(growth_csv),
                   "--features", "kind=linear; inputs=u,u_x",
                   "--out-prefix", str(tmp_path / "d")) == 0
        assert "decaying=False" in capsys.readouterr().out

    def test_csv_deterministic(self, sample_csv, tmp_path):
        p1, p2 = str(tmp_path / "a"), str(tmp_path / "b")
        for p in (p1, p2):
            run("sfranco", "--in", str(sample_csv),
                "--features", "kind=linear; inputs=u,u_x", "--out-prefix", p)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestJrc:
    def test_outputs_and_classification(self, growth_csv, tmp_path, capsys):
        prefix = str(tmp_path / "jac")
        assert run("jrc", "--in", str(growth_csv), "--inputs", "u,u_x",
                   "--d1", "2", "--d2", "7", "--stride", "2",
                   "--out-prefix", prefix) == 0
        out = capsys.readouterr().out
        assert "rounded to (2, 8)" in out
        assert "classification=FULL_RANK_SOMEWHERE" in out
        header = (tmp_path / "jac.csv").read_text().splitlines()[0]
        assert header == "t,x,sigma_low,sigma_high,ratio"

    def test_zero_stride(self, growth_csv, tmp_path):
        assert run("jrc", "--in", str(growth_csv), "--inputs", "u,u_x",
                   "--stride", "0", "--out-prefix", str(tmp_path / "j")) == cli.ERROR_EXIT


class TestCertify:
    def test_non_unique_exit_10(self, sample_csv):
        assert run("certify", "--in", str(sample_csv), "--class", "linear",
                   "--inputs", "u,u_x") == 10

    def test_unique_exit_0(self, growth_csv):
        assert run("certify", "--in", str(growth_csv), "--class", "analytic",
                   "--inputs", "u,u_x") == 0

    def test_smooth_exit_30(self, sample_csv):
        assert run("certify", "--in", str(sample_csv), "--class", "smooth_cp",
                   "--inputs", "u,u_x") == 30

    def test_report_written(self, sample_csv, tmp_path):
        out = tmp_path / "verdict.txt"
        run("certify", "--in", str(sample_csv), "--class", "linear",
            "--inputs", "u,u_x", "--out", str(out))
        assert "outcome=NON_UNIQUE" in out.read_text()

    def test_config_overrides(self, sample_csv, tmp_path, capsys):
        cfg = tmp_path / "uniqcert.cfg"
        cfg.write_text("[rank]\nmax_accuracy_order = 6\n")
        run("certify", "--in", str(sample_csv), "--class", "linear",
            "--inputs", "u,u_x", "--config", str(cfg))
        assert "threshold.max_accuracy_order=6" in capsys.readouterr().out

    def test_unknown_config_key(self, sample_csv, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[rank]\nno_such_knob = 1\n")
        assert run("certify", "--in", str(sample_csv), "--class", "linear",
                   "--inputs", "u,u_x", "--config", str(cfg)) == cli.ERROR_EXIT


class TestUsage:
    def test_no_command(self):
        assert run() == cli.USAGE_EXIT

    def test_bad_experiment_id(self, tmp_path):
        assert run("reproduce", "bogus", "--out-dir", str(tmp_path)) == cli.USAGE_EXIT


class TestReproduce:
    def test_end_to_end_5_1_2(self, tmp_path, capsys):
        # the fastest of the canned pipelines that exercises both a decay
        # series and a verdict
        assert run("reproduce", "5.1.2", "--out-dir", str(tmp_path)) == 0
        out = capsys.readouterr().out
        assert out.count("[PASS]") == 2
        assert (tmp_path / "checks.txt").exists()
        assert (tmp_path / "samples.csv").exists()
        assert json.loads((tmp_path / "manifest.json").read_text())["config"] == {
            "experiment": "5.1.2"
        }
