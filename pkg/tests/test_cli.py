"""Command-line front end: config parsing, subcommands, exit codes."""

import pathlib
import subprocess
import textwrap

import numpy as np
import pytest

import flrtest as f
from flrtest.cli import RunConfig, main

DATA_TABLE = pathlib.Path(__file__).parent / "data" / "qtable_default.txt"


def write_cfg(path, text):
    path.write_text(textwrap.dedent(text))
    return str(path)


def field(report, key):
    for line in report.splitlines():
        if line.startswith(key + " = "):
            return line.split(" = ", 1)[1]
    raise AssertionError(f"{key!r} not in report:\n{report}")


def write_noiseless_dataset(tmp_path, n=30, slope=None):
    """CSV pair with Y produced by applying ``slope`` without noise."""
    rng = np.random.default_rng(123)
    X = f.beta_shift_regressors(n, rng)
    S = slope if slope is not None else f.benchmark_true_slope()
    Y = [f.apply_op(S, x) for x in X]
    xpath = tmp_path / "x.csv"
    ypath = tmp_path / "y.csv"
    f.write_data_csv(str(xpath), X)
    f.write_data_csv(str(ypath), Y)
    return xpath, ypath


class TestRunConfig:
    def test_round_trip_is_exact(self):
        text = """\
            [sim]
            n = 40
            seed = 7

            [paths]
            table = t.txt
            """
        cfg = RunConfig.from_text(textwrap.dedent(text))
        again = RunConfig.from_text(cfg.emit())
        assert again == cfg
        assert again.emit() == cfg.emit()

    def test_sections_and_keys_are_canonically_ordered(self):
        a = RunConfig.from_text("[b]\ny = 2\nx = 1\n[a]\nz = 3\n")
        b = RunConfig.from_text("[a]\nz = 3\n[b]\nx = 1\ny = 2\n")
        assert a == b

    def test_missing_key_names_section_and_key(self):
        cfg = RunConfig.from_text("[sim]\nn = 10\n")
        with pytest.raises(f.ConfigError, match=r"\[paths\] x"):
            cfg.get("paths", "x")
        assert cfg.get("paths", "x", "fallback") == "fallback"

    def test_typed_getters_reject_junk(self):
        cfg = RunConfig.from_text("[sim]\nn = ten\nrho = quick\nflag = maybe\n")
        with pytest.raises(f.ConfigError, match="not an integer"):
            cfg.getint("sim", "n")
        with pytest.raises(f.ConfigError, match="not a number"):
            cfg.getfloat("sim", "rho")
        with pytest.raises(f.ConfigError, match="not a boolean"):
            cfg.getbool("sim", "flag")

    def test_malformed_text_is_a_format_error(self):
        with pytest.raises(f.FormatError):
            RunConfig.from_text("no section header here\n")

    def test_missing_file_is_a_config_error(self):
        with pytest.raises(f.ConfigError):
            RunConfig.from_file("/nonexistent/run.ini")


class TestQuantilesCmd:
    CFG = """\
        [table]
        replications = 10000
        steps = 500
        alphas = 0.5 0.05
        """

    def test_writes_table_and_reports(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path / "run.ini", self.CFG)
        out = tmp_path / "q.txt"
        assert main(["quantiles", cfg, "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "q[alpha=0.5]" in stdout
        assert f"wrote {out}" in stdout
        table = f.read_quantile_table(str(out))
        assert set(table.alphas) == {0.5, 0.05}
        assert table.replications == 10_000

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path / "run.ini", self.CFG)
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        assert main(["quantiles", cfg, "--out", str(a)]) == 0
        assert main(["quantiles", cfg, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_override_changes_the_draw(self, tmp_path):
        cfg = write_cfg(tmp_path / "run.ini", self.CFG)
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        assert main(["quantiles", cfg, "--seed", "1", "--out", str(a)]) == 0
        assert main(["quantiles", cfg, "--seed", "2", "--out", str(b)]) == 0
        qa = f.read_quantile_table(str(a))
        qb = f.read_quantile_table(str(b))
        assert qa.seed == 1 and qb.seed == 2
        assert qa.quantile(0.05) != qb.quantile(0.05)


class TestSimulateCmd:
    def test_writes_dataset_csv_pair(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path / "run.ini",
            """\
            [sim]
            n = 6
            seed = 3
            noise_scale = 0.5
            """,
        )
        outdir = tmp_path / "data"
        assert main(["simulate", cfg, "--out", str(outdir)]) == 0
        assert "(6 observations)" in capsys.readouterr().out
        X = f.read_data_csv(str(outdir / "x.csv"))
        Y = f.read_data_csv(str(outdir / "y.csv"))
        assert len(X) == 6 and len(Y) == 6
        assert X[0].space.size == 51

    def test_deterministic_per_seed(self, tmp_path):
        cfg = write_cfg(tmp_path / "run.ini", "[sim]\nn = 4\nseed = 9\n")
        a = tmp_path / "a"
        b = tmp_path / "b"
        main(["simulate", cfg, "--out", str(a)])
        main(["simulate", cfg, "--out", str(b)])
        assert (a / "x.csv").read_bytes() == (b / "x.csv").read_bytes()
        assert (a / "y.csv").read_bytes() == (b / "y.csv").read_bytes()


class TestTestCmd:
    def base_cfg(self, tmp_path, delta, k=2):
        xpath, ypath = write_noiseless_dataset(tmp_path)
        return write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {xpath}
            y = {ypath}
            table = {DATA_TABLE}

            [test]
            k = {k}
            delta = {delta}
            """,
        )

    def test_large_margin_accepts(self, tmp_path, capsys):
        # noiseless data from the benchmark slope against the default
        # null: the squared distance is about 0.023, far below delta
        cfg = self.base_cfg(tmp_path, delta=10.0)
        assert main(["test", cfg]) == 0
        report = capsys.readouterr().out
        assert field(report, "test") == "location"
        assert field(report, "decision") == "no rejection"
        assert float(field(report, "statistic")) < 0.0

    def test_statistic_decreases_in_delta(self, tmp_path, capsys):
        stats = []
        for delta in (0.0, 0.5, 2.0):
            cfg = self.base_cfg(tmp_path, delta=delta)
            assert main(["test", cfg]) == 0
            stats.append(float(field(capsys.readouterr().out, "statistic")))
        assert stats[0] > stats[1] > stats[2]

    def test_report_written_to_out_file(self, tmp_path, capsys):
        cfg = self.base_cfg(tmp_path, delta=1.0)
        out = tmp_path / "report.txt"
        assert main(["test", cfg, "--out", str(out)]) == 0
        assert out.read_text() == capsys.readouterr().out

    def test_prediction_mode(self, tmp_path, capsys):
        xpath, ypath = write_noiseless_dataset(tmp_path)
        cfg = write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {xpath}
            y = {ypath}
            table = {DATA_TABLE}

            [test]
            mode = prediction
            k = 1
            delta = 1.0
            """,
        )
        assert main(["test", cfg]) == 0
        report = capsys.readouterr().out
        assert field(report, "test") == "prediction"
        assert field(report, "decision") == "no rejection"

    def test_table_is_built_once_then_loaded(self, tmp_path, capsys):
        xpath, ypath = write_noiseless_dataset(tmp_path, n=20)
        table_path = tmp_path / "table.txt"
        cfg = write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {xpath}
            y = {ypath}
            table = {table_path}

            [table]
            replications = 10000
            steps = 500

            [test]
            k = 1
            delta = 5.0
            """,
        )
        assert main(["test", cfg]) == 0
        first = table_path.read_bytes()
        report = capsys.readouterr().out
        assert main(["test", cfg]) == 0
        assert table_path.read_bytes() == first
        assert capsys.readouterr().out == report

    def test_nu_mismatch_with_stored_table(self, tmp_path, capsys):
        xpath, ypath = write_noiseless_dataset(tmp_path, n=20)
        cfg = write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {xpath}
            y = {ypath}
            table = {DATA_TABLE}

            [nu]
            support = 0.5

            [test]
            k = 1
            delta = 5.0
            """,
        )
        assert main(["test", cfg]) == 2
        assert "different nu" in capsys.readouterr().err


class TestChangepointCmd:
    def planted_change_cfg(self, tmp_path, extra=""):
        # zero response before the midpoint, benchmark response after
        rng = np.random.default_rng(12)
        X = f.beta_shift_regressors(30, rng)
        S = f.benchmark_true_slope()
        Y = [f.apply_op(S, x) for x in X]
        for i in range(15):
            Y[i] = f.func(Y[i].space, np.zeros(51))
        xpath = tmp_path / "x.csv"
        ypath = tmp_path / "y.csv"
        f.write_data_csv(str(xpath), X)
        f.write_data_csv(str(ypath), Y)
        return write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {xpath}
            y = {ypath}
            table = {DATA_TABLE}

            [test]
            k = 1
            delta = 50.0
            {extra}
            """,
        )

    def test_reports_estimated_split(self, tmp_path, capsys):
        cfg = self.planted_change_cfg(tmp_path)
        assert main(["changepoint", cfg]) == 0
        report = capsys.readouterr().out
        assert field(report, "test") == "changepoint-location"
        theta = float(field(report, "theta"))
        assert abs(theta - 0.5) <= 0.1

    def test_fixed_boundary(self, tmp_path, capsys):
        cfg = self.planted_change_cfg(tmp_path, extra="boundary = 15")
        assert main(["changepoint", cfg]) == 0
        assert field(capsys.readouterr().out, "theta") == "0.5"

    def test_prediction_mode(self, tmp_path, capsys):
        cfg = self.planted_change_cfg(
            tmp_path, extra="mode = prediction\nboundary = 15"
        )
        assert main(["changepoint", cfg]) == 0
        assert field(capsys.readouterr().out, "test") == "changepoint-prediction"


class TestCurveCmd:
    def curve_cfg(self, tmp_path, which, sim_lines, out):
        text = (
            f"[sim]\n{sim_lines}\n\n[curve]\nwhich = {which}\n\n"
            f"[paths]\ntable = {DATA_TABLE}\nout = {out}\n"
        )
        return write_cfg(tmp_path / "run.ini", text)

    def test_location_curve_csv(self, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        cfg = self.curve_cfg(
            tmp_path,
            "location",
            "n = 80\nseed = 3\nreplications = 5\ndeltas = 5.0 10.0",
            out,
        )
        assert main(["curve", cfg]) == 0
        assert "(5 replications, 0 failed)" in capsys.readouterr().out
        lines = out.read_text().splitlines()
        assert "# which = location" in lines
        assert "delta,rejection_rate,mc_se,n_fail" in lines
        data = [ln for ln in lines if not ln.startswith("#")][1:]
        assert len(data) == 2
        assert data[0].split(",")[1] == "0.0"

    def test_rerun_is_byte_identical(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        sim = "n = 60\nseed = 4\nreplications = 4\ndeltas = 0.0"
        main(["curve", self.curve_cfg(tmp_path, "location", sim, a), "--out", str(a)])
        main(["curve", self.curve_cfg(tmp_path, "location", sim, b), "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_prediction_and_changepoint_kinds(self, tmp_path):
        out = tmp_path / "c.csv"
        cfg = self.curve_cfg(
            tmp_path, "prediction", "n = 60\nseed = 5\nreplications = 3", out
        )
        assert main(["curve", cfg]) == 0
        assert "# which = prediction" in out.read_text()
        # a real change keeps the estimated split away from the sample
        # edges, so short replications survive
        cfg = self.curve_cfg(
            tmp_path,
            "changepoint",
            "n = 100\nseed = 9\nreplications = 3\ntheta = 0.5",
            out,
        )
        assert main(["curve", cfg]) == 0
        assert "# which = changepoint" in out.read_text()

    def test_unknown_kind_exits_two(self, tmp_path, capsys):
        cfg = self.curve_cfg(tmp_path, "bootstrap", "n = 40", tmp_path / "c.csv")
        assert main(["curve", cfg]) == 2
        assert "ConfigError" in capsys.readouterr().err


class TestExitCodes:
    def test_missing_config_file(self, capsys):
        assert main(["test", "/nonexistent/run.ini"]) == 2
        assert capsys.readouterr().err.startswith("ConfigError:")

    def test_malformed_data_csv(self, tmp_path, capsys):
        bad = tmp_path / "x.csv"
        bad.write_text("0.0,0.5,1.0\n")
        cfg = write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {bad}
            y = {bad}
            table = {DATA_TABLE}

            [test]
            k = 1
            """,
        )
        assert main(["test", cfg]) == 2
        assert capsys.readouterr().err.startswith("FormatError:")

    def test_observation_count_mismatch(self, tmp_path, capsys):
        xpath, ypath = write_noiseless_dataset(tmp_path, n=5)
        short = tmp_path / "short.csv"
        f.write_data_csv(str(short), f.read_data_csv(str(ypath))[:4])
        cfg = write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {xpath}
            y = {short}
            table = {DATA_TABLE}

            [test]
            k = 1
            """,
        )
        assert main(["test", cfg]) == 2
        assert "observations" in capsys.readouterr().err

    def test_grid_mismatch_exits_three(self, tmp_path, capsys):
        xpath, ypath = write_noiseless_dataset(tmp_path, n=10)
        sp3 = f.uniform_grid_space(3)
        s0 = tmp_path / "s0.csv"
        f.write_kernel_csv(str(s0), f.KernelOp(sp3, sp3, np.eye(3)))
        cfg = write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {xpath}
            y = {ypath}
            s0 = {s0}
            table = {DATA_TABLE}

            [test]
            k = 1
            """,
        )
        assert main(["test", cfg]) == 3
        assert capsys.readouterr().err.startswith("SpaceMismatchError:")

    def test_rank_deficiency_exits_three(self, tmp_path, capsys):
        # identical regressors center to zero, so no eigenvalue clears
        # the cut-off
        sp = f.benchmark_space()
        X = [f.func(sp, np.ones(51))] * 12
        Y = [f.func(sp, np.ones(51))] * 12
        xpath = tmp_path / "x.csv"
        ypath = tmp_path / "y.csv"
        f.write_data_csv(str(xpath), X)
        f.write_data_csv(str(ypath), Y)
        cfg = write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {xpath}
            y = {ypath}
            table = {DATA_TABLE}

            [test]
            k = 1
            """,
        )
        assert main(["test", cfg]) == 3
        err = capsys.readouterr().err
        assert err.startswith("RankDeficiencyError:")
        assert "eigenvalue" in err

    def test_bad_mode_exits_two(self, tmp_path, capsys):
        xpath, ypath = write_noiseless_dataset(tmp_path, n=5)
        cfg = write_cfg(
            tmp_path / "run.ini",
            f"""\
            [paths]
            x = {xpath}
            y = {ypath}
            table = {DATA_TABLE}

            [test]
            mode = bayes
            k = 1
            """,
        )
        assert main(["test", cfg]) == 2
        assert "mode must be location or prediction" in capsys.readouterr().err


class TestConsoleScript:
    def test_help_runs(self):
        proc = subprocess.run(
            ["flrtest", "--help"], capture_output=True, text=True
        )
        assert proc.returncode == 0
        for name in ("quantiles", "simulate", "test", "changepoint", "curve"):
            assert name in proc.stdout
